#include "timrl/inference/recognition.hpp"

#include "timrl/numerics/errors.hpp"
#include "timrl/numerics/ops.hpp"

namespace timrl::inference {

int argmax_lowest(std::span<const double> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = static_cast<int>(i);
  }
  return best;
}

RecognitionNetwork::RecognitionNetwork(std::size_t row_width, std::size_t num_classes,
                                       const RecognitionOptions& options, Rng& rng)
    : preproc_({row_width, options.preproc_hidden, options.transformer.d_model},
               neural::Activation::kRelu, neural::Activation::kIdentity, rng),
      encoder_(options.transformer, rng),
      head_({options.transformer.d_model, options.head_hidden, num_classes},
            neural::Activation::kRelu, neural::Activation::kIdentity, rng) {
  if (num_classes == 0) throw ContractError("recognition needs at least one class");
}

Tensor RecognitionNetwork::probabilities(const Tensor& rows) const {
  if (!rows.defined() || rows.rank() != 2) throw ContractError("recognition needs a non-empty context");
  return ops::softmax_rows(head_.forward(encoder_.encode(preproc_.forward(rows))));
}

Recognition RecognitionNetwork::recognize(const ContextWindow& ctx) const {
  NoGradGuard no_grad;
  Recognition out;
  out.probs = probabilities(ctx.rows()).to_vector();
  out.k = argmax_lowest(out.probs);
  return out;
}

void RecognitionNetwork::append_params(ParamList& out, const std::string& prefix) const {
  preproc_.append_params(out, prefix + ".preproc");
  encoder_.append_params(out, prefix + ".transformer");
  head_.append_params(out, prefix + ".head");
}

}  // namespace timrl::inference
