#include "timrl/neural/mlp.hpp"

#include <cmath>

#include "timrl/numerics/errors.hpp"
#include "timrl/numerics/ops.hpp"

namespace timrl::neural {

Tensor activate(const Tensor& x, Activation act) {
  switch (act) {
    case Activation::kTanh:
      return ops::tanh(x);
    case Activation::kRelu:
      return ops::relu(x);
    case Activation::kIdentity:
      break;
  }
  return x;
}

Tensor init_weight(std::size_t out, std::size_t in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::vector<double> w(out * in);
  for (auto& v : w) v = rng.uniform(-bound, bound);
  return Tensor({out, in}, std::move(w), true);
}

Mlp::Mlp(const std::vector<std::size_t>& sizes, Activation hidden, Activation output, Rng& rng)
    : hidden_(hidden), output_(output) {
  if (sizes.size() < 2) throw ContractError("Mlp needs at least input and output sizes");
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    layers_.push_back({init_weight(sizes[i + 1], sizes[i], rng), Tensor({sizes[i + 1]}, 0.0, true)});
  }
}

Tensor Mlp::forward(const Tensor& x) const {
  if (x.rank() != 2 || x.cols() != in_dim()) {
    throw DimensionError("Mlp input " + shape_str(x.shape()) + " does not match input width " +
                         std::to_string(in_dim()));
  }
  Tensor h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = ops::linear(h, layers_[i].weight, layers_[i].bias);
    h = activate(h, i + 1 == layers_.size() ? output_ : hidden_);
  }
  return h;
}

std::size_t Mlp::in_dim() const { return layers_.front().weight.cols(); }
std::size_t Mlp::out_dim() const { return layers_.back().weight.rows(); }

void Mlp::append_params(ParamList& out, const std::string& prefix) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const std::string base = prefix + ".layer" + std::to_string(i);
    out.emplace_back(base + ".weight", layers_[i].weight);
    out.emplace_back(base + ".bias", layers_[i].bias);
  }
}

}  // namespace timrl::neural
