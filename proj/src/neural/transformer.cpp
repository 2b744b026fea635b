#include "timrl/neural/transformer.hpp"

#include "timrl/numerics/errors.hpp"
#include "timrl/numerics/ops.hpp"

namespace timrl::neural {

TransformerEncoder::TransformerEncoder(const TransformerOptions& options, Rng& rng) : opt_(options) {
  if (opt_.heads == 0 || opt_.d_model % opt_.heads != 0) {
    throw ContractError("d_model must be a positive multiple of the head count");
  }
  const std::size_t d_k = opt_.d_model / opt_.heads;
  for (std::size_t l = 0; l < opt_.layers; ++l) {
    EncoderLayer layer;
    layer.attn = AttentionParams::init(opt_.d_model, opt_.heads, d_k, rng);
    layer.feedforward = Mlp({opt_.d_model, opt_.ff_hidden, opt_.d_model}, Activation::kRelu,
                            Activation::kIdentity, rng);
    layer.ln1_gain = Tensor({opt_.d_model}, 1.0, true);
    layer.ln1_bias = Tensor({opt_.d_model}, 0.0, true);
    layer.ln2_gain = Tensor({opt_.d_model}, 1.0, true);
    layer.ln2_bias = Tensor({opt_.d_model}, 0.0, true);
    layers_.push_back(std::move(layer));
  }
}

Tensor TransformerEncoder::forward(const Tensor& ctx) const {
  if (ctx.rank() != 2 || ctx.cols() != opt_.d_model) {
    throw DimensionError("transformer input " + shape_str(ctx.shape()) + " does not match d_model " +
                         std::to_string(opt_.d_model));
  }
  Tensor h = ctx;
  for (const auto& layer : layers_) {
    h = ops::layer_norm_rows(ops::add(h, multi_head_attention(layer.attn, h)), layer.ln1_gain,
                             layer.ln1_bias, opt_.ln_eps);
    h = ops::layer_norm_rows(ops::add(h, layer.feedforward.forward(h)), layer.ln2_gain,
                             layer.ln2_bias, opt_.ln_eps);
  }
  return h;
}

Tensor TransformerEncoder::encode(const Tensor& ctx) const {
  if (!ctx.defined() || ctx.rank() != 2) throw ContractError("transformer needs a non-empty sequence");
  return ops::mean_rows(forward(ctx));
}

void TransformerEncoder::append_params(ParamList& out, const std::string& prefix) const {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const std::string base = prefix + ".layer" + std::to_string(l);
    const auto& layer = layers_[l];
    layer.attn.append_params(out, base + ".attn");
    layer.feedforward.append_params(out, base + ".ff");
    out.emplace_back(base + ".ln1.gain", layer.ln1_gain);
    out.emplace_back(base + ".ln1.bias", layer.ln1_bias);
    out.emplace_back(base + ".ln2.gain", layer.ln2_gain);
    out.emplace_back(base + ".ln2.bias", layer.ln2_bias);
  }
}

}  // namespace timrl::neural
