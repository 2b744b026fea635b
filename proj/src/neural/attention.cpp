#include "timrl/neural/attention.hpp"

#include <cmath>

#include "timrl/numerics/errors.hpp"
#include "timrl/numerics/ops.hpp"

namespace timrl::neural {

Tensor attention_weights(const Tensor& q, const Tensor& k) {
  if (q.rank() != 2 || k.rank() != 2 || q.cols() != k.cols()) {
    throw DimensionError("attention: query " + shape_str(q.shape()) + " and key " +
                         shape_str(k.shape()) + " must share d_k");
  }
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(k.cols()));
  return ops::softmax_rows(ops::scale(ops::matmul(q, ops::transpose(k)), inv_sqrt_dk));
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v) {
  if (v.rank() != 2 || k.rank() != 2 || k.rows() != v.rows()) {
    throw DimensionError("attention: key " + shape_str(k.shape()) + " and value " +
                         shape_str(v.shape()) + " must have the same length");
  }
  return ops::matmul(attention_weights(q, k), v);
}

AttentionParams AttentionParams::init(std::size_t d_model, std::size_t heads, std::size_t d_k,
                                      Rng& rng) {
  if (heads == 0 || d_k == 0) throw ContractError("attention needs at least one head of width >= 1");
  AttentionParams p;
  p.heads = heads;
  // Stored as [d_model×d_k] so that x·W is the projection.
  for (std::size_t h = 0; h < heads; ++h) {
    p.w_q.push_back(ops::transpose(init_weight(d_k, d_model, rng)).detach());
    p.w_k.push_back(ops::transpose(init_weight(d_k, d_model, rng)).detach());
    p.w_v.push_back(ops::transpose(init_weight(d_k, d_model, rng)).detach());
  }
  p.w_o = ops::transpose(init_weight(d_model, heads * d_k, rng)).detach();
  for (auto* group : {&p.w_q, &p.w_k, &p.w_v})
    for (auto& w : *group) w.set_requires_grad(true);
  p.w_o.set_requires_grad(true);
  return p;
}

void AttentionParams::append_params(ParamList& out, const std::string& prefix) const {
  for (std::size_t h = 0; h < heads; ++h) {
    const std::string hs = std::to_string(h);
    out.emplace_back(prefix + ".wq" + hs, w_q[h]);
    out.emplace_back(prefix + ".wk" + hs, w_k[h]);
    out.emplace_back(prefix + ".wv" + hs, w_v[h]);
  }
  out.emplace_back(prefix + ".wo", w_o);
}

Tensor multi_head_attention(const AttentionParams& p, const Tensor& x) {
  if (x.rank() != 2 || p.w_q.empty() || x.cols() != p.w_q.front().rows()) {
    throw DimensionError("multi_head_attention: input " + shape_str(x.shape()) +
                         " does not match d_model");
  }
  std::size_t concat_width = 0;
  for (const auto& w : p.w_v) concat_width += w.cols();
  if (concat_width != p.w_o.rows()) {
    throw DimensionError("multi_head_attention: heads concatenate to " + std::to_string(concat_width) +
                         " columns but output projection is " + shape_str(p.w_o.shape()));
  }
  std::vector<Tensor> heads;
  heads.reserve(p.heads);
  for (std::size_t h = 0; h < p.heads; ++h) {
    heads.push_back(attention(ops::matmul(x, p.w_q[h]), ops::matmul(x, p.w_k[h]),
                              ops::matmul(x, p.w_v[h])));
  }
  Tensor cat = heads.size() == 1 ? heads.front() : ops::concat_cols(heads);
  return ops::matmul(cat, p.w_o);
}

}  // namespace timrl::neural
