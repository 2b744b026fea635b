#pragma once

#include <string>
#include <vector>

#include "timrl/neural/mlp.hpp"

namespace timrl::neural {

/// softmax(q·kᵀ/√d_k) for q[n×d_k], k[m×d_k]; rows sum to one.
Tensor attention_weights(const Tensor& q, const Tensor& k);

/// softmax(q·kᵀ/√d_k)·v.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v);

struct AttentionParams {
  std::vector<Tensor> w_q, w_k, w_v;  // one [d_model×d_k] per head
  Tensor w_o;                         // [(heads·d_k)×d_model]
  std::size_t heads = 0;

  static AttentionParams init(std::size_t d_model, std::size_t heads, std::size_t d_k, Rng& rng);
  std::size_t d_model() const { return w_o.cols(); }
  void append_params(ParamList& out, const std::string& prefix) const;
};

/// Self-attention over the rows of x[n×d_model]; no masking, no positions.
Tensor multi_head_attention(const AttentionParams& p, const Tensor& x);

}  // namespace timrl::neural
