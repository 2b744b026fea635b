#pragma once

#include <string>
#include <vector>

#include "timrl/neural/attention.hpp"
#include "timrl/neural/mlp.hpp"

namespace timrl::neural {

struct TransformerOptions {
  std::size_t d_model = 32;
  std::size_t heads = 2;
  std::size_t layers = 2;
  std::size_t ff_hidden = 64;
  double ln_eps = 1e-5;
};

struct EncoderLayer {
  AttentionParams attn;
  Mlp feedforward;
  Tensor ln1_gain, ln1_bias, ln2_gain, ln2_bias;
};

/// Stack of post-norm encoder layers followed by mean pooling over positions.
class TransformerEncoder {
 public:
  TransformerEncoder() = default;
  TransformerEncoder(const TransformerOptions& options, Rng& rng);

  /// Per-position outputs, [n×d_model].
  Tensor forward(const Tensor& ctx) const;
  /// Mean-pooled fixed-length summary, [1×d_model]. Throws ContractError on
  /// an empty sequence.
  Tensor encode(const Tensor& ctx) const;

  const TransformerOptions& options() const { return opt_; }
  std::vector<EncoderLayer>& layers() { return layers_; }
  void append_params(ParamList& out, const std::string& prefix) const;

 private:
  TransformerOptions opt_;
  std::vector<EncoderLayer> layers_;
};

}  // namespace timrl::neural
