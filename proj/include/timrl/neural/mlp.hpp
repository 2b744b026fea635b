#pragma once

#include <string>
#include <vector>

#include "timrl/numerics/params.hpp"
#include "timrl/numerics/random.hpp"
#include "timrl/numerics/tensor.hpp"

namespace timrl::neural {

enum class Activation { kIdentity, kTanh, kRelu };

Tensor activate(const Tensor& x, Activation act);

/// Weights uniform in ±1/√fan_in, zero bias.
Tensor init_weight(std::size_t out, std::size_t in, Rng& rng);

struct Linear {
  Tensor weight;  // [out×in]
  Tensor bias;    // [out]
};

/// Fully connected network: hidden layers use `hidden`, the last layer `output`.
class Mlp {
 public:
  Mlp() = default;
  /// `sizes` = {in, hidden..., out}; at least two entries.
  Mlp(const std::vector<std::size_t>& sizes, Activation hidden, Activation output, Rng& rng);

  Tensor forward(const Tensor& x) const;

  std::size_t in_dim() const;
  std::size_t out_dim() const;
  std::vector<Linear>& layers() { return layers_; }
  const std::vector<Linear>& layers() const { return layers_; }

  void append_params(ParamList& out, const std::string& prefix) const;

 private:
  std::vector<Linear> layers_;
  Activation hidden_ = Activation::kRelu;
  Activation output_ = Activation::kIdentity;
};

}  // namespace timrl::neural
