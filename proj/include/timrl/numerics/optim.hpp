#pragma once

#include <vector>

#include "timrl/numerics/tensor.hpp"

namespace timrl {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Global gradient-norm clip; 0 disables.
  double max_grad_norm = 0.0;
};

class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamOptions options);

  void zero_grad();
  /// Applies one update from the accumulated gradients. Parameters that
  /// never received a gradient are left untouched.
  void step();
  long steps() const { return t_; }

 private:
  std::vector<Tensor> params_;
  AdamOptions opt_;
  std::vector<std::vector<double>> m_, v_;
  long t_ = 0;
};

}  // namespace timrl
