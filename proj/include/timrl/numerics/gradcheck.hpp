#pragma once

#include <functional>
#include <vector>

#include "timrl/numerics/tensor.hpp"

namespace timrl {

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t checked = 0;
};

/// Compares backward() against central differences of `loss_fn` for every
/// element of every tensor in `inputs`. `loss_fn` must rebuild its graph from
/// the current values of `inputs` on each call and return a scalar.
///
/// Relative error is |analytic − numeric| / max(|analytic|, |numeric|, floor).
GradCheckResult check_gradients(const std::function<Tensor()>& loss_fn,
                                const std::vector<Tensor>& inputs, double eps = 1e-5,
                                double floor = 1e-3);

}  // namespace timrl
