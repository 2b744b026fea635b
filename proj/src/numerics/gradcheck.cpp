#include "timrl/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace timrl {

GradCheckResult check_gradients(const std::function<Tensor()>& loss_fn,
                                const std::vector<Tensor>& inputs, double eps, double floor) {
  for (auto t : inputs) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  backward(loss_fn());

  GradCheckResult res;
  NoGradGuard no_grad;
  for (auto t : inputs) {
    const auto analytic = t.grad();
    auto values = t.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double up = loss_fn().item();
      values[i] = saved - eps;
      const double down = loss_fn().item();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double abs_err = std::abs(analytic[i] - numeric);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
      res.max_abs_error = std::max(res.max_abs_error, abs_err);
      res.max_rel_error = std::max(res.max_rel_error, abs_err / denom);
      ++res.checked;
    }
  }
  return res;
}

}  // namespace timrl
