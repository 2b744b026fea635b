#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "timrl/envs/env.hpp"

namespace timrl::envs {

struct PadDims {
  std::size_t state = 0;
  std::size_t action = 0;
};

/// Largest state/action widths over every registered environment.
PadDims global_max_dims();

/// Streaming per-dimension mean and standard deviation (Welford).
class RunningNormalizer {
 public:
  explicit RunningNormalizer(std::size_t dim = 0) : mean_(dim, 0.0), m2_(dim, 0.0) {}

  void update(std::span<const double> x);
  std::size_t dim() const { return mean_.size(); }
  std::size_t count() const { return count_; }
  const std::vector<double>& mean() const { return mean_; }
  /// Population standard deviation, floored at kMinStd; 1 before two samples.
  std::vector<double> stddev() const;
  std::vector<double> normalize(std::span<const double> x) const;

  /// Raw state for serialization: mean, M2 and count.
  const std::vector<double>& m2() const { return m2_; }
  void set_state(std::vector<double> mean, std::vector<double> m2, std::size_t count);

  static constexpr double kMinStd = 1e-2;

 private:
  std::vector<double> mean_;
  std::vector<double> m2_;
  std::size_t count_ = 0;
};

/// Normalizes the state's own entries (when a normalizer is given) and
/// zero-pads to `max_dims.state`, so one recognition network serves every
/// environment. Throws ContractError if the state is wider than the maximum
/// or does not match `spec.state_dim`.
std::vector<double> pad_observation(std::span<const double> obs, const EnvSpec& spec,
                                    const PadDims& max_dims,
                                    const RunningNormalizer* normalizer = nullptr);

/// Zero-pads an action to `max_dims.action`.
std::vector<double> pad_action(std::span<const double> action, const PadDims& max_dims);

}  // namespace timrl::envs
