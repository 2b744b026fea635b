#include "timrl/envs/observation.hpp"

#include <algorithm>
#include <cmath>

#include "timrl/numerics/errors.hpp"

namespace timrl::envs {

PadDims global_max_dims() {
  PadDims dims;
  for (const auto& name : env_names()) {
    const auto spec = env_spec(name);
    dims.state = std::max(dims.state, spec.state_dim);
    dims.action = std::max(dims.action, spec.action_dim);
  }
  return dims;
}

void RunningNormalizer::update(std::span<const double> x) {
  if (x.size() != mean_.size()) {
    throw DimensionError("normalizer expects width " + std::to_string(mean_.size()) + ", got " +
                         std::to_string(x.size()));
  }
  ++count_;
  const double n = static_cast<double>(count_);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double delta = x[i] - mean_[i];
    mean_[i] += delta / n;
    m2_[i] += delta * (x[i] - mean_[i]);
  }
}

std::vector<double> RunningNormalizer::stddev() const {
  std::vector<double> sd(mean_.size(), 1.0);
  if (count_ < 2) return sd;
  for (std::size_t i = 0; i < sd.size(); ++i) {
    sd[i] = std::max(std::sqrt(m2_[i] / static_cast<double>(count_)), kMinStd);
  }
  return sd;
}

std::vector<double> RunningNormalizer::normalize(std::span<const double> x) const {
  if (x.size() != mean_.size()) {
    throw DimensionError("normalizer expects width " + std::to_string(mean_.size()) + ", got " +
                         std::to_string(x.size()));
  }
  const auto sd = stddev();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean_[i]) / sd[i];
  return out;
}

void RunningNormalizer::set_state(std::vector<double> mean, std::vector<double> m2, std::size_t count) {
  if (mean.size() != m2.size()) throw DimensionError("normalizer state widths differ");
  mean_ = std::move(mean);
  m2_ = std::move(m2);
  count_ = count;
}

std::vector<double> pad_observation(std::span<const double> obs, const EnvSpec& spec,
                                    const PadDims& max_dims, const RunningNormalizer* normalizer) {
  if (obs.size() > max_dims.state) {
    throw ContractError("observation width " + std::to_string(obs.size()) +
                        " exceeds the global maximum " + std::to_string(max_dims.state));
  }
  if (obs.size() != spec.state_dim) {
    throw ContractError("observation width " + std::to_string(obs.size()) + " does not match " +
                        spec.name + " state width " + std::to_string(spec.state_dim));
  }
  std::vector<double> out(max_dims.state, 0.0);
  if (normalizer) {
    const auto normed = normalizer->normalize(obs);
    std::copy(normed.begin(), normed.end(), out.begin());
  } else {
    std::copy(obs.begin(), obs.end(), out.begin());
  }
  return out;
}

std::vector<double> pad_action(std::span<const double> action, const PadDims& max_dims) {
  if (action.size() > max_dims.action) {
    throw ContractError("action width " + std::to_string(action.size()) +
                        " exceeds the global maximum " + std::to_string(max_dims.action));
  }
  std::vector<double> out(max_dims.action, 0.0);
  std::copy(action.begin(), action.end(), out.begin());
  return out;
}

}  // namespace timrl::envs
