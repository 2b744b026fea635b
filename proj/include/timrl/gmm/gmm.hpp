#pragma once

#include <cstddef>
#include <vector>

#include "timrl/numerics/random.hpp"

namespace timrl::gmm {

using Sample = std::vector<double>;

/// Diagonal Gaussian with mixture weight.
struct GaussianComponent {
  std::vector<double> mean;
  std::vector<double> variance;  // strictly positive
  double weight = 1.0;
};

struct GmmModel {
  std::vector<GaussianComponent> components;

  std::size_t k() const { return components.size(); }
  std::size_t dim() const { return components.empty() ? 0 : components.front().mean.size(); }
  /// Throws ContractError unless K >= 1, dimensions agree, variances are
  /// positive and weights sum to one within 1e-9.
  void validate() const;
};

inline constexpr double kVarianceFloor = 1e-6;
inline constexpr double kEmptyComponentMass = 1e-8;

/// log N(x | mean, diag(variance)).
double log_density(const GaussianComponent& c, const Sample& x);

/// γ(ik), one row per sample; computed in log space so rows always sum to one.
std::vector<std::vector<double>> responsibilities(const GmmModel& model,
                                                  const std::vector<Sample>& samples);

/// Σ_i log Σ_k λ_k N(x_i | μ_k, σ_k²).
double log_likelihood(const GmmModel& model, const std::vector<Sample>& samples);

struct EmDiagnostics {
  /// Components whose responsibility mass fell below kEmptyComponentMass and
  /// were re-seeded at a random sample.
  std::vector<std::size_t> reseeded;
};

/// One expectation-maximization update. Needs at least K samples.
GmmModel em_step(const GmmModel& model, const std::vector<Sample>& samples, Rng& rng,
                 EmDiagnostics* diagnostics = nullptr);

/// K distinct random samples as means, unit variances, uniform weights.
GmmModel initialize(const std::vector<Sample>& samples, std::size_t k, Rng& rng);

struct FitResult {
  GmmModel model;
  std::vector<double> log_likelihoods;  // before the first step, then after each
  std::size_t reseeds = 0;
};

FitResult fit(const std::vector<Sample>& samples, std::size_t k, std::size_t steps, Rng& rng);

}  // namespace timrl::gmm
