#include "timrl/gmm/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "timrl/numerics/errors.hpp"

namespace timrl::gmm {

namespace {

void check_samples(const GmmModel& model, const std::vector<Sample>& samples) {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].size() != model.dim()) {
      throw DimensionError("sample " + std::to_string(i) + " has dimension " +
                           std::to_string(samples[i].size()) + ", model has " +
                           std::to_string(model.dim()));
    }
  }
}

double log_sum_exp(const std::vector<double>& v) {
  const double mx = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

// log λ_k + log N(x_i | k) for every component.
std::vector<double> joint_log(const GmmModel& model, const Sample& x) {
  std::vector<double> out(model.k());
  for (std::size_t k = 0; k < model.k(); ++k) {
    const auto& c = model.components[k];
    out[k] = std::log(c.weight) + log_density(c, x);
  }
  return out;
}

}  // namespace

void GmmModel::validate() const {
  if (components.empty()) throw ContractError("GMM needs at least one component");
  double total = 0.0;
  for (const auto& c : components) {
    if (c.mean.size() != dim() || c.variance.size() != dim()) {
      throw ContractError("GMM components disagree on dimension");
    }
    for (double v : c.variance) {
      if (!(v > 0.0)) throw ContractError("GMM variance must be strictly positive");
    }
    if (c.weight < 0.0 || c.weight > 1.0) throw ContractError("GMM weight outside [0,1]");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ContractError("GMM weights do not sum to one");
}

double log_density(const GaussianComponent& c, const Sample& x) {
  double acc = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double diff = x[d] - c.mean[d];
    acc += std::log(2.0 * std::numbers::pi * c.variance[d]) + diff * diff / c.variance[d];
  }
  return -0.5 * acc;
}

std::vector<std::vector<double>> responsibilities(const GmmModel& model,
                                                  const std::vector<Sample>& samples) {
  model.validate();
  check_samples(model, samples);
  std::vector<std::vector<double>> gamma;
  gamma.reserve(samples.size());
  for (const auto& x : samples) {
    auto logs = joint_log(model, x);
    const double norm = log_sum_exp(logs);
    for (auto& v : logs) v = std::exp(v - norm);
    gamma.push_back(std::move(logs));
  }
  return gamma;
}

double log_likelihood(const GmmModel& model, const std::vector<Sample>& samples) {
  model.validate();
  check_samples(model, samples);
  double total = 0.0;
  for (const auto& x : samples) total += log_sum_exp(joint_log(model, x));
  return total;
}

GmmModel em_step(const GmmModel& model, const std::vector<Sample>& samples, Rng& rng,
                 EmDiagnostics* diagnostics) {
  const std::size_t n = samples.size();
  const std::size_t kk = model.k();
  if (n < kk) {
    throw ContractError("EM needs at least as many samples (" + std::to_string(n) +
                        ") as components (" + std::to_string(kk) + ")");
  }
  const auto gamma = responsibilities(model, samples);
  const std::size_t dim = model.dim();

  GmmModel next = model;
  std::vector<std::size_t> reseeded;
  for (std::size_t k = 0; k < kk; ++k) {
    double nk = 0.0;
    for (std::size_t i = 0; i < n; ++i) nk += gamma[i][k];
    auto& c = next.components[k];
    if (nk < kEmptyComponentMass) {
      c.mean = samples[rng.index(n)];
      c.variance.assign(dim, 1.0);
      reseeded.push_back(k);
      continue;
    }
    std::vector<double> mu(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 0; d < dim; ++d) mu[d] += gamma[i][k] * samples[i][d];
    for (auto& v : mu) v /= nk;
    std::vector<double> var(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < dim; ++d) {
        const double diff = samples[i][d] - mu[d];
        var[d] += gamma[i][k] * diff * diff;
      }
    }
    for (auto& v : var) v = std::max(v / nk, kVarianceFloor);
    c.mean = std::move(mu);
    c.variance = std::move(var);
    c.weight = nk / static_cast<double>(n);
  }

  // Re-seeded components take an equal share before renormalization.
  for (auto k : reseeded) next.components[k].weight = 1.0 / static_cast<double>(kk);
  if (diagnostics) diagnostics->reseeded = reseeded;
  double total = 0.0;
  for (const auto& c : next.components) total += c.weight;
  for (auto& c : next.components) c.weight /= total;
  return next;
}

GmmModel initialize(const std::vector<Sample>& samples, std::size_t k, Rng& rng) {
  if (k == 0) throw ContractError("GMM needs at least one component");
  if (samples.size() < k) throw ContractError("fewer samples than components");
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng.engine());
  GmmModel model;
  const std::size_t dim = samples.front().size();
  for (std::size_t j = 0; j < k; ++j) {
    model.components.push_back(
        {samples[idx[j]], std::vector<double>(dim, 1.0), 1.0 / static_cast<double>(k)});
  }
  return model;
}

FitResult fit(const std::vector<Sample>& samples, std::size_t k, std::size_t steps, Rng& rng) {
  FitResult res;
  res.model = initialize(samples, k, rng);
  res.log_likelihoods.push_back(log_likelihood(res.model, samples));
  for (std::size_t s = 0; s < steps; ++s) {
    EmDiagnostics diag;
    res.model = em_step(res.model, samples, rng, &diag);
    res.reseeds += diag.reseeded.size();
    res.log_likelihoods.push_back(log_likelihood(res.model, samples));
  }
  return res;
}

}  // namespace timrl::gmm
