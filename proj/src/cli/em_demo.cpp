#include <cstdio>

#include "timrl/cli/cli.hpp"
#include "timrl/gmm/gmm.hpp"

namespace timrl::cli {

int cmd_em_demo(std::uint64_t seed, std::size_t samples, std::size_t steps, std::ostream& out, std::ostream& err) {
  const std::vector<gmm::GaussianComponent> truth = {
      {{-3.0, 0.0}, {0.5, 0.5}, 0.3},
      {{2.0, 2.0}, {0.3, 0.8}, 0.5},
      {{2.5, -3.0}, {1.0, 0.2}, 0.2},
  };
  if (samples < truth.size()) {
    err << "need at least " << truth.size() << " samples\n";
    return kExitUsage;
  }
  Rng rng(seed);
  std::vector<gmm::Sample> data;
  data.reserve(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    double u = rng.uniform(0.0, 1.0);
    std::size_t k = 0;
    while (k + 1 < truth.size() && u >= truth[k].weight) u -= truth[k++].weight;
    gmm::Sample x(2);
    for (std::size_t d = 0; d < 2; ++d) x[d] = truth[k].mean[d] + std::sqrt(truth[k].variance[d]) * rng.normal();
    data.push_back(std::move(x));
  }
  const auto fit = gmm::fit(data, truth.size(), steps, rng);
  char buf[200];
  std::snprintf(buf, sizeof buf, "log-likelihood %.4f -> %.4f over %zu steps, %zu reseeds\n",
                fit.log_likelihoods.front(), fit.log_likelihoods.back(), steps, fit.reseeds);
  out << buf;
  auto print = [&](const char* label, const gmm::GaussianComponent& c) {
    std::snprintf(buf, sizeof buf, "  %-9s weight %.3f  mean (%7.3f, %7.3f)  var (%.3f, %.3f)\n", label, c.weight,
                  c.mean[0], c.mean[1], c.variance[0], c.variance[1]);
    out << buf;
  };
  out << "true components\n";
  for (const auto& c : truth) print("true", c);
  out << "recovered components\n";
  for (const auto& c : fit.model.components) print("fitted", c);
  return kExitOk;
}

}  // namespace timrl::cli
