#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "timrl/cli/cli.hpp"
#include "timrl/gmm/gmm.hpp"
#include "timrl/inference/recognition.hpp"
#include "timrl/neural/attention.hpp"
#include "timrl/numerics/ops.hpp"
#include "timrl/trainer/trainer.hpp"

using namespace timrl;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kGradRelTol = 1e-4;
constexpr double kGradBudgetS = 30.0;
constexpr double kKlAbsTol = 5e-3;
constexpr std::size_t kKlSamples = 1000000;
constexpr std::size_t kKlSets = 20;
constexpr double kEmRecoveryTol = 0.3;
constexpr double kEmBudgetS = 5.0;
constexpr double kEmMonotoneSlack = 1e-9;
constexpr double kEarlyAccuracy = 0.5;
constexpr double kEpoch5Accuracy = 0.90;
constexpr double kThreeClassAccuracy = 0.75;
constexpr double kRecognitionBudgetS = 600.0;
constexpr int kThreeClassEpochs = 20;
constexpr int kFullEpochs = 20;
constexpr int kAblationSeeds = 5;
constexpr int kAblationWins = 4;
constexpr double kUniformTol = 0.05;
constexpr std::size_t kAblationFrequencyEpisodes = 200;
constexpr double kSignalSigmas = 3.0;
constexpr std::size_t kSignalEpisodes = 50;
constexpr double kSignalBudgetS = 900.0;
constexpr double kRowStochasticTol = 1e-12;
constexpr double kSoftmaxSumTol = 1e-12;
constexpr double kMomentRelTol = 0.02;
constexpr double kGridTol = 1e-6;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double stddev(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / v.size());
}

trainer::TrainConfig run_config(const std::string& env, int epochs, std::uint64_t seed) {
  trainer::TrainConfig c;
  c.env = env;
  c.epochs = epochs;
  c.seed = seed;
  return c;
}

// ---------------------------------------------------------------------------

Outcome gradient_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto reports = cli::run_gradcheck(cli::gradcheck_registry(2024), kGradRelTol);
  const double elapsed = seconds_since(t0);
  double worst = 0.0;
  std::string worst_name, failed;
  for (const auto& r : reports) {
    if (r.max_rel_error >= worst) {
      worst = r.max_rel_error;
      worst_name = r.name;
    }
    if (!r.passed) failed += " " + r.name;
  }
  const auto negative = cli::run_gradcheck({cli::corrupted_case(2024)}, kGradRelTol);
  const bool caught = !negative.at(0).passed;
  Outcome o;
  o.pass = failed.empty() && caught && elapsed < kGradBudgetS;
  o.detail = fmt("%zu ops, worst rel. error %.2e (%s), faulty op %s, %.2f s", reports.size(), worst,
                 worst_name.c_str(), caught ? "caught" : "missed", elapsed);
  if (!failed.empty()) o.detail += "; failed:" + failed;
  return o;
}

Outcome kl_correctness() {
  Rng rng(20240);
  double worst = 0.0;
  for (std::size_t set = 0; set < kKlSets; ++set) {
    const std::size_t d = 1 + rng.index(8);
    std::vector<double> mu(d), s2(d), mh(d), s2h(d);
    for (std::size_t i = 0; i < d; ++i) {
      mu[i] = rng.uniform(-1, 1);
      mh[i] = rng.uniform(-1, 1);
      s2[i] = rng.uniform(0.5, 2.0);
      s2h[i] = rng.uniform(0.5, 2.0);
    }
    const double closed =
        ops::gaussian_kl(Tensor::vector(mu), Tensor::vector(s2), Tensor::vector(mh), Tensor::vector(s2h)).item();
    // Antithetic pairs x = μ ± σε; each pair counts as two samples.
    double total = 0.0;
    for (std::size_t n = 0; n < kKlSamples / 2; ++n) {
      std::vector<double> eps(d);
      for (auto& e : eps) e = rng.normal();
      for (double sign : {1.0, -1.0}) {
        double log_ratio = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
          const double x = mu[i] + sign * std::sqrt(s2[i]) * eps[i];
          const double lq = -0.5 * std::log(s2[i]) - 0.5 * (x - mu[i]) * (x - mu[i]) / s2[i];
          const double lp = -0.5 * std::log(s2h[i]) - 0.5 * (x - mh[i]) * (x - mh[i]) / s2h[i];
          log_ratio += lq - lp;
        }
        total += log_ratio;
      }
    }
    worst = std::max(worst, std::abs(closed - total / static_cast<double>(kKlSamples)));
  }
  return {worst < kKlAbsTol, fmt("%zu sets, %zu samples each, worst |closed - MC| %.2e (tol %.0e)", kKlSets,
                                 kKlSamples, worst, kKlAbsTol)};
}

Outcome em_criterion() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng data_rng(31);
  double worst_drop = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t dim = 1 + data_rng.index(3), clusters = 2 + data_rng.index(3);
    std::vector<gmm::Sample> centers(clusters, gmm::Sample(dim));
    for (auto& c : centers) {
      for (auto& v : c) v = data_rng.uniform(-4, 4);
    }
    std::vector<gmm::Sample> data;
    for (int i = 0; i < 300; ++i) {
      gmm::Sample x = centers[data_rng.index(clusters)];
      for (auto& v : x) v += data_rng.uniform(0.3, 1.5) * data_rng.normal();
      data.push_back(std::move(x));
    }
    Rng rng(500 + trial);
    auto model = gmm::initialize(data, 3, rng);
    double prev = gmm::log_likelihood(model, data);
    for (int step = 0; step < 50; ++step) {
      model = gmm::em_step(model, data, rng);
      const double ll = gmm::log_likelihood(model, data);
      worst_drop = std::max(worst_drop, prev - ll);
      prev = ll;
    }
  }
  Rng rng(32);
  std::vector<gmm::Sample> data;
  for (int i = 0; i < 500; ++i) data.push_back({(i % 2 ? 5.0 : -5.0) + rng.normal()});
  const auto fitted = gmm::fit(data, 2, 50, rng);
  double a = fitted.model.components[0].mean[0], b = fitted.model.components[1].mean[0];
  if (a > b) std::swap(a, b);
  const double err = std::max(std::abs(a + 5.0), std::abs(b - 5.0));
  const double elapsed = seconds_since(t0);
  return {worst_drop <= kEmMonotoneSlack && err < kEmRecoveryTol && elapsed < kEmBudgetS,
          fmt("largest log-lik. drop %.1e over 10x50 steps, recovered means %.3f / %.3f (err %.3f), %.2f s",
              std::max(worst_drop, 0.0), a, b, err, elapsed)};
}

Outcome recognition_accuracy() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string detail = "PointDirGoal";
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto res = trainer::meta_train(run_config("PointDirGoal", 5, seed));
    const double first = res.metrics.front().recognition_accuracy;
    const double fifth = res.metrics.back().recognition_accuracy;
    ok = ok && first >= kEarlyAccuracy && fifth >= kEpoch5Accuracy;
    detail += fmt(" seed %d: %.3f -> %.3f;", static_cast<int>(seed), first, fifth);
  }
  const double dirgoal_s = seconds_since(t0);
  const auto three = trainer::meta_train(run_config("PointVelGoalDir", kThreeClassEpochs, 0));
  const double final_acc = three.metrics.back().recognition_accuracy;
  ok = ok && final_acc >= kThreeClassAccuracy && dirgoal_s < kRecognitionBudgetS;
  detail += fmt(" PointVelGoalDir final %.3f; %.0f s", final_acc, seconds_since(t0));
  return {ok, detail};
}


Outcome ablation() {
  const auto t0 = std::chrono::steady_clock::now();
  int wins = 0;
  std::string detail;
  for (int seed = 0; seed < kAblationSeeds; ++seed) {
    double ret[2];
    for (int ablate = 0; ablate < 2; ++ablate) {
      auto cfg = run_config("PointDirGoal", kFullEpochs, static_cast<std::uint64_t>(seed));
      cfg.ablate_recognition = ablate == 1;
      const auto res = trainer::meta_train(cfg);
      ret[ablate] = trainer::meta_test(*res.model, res.validation_tasks, kSignalEpisodes, cfg.ablate_recognition,
                                       derive_seed(cfg.seed, 77))
                        .mean_return;
    }
    if (ret[0] > ret[1]) ++wins;
    detail += fmt(" seed %d: %.1f vs %.1f;", seed, ret[0], ret[1]);
  }

  const auto cfg = run_config("PointVelGoalDir", 0, 0);
  const auto spec = envs::env_spec(cfg.env);
  trainer::TimrlModel model(cfg, spec);
  const auto split = trainer::make_task_split(cfg, spec);
  const auto test = trainer::meta_test(model, split.validation, kAblationFrequencyEpisodes, true, 5);
  double worst = 0.0;
  const double uniform = 1.0 / static_cast<double>(test.selections.size());
  for (std::size_t s : test.selections) {
    worst = std::max(worst, std::abs(static_cast<double>(s) / static_cast<double>(test.evaluated) - uniform));
  }
  return {wins >= kAblationWins && worst <= kUniformTol,
          fmt("non-ablated ahead in %d/%d seeds (final return, non-ablated vs ablated):", wins, kAblationSeeds) +
              detail + fmt(" randomized-k frequency off uniform by %.4f; %.0f s", worst, seconds_since(t0))};
}

Outcome learning_signal() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = run_config("PointNonstatDir", kFullEpochs, 0);
  const auto res = trainer::meta_train(cfg);
  const auto trained = trainer::meta_test(*res.model, res.validation_tasks, kSignalEpisodes, false, 91);
  const auto random = trainer::random_policy_returns(res.model->spec(), res.validation_tasks, kSignalEpisodes, 91);
  const double rm = mean(random), rs = stddev(random);
  const double elapsed = seconds_since(t0);
  return {trained.mean_return >= rm + kSignalSigmas * rs && elapsed < kSignalBudgetS,
          fmt("trained %.2f vs random %.2f +- %.2f (margin %.1f sd), %.0f s", trained.mean_return, rm, rs,
              (trained.mean_return - rm) / rs, elapsed)};
}

Outcome decoupling() {
  const auto res = trainer::meta_train(run_config("PointVelGoalDir", 5, 0));
  std::size_t violations = 0, idle = 0;
  for (const auto& a : res.audits) {
    violations += a.violations.size();
    const bool moved = (a.phase == "inference" && a.before.inference != a.after.inference) ||
                       (a.phase == "recognition" && a.before.recognition != a.after.recognition) ||
                       (a.phase == "sac" && a.before.policy != a.after.policy) ||
                       (a.phase == "collect" || a.phase == "evaluate");
    if (!moved) ++idle;
  }
  return {violations == 0 && idle == 0 && res.audits.size() == 25,
          fmt("%zu phase audits over 5 epochs, %zu foreign-group mutations, %zu phases that did not update their "
              "own group",
              res.audits.size(), violations, idle)};
}

Outcome invariance_suite() {
  Rng rng(808);
  std::string failed;

  // Recognition is a function of the context as a set.
  const auto cfg = run_config("PointVelGoalDir", 0, 0);
  trainer::TimrlModel model(cfg, envs::env_spec(cfg.env));
  double perm_diff = 0.0;
  bool same_class = true;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng.index(15), w = model.row_width();
    std::vector<double> data(n * w);
    for (auto& v : data) v = rng.uniform(-2, 2);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    std::vector<double> shuffled(n * w);
    for (std::size_t r = 0; r < n; ++r) std::copy_n(data.begin() + perm[r] * w, w, shuffled.begin() + r * w);
    const auto a = model.recognition().recognize(inference::ContextWindow::from_rows(Tensor({n, w}, data)));
    const auto b = model.recognition().recognize(inference::ContextWindow::from_rows(Tensor({n, w}, shuffled)));
    same_class = same_class && a.k == b.k;
    for (std::size_t k = 0; k < a.probs.size(); ++k) perm_diff = std::max(perm_diff, std::abs(a.probs[k] - b.probs[k]));
  }
  if (!same_class || perm_diff > 1e-12) failed += " recognize";

  double row_err = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.index(10), m = 1 + rng.index(10), d = 1 + rng.index(6);
    const double scale = trial % 2 ? 100.0 : 2.0;
    std::vector<double> q(n * d), k(m * d);
    for (auto& v : q) v = rng.uniform(-scale, scale);
    for (auto& v : k) v = rng.uniform(-scale, scale);
    const auto wts = neural::attention_weights(Tensor({n, d}, q), Tensor({m, d}, k));
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += wts.at(i, j);
      row_err = std::max(row_err, std::abs(s - 1.0));
    }
  }
  if (row_err > kRowStochasticTol) failed += " attention";

  double soft_err = 0.0;
  bool soft_finite = true;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> logits(15);
    for (auto& v : logits) v = rng.uniform(-1000.0, 1000.0);
    const auto p = ops::softmax_rows(Tensor({3, 5}, logits));
    for (std::size_t r = 0; r < 3; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < 5; ++c) {
        soft_finite = soft_finite && std::isfinite(p.at(r, c)) && p.at(r, c) >= 0.0;
        s += p.at(r, c);
      }
      soft_err = std::max(soft_err, std::abs(s - 1.0));
    }
  }
  if (!soft_finite || soft_err > kSoftmaxSumTol) failed += " softmax";

  const std::size_t n = 100000;
  const double mu = 1.5, sigma = 0.7;
  const auto draws = ops::reparameterize(Tensor({n}, mu), Tensor({n}, sigma), Tensor({n}, rng.normal_vector(n)));
  double m1 = 0.0, var = 0.0;
  for (double v : draws.data()) m1 += v;
  m1 /= n;
  for (double v : draws.data()) var += (v - m1) * (v - m1);
  const double mean_rel = std::abs(m1 - mu) / mu, sd_rel = std::abs(std::sqrt(var / n) - sigma) / sigma;
  if (mean_rel > kMomentRelTol || sd_rel > kMomentRelTol) failed += " reparameterize";

  double grid_err = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<inference::GaussianFactor> factors;
    const std::size_t count = 1 + rng.index(4);
    for (std::size_t i = 0; i < count; ++i) factors.push_back({{rng.uniform(-2, 2)}, {rng.uniform(0.3, 3)}});
    const auto prod = inference::posterior_baseline_product(factors);
    const double lo = -12.0, hi = 12.0;
    const int points = 24001;
    const double h = (hi - lo) / (points - 1);
    std::vector<double> dens(points);
    double z = 0.0;
    for (int i = 0; i < points; ++i) {
      const double x = lo + i * h;
      double log_p = 0.0;
      for (const auto& f : factors) log_p += -0.5 * (x - f.mean[0]) * (x - f.mean[0]) / f.variance[0];
      dens[i] = std::exp(log_p);
      z += (i == 0 || i == points - 1 ? 0.5 : 1.0) * dens[i] * h;
    }
    for (int i = 0; i < points; ++i) {
      const double x = lo + i * h;
      const double closed = std::exp(-0.5 * (x - prod.mean[0]) * (x - prod.mean[0]) / prod.variance[0]) /
                            std::sqrt(2 * M_PI * prod.variance[0]);
      grid_err = std::max(grid_err, std::abs(dens[i] / z - closed));
    }
  }
  if (grid_err > kGridTol) failed += " product";

  Outcome o;
  o.pass = failed.empty();
  o.detail = fmt("recognize max prob. diff %.1e, attention row-sum err %.1e, softmax(1e3) row-sum err %.1e, "
                 "reparam. moments %.2f%%/%.2f%%, product grid err %.1e",
                 perm_diff, row_err, soft_err, 100 * mean_rel, 100 * sd_rel, grid_err);
  if (!failed.empty()) o.detail += "; failed:" + failed;
  return o;
}

Outcome determinism() {
  const auto root = fs::temp_directory_path() / "timrl_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  auto cfg = run_config("PointVelGoalDir", 3, 11);
  std::ofstream(root / "config.json") << trainer::serialize(cfg);
  std::string csv[2];
  for (int i = 0; i < 2; ++i) {
    cli::TrainArgs args;
    args.config_path = root / "config.json";
    args.run_dir = root / ("run" + std::to_string(i));
    std::ostringstream out, err;
    if (cli::cmd_train(args, out, err) != cli::kExitOk) return {false, "training failed: " + err.str()};
    std::ifstream in(*args.run_dir / "metrics.csv", std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    csv[i] = ss.str();
  }
  const bool same = !csv[0].empty() && csv[0] == csv[1];
  return {same, fmt("two 3-epoch runs, metrics.csv %zu bytes, %s", csv[0].size(),
                    same ? "byte-identical" : "differ")};
}

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {1, "gradient suite", gradient_suite},
      {2, "KL correctness", kl_correctness},
      {3, "EM", em_criterion},
      {4, "recognition accuracy", recognition_accuracy},
      {5, "ablation", ablation},
      {6, "learning signal", learning_signal},
      {7, "decoupling", decoupling},
      {8, "invariance suite", invariance_suite},
      {9, "determinism", determinism},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria; one PASS/FAIL line per criterion"};
  std::vector<int> only;
  app.add_option("--criterion,-c", only, "Run only these criteria (1-9)")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  int failures = 0;
  for (const auto& c : criteria()) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("[%s] criterion %d (PRIMARY) %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
