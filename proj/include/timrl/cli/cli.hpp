#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "timrl/numerics/tensor.hpp"
#include "timrl/trainer/config.hpp"

namespace timrl::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
};

/// Environment variable naming the directory that receives run directories.
inline constexpr const char* kOutputRootEnv = "TIMRL_OUTPUT_ROOT";

// ---------------------------------------------------------------------------
// Run bookkeeping

std::string sha1_hex(std::string_view data);
/// Hash git assigns to a blob with this content: SHA-1 of "blob <len>\0<content>".
std::string git_blob_hash(std::string_view content);
std::string config_hash(const trainer::TrainConfig& config);

/// $TIMRL_OUTPUT_ROOT, or ./runs when unset.
std::filesystem::path output_root();
/// Creates <root>/<UTC timestamp>-<hash prefix>, adding a numeric suffix on collision.
std::filesystem::path make_run_dir(const std::filesystem::path& root, const std::string& hash,
                                   std::chrono::system_clock::time_point when);
std::string iso_timestamp(std::chrono::system_clock::time_point when);

struct RunManifest {
  trainer::TrainConfig config;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string started;
  std::string finished;
  std::filesystem::path run_dir;
  /// Paths relative to run_dir, in creation order.
  std::vector<std::string> artifacts;

  nlohmann::ordered_json to_json() const;
  /// Artifacts that do not exist on disk.
  std::vector<std::string> missing_artifacts() const;
};

// ---------------------------------------------------------------------------
// Commands. Each writes human-readable output to `out` and diagnostics to `err`.

struct TrainArgs {
  std::filesystem::path config_path;
  std::vector<std::pair<std::string, std::string>> overrides;
  std::optional<std::filesystem::path> run_dir;  // exact directory instead of a fresh one
};
int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err);

struct EvalArgs {
  std::filesystem::path checkpoint;
  std::optional<std::filesystem::path> config_path;  // default: config.json next to the run
  std::optional<std::string> env;                    // default: the config's environment
  std::size_t episodes = 10;
  std::uint64_t seed = 0;
  bool ablate_recognition = false;
  std::optional<std::filesystem::path> output_dir;
};
int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err);

/// One differentiable operation under finite-difference test.
struct GradCase {
  std::string name;
  std::vector<Tensor> inputs;
  std::function<Tensor()> loss;
};

/// Every numerics and neural op with seeded inputs in [−2, 2].
std::vector<GradCase> gradcheck_registry(std::uint64_t seed);
/// A deliberately wrong backward rule, used as a negative control.
GradCase corrupted_case(std::uint64_t seed);

struct GradReport {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  bool passed = false;
};
std::vector<GradReport> run_gradcheck(const std::vector<GradCase>& cases, double tolerance);

inline constexpr double kGradTolerance = 1e-4;
int cmd_gradcheck(bool include_corrupted, std::ostream& out, std::ostream& err);

// ---------------------------------------------------------------------------
// Plot data

class CsvError : public std::runtime_error {
 public:
  CsvError(std::size_t line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct NumericTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::vector<double> column(const std::string& name) const;
};

/// Header line then rows of numbers with the header's column count.
NumericTable parse_numeric_csv(std::istream& is);

/// Trailing moving average: element i averages the last min(i+1, window) values.
std::vector<double> moving_average(const std::vector<double>& values, std::size_t window);
/// At most `max_points` evenly spaced indices, always keeping the first and last.
std::vector<std::size_t> downsample_indices(std::size_t n, std::size_t max_points);

nlohmann::ordered_json plot_series(const NumericTable& table, std::size_t window, std::size_t max_points);
int cmd_plotdata(const std::filesystem::path& metrics_csv, std::size_t window, std::size_t max_points,
                 const std::optional<std::filesystem::path>& output, std::ostream& out, std::ostream& err);

// ---------------------------------------------------------------------------

int cmd_em_demo(std::uint64_t seed, std::size_t samples, std::size_t steps, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches to a command.
int run(int argc, char** argv);

}  // namespace timrl::cli
