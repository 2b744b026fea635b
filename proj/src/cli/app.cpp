#include <iostream>

#include "CLI11.hpp"
#include "timrl/cli/cli.hpp"

namespace timrl::cli {

namespace {

std::pair<std::string, std::string> split_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw CLI::ValidationError("--set", "expected key=value, got '" + text + "'");
  return {text.substr(0, eq), text.substr(eq + 1)};
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Task-inference meta-reinforcement learning on point-robot tasks"};
  app.require_subcommand(1);

  TrainArgs train;
  std::vector<std::string> sets;
  std::optional<std::size_t> epochs;
  std::optional<std::uint64_t> train_seed;
  std::string run_dir;
  auto* train_cmd = app.add_subcommand("train", "Meta-train from a config file");
  train_cmd->add_option("config", train.config_path, "JSON config file")->required();
  train_cmd->add_option("--set", sets, "Override a config key, key=value (repeatable)");
  train_cmd->add_option("--epochs", epochs, "Override the epoch count");
  train_cmd->add_option("--seed", train_seed, "Override the seed");
  train_cmd->add_option("--run-dir", run_dir, "Write into this directory instead of a fresh one");

  EvalArgs eval;
  std::string eval_config, eval_env, eval_out;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on validation tasks");
  eval_cmd->add_option("checkpoint", eval.checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--config", eval_config, "Config file (default: the run's config.json)");
  eval_cmd->add_option("--env", eval_env, "Environment name");
  eval_cmd->add_option("--episodes", eval.episodes, "Number of episodes")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--seed", eval.seed, "Evaluation seed");
  eval_cmd->add_flag("--ablate-recognition", eval.ablate_recognition, "Pick the component uniformly at random");
  eval_cmd->add_option("--output", eval_out, "Output directory");

  bool faulty = false;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every differentiable op");
  grad_cmd->add_flag("--inject-faulty-op", faulty)->group("");

  std::string csv_path, plot_out;
  std::size_t window = 5, max_points = 200;
  auto* plot_cmd = app.add_subcommand("plotdata", "Smoothed, downsampled curves from a metrics CSV");
  plot_cmd->add_option("metrics_csv", csv_path, "metrics.csv of a run")->required();
  plot_cmd->add_option("--window", window, "Moving-average window");
  plot_cmd->add_option("--max-points", max_points, "Maximum points per series");
  plot_cmd->add_option("--output", plot_out, "Output JSON (default: plot.json next to the CSV)");

  std::uint64_t em_seed = 0;
  std::size_t em_samples = 600, em_steps = 50;
  auto* em_cmd = app.add_subcommand("em-demo", "Fit a Gaussian mixture to synthetic data");
  em_cmd->add_option("--seed", em_seed, "Sampling seed");
  em_cmd->add_option("--samples", em_samples, "Number of samples");
  em_cmd->add_option("--steps", em_steps, "EM steps");

  try {
    app.parse(argc, argv);
    for (const auto& s : sets) train.overrides.push_back(split_assignment(s));
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (*train_cmd) {
    if (epochs) train.overrides.emplace_back("epochs", std::to_string(*epochs));
    if (train_seed) train.overrides.emplace_back("seed", std::to_string(*train_seed));
    if (!run_dir.empty()) train.run_dir = run_dir;
    return cmd_train(train, std::cout, std::cerr);
  }
  if (*eval_cmd) {
    if (!eval_config.empty()) eval.config_path = eval_config;
    if (!eval_env.empty()) eval.env = eval_env;
    if (!eval_out.empty()) eval.output_dir = eval_out;
    return cmd_eval(eval, std::cout, std::cerr);
  }
  if (*grad_cmd) return cmd_gradcheck(faulty, std::cout, std::cerr);
  if (*plot_cmd) {
    std::optional<std::filesystem::path> out;
    if (!plot_out.empty()) out = plot_out;
    return cmd_plotdata(csv_path, window, max_points, out, std::cout, std::cerr);
  }
  return cmd_em_demo(em_seed, em_samples, em_steps, std::cout, std::cerr);
}

}  // namespace timrl::cli
