#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "timrl/cli/cli.hpp"
#include "timrl/numerics/checkpoint.hpp"
#include "timrl/numerics/errors.hpp"
#include "timrl/trainer/trainer.hpp"

namespace timrl::cli {

namespace {

namespace fs = std::filesystem;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

std::string metrics_text(const std::vector<trainer::EpochMetrics>& metrics) {
  std::ostringstream os;
  trainer::write_metrics_csv(os, metrics);
  return os.str();
}

std::string checkpoint_name(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "epoch_%04d.ckpt", epoch);
  return buf;
}

void add_artifact(RunManifest& manifest, const std::string& rel) {
  for (const auto& a : manifest.artifacts) {
    if (a == rel) return;
  }
  manifest.artifacts.push_back(rel);
}

std::optional<fs::path> find_config(const fs::path& checkpoint) {
  const fs::path dir = checkpoint.parent_path();
  for (const fs::path& candidate : {dir / "config.json", dir.parent_path() / "config.json"}) {
    if (fs::exists(candidate)) return candidate;
  }
  return std::nullopt;
}

}  // namespace

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
  trainer::TrainConfig config;
  try {
    config = trainer::load_config(args.config_path);
    for (const auto& [key, value] : args.overrides) trainer::apply_override(config, key, value);
  } catch (const trainer::ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  }

  RunManifest manifest;
  manifest.config = config;
  manifest.config_hash = config_hash(config);
  manifest.seed = config.seed;
  const auto start = std::chrono::system_clock::now();
  manifest.started = iso_timestamp(start);
  if (args.run_dir) {
    fs::create_directories(*args.run_dir);
    manifest.run_dir = *args.run_dir;
  } else {
    manifest.run_dir = make_run_dir(output_root(), manifest.config_hash, start);
  }
  const fs::path dir = manifest.run_dir;
  fs::create_directories(dir / "checkpoints");
  write_text(dir / "config.json", trainer::serialize(config));
  add_artifact(manifest, "config.json");

  std::vector<trainer::EpochMetrics> series;
  trainer::TrainCallbacks callbacks;
  callbacks.dump_dir = dir;
  callbacks.on_epoch = [&](const trainer::EpochMetrics& m, const trainer::TimrlModel& model) {
    series.push_back(m);
    write_text(dir / "metrics.csv", metrics_text(series));
    add_artifact(manifest, "metrics.csv");
    if (config.checkpoint_every > 0 && m.epoch % config.checkpoint_every == 0) {
      const std::string rel = "checkpoints/" + checkpoint_name(m.epoch);
      save_checkpoint(dir / rel, model.state());
      add_artifact(manifest, rel);
    }
    out << "epoch " << m.epoch << "  return " << std::setprecision(6) << m.mean_test_return << "  accuracy "
        << m.recognition_accuracy << "\n"
        << std::flush;
  };

  int code = kExitOk;
  try {
    const auto result = trainer::meta_train(config, callbacks);
    write_text(dir / "metrics.csv", metrics_text(result.metrics));
    add_artifact(manifest, "metrics.csv");
    save_checkpoint(dir / "checkpoints" / "final.ckpt", result.model->state());
    add_artifact(manifest, "checkpoints/final.ckpt");
    for (const auto& audit : result.audits) {
      if (!audit.violations.empty()) {
        err << "phase isolation violated in epoch " << audit.epoch << " phase " << audit.phase << "\n";
        code = kExitFailure;
      }
    }
  } catch (const trainer::NonFiniteLoss& e) {
    err << "training aborted: " << e.what() << "; batch dumped to " << (dir / "nonfinite_batch.txt").string()
        << "\n";
    add_artifact(manifest, "nonfinite_batch.txt");
    code = kExitFailure;
  } catch (const std::exception& e) {
    err << "training failed: " << e.what() << "\n";
    code = kExitFailure;
  }

  manifest.finished = iso_timestamp(std::chrono::system_clock::now());
  add_artifact(manifest, "manifest.json");
  write_text(dir / "manifest.json", manifest.to_json().dump(2) + "\n");
  out << "run directory: " << dir.string() << "\n";
  return code;
}

int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err) {
  if (args.episodes == 0) {
    err << "eval: --episodes must be positive\n";
    return kExitUsage;
  }
  const auto config_path = args.config_path ? args.config_path : find_config(args.checkpoint);
  if (!config_path) {
    err << "eval: no config.json next to " << args.checkpoint.string() << "; pass --config\n";
    return kExitUsage;
  }
  trainer::TrainConfig config;
  try {
    config = trainer::load_config(*config_path);
    if (args.env) trainer::apply_override(config, "env", *args.env);
  } catch (const trainer::ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  }

  const auto spec = envs::env_spec(config.env);
  try {
    trainer::TimrlModel model(config, spec);
    model.load_state(load_checkpoint(args.checkpoint));

    const auto split = trainer::make_task_split(config, spec);
    const auto res = trainer::meta_test(model, split.validation, args.episodes, args.ablate_recognition, args.seed);

    const fs::path dir = args.output_dir ? *args.output_dir
                                         : args.checkpoint.parent_path() /
                                               ("eval-" + args.checkpoint.stem().string() + "-" + config.env +
                                                (args.ablate_recognition ? "-ablated" : ""));
    fs::create_directories(dir);

    nlohmann::ordered_json j;
    j["env"] = config.env;
    j["episodes"] = args.episodes;
    j["seed"] = args.seed;
    j["ablate_recognition"] = args.ablate_recognition;
    j["mean_return"] = res.mean_return;
    j["return_std"] = res.return_std;
    j["accuracy"] = res.accuracy;
    j["evaluated_steps"] = res.evaluated;
    j["confusion"] = res.confusion;
    j["selections"] = res.selections;
    j["returns"] = res.returns;
    write_text(dir / "eval.json", j.dump(2) + "\n");

    {
      std::ofstream log(dir / "episodes.log");
      for (const auto& ep : res.episodes) envs::write_episode_log(log, ep.transitions);
    }
    {
      std::ofstream csv(dir / "latents.csv");
      csv << "episode,t,true_class,predicted_class";
      for (std::size_t i = 0; i < model.latent_dim(); ++i) csv << ",z" << i;
      csv << "\n";
      char buf[32];
      for (std::size_t e = 0; e < res.episodes.size(); ++e) {
        const auto& ep = res.episodes[e];
        for (std::size_t t = 0; t < ep.transitions.size(); ++t) {
          csv << e << "," << t << "," << ep.transitions[t].true_class << "," << ep.recognized[t];
          for (double v : ep.embeddings[t]) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            csv << "," << buf;
          }
          csv << "\n";
        }
      }
    }

    out << "env " << config.env << (args.ablate_recognition ? " (recognition randomized)" : "") << "\n";
    out << "mean return " << std::setprecision(6) << res.mean_return << " +- " << res.return_std << " over "
        << args.episodes << " episodes\n";
    out << "recognition accuracy " << res.accuracy << " over " << res.evaluated << " steps\n";
    out << "confusion (rows: true class, columns: selected component)\n";
    for (std::size_t r = 0; r < res.confusion.size(); ++r) {
      out << "  " << envs::to_string(spec.task_classes[r]) << ":";
      for (std::size_t c : res.confusion[r]) out << " " << c;
      out << "\n";
    }
    out << "wrote " << (dir / "eval.json").string() << "\n";
  } catch (const DimensionError& e) {
    err << "checkpoint does not fit " << config.env << ": " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "eval failed: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace timrl::cli
