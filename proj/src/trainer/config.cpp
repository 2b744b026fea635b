#include "timrl/trainer/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include "timrl/envs/env.hpp"

namespace timrl::trainer {

namespace {

using nlohmann::ordered_json;

struct Field {
  std::string name;
  std::function<void(TrainConfig&, const ordered_json&)> read;
  std::function<ordered_json(const TrainConfig&)> write;
};

template <typename T>
Field field(std::string name, T TrainConfig::*member) {
  auto read = [name, member](TrainConfig& c, const ordered_json& v) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(name, "expected true or false");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(name, "expected a string");
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (!v.is_number_unsigned()) throw ConfigError(name, "expected a nonnegative integer");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(name, "expected an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(name, "expected a number");
    } else {
      if (!v.is_array()) throw ConfigError(name, "expected a list of integers");
      for (const auto& e : v) {
        if (!e.is_number_integer()) throw ConfigError(name, "expected a list of integers");
      }
    }
    c.*member = v.get<T>();
  };
  auto write = [member](const TrainConfig& c) { return ordered_json(c.*member); };
  return {std::move(name), read, write};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      field("env", &TrainConfig::env),
      field("num_components", &TrainConfig::num_components),
      field("latent_dim", &TrainConfig::latent_dim),
      field("window", &TrainConfig::window),
      field("inference_alpha", &TrainConfig::inference_alpha),
      field("sac_temperature", &TrainConfig::sac_temperature),
      field("gamma", &TrainConfig::gamma),
      field("tau", &TrainConfig::tau),
      field("sac_batch", &TrainConfig::sac_batch),
      field("context_batch", &TrainConfig::context_batch),
      field("d_model", &TrainConfig::d_model),
      field("heads", &TrainConfig::heads),
      field("layers", &TrainConfig::layers),
      field("ff_hidden", &TrainConfig::ff_hidden),
      field("ln_eps", &TrainConfig::ln_eps),
      field("preproc_hidden", &TrainConfig::preproc_hidden),
      field("head_hidden", &TrainConfig::head_hidden),
      field("feature_hidden", &TrainConfig::feature_hidden),
      field("feature_dim", &TrainConfig::feature_dim),
      field("trunk_hidden", &TrainConfig::trunk_hidden),
      field("decoder_hidden", &TrainConfig::decoder_hidden),
      field("policy_hidden", &TrainConfig::policy_hidden),
      field("lr_inference", &TrainConfig::lr_inference),
      field("lr_recognition", &TrainConfig::lr_recognition),
      field("lr_actor", &TrainConfig::lr_actor),
      field("lr_critic", &TrainConfig::lr_critic),
      field("max_grad_norm", &TrainConfig::max_grad_norm),
      field("epochs", &TrainConfig::epochs),
      field("warmup_rollouts", &TrainConfig::warmup_rollouts),
      field("rollouts_per_epoch", &TrainConfig::rollouts_per_epoch),
      field("inference_steps", &TrainConfig::inference_steps),
      field("recognition_steps", &TrainConfig::recognition_steps),
      field("sac_steps", &TrainConfig::sac_steps),
      field("eval_episodes", &TrainConfig::eval_episodes),
      field("task_pool_size", &TrainConfig::task_pool_size),
      field("train_fraction", &TrainConfig::train_fraction),
      field("buffer_capacity", &TrainConfig::buffer_capacity),
      field("seed", &TrainConfig::seed),
      field("recognition_loss", &TrainConfig::recognition_loss),
      field("encoder", &TrainConfig::encoder),
      field("sac_recompute_embedding", &TrainConfig::sac_recompute_embedding),
      field("ablate_recognition", &TrainConfig::ablate_recognition),
      field("checkpoint_every", &TrainConfig::checkpoint_every),
      field("parallel_rollouts", &TrainConfig::parallel_rollouts),
  };
  return table;
}

const Field* find_field(const std::string& key) {
  for (const auto& f : fields()) {
    if (f.name == key) return &f;
  }
  return nullptr;
}

void require(bool ok, const char* field, const std::string& message) {
  if (!ok) throw ConfigError(field, message);
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& f : fields()) out.push_back(f.name);
    return out;
  }();
  return keys;
}

void validate(const TrainConfig& c) {
  require(!c.env.empty(), "env", "missing environment name");
  envs::EnvSpec spec;
  try {
    spec = envs::env_spec(c.env);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("env", e.what());
  }
  require(c.num_components >= 0, "num_components", "must be nonnegative");
  require(c.num_components == 0 || static_cast<std::size_t>(c.num_components) == spec.num_classes(),
          "num_components", c.env + " has " + std::to_string(spec.num_classes()) + " task classes");
  require(c.latent_dim > 0, "latent_dim", "must be positive");
  require(c.encoder != "gmm" || static_cast<std::size_t>(c.latent_dim) >= spec.num_classes(), "latent_dim",
          "must be at least the number of components");
  require(c.window > 0, "window", "must be positive");
  require(c.inference_alpha >= 0.0, "inference_alpha", "must be nonnegative");
  require(c.sac_temperature >= 0.0, "sac_temperature", "must be nonnegative");
  require(c.gamma > 0.0 && c.gamma < 1.0, "gamma", "must lie in (0, 1)");
  require(c.tau > 0.0 && c.tau <= 1.0, "tau", "must lie in (0, 1]");
  require(c.sac_batch > 0, "sac_batch", "must be positive");
  require(c.context_batch > 0, "context_batch", "must be positive");
  require(c.d_model > 0, "d_model", "must be positive");
  require(c.heads > 0, "heads", "must be positive");
  require(c.d_model % c.heads == 0, "heads", "must divide d_model");
  require(c.layers > 0, "layers", "must be positive");
  require(c.ff_hidden > 0, "ff_hidden", "must be positive");
  require(c.ln_eps > 0.0, "ln_eps", "must be positive");
  require(c.preproc_hidden > 0, "preproc_hidden", "must be positive");
  require(c.head_hidden > 0, "head_hidden", "must be positive");
  require(c.feature_hidden > 0, "feature_hidden", "must be positive");
  require(c.feature_dim > 0, "feature_dim", "must be positive");
  require(c.trunk_hidden > 0, "trunk_hidden", "must be positive");
  require(c.decoder_hidden > 0, "decoder_hidden", "must be positive");
  require(!c.policy_hidden.empty(), "policy_hidden", "needs at least one layer");
  for (int h : c.policy_hidden) require(h > 0, "policy_hidden", "layer widths must be positive");
  require(c.lr_inference > 0.0, "lr_inference", "must be positive");
  require(c.lr_recognition > 0.0, "lr_recognition", "must be positive");
  require(c.lr_actor > 0.0, "lr_actor", "must be positive");
  require(c.lr_critic > 0.0, "lr_critic", "must be positive");
  require(c.max_grad_norm >= 0.0, "max_grad_norm", "must be nonnegative");
  require(c.epochs >= 0, "epochs", "must be nonnegative");
  require(c.warmup_rollouts >= 0, "warmup_rollouts", "must be nonnegative");
  require(c.rollouts_per_epoch > 0, "rollouts_per_epoch", "must be positive");
  require(c.inference_steps >= 0, "inference_steps", "must be nonnegative");
  require(c.recognition_steps >= 0, "recognition_steps", "must be nonnegative");
  require(c.sac_steps >= 0, "sac_steps", "must be nonnegative");
  require(c.eval_episodes > 0, "eval_episodes", "must be positive");
  require(c.task_pool_size >= 5, "task_pool_size", "must be at least 5");
  require(c.train_fraction > 0.0 && c.train_fraction < 1.0, "train_fraction", "must lie in (0, 1)");
  require(c.buffer_capacity > 0, "buffer_capacity", "must be positive");
  require(c.recognition_loss == "mse" || c.recognition_loss == "cross_entropy", "recognition_loss",
          "must be mse or cross_entropy");
  require(c.encoder == "gmm" || c.encoder == "single_gaussian", "encoder", "must be gmm or single_gaussian");
  require(c.checkpoint_every >= 0, "checkpoint_every", "must be nonnegative");
}

nlohmann::ordered_json to_json(const TrainConfig& config) {
  ordered_json j = ordered_json::object();
  for (const auto& f : fields()) j[f.name] = f.write(config);
  return j;
}

TrainConfig config_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object()) throw ConfigError("<root>", "config must be a JSON object");
  TrainConfig c;
  for (const auto& [key, value] : j.items()) {
    const Field* f = find_field(key);
    if (f == nullptr) throw ConfigError(key, "unknown key");
    f->read(c, value);
  }
  if (!j.contains("env")) throw ConfigError("env", "missing environment name");
  validate(c);
  return c;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("<file>", path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

std::string serialize(const TrainConfig& config) { return to_json(config).dump(2) + "\n"; }

void apply_override(TrainConfig& config, const std::string& key, const std::string& value) {
  const Field* f = find_field(key);
  if (f == nullptr) throw ConfigError(key, "unknown key");
  ordered_json v;
  try {
    v = ordered_json::parse(value);
  } catch (const nlohmann::json::parse_error&) {
    v = value;
  }
  // "0.1" parses as a number even for string keys; keep the literal text there.
  if (f->write(config).is_string() && !v.is_string()) v = value;
  TrainConfig next = config;
  f->read(next, v);
  validate(next);
  config = std::move(next);
}

std::size_t resolved_components(const TrainConfig& config) {
  if (config.encoder == "single_gaussian") return 1;
  return config.num_components > 0 ? static_cast<std::size_t>(config.num_components)
                                   : envs::env_spec(config.env).num_classes();
}

}  // namespace timrl::trainer
