#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace timrl::trainer {

/// A config problem tied to one key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Complete run specification. Every key of the JSON form is listed in
/// config_keys(); unknown keys are rejected.
struct TrainConfig {
  std::string env;
  int num_components = 0;  // 0: one per task class of the environment
  int latent_dim = 4;
  int window = 16;
  double inference_alpha = 0.1;

  double sac_temperature = 0.2;
  double gamma = 0.99;
  double tau = 0.005;
  int sac_batch = 128;
  int context_batch = 32;

  int d_model = 32;
  int heads = 2;
  int layers = 2;
  int ff_hidden = 64;
  double ln_eps = 1e-5;
  int preproc_hidden = 64;
  int head_hidden = 32;
  int feature_hidden = 64;
  int feature_dim = 32;
  int trunk_hidden = 64;
  int decoder_hidden = 64;
  std::vector<int> policy_hidden = {64, 64};

  double lr_inference = 1e-3;
  double lr_recognition = 1e-3;
  double lr_actor = 3e-4;
  double lr_critic = 3e-4;
  double max_grad_norm = 10.0;

  int epochs = 30;
  int warmup_rollouts = 10;
  int rollouts_per_epoch = 10;
  int inference_steps = 50;
  int recognition_steps = 10;
  int sac_steps = 200;
  int eval_episodes = 10;

  int task_pool_size = 50;
  double train_fraction = 0.8;
  int buffer_capacity = 100000;

  std::uint64_t seed = 0;
  std::string recognition_loss = "mse";  // mse | cross_entropy
  std::string encoder = "gmm";           // gmm | single_gaussian
  bool sac_recompute_embedding = true;
  bool ablate_recognition = false;
  int checkpoint_every = 0;  // 0: only at exit
  bool parallel_rollouts = true;

  bool operator==(const TrainConfig&) const = default;
};

const std::vector<std::string>& config_keys();

/// Throws ConfigError naming the first offending field.
void validate(const TrainConfig& config);

nlohmann::ordered_json to_json(const TrainConfig& config);
/// Parses and validates. Missing keys keep their defaults except `env`,
/// which is required.
TrainConfig config_from_json(const nlohmann::ordered_json& j);
TrainConfig load_config(const std::filesystem::path& path);
std::string serialize(const TrainConfig& config);

/// Sets one key from its textual value ("30", "0.5", "true", "PointDirGoal",
/// "[32,32]") and revalidates.
void apply_override(TrainConfig& config, const std::string& key, const std::string& value);

/// Number of mixture components the model is built with.
std::size_t resolved_components(const TrainConfig& config);

}  // namespace timrl::trainer
