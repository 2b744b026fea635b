#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "timrl/numerics/errors.hpp"
#include "timrl/policy/replay_buffer.hpp"
#include "timrl/trainer/model.hpp"

namespace timrl::trainer {

/// Disjoint, exhaustive seeded split of a task pool. Throws ContractError
/// when the pool has fewer than 5 tasks or the fraction leaves a side empty.
template <typename T>
std::pair<std::vector<T>, std::vector<T>> split_tasks(const std::vector<T>& pool, double fraction,
                                                      std::uint64_t seed);

/// Index form of split_tasks: positions of the train and validation items.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t pool_size,
                                                                          double fraction, std::uint64_t seed);

std::vector<envs::TaskSchedule> task_pool(const envs::EnvSpec& spec, std::size_t size, std::uint64_t seed);

struct TaskSplit {
  std::vector<envs::TaskSchedule> train;
  std::vector<envs::TaskSchedule> validation;
};

/// The pool and split meta_train uses for `config`, sampled for `spec`.
TaskSplit make_task_split(const TrainConfig& config, const envs::EnvSpec& spec);

// ---------------------------------------------------------------------------
// Acting

struct AgentOptions {
  policy::ActionMode mode = policy::ActionMode::kStochastic;
  bool ablate_recognition = false;
  bool random_actions = false;  // warmup exploration; recognition still runs
};

/// Per-step recognize → encode → act over the episode's own history.
class TimrlAgent : public envs::Agent {
 public:
  TimrlAgent(const TimrlModel& model, const AgentOptions& options, std::uint64_t seed);

  void begin_episode() override;
  std::vector<double> act(int t, const std::vector<double>& state) override;
  void observe(int t, const envs::Transition& transition) override;

  /// Recognizer output per step, −1 where the context was empty.
  const std::vector<int>& recognized() const { return recognized_; }
  /// Component that produced z at each step.
  const std::vector<int>& components() const { return components_; }
  const std::vector<std::vector<double>>& embeddings() const { return embeddings_; }

 private:
  const TimrlModel& model_;
  AgentOptions opt_;
  Rng rng_;
  std::vector<envs::Transition> history_;
  std::vector<int> recognized_;
  std::vector<int> components_;
  std::vector<std::vector<double>> embeddings_;
};

struct EpisodeRecord {
  std::vector<envs::Transition> transitions;
  std::vector<int> recognized;
  std::vector<int> components;
  std::vector<std::vector<double>> embeddings;
  double episode_return = 0.0;
};

/// Runs one episode per schedule; episode i's agent is seeded with
/// derive_seed(seed, i). The parallel path fans out over OpenMP threads and
/// returns exactly what the serial path returns.
std::vector<EpisodeRecord> collect_rollouts(const TimrlModel& model, const std::vector<envs::TaskSchedule>& schedules,
                                            const AgentOptions& options, std::uint64_t seed, bool parallel);

// ---------------------------------------------------------------------------
// Update phases

/// Builds context rows for buffer entries under the model's current normalizer.
class ContextSampler {
 public:
  ContextSampler(const policy::ReplayBuffer& buffer, const TimrlModel& model);

  /// Window ending at entry i (inclusive), oldest first.
  std::vector<std::vector<double>> context_including(std::size_t i) const;
  /// Window ending just before entry i; empty at an episode's first step.
  std::vector<std::vector<double>> context_before(std::size_t i) const;
  const policy::ReplayBuffer& buffer() const { return buffer_; }

 private:
  std::vector<std::vector<double>> rows(const std::vector<std::size_t>& idx) const;

  const policy::ReplayBuffer& buffer_;
  const TimrlModel& model_;
};

/// A loss came out NaN or infinite. `dump()` holds the offending batch.
class NonFiniteLoss : public NumericError {
 public:
  NonFiniteLoss(const std::string& what, std::string dump) : NumericError(what), dump_(std::move(dump)) {}
  const std::string& dump() const { return dump_; }

 private:
  std::string dump_;
};

enum class RecognitionLossKind { kMse, kCrossEntropy };

/// Supervised recognition updates on buffer contexts labeled with the class of
/// their newest transition. Touches only the recognition network. Returns one
/// loss per step.
std::vector<double> recognition_train_phase(const ContextSampler& sampler, const inference::RecognitionNetwork& net,
                                            Adam& optimizer, std::size_t steps, std::size_t batch,
                                            RecognitionLossKind loss, Rng& rng);

struct InferenceStats {
  double recons = 0.0;
  double regula = 0.0;
  double total = 0.0;
};

/// Encoder/decoder updates on the summed per-component VAE loss.
InferenceStats inference_train_phase(const ContextSampler& sampler, const TimrlModel& model, Adam& optimizer,
                                     std::size_t steps, std::size_t batch, double alpha, Rng& rng);

struct SacStats {
  double actor = 0.0;
  double critic = 0.0;
};

/// Embeddings for the given buffer entries: recomputed from the current
/// encoder with each entry's stored component, or the stored z.
Tensor sac_embeddings(const ContextSampler& sampler, const TimrlModel& model, const std::vector<std::size_t>& idx,
                      bool recompute, Rng& rng);

SacStats sac_train_phase(const ContextSampler& sampler, TimrlModel& model, policy::SacLearner& learner,
                         std::size_t steps, std::size_t batch, bool recompute, Rng& rng);

// ---------------------------------------------------------------------------
// Evaluation

struct TestResult {
  double mean_return = 0.0;
  double return_std = 0.0;
  std::vector<double> returns;
  /// Correct selections over steps with a non-empty context.
  double accuracy = 0.0;
  std::size_t evaluated = 0;
  /// confusion[true][selected].
  std::vector<std::vector<std::size_t>> confusion;
  /// How often each component was selected.
  std::vector<std::size_t> selections;
  std::vector<EpisodeRecord> episodes;
};

/// Deterministic-actor episodes over `schedules` (cycled). Under ablation the
/// component is drawn uniformly at every step. Throws ContractError when
/// n_episodes is 0 or there are no schedules.
TestResult meta_test(const TimrlModel& model, const std::vector<envs::TaskSchedule>& schedules,
                     std::size_t n_episodes, bool ablate_recognition, std::uint64_t seed, bool parallel = true);

/// Returns of uniform random actions on the same schedules.
std::vector<double> random_policy_returns(const envs::EnvSpec& spec, const std::vector<envs::TaskSchedule>& schedules,
                                          std::size_t n_episodes, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Meta-training

struct EpochMetrics {
  int epoch = 0;
  double mean_test_return = 0.0;
  double recognition_accuracy = 0.0;
  double recons_loss = 0.0;
  double regula_loss = 0.0;
  double recognize_loss = 0.0;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
};

/// Parameter checksums of the three phase-owned groups.
struct GroupChecksums {
  std::uint64_t inference = 0;
  std::uint64_t recognition = 0;
  std::uint64_t policy = 0;

  bool operator==(const GroupChecksums&) const = default;
};

GroupChecksums group_checksums(const TimrlModel& model);

struct PhaseAudit {
  int epoch = 0;
  std::string phase;
  GroupChecksums before;
  GroupChecksums after;
  /// Groups the phase is not allowed to touch that changed anyway.
  std::vector<std::string> violations;
};

struct TrainCallbacks {
  std::function<void(const EpochMetrics&, const TimrlModel&)> on_epoch;
  /// Where the diagnostic dump goes if a loss turns non-finite.
  std::filesystem::path dump_dir;
};

struct TrainResult {
  std::unique_ptr<TimrlModel> model;
  std::vector<EpochMetrics> metrics;
  std::vector<PhaseAudit> audits;
  std::vector<envs::TaskSchedule> train_tasks;
  std::vector<envs::TaskSchedule> validation_tasks;
};

/// Decoupled meta-training. Throws NumericError, with the offending batch
/// dumped, as soon as a loss is not finite.
TrainResult meta_train(const TrainConfig& config, const TrainCallbacks& callbacks = {});

void write_metrics_csv(std::ostream& os, const std::vector<EpochMetrics>& metrics);
std::string metrics_csv_header();

// ---------------------------------------------------------------------------

template <typename T>
std::pair<std::vector<T>, std::vector<T>> split_tasks(const std::vector<T>& pool, double fraction,
                                                      std::uint64_t seed) {
  auto [train_idx, val_idx] = split_indices(pool.size(), fraction, seed);
  std::pair<std::vector<T>, std::vector<T>> out;
  for (std::size_t i : train_idx) out.first.push_back(pool[i]);
  for (std::size_t i : val_idx) out.second.push_back(pool[i]);
  return out;
}

}  // namespace timrl::trainer
