#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "timrl/numerics/random.hpp"

namespace timrl::envs {

/// What a task class asks the point robot to do.
enum class TaskKind {
  kDirection,  // move along a unit direction
  kVelocity,   // hold a target speed
  kGoal,       // reach a target position
};

std::string_view to_string(TaskKind kind);

struct TaskDescriptor {
  int class_id = 0;
  /// Unit direction, {target speed}, or target position, depending on the class.
  std::vector<double> parameter;
};

struct TaskSegment {
  int start = 0;
  TaskDescriptor task;
};

/// Ground truth of one non-stationary episode.
struct TaskSchedule {
  std::vector<TaskSegment> segments;

  const TaskDescriptor& active(int t) const;
  int class_at(int t) const { return active(t).class_id; }
};

struct Transition {
  std::vector<double> state;
  std::vector<double> action;
  double reward = 0.0;
  std::vector<double> next_state;
  int true_class = 0;
};

struct EnvSpec {
  std::string name;
  std::size_t state_dim = 2;
  std::size_t action_dim = 2;
  int episode_length = 100;
  std::vector<TaskKind> task_classes;
  int max_changes_per_episode = 3;
  double dt = 0.1;

  std::size_t num_classes() const { return task_classes.size(); }
  bool multi_task() const { return task_classes.size() > 1; }
};

/// Registered environments: PointNonstatDir, PointNonstatVel, PointDirGoal,
/// PointVelGoalDir.
const std::vector<std::string>& env_names();
/// Throws std::invalid_argument for an unknown name.
EnvSpec env_spec(std::string_view name);

/// Throws ContractError when the schedule breaks its invariants for `spec`.
void validate_schedule(const TaskSchedule& schedule, const EnvSpec& spec);

TaskDescriptor sample_task(const EnvSpec& spec, int class_id, Rng& rng);
TaskSchedule sample_task_schedule(const EnvSpec& spec, std::uint64_t seed);

struct StepResult {
  std::vector<double> next_state;
  double reward = 0.0;
  bool clipped = false;  // the action had a component outside [−1, 1]
};

std::vector<double> initial_state(const EnvSpec& spec);

/// Point-robot dynamics pos' = pos + dt·clip(action), reward by task class.
StepResult step(const EnvSpec& spec, const std::vector<double>& state,
                const std::vector<double>& action, const TaskDescriptor& task);

/// Stateful controller driven by rollout(). `act` sees the state at step t;
/// `observe` receives the completed transition before step t+1.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual void begin_episode() {}
  virtual std::vector<double> act(int t, const std::vector<double>& state) = 0;
  virtual void observe(int /*t*/, const Transition& /*transition*/) {}
};

/// Uniform random actions in [−1, 1]^action_dim.
class RandomAgent : public Agent {
 public:
  RandomAgent(std::size_t action_dim, std::uint64_t seed) : dim_(action_dim), rng_(seed) {}
  std::vector<double> act(int t, const std::vector<double>& state) override;

 private:
  std::size_t dim_;
  Rng rng_;
};

/// Runs one full episode; every transition carries the schedule's class at its step.
std::vector<Transition> rollout(const EnvSpec& spec, Agent& agent, const TaskSchedule& schedule);

double episode_return(const std::vector<Transition>& transitions);

// Episode log: one transition per line, space-separated decimal fields in
// the order  t s[0..S) a[0..A) r s'[0..S) class, with 17 significant digits.
void write_episode_log(std::ostream& os, const std::vector<Transition>& transitions);
std::vector<Transition> read_episode_log(std::istream& is, std::size_t state_dim,
                                         std::size_t action_dim);

}  // namespace timrl::envs
