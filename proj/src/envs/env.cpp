#include "timrl/envs/env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "timrl/numerics/errors.hpp"

namespace timrl::envs {

namespace {

constexpr double kSpeedLo = 0.2;
constexpr double kSpeedHi = 1.2;
constexpr double kGoalRange = 1.0;

EnvSpec make_spec(std::string name, std::vector<TaskKind> classes) {
  EnvSpec spec;
  spec.name = std::move(name);
  spec.task_classes = std::move(classes);
  return spec;
}

std::vector<double> direction_along_x(double sign) { return {sign, 0.0}; }

}  // namespace

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::kDirection:
      return "direction";
    case TaskKind::kVelocity:
      return "velocity";
    case TaskKind::kGoal:
      return "goal";
  }
  return "unknown";
}

const TaskDescriptor& TaskSchedule::active(int t) const {
  if (segments.empty()) throw ContractError("empty task schedule");
  auto it = std::upper_bound(segments.begin(), segments.end(), t,
                             [](int v, const TaskSegment& s) { return v < s.start; });
  if (it == segments.begin()) throw ContractError("timestep " + std::to_string(t) + " precedes the schedule");
  return std::prev(it)->task;
}

const std::vector<std::string>& env_names() {
  static const std::vector<std::string> names = {"PointNonstatDir", "PointNonstatVel",
                                                 "PointDirGoal", "PointVelGoalDir"};
  return names;
}

EnvSpec env_spec(std::string_view name) {
  if (name == "PointNonstatDir") return make_spec("PointNonstatDir", {TaskKind::kDirection});
  if (name == "PointNonstatVel") return make_spec("PointNonstatVel", {TaskKind::kVelocity});
  if (name == "PointDirGoal") return make_spec("PointDirGoal", {TaskKind::kDirection, TaskKind::kGoal});
  if (name == "PointVelGoalDir") {
    return make_spec("PointVelGoalDir", {TaskKind::kVelocity, TaskKind::kGoal, TaskKind::kDirection});
  }
  throw std::invalid_argument("unknown environment '" + std::string(name) + "'");
}

void validate_schedule(const TaskSchedule& schedule, const EnvSpec& spec) {
  if (schedule.segments.empty() || schedule.segments.front().start != 0) {
    throw ContractError("schedule must start at timestep 0");
  }
  for (std::size_t i = 0; i < schedule.segments.size(); ++i) {
    const auto& seg = schedule.segments[i];
    if (i > 0 && seg.start <= schedule.segments[i - 1].start) {
      throw ContractError("schedule start timesteps must increase strictly");
    }
    if (seg.start >= spec.episode_length) throw ContractError("schedule segment starts after the episode");
    if (seg.task.class_id < 0 || static_cast<std::size_t>(seg.task.class_id) >= spec.num_classes()) {
      throw ContractError("task class " + std::to_string(seg.task.class_id) + " outside [0, " +
                          std::to_string(spec.num_classes()) + ")");
    }
    if (spec.task_classes[seg.task.class_id] == TaskKind::kDirection) {
      const auto& d = seg.task.parameter;
      const double norm = std::sqrt(std::inner_product(d.begin(), d.end(), d.begin(), 0.0));
      if (std::abs(norm - 1.0) > 1e-9) throw ContractError("direction parameter must have unit norm");
    }
  }
}

TaskDescriptor sample_task(const EnvSpec& spec, int class_id, Rng& rng) {
  TaskDescriptor task;
  task.class_id = class_id;
  switch (spec.task_classes.at(class_id)) {
    case TaskKind::kDirection:
      task.parameter = direction_along_x(rng.uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0);
      break;
    case TaskKind::kVelocity:
      task.parameter = {rng.uniform(kSpeedLo, kSpeedHi)};
      break;
    case TaskKind::kGoal:
      task.parameter = {rng.uniform(-kGoalRange, kGoalRange), rng.uniform(-kGoalRange, kGoalRange)};
      break;
  }
  return task;
}

TaskSchedule sample_task_schedule(const EnvSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  const int max_changes = std::min(spec.max_changes_per_episode, spec.episode_length - 1);
  std::vector<int> starts{0};
  if (max_changes >= 1) {
    const int changes = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(max_changes)));
    std::vector<int> candidates(static_cast<std::size_t>(spec.episode_length - 1));
    std::iota(candidates.begin(), candidates.end(), 1);
    for (int i = 0; i < changes; ++i) {
      const std::size_t j = i + rng.index(candidates.size() - i);
      std::swap(candidates[i], candidates[j]);
    }
    starts.insert(starts.end(), candidates.begin(), candidates.begin() + changes);
    std::sort(starts.begin(), starts.end());
  }

  TaskSchedule schedule;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    TaskDescriptor task;
    if (spec.multi_task()) {
      task = sample_task(spec, static_cast<int>(rng.index(spec.num_classes())), rng);
    } else if (s > 0 && spec.task_classes.front() == TaskKind::kDirection) {
      // Single-class direction episodes flip forward/backward at every change.
      task = schedule.segments.back().task;
      for (auto& v : task.parameter) v = -v;
    } else {
      task = sample_task(spec, 0, rng);
    }
    schedule.segments.push_back({starts[s], std::move(task)});
  }
  return schedule;
}

std::vector<double> initial_state(const EnvSpec& spec) { return std::vector<double>(spec.state_dim, 0.0); }

StepResult step(const EnvSpec& spec, const std::vector<double>& state,
                const std::vector<double>& action, const TaskDescriptor& task) {
  if (state.size() != spec.state_dim || action.size() != spec.action_dim) {
    throw DimensionError("step: state/action widths " + std::to_string(state.size()) + "/" +
                         std::to_string(action.size()) + " do not match " + spec.name);
  }
  StepResult res;
  res.next_state = state;
  std::vector<double> delta(spec.state_dim, 0.0);
  for (std::size_t i = 0; i < spec.action_dim; ++i) {
    double a = action[i];
    if (!(a >= -1.0 && a <= 1.0)) {
      res.clipped = true;
      a = std::isnan(a) ? 0.0 : std::clamp(a, -1.0, 1.0);
    }
    delta[i] = spec.dt * a;
    res.next_state[i] += delta[i];
  }
  switch (spec.task_classes.at(task.class_id)) {
    case TaskKind::kDirection: {
      double dot = 0.0;
      for (std::size_t i = 0; i < delta.size(); ++i) dot += delta[i] * task.parameter[i];
      res.reward = dot / spec.dt;
      break;
    }
    case TaskKind::kVelocity: {
      double sq = 0.0;
      for (double d : delta) sq += d * d;
      res.reward = -std::abs(std::sqrt(sq) / spec.dt - task.parameter[0]);
      break;
    }
    case TaskKind::kGoal: {
      double sq = 0.0;
      for (std::size_t i = 0; i < res.next_state.size(); ++i) {
        const double d = res.next_state[i] - task.parameter[i];
        sq += d * d;
      }
      res.reward = -std::sqrt(sq);
      break;
    }
  }
  return res;
}

std::vector<double> RandomAgent::act(int, const std::vector<double>&) {
  std::vector<double> a(dim_);
  for (auto& v : a) v = rng_.uniform(-1.0, 1.0);
  return a;
}

std::vector<Transition> rollout(const EnvSpec& spec, Agent& agent, const TaskSchedule& schedule) {
  std::vector<Transition> out;
  out.reserve(static_cast<std::size_t>(spec.episode_length));
  agent.begin_episode();
  auto state = initial_state(spec);
  for (int t = 0; t < spec.episode_length; ++t) {
    const auto& task = schedule.active(t);
    auto action = agent.act(t, state);
    auto res = step(spec, state, action, task);
    for (auto& a : action) a = std::isnan(a) ? 0.0 : std::clamp(a, -1.0, 1.0);
    Transition tr{state, std::move(action), res.reward, res.next_state, task.class_id};
    agent.observe(t, tr);
    state = std::move(res.next_state);
    out.push_back(std::move(tr));
  }
  return out;
}

double episode_return(const std::vector<Transition>& transitions) {
  double r = 0.0;
  for (const auto& t : transitions) r += t.reward;
  return r;
}

void write_episode_log(std::ostream& os, const std::vector<Transition>& transitions) {
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << ' ' << buf;
  };
  for (std::size_t t = 0; t < transitions.size(); ++t) {
    const auto& tr = transitions[t];
    os << t;
    for (double v : tr.state) put(v);
    for (double v : tr.action) put(v);
    put(tr.reward);
    for (double v : tr.next_state) put(v);
    os << ' ' << tr.true_class << '\n';
  }
}

std::vector<Transition> read_episode_log(std::istream& is, std::size_t state_dim,
                                         std::size_t action_dim) {
  std::vector<Transition> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::size_t t = 0;
    Transition tr;
    tr.state.resize(state_dim);
    tr.action.resize(action_dim);
    tr.next_state.resize(state_dim);
    ls >> t;
    for (auto& v : tr.state) ls >> v;
    for (auto& v : tr.action) ls >> v;
    ls >> tr.reward;
    for (auto& v : tr.next_state) ls >> v;
    ls >> tr.true_class;
    std::string extra;
    if (!ls || (ls >> extra)) {
      throw std::runtime_error("malformed episode log at line " + std::to_string(lineno));
    }
    out.push_back(std::move(tr));
  }
  return out;
}

}  // namespace timrl::envs
