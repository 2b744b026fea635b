#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "timrl/envs/env.hpp"
#include "timrl/envs/observation.hpp"
#include "timrl/numerics/errors.hpp"

namespace timrl::envs {
namespace {

TaskDescriptor direction(double x, double y) { return {0, {x, y}}; }

TEST(Step, AlignedFullSpeedDirectionReward) {
  const auto spec = env_spec("PointNonstatDir");
  const auto r = step(spec, {0.0, 0.0}, {1.0, 0.0}, direction(1.0, 0.0));
  EXPECT_NEAR(r.reward, 1.0, 1e-12);
  EXPECT_NEAR(r.next_state[0], 0.1, 1e-15);
}

TEST(Step, VelocityTargetZeroAtRest) {
  const auto spec = env_spec("PointNonstatVel");
  EXPECT_EQ(step(spec, {0.3, -0.2}, {0.0, 0.0}, {0, {0.0}}).reward, 0.0);
}

TEST(Step, GoalAtCurrentPosition) {
  const auto spec = env_spec("PointDirGoal");
  EXPECT_EQ(step(spec, {0.4, 0.5}, {0.0, 0.0}, {1, {0.4, 0.5}}).reward, 0.0);
}

TEST(Step, GoalRewardIsNegativeDistance) {
  const auto spec = env_spec("PointDirGoal");
  const auto r = step(spec, {0.0, 0.0}, {1.0, 0.0}, {1, {0.1, 0.4}});
  EXPECT_NEAR(r.reward, -0.4, 1e-12);
}

TEST(Step, OutOfRangeActionIsClippedAndFlagged) {
  const auto spec = env_spec("PointNonstatDir");
  const auto r = step(spec, {0.0, 0.0}, {3.0, -0.5}, direction(1.0, 0.0));
  EXPECT_TRUE(r.clipped);
  EXPECT_NEAR(r.next_state[0], 0.1, 1e-15);
  EXPECT_NEAR(r.reward, 1.0, 1e-12);
  EXPECT_FALSE(step(spec, {0.0, 0.0}, {1.0, -1.0}, direction(1.0, 0.0)).clipped);
}

TEST(StepProperty, DirectionRewardBoundedByActionNorm) {
  const auto spec = env_spec("PointNonstatDir");
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double angle = rng.uniform(0, 2 * M_PI);
    const std::vector<double> a = {rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)};
    const auto r = step(spec, {rng.uniform(-5, 5), rng.uniform(-5, 5)}, a, direction(std::cos(angle), std::sin(angle)));
    EXPECT_LE(std::abs(r.reward), std::sqrt(2.0) + 1e-12);
    EXPECT_TRUE(std::isfinite(r.reward));
  }
}

TEST(Schedule, SingleChangeGivesTwoSegments) {
  auto spec = env_spec("PointNonstatDir");
  spec.max_changes_per_episode = 1;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto s = sample_task_schedule(spec, seed);
    ASSERT_EQ(s.segments.size(), 2u);
    EXPECT_EQ(s.segments[0].start, 0);
  }
}

TEST(Schedule, DeterministicPerSeed) {
  const auto spec = env_spec("PointVelGoalDir");
  const auto a = sample_task_schedule(spec, 42), b = sample_task_schedule(spec, 42);
  ASSERT_EQ(a.segments.size(), b.segments.size());
  for (std::size_t i = 0; i < a.segments.size(); ++i) {
    EXPECT_EQ(a.segments[i].start, b.segments[i].start);
    EXPECT_EQ(a.segments[i].task.class_id, b.segments[i].task.class_id);
    EXPECT_EQ(a.segments[i].task.parameter, b.segments[i].task.parameter);
  }
}

TEST(ScheduleProperty, InvariantsHoldForEveryEnv) {
  for (const auto& name : env_names()) {
    const auto spec = env_spec(name);
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
      const auto s = sample_task_schedule(spec, seed);
      EXPECT_NO_THROW(validate_schedule(s, spec));
      EXPECT_GE(s.segments.size(), 2u);
      EXPECT_LE(s.segments.size(), static_cast<std::size_t>(spec.max_changes_per_episode) + 1);
      for (std::size_t i = 1; i < s.segments.size(); ++i) EXPECT_LT(s.segments[i - 1].start, s.segments[i].start);
      for (const auto& seg : s.segments) {
        if (spec.task_classes[seg.task.class_id] == TaskKind::kDirection) {
          EXPECT_NEAR(std::hypot(seg.task.parameter[0], seg.task.parameter[1]), 1.0, 1e-9);
        }
      }
    }
  }
}

TEST(ScheduleProperty, ClassFrequenciesAreUniform) {
  const auto spec = env_spec("PointVelGoalDir");
  std::vector<double> counts(3, 0.0);
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    for (const auto& seg : sample_task_schedule(spec, seed).segments) {
      counts[seg.task.class_id] += 1.0;
      total += 1.0;
    }
  }
  for (double c : counts) EXPECT_NEAR(c / total, 1.0 / 3.0, 0.03);
}

TEST(Schedule, ValidateRejectsBrokenSchedules) {
  const auto spec = env_spec("PointDirGoal");
  EXPECT_THROW(validate_schedule(TaskSchedule{}, spec), ContractError);
  EXPECT_THROW(validate_schedule(TaskSchedule{{{1, direction(1, 0)}}}, spec), ContractError);
  EXPECT_THROW(validate_schedule(TaskSchedule{{{0, direction(1, 0)}, {0, direction(-1, 0)}}}, spec), ContractError);
  EXPECT_THROW(validate_schedule(TaskSchedule{{{0, {5, {0.0, 0.0}}}}}, spec), ContractError);
  EXPECT_THROW(validate_schedule(TaskSchedule{{{0, direction(2, 0)}}}, spec), ContractError);
}

TEST(Rollout, DeterministicAndLabeled) {
  const auto spec = env_spec("PointVelGoalDir");
  const auto schedule = sample_task_schedule(spec, 3);
  RandomAgent a1(2, 9), a2(2, 9);
  const auto t1 = rollout(spec, a1, schedule), t2 = rollout(spec, a2, schedule);
  ASSERT_EQ(t1.size(), static_cast<std::size_t>(spec.episode_length));
  std::ostringstream s1, s2;
  write_episode_log(s1, t1);
  write_episode_log(s2, t2);
  EXPECT_EQ(s1.str(), s2.str());
  for (int t = 0; t < spec.episode_length; ++t) {
    EXPECT_EQ(t1[t].true_class, schedule.class_at(t));
    for (double a : t1[t].action) EXPECT_LE(std::abs(a), 1.0);
    if (t > 0) EXPECT_EQ(t1[t].state, t1[t - 1].next_state);
  }
}

TEST(Rollout, RandomPolicyGoalReturnIsNegative) {
  auto spec = env_spec("PointDirGoal");
  double total = 0.0;
  Rng rng(4);
  for (int ep = 0; ep < 100; ++ep) {
    TaskSchedule goal_only{{{0, sample_task(spec, 1, rng)}}};
    RandomAgent agent(2, ep);
    total += episode_return(rollout(spec, agent, goal_only));
  }
  EXPECT_LT(total / 100.0, 0.0);
}

TEST(EpisodeLog, RoundTrip) {
  const auto spec = env_spec("PointDirGoal");
  RandomAgent agent(2, 5);
  const auto t = rollout(spec, agent, sample_task_schedule(spec, 5));
  std::stringstream ss;
  write_episode_log(ss, t);
  const auto back = read_episode_log(ss, 2, 2);
  ASSERT_EQ(back.size(), t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(back[i].state, t[i].state);
    EXPECT_EQ(back[i].action, t[i].action);
    EXPECT_EQ(back[i].reward, t[i].reward);
    EXPECT_EQ(back[i].next_state, t[i].next_state);
    EXPECT_EQ(back[i].true_class, t[i].true_class);
  }
}

TEST(EnvSpec, UnknownNameThrows) { EXPECT_THROW(env_spec("Cheetah"), std::invalid_argument); }

TEST(PadObservation, FullWidthUnchanged) {
  const auto spec = env_spec("PointDirGoal");
  const std::vector<double> obs = {0.5, -1.5};
  EXPECT_EQ(pad_observation(obs, spec, {2, 2}), obs);
}

TEST(PadObservation, PadsTrailingZeros) {
  const auto spec = env_spec("PointDirGoal");
  EXPECT_EQ(pad_observation(std::vector<double>{0.5, -1.5}, spec, {4, 4}), (std::vector<double>{0.5, -1.5, 0.0, 0.0}));
  EXPECT_EQ(pad_action(std::vector<double>{1.0, 0.0}, {4, 3}), (std::vector<double>{1.0, 0.0, 0.0}));
}

TEST(PadObservation, TooWideIsContractError) {
  const auto spec = env_spec("PointDirGoal");
  EXPECT_THROW(pad_observation(std::vector<double>{1, 2, 3}, spec, {2, 2}), ContractError);
}

TEST(PadObservation, NormalizesOnlyRealEntries) {
  const auto spec = env_spec("PointDirGoal");
  RunningNormalizer norm(2);
  for (int i = 0; i < 10; ++i) norm.update(std::vector<double>{static_cast<double>(i), 2.0 * i});
  const auto out = pad_observation(std::vector<double>{4.5, 9.0}, spec, {3, 2}, &norm);
  EXPECT_NEAR(out[0], 0.0, 1e-12);
  EXPECT_NEAR(out[1], 0.0, 1e-12);
  EXPECT_EQ(out[2], 0.0);
}

TEST(RunningNormalizer, StreamingStatistics) {
  Rng rng(6);
  RunningNormalizer norm(3);
  for (int i = 0; i < 10000; ++i) norm.update(rng.normal_vector(3));
  for (std::size_t d = 0; d < 3; ++d) {
    EXPECT_LT(std::abs(norm.mean()[d]), 0.05);
    EXPECT_NEAR(norm.stddev()[d], 1.0, 0.05);
  }
}

TEST(RunningNormalizer, MatchesTwoPassComputation) {
  Rng rng(7);
  std::vector<double> xs;
  RunningNormalizer norm(1);
  for (int i = 0; i < 500; ++i) {
    xs.push_back(rng.uniform(3.0, 9.0));
    norm.update(std::vector<double>{xs.back()});
  }
  double mean = 0.0, var = 0.0;
  for (double x : xs) mean += x;
  mean /= xs.size();
  for (double x : xs) var += (x - mean) * (x - mean);
  EXPECT_NEAR(norm.mean()[0], mean, 1e-12);
  EXPECT_NEAR(norm.stddev()[0], std::sqrt(var / xs.size()), 1e-12);
}

TEST(RunningNormalizer, UnitScaleBeforeTwoSamples) {
  RunningNormalizer norm(2);
  EXPECT_EQ(norm.stddev(), (std::vector<double>{1.0, 1.0}));
  norm.update(std::vector<double>{5.0, 5.0});
  EXPECT_EQ(norm.stddev(), (std::vector<double>{1.0, 1.0}));
}

}  // namespace
}  // namespace timrl::envs
