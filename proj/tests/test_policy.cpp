#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "test_util.hpp"
#include "timrl/numerics/errors.hpp"
#include "timrl/policy/replay_buffer.hpp"
#include "timrl/policy/sac.hpp"

namespace timrl::policy {
namespace {

using testing::random_tensor;

constexpr std::size_t kS = 2, kL = 3, kA = 2;

struct Fixture {
  Rng rng{1};
  Actor actor{kS, kL, kA, {8}, rng};
  Critic critic{kS, kA, kL, {8}, rng};
  Adam actor_opt{tensors_of([&] {
                   ParamList p;
                   actor.append_params(p);
                   return p;
                 }()),
                 AdamOptions{1e-3}};
  Adam critic_opt{tensors_of(critic.online_params()), AdamOptions{1e-3}};

  SacBatch batch(std::size_t b, Rng& r) {
    SacBatch out;
    out.states = random_tensor({b, kS}, r, -1, 1, false);
    out.actions = random_tensor({b, kA}, r, -1, 1, false);
    out.rewards = random_tensor({b, 1}, r, -1, 1, false);
    out.next_states = random_tensor({b, kS}, r, -1, 1, false);
    out.z = random_tensor({b, kL}, r, -1, 1, false);
    return out;
  }
};

void zero_actor(Actor& actor) {
  for (auto& layer : actor.net().layers()) {
    for (auto& v : layer.weight.mutable_data()) v = 0.0;
  }
}

TEST(SelectAction, ZeroActorDeterministicIsZero) {
  Fixture f;
  zero_actor(f.actor);
  EXPECT_EQ(select_action(f.actor, {0.3, -0.7}, {1, 2, 3}, ActionMode::kDeterministic, {}),
            (std::vector<double>{0.0, 0.0}));
}

TEST(SelectAction, DeterministicIgnoresNoise) {
  Fixture f;
  const std::vector<double> s{0.3, -0.7}, z{1, 2, 3};
  EXPECT_EQ(select_action(f.actor, s, z, ActionMode::kDeterministic, {1.0, -2.0}),
            select_action(f.actor, s, z, ActionMode::kDeterministic, {-0.5, 3.0}));
}

TEST(SelectAction, StochasticStaysInsideOpenBox) {
  Fixture f;
  // Push the mean far out so tanh saturates.
  for (auto& v : f.actor.net().layers().back().bias.mutable_data()) v = 40.0;
  Rng rng(2);
  for (int i = 0; i < 10000; ++i) {
    const auto a = select_action(f.actor, {rng.uniform(-1, 1), rng.uniform(-1, 1)}, {0, 0, 0},
                                 ActionMode::kStochastic, rng.normal_vector(kA));
    for (double v : a) {
      EXPECT_GT(v, -1.0);
      EXPECT_LT(v, 1.0);
    }
  }
}

TEST(Actor, LogStdClamped) {
  Fixture f;
  auto& bias = f.actor.net().layers().back().bias;
  for (std::size_t i = 0; i < kA; ++i) bias.mutable_data()[kA + i] = i == 0 ? 30.0 : -30.0;
  const auto d = f.actor.distribution(Tensor({1, kS + kL}));
  EXPECT_EQ(d.log_std.at(0, 0), kLogStdMax);
  EXPECT_EQ(d.log_std.at(0, 1), kLogStdMin);
}

TEST(SampleAction, LogProbMatchesChangeOfVariables) {
  Fixture f;
  Rng rng(3);
  const auto obs = random_tensor({1, kS + kL}, rng, -1, 1, false);
  const auto noise = random_tensor({1, kA}, rng, -1, 1, false);
  const auto s = sample_action(f.actor, obs, noise);
  const auto d = f.actor.distribution(obs);
  double lp = 0.0;
  for (std::size_t i = 0; i < kA; ++i) {
    const double sd = std::exp(d.log_std[i]);
    const double u = d.mean[i] + sd * noise[i];
    lp += -0.5 * noise[i] * noise[i] - 0.5 * std::log(2 * M_PI) - std::log(sd) - std::log(1 - std::tanh(u) * std::tanh(u));
    EXPECT_NEAR(s.action[i], std::tanh(u), 1e-15);
  }
  EXPECT_NEAR(s.log_prob.item(), lp, 1e-9);
}

TEST(SacUpdate, TauOneCopiesTargets) {
  Fixture f;
  Rng rng(4);
  const auto b = f.batch(4, rng);
  sac_update(f.actor, f.critic, f.actor_opt, f.critic_opt, b, 0.2, 0.9, 1.0, random_tensor({4, kA}, rng, -1, 1, false),
             random_tensor({4, kA}, rng, -1, 1, false));
  ParamList online = f.critic.online_params(), target = f.critic.target_params();
  for (std::size_t i = 0; i < online.size(); ++i) EXPECT_EQ(online[i].second.to_vector(), target[i].second.to_vector());
}

TEST(SacUpdate, ZeroRewardZeroDiscountTarget) {
  Fixture f;
  Rng rng(5);
  auto b = f.batch(1, rng);
  b.rewards = Tensor({1, 1});
  const auto next_noise = random_tensor({1, kA}, rng, -1, 1, false);
  const auto losses = sac_update(f.actor, f.critic, f.actor_opt, f.critic_opt, b, 0.2, 0.0, 0.5, next_noise,
                                 random_tensor({1, kA}, rng, -1, 1, false));
  EXPECT_EQ(losses.targets.at(0), 0.0);
}

TEST(SacUpdate, TargetMatchesHandComputation) {
  Fixture f;
  Rng rng(6);
  const auto b = f.batch(1, rng);
  const auto next_noise = random_tensor({1, kA}, rng, -1, 1, false);
  const double gamma = 0.7, temp = 0.3;
  // Hand computation before the update mutates anything.
  const auto next = sample_action(f.actor, ops::concat_cols({b.next_states, b.z}), next_noise);
  const auto q_in = ops::concat_cols({b.next_states, next.action, b.z});
  const double q = std::min(f.critic.q1_target(q_in).item(), f.critic.q2_target(q_in).item());
  const double y = b.rewards.item() + gamma * (q - temp * next.log_prob.item());
  const auto losses = sac_update(f.actor, f.critic, f.actor_opt, f.critic_opt, b, temp, gamma, 0.5, next_noise,
                                 random_tensor({1, kA}, rng, -1, 1, false));
  EXPECT_NEAR(losses.targets.at(0), y, 1e-12);
}

TEST(SacUpdate, RejectsBadArguments) {
  Fixture f;
  Rng rng(7);
  const auto b = f.batch(2, rng);
  const auto n = random_tensor({2, kA}, rng, -1, 1, false);
  EXPECT_THROW(sac_update(f.actor, f.critic, f.actor_opt, f.critic_opt, b, 0.2, 1.0, 0.5, n, n), ContractError);
  EXPECT_THROW(sac_update(f.actor, f.critic, f.actor_opt, f.critic_opt, b, 0.2, 0.9, 0.0, n, n), ContractError);
  EXPECT_THROW(sac_update(f.actor, f.critic, f.actor_opt, f.critic_opt, SacBatch{}, 0.2, 0.9, 0.5, n, n),
               ContractError);
}

TEST(SacUpdate, FiniteLossesAndActorGradient) {
  Fixture f;
  Rng rng(8);
  const auto b = f.batch(5, rng);
  const auto noise = random_tensor({5, kA}, rng, -1, 1, false);
  const auto losses = sac_update(f.actor, f.critic, f.actor_opt, f.critic_opt, b, 0.2, 0.99, 0.005,
                                 random_tensor({5, kA}, rng, -1, 1, false), noise);
  EXPECT_TRUE(std::isfinite(losses.actor));
  EXPECT_TRUE(std::isfinite(losses.critic));
  ParamList params;
  f.actor.append_params(params);
  const auto actor_loss = [&] {
    const auto s = sample_action(f.actor, ops::concat_cols({b.states, b.z}), noise);
    const auto in = ops::concat_cols({b.states, s.action, b.z});
    return ops::mean(ops::sub(ops::scale(s.log_prob, 0.2), clipped_double_q(f.critic.q1(in), f.critic.q2(in))));
  };
  EXPECT_LT(check_gradients(actor_loss, tensors_of(params)).max_rel_error, 1e-3);
}

TEST(SacUpdate, ZReceivesNoGradient) {
  Fixture f;
  Rng rng(9);
  auto b = f.batch(3, rng);
  b.z.set_requires_grad(true);
  const auto n = random_tensor({3, kA}, rng, -1, 1, false);
  sac_update(f.actor, f.critic, f.actor_opt, f.critic_opt, b, 0.2, 0.9, 0.5, n, n);
  EXPECT_FALSE(b.z.has_grad());
}

TEST(SacUpdate, TargetsFollowEmaRecurrence) {
  Fixture f;
  Rng rng(10);
  const double tau = 0.3;
  std::vector<std::vector<double>> expected;
  for (const auto& [_, t] : f.critic.target_params()) expected.push_back(t.to_vector());
  for (int step = 0; step < 5; ++step) {
    const auto b = f.batch(4, rng);
    const auto n = random_tensor({4, kA}, rng, -1, 1, false);
    sac_update(f.actor, f.critic, f.actor_opt, f.critic_opt, b, 0.2, 0.9, tau, n, n);
    const auto online = f.critic.online_params();
    for (std::size_t i = 0; i < online.size(); ++i)
      for (std::size_t j = 0; j < expected[i].size(); ++j)
        expected[i][j] = tau * online[i].second[j] + (1.0 - tau) * expected[i][j];
  }
  const auto target = f.critic.target_params();
  for (std::size_t i = 0; i < target.size(); ++i) EXPECT_EQ(target[i].second.to_vector(), expected[i]);
}

TEST(ClippedDoubleQ, ElementwiseMinimum) {
  const auto m = clipped_double_q(Tensor::matrix(3, 1, {1, -2, 5}), Tensor::matrix(3, 1, {0, 3, 5}));
  EXPECT_EQ(m.to_vector(), (std::vector<double>{0, -2, 5}));
}

ReplayEntry entry(std::uint64_t episode, int t, double reward = 0.0) {
  ReplayEntry e;
  e.transition = {{0, 0}, {0, 0}, reward, {0, 0}, 0};
  e.episode = episode;
  e.t = t;
  return e;
}

TEST(ReplayBuffer, FifoEviction) {
  ReplayBuffer buf(2);
  for (int i = 0; i < 3; ++i) buf.add(entry(0, i, i));
  EXPECT_EQ(buf.size(), 2u);
  EXPECT_EQ(buf.at(0).transition.reward, 1.0);
  EXPECT_EQ(buf.at(1).transition.reward, 2.0);
}

TEST(ReplayBuffer, SamplingReproducibleAndDistinct) {
  ReplayBuffer buf(50);
  for (int i = 0; i < 50; ++i) buf.add(entry(0, i));
  Rng a(11), b(11);
  const auto s1 = buf.sample(20, a), s2 = buf.sample(20, b);
  EXPECT_EQ(s1, s2);
  std::set<std::size_t> uniq(s1.begin(), s1.end());
  EXPECT_EQ(uniq.size(), 20u);
  EXPECT_EQ(buf.sample(50, a).size(), 50u);
}

TEST(ReplayBuffer, UndersizedOrEmptyBatchIsContractError) {
  ReplayBuffer buf(10);
  buf.add(entry(0, 0));
  Rng rng(12);
  EXPECT_THROW(buf.sample(2, rng), ContractError);
  EXPECT_THROW(buf.sample(0, rng), ContractError);
}

TEST(ReplayBuffer, UniformItemFrequency) {
  ReplayBuffer buf(100);
  for (int i = 0; i < 100; ++i) buf.add(entry(0, i));
  Rng rng(13);
  std::vector<double> counts(100, 0.0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) counts[buf.sample(1, rng)[0]] += 1.0;
  for (double c : counts) EXPECT_NEAR(c / draws, 0.01, 0.05 * 0.01 * 4);
  // Batched draws: with 10⁵ total picks the mean deviation must be small.
  double mean_dev = 0.0;
  for (double c : counts) mean_dev += std::abs(c / draws - 0.01);
  EXPECT_LT(mean_dev / 100, 0.05 * 0.01);
}

TEST(ReplayBuffer, ContextIndicesStayInsideEpisode) {
  ReplayBuffer buf(100);
  for (int t = 0; t < 5; ++t) buf.add(entry(7, t));
  for (int t = 0; t < 10; ++t) buf.add(entry(8, t));
  EXPECT_EQ(buf.context_indices(7, 4, true), (std::vector<std::size_t>{5, 6, 7}));
  EXPECT_EQ(buf.context_indices(7, 2, false), (std::vector<std::size_t>{5, 6}));
  EXPECT_TRUE(buf.context_indices(5, 4, false).empty());
  EXPECT_EQ(buf.context_indices(4, 16, true).size(), 5u);
}

}  // namespace
}  // namespace timrl::policy
