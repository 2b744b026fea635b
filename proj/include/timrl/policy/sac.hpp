#pragma once

#include <vector>

#include "timrl/neural/mlp.hpp"
#include "timrl/numerics/optim.hpp"

namespace timrl::policy {

struct SacOptions {
  std::vector<std::size_t> hidden = {64, 64};
  double gamma = 0.99;
  double tau = 0.005;
  double temperature = 0.2;
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
};

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

/// Tanh-squashed Gaussian policy over (state, z).
class Actor {
 public:
  Actor() = default;
  Actor(std::size_t state_dim, std::size_t latent_dim, std::size_t action_dim,
        const std::vector<std::size_t>& hidden, Rng& rng);

  struct Distribution {
    Tensor mean;     // [B×A]
    Tensor log_std;  // [B×A], clamped
  };
  Distribution distribution(const Tensor& obs) const;

  std::size_t state_dim() const { return state_dim_; }
  std::size_t latent_dim() const { return latent_dim_; }
  std::size_t action_dim() const { return action_dim_; }
  neural::Mlp& net() { return net_; }
  void append_params(ParamList& out, const std::string& prefix = "actor") const;

 private:
  std::size_t state_dim_ = 0, latent_dim_ = 0, action_dim_ = 0;
  neural::Mlp net_;
};

struct SampledAction {
  Tensor action;    // [B×A], inside (−1, 1)
  Tensor log_prob;  // [B×1], with the tanh change-of-variables correction
};

/// a = tanh(mean + std ⊙ noise).
SampledAction sample_action(const Actor& actor, const Tensor& obs, const Tensor& noise);

enum class ActionMode { kStochastic, kDeterministic };

/// Single-state action; deterministic mode returns tanh(mean) and ignores noise.
std::vector<double> select_action(const Actor& actor, const std::vector<double>& state,
                                  const std::vector<double>& z, ActionMode mode,
                                  const std::vector<double>& noise);

/// Twin Q networks over (state, action, z) with exponential-moving-average targets.
class Critic {
 public:
  Critic() = default;
  Critic(std::size_t state_dim, std::size_t action_dim, std::size_t latent_dim,
         const std::vector<std::size_t>& hidden, Rng& rng);

  Tensor q1(const Tensor& input) const { return q1_.forward(input); }
  Tensor q2(const Tensor& input) const { return q2_.forward(input); }
  Tensor q1_target(const Tensor& input) const { return q1_target_.forward(input); }
  Tensor q2_target(const Tensor& input) const { return q2_target_.forward(input); }

  ParamList online_params() const;
  ParamList target_params() const;
  /// θ' ← τθ + (1−τ)θ'.
  void soft_update_targets(double tau);
  neural::Mlp& q1_net() { return q1_; }
  neural::Mlp& q2_net() { return q2_; }
  void append_params(ParamList& out, const std::string& prefix = "critic") const;

 private:
  neural::Mlp q1_, q2_, q1_target_, q2_target_;
};

/// Clipped double-Q: elementwise min of the two critics.
Tensor clipped_double_q(const Tensor& q1, const Tensor& q2);

struct SacBatch {
  Tensor states;       // [B×S]
  Tensor actions;      // [B×A]
  Tensor rewards;      // [B×1]
  Tensor next_states;  // [B×S]
  Tensor z;            // [B×L], treated as a constant input
};

struct SacLosses {
  double critic = 0.0;
  double actor = 0.0;
  double mean_target = 0.0;
  std::vector<double> targets;  // y per batch item
};

/// Critic targets y = r + γ·(min(Q1', Q2')(s', a', z) − temperature·log π(a'|s', z)),
/// critic loss MSE(Q_i, y) per head, actor loss mean(temperature·log π − min Q),
/// then the soft target update. z receives no gradient. Throws ContractError
/// when γ ∉ [0, 1) or τ ∉ (0, 1].
SacLosses sac_update(Actor& actor, Critic& critic, Adam& actor_opt, Adam& critic_opt,
                     const SacBatch& batch, double temperature, double gamma, double tau,
                     const Tensor& next_noise, const Tensor& noise);

/// Owns the Adam state for one actor/critic pair.
class SacLearner {
 public:
  SacLearner(Actor& actor, Critic& critic, const SacOptions& options);

  /// One gradient step on both critics, one on the actor, then the target
  /// update. `next_noise` drives a' ∼ π(·|s', z), `noise` the actor's
  /// reparameterized sample; both [B×A].
  SacLosses update(const SacBatch& batch, const Tensor& next_noise, const Tensor& noise);
  const SacOptions& options() const { return opt_; }

 private:
  Actor& actor_;
  Critic& critic_;
  SacOptions opt_;
  Adam actor_opt_;
  Adam critic_opt_;
};

}  // namespace timrl::policy
