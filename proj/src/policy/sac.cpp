#include "timrl/policy/sac.hpp"

#include <cmath>
#include <numbers>

#include "timrl/numerics/errors.hpp"
#include "timrl/numerics/ops.hpp"

namespace timrl::policy {

namespace {

std::vector<std::size_t> layer_sizes(std::size_t in, const std::vector<std::size_t>& hidden,
                                     std::size_t out) {
  std::vector<std::size_t> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

}  // namespace

Actor::Actor(std::size_t state_dim, std::size_t latent_dim, std::size_t action_dim,
             const std::vector<std::size_t>& hidden, Rng& rng)
    : state_dim_(state_dim),
      latent_dim_(latent_dim),
      action_dim_(action_dim),
      net_(layer_sizes(state_dim + latent_dim, hidden, 2 * action_dim), neural::Activation::kRelu,
           neural::Activation::kIdentity, rng) {}

Actor::Distribution Actor::distribution(const Tensor& obs) const {
  const Tensor out = net_.forward(obs);
  return {ops::slice_cols(out, 0, action_dim_),
          ops::clamp(ops::slice_cols(out, action_dim_, action_dim_), kLogStdMin, kLogStdMax)};
}

void Actor::append_params(ParamList& out, const std::string& prefix) const {
  net_.append_params(out, prefix + ".net");
}

SampledAction sample_action(const Actor& actor, const Tensor& obs, const Tensor& noise) {
  const auto dist = actor.distribution(obs);
  const Tensor std = ops::exp(dist.log_std);
  const Tensor pre = ops::reparameterize(dist.mean, std, noise);
  const Tensor action = ops::tanh(pre);
  // log N(pre; mean, std) = −ε²/2 − log σ − log(2π)/2, with ε the fixed noise.
  std::vector<double> base(noise.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    base[i] = -0.5 * noise[i] * noise[i] - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  const Tensor gaussian = ops::sub(Tensor(noise.shape(), std::move(base)), dist.log_std);
  // log(1 − tanh²u) = 2·(log 2 − u − softplus(−2u)).
  const Tensor log_jac = ops::scale(
      ops::sub(ops::add_scalar(ops::scale(pre, -1.0), std::log(2.0)), ops::softplus(ops::scale(pre, -2.0))),
      2.0);
  return {action, ops::sum_cols(ops::sub(gaussian, log_jac))};
}

std::vector<double> select_action(const Actor& actor, const std::vector<double>& state,
                                  const std::vector<double>& z, ActionMode mode,
                                  const std::vector<double>& noise) {
  NoGradGuard no_grad;
  std::vector<double> obs = state;
  obs.insert(obs.end(), z.begin(), z.end());
  const std::size_t width = obs.size();
  const Tensor input({1, width}, std::move(obs));
  if (mode == ActionMode::kDeterministic) return ops::tanh(actor.distribution(input).mean).to_vector();
  if (noise.size() != actor.action_dim()) {
    throw DimensionError("select_action: noise has " + std::to_string(noise.size()) +
                         " entries, action has " + std::to_string(actor.action_dim()));
  }
  const Tensor eps({1, noise.size()}, noise);
  auto a = sample_action(actor, input, eps).action.to_vector();
  // tanh saturates to ±1 in floating point for |u| ≳ 19.
  for (auto& v : a) v = std::clamp(v, -1.0 + 1e-12, 1.0 - 1e-12);
  return a;
}

Critic::Critic(std::size_t state_dim, std::size_t action_dim, std::size_t latent_dim,
               const std::vector<std::size_t>& hidden, Rng& rng) {
  const auto sizes = layer_sizes(state_dim + action_dim + latent_dim, hidden, 1);
  q1_ = neural::Mlp(sizes, neural::Activation::kRelu, neural::Activation::kIdentity, rng);
  q2_ = neural::Mlp(sizes, neural::Activation::kRelu, neural::Activation::kIdentity, rng);
  q1_target_ = neural::Mlp(sizes, neural::Activation::kRelu, neural::Activation::kIdentity, rng);
  q2_target_ = neural::Mlp(sizes, neural::Activation::kRelu, neural::Activation::kIdentity, rng);
  auto targets = target_params();
  copy_values(online_params(), targets);
  for (auto& [_, t] : targets) t.set_requires_grad(false);
}

ParamList Critic::online_params() const {
  ParamList out;
  q1_.append_params(out, "q1");
  q2_.append_params(out, "q2");
  return out;
}

ParamList Critic::target_params() const {
  ParamList out;
  q1_target_.append_params(out, "q1_target");
  q2_target_.append_params(out, "q2_target");
  return out;
}

void Critic::soft_update_targets(double tau) {
  auto targets = target_params();
  soft_update(online_params(), targets, tau);
}

void Critic::append_params(ParamList& out, const std::string& prefix) const {
  q1_.append_params(out, prefix + ".q1");
  q2_.append_params(out, prefix + ".q2");
  q1_target_.append_params(out, prefix + ".q1_target");
  q2_target_.append_params(out, prefix + ".q2_target");
}

Tensor clipped_double_q(const Tensor& q1, const Tensor& q2) { return ops::minimum(q1, q2); }

SacLosses sac_update(Actor& actor, Critic& critic, Adam& actor_opt, Adam& critic_opt,
                     const SacBatch& batch, double temperature, double gamma, double tau,
                     const Tensor& next_noise, const Tensor& noise) {
  if (!batch.states.defined() || batch.states.rank() != 2) throw ContractError("SAC update needs a non-empty batch");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ContractError("SAC discount must lie in [0, 1)");
  if (!(tau > 0.0 && tau <= 1.0)) throw ContractError("SAC target rate must lie in (0, 1]");
  const std::size_t b = batch.states.rows();
  for (const Tensor* t : {&batch.actions, &batch.rewards, &batch.next_states, &batch.z}) {
    if (t->rank() != 2 || t->rows() != b) throw DimensionError("SAC batch fields disagree on batch size");
  }

  const Tensor z = batch.z.detach();
  SacLosses losses;
  Tensor target;
  {
    NoGradGuard no_grad;
    const Tensor next_obs = ops::concat_cols({batch.next_states, z});
    const auto next = sample_action(actor, next_obs, next_noise);
    const Tensor q_in = ops::concat_cols({batch.next_states, next.action, z});
    const Tensor min_q = clipped_double_q(critic.q1_target(q_in), critic.q2_target(q_in));
    const Tensor soft_v = ops::sub(min_q, ops::scale(next.log_prob, temperature));
    target = ops::add(batch.rewards, ops::scale(soft_v, gamma));
  }
  losses.targets = target.to_vector();
  for (double y : losses.targets) losses.mean_target += y / static_cast<double>(b);

  const Tensor q_in = ops::concat_cols({batch.states, batch.actions, z});
  const Tensor critic_loss = ops::add(ops::mse(critic.q1(q_in), target), ops::mse(critic.q2(q_in), target));
  critic_opt.zero_grad();
  backward(critic_loss);
  critic_opt.step();
  losses.critic = critic_loss.item();

  const Tensor obs = ops::concat_cols({batch.states, z});
  const auto fresh = sample_action(actor, obs, noise);
  const Tensor pi_in = ops::concat_cols({batch.states, fresh.action, z});
  const Tensor min_q = clipped_double_q(critic.q1(pi_in), critic.q2(pi_in));
  const Tensor actor_loss = ops::mean(ops::sub(ops::scale(fresh.log_prob, temperature), min_q));
  actor_opt.zero_grad();
  backward(actor_loss);
  actor_opt.step();
  // The actor pass leaves gradients on the critics; they must not leak into the next critic step.
  critic_opt.zero_grad();
  losses.actor = actor_loss.item();

  critic.soft_update_targets(tau);
  return losses;
}

SacLearner::SacLearner(Actor& actor, Critic& critic, const SacOptions& options)
    : actor_(actor),
      critic_(critic),
      opt_(options),
      actor_opt_([&] {
        ParamList p;
        actor.append_params(p);
        return tensors_of(p);
      }(), AdamOptions{options.actor_lr}),
      critic_opt_(tensors_of(critic.online_params()), AdamOptions{options.critic_lr}) {}

SacLosses SacLearner::update(const SacBatch& batch, const Tensor& next_noise, const Tensor& noise) {
  return sac_update(actor_, critic_, actor_opt_, critic_opt_, batch, opt_.temperature, opt_.gamma,
                    opt_.tau, next_noise, noise);
}

}  // namespace timrl::policy
