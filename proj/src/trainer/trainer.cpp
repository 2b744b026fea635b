#include "timrl/trainer/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "timrl/inference/losses.hpp"
#include "timrl/numerics/ops.hpp"

namespace timrl::trainer {

namespace {

// Stream identifiers for derive_seed.
constexpr std::uint64_t kPoolStream = 10;
constexpr std::uint64_t kSplitStream = 11;
constexpr std::uint64_t kTaskPickStream = 20;
constexpr std::uint64_t kCollectStream = 30;
constexpr std::uint64_t kWarmupStream = 31;
constexpr std::uint64_t kInferenceStream = 32;
constexpr std::uint64_t kRecognitionStream = 33;
constexpr std::uint64_t kSacStream = 34;
constexpr std::uint64_t kEvalStream = 40;

Tensor rows_tensor(const std::vector<std::vector<double>>& rows) {
  const std::size_t w = rows.front().size();
  std::vector<double> flat;
  flat.reserve(rows.size() * w);
  for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
  return Tensor({rows.size(), w}, std::move(flat));
}

std::string format_rows(const std::vector<std::vector<double>>& rows) {
  std::ostringstream os;
  char buf[32];
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < r.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", r[j]);
      os << (j ? " " : "  ") << buf;
    }
    os << "\n";
  }
  return os.str();
}

std::string dump_contexts(const ContextSampler& sampler, const std::vector<std::size_t>& idx, bool including) {
  std::ostringstream os;
  for (std::size_t i : idx) {
    const auto& e = sampler.buffer().at(i);
    os << "entry " << i << " episode " << e.episode << " t " << e.t << " class " << e.transition.true_class
       << " component " << e.embedding.source_component << "\n";
    os << format_rows(including ? sampler.context_including(i) : sampler.context_before(i));
  }
  return os.str();
}

void check_finite(double value, const char* what, const ContextSampler& sampler,
                  const std::vector<std::size_t>& idx, bool including) {
  if (std::isfinite(value)) return;
  throw NonFiniteLoss(std::string(what) + " loss is not finite", dump_contexts(sampler, idx, including));
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t pool_size, double fraction,
                                                                          std::uint64_t seed) {
  if (pool_size < 5) throw ContractError("task pool needs at least 5 tasks, got " + std::to_string(pool_size));
  if (!(fraction > 0.0 && fraction < 1.0)) throw ContractError("train fraction must lie in (0, 1)");
  const auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(pool_size)));
  if (n_train == 0 || n_train == pool_size) {
    throw ContractError("train fraction leaves one side of the split empty");
  }
  std::vector<std::size_t> order(pool_size);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = pool_size - 1; i > 0; --i) std::swap(order[i], order[rng.index(i + 1)]);
  return {std::vector<std::size_t>(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train)),
          std::vector<std::size_t>(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end())};
}

std::vector<envs::TaskSchedule> task_pool(const envs::EnvSpec& spec, std::size_t size, std::uint64_t seed) {
  std::vector<envs::TaskSchedule> pool;
  pool.reserve(size);
  for (std::size_t i = 0; i < size; ++i) pool.push_back(envs::sample_task_schedule(spec, derive_seed(seed, i)));
  return pool;
}

TaskSplit make_task_split(const TrainConfig& config, const envs::EnvSpec& spec) {
  const auto pool = task_pool(spec, static_cast<std::size_t>(config.task_pool_size),
                              derive_seed(config.seed, kPoolStream));
  auto [train, validation] = split_tasks(pool, config.train_fraction, derive_seed(config.seed, kSplitStream));
  return {std::move(train), std::move(validation)};
}

// ---------------------------------------------------------------------------

TimrlAgent::TimrlAgent(const TimrlModel& model, const AgentOptions& options, std::uint64_t seed)
    : model_(model), opt_(options), rng_(seed) {}

void TimrlAgent::begin_episode() {
  history_.clear();
  recognized_.clear();
  components_.clear();
  embeddings_.clear();
}

std::vector<double> TimrlAgent::act(int, const std::vector<double>& state) {
  const std::size_t latent = model_.latent_dim();
  std::vector<double> z(latent, 0.0);
  int recognized = -1;
  int component = 0;
  if (!history_.empty()) {
    NoGradGuard no_grad;
    const std::size_t window = static_cast<std::size_t>(model_.config().window);
    const std::size_t n = std::min(history_.size(), window);
    std::vector<std::vector<double>> rows;
    rows.reserve(n);
    for (std::size_t i = history_.size() - n; i < history_.size(); ++i) {
      rows.push_back(inference::context_row(history_[i], model_.spec(), model_.pad(), &model_.normalizer()));
    }
    const auto batch = inference::ContextBatch::stack({rows});
    if (opt_.ablate_recognition) {
      recognized = static_cast<int>(rng_.index(model_.recognition().num_classes()));
    } else {
      recognized = inference::argmax_lowest(model_.recognition().probabilities(batch.rows).data());
    }
    component = model_.component_for(recognized);
    std::vector<double> noise(latent, 0.0);
    if (opt_.mode == policy::ActionMode::kStochastic) noise = rng_.normal_vector(latent);
    const Tensor feats = model_.encoder().features(batch);
    z = inference::encode(model_.encoder(), feats, component, Tensor({1, latent}, std::move(noise))).embedding.z;
  }
  recognized_.push_back(recognized);
  components_.push_back(component);
  embeddings_.push_back(z);

  const std::size_t a_dim = model_.spec().action_dim;
  if (opt_.random_actions) {
    std::vector<double> a(a_dim);
    for (auto& v : a) v = rng_.uniform(-1.0, 1.0);
    return a;
  }
  std::vector<double> noise;
  if (opt_.mode == policy::ActionMode::kStochastic) noise = rng_.normal_vector(a_dim);
  return policy::select_action(model_.actor(), state, z, opt_.mode, noise);
}

void TimrlAgent::observe(int, const envs::Transition& transition) { history_.push_back(transition); }

std::vector<EpisodeRecord> collect_rollouts(const TimrlModel& model, const std::vector<envs::TaskSchedule>& schedules,
                                            const AgentOptions& options, std::uint64_t seed, bool parallel) {
  const auto n = static_cast<long>(schedules.size());
  std::vector<EpisodeRecord> out(schedules.size());
  std::vector<std::exception_ptr> errors(schedules.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long i = 0; i < n; ++i) {
    try {
      NoGradGuard no_grad;
      TimrlAgent agent(model, options, derive_seed(seed, static_cast<std::uint64_t>(i)));
      auto& rec = out[static_cast<std::size_t>(i)];
      rec.transitions = envs::rollout(model.spec(), agent, schedules[static_cast<std::size_t>(i)]);
      rec.recognized = agent.recognized();
      rec.components = agent.components();
      rec.embeddings = agent.embeddings();
      rec.episode_return = envs::episode_return(rec.transitions);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

// ---------------------------------------------------------------------------

ContextSampler::ContextSampler(const policy::ReplayBuffer& buffer, const TimrlModel& model)
    : buffer_(buffer), model_(model) {}

std::vector<std::vector<double>> ContextSampler::rows(const std::vector<std::size_t>& idx) const {
  std::vector<std::vector<double>> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) {
    out.push_back(inference::context_row(buffer_.at(i).transition, model_.spec(), model_.pad(), &model_.normalizer()));
  }
  return out;
}

std::vector<std::vector<double>> ContextSampler::context_including(std::size_t i) const {
  return rows(buffer_.context_indices(i, static_cast<std::size_t>(model_.config().window), true));
}

std::vector<std::vector<double>> ContextSampler::context_before(std::size_t i) const {
  return rows(buffer_.context_indices(i, static_cast<std::size_t>(model_.config().window), false));
}

std::vector<double> recognition_train_phase(const ContextSampler& sampler, const inference::RecognitionNetwork& net,
                                            Adam& optimizer, std::size_t steps, std::size_t batch,
                                            RecognitionLossKind loss, Rng& rng) {
  std::vector<double> trace;
  trace.reserve(steps);
  for (std::size_t s = 0; s < steps; ++s) {
    const auto idx = sampler.buffer().sample(batch, rng);
    std::vector<Tensor> probs;
    std::vector<int> labels;
    probs.reserve(idx.size());
    for (std::size_t i : idx) {
      probs.push_back(net.probabilities(rows_tensor(sampler.context_including(i))));
      labels.push_back(sampler.buffer().at(i).transition.true_class);
    }
    const Tensor p = ops::concat_rows(probs);
    const Tensor l = loss == RecognitionLossKind::kMse ? inference::recognition_loss(p, labels)
                                                       : inference::recognition_cross_entropy(p, labels);
    check_finite(l.item(), "recognition", sampler, idx, true);
    optimizer.zero_grad();
    backward(l);
    optimizer.step();
    trace.push_back(l.item());
  }
  return trace;
}

InferenceStats inference_train_phase(const ContextSampler& sampler, const TimrlModel& model, Adam& optimizer,
                                     std::size_t steps, std::size_t batch, double alpha, Rng& rng) {
  InferenceStats stats;
  for (std::size_t s = 0; s < steps; ++s) {
    const auto idx = sampler.buffer().sample(batch, rng);
    std::vector<std::vector<std::vector<double>>> contexts;
    contexts.reserve(idx.size());
    for (std::size_t i : idx) contexts.push_back(sampler.context_including(i));
    const auto cb = inference::ContextBatch::stack(contexts);
    const auto loss = inference::vae_loss(model.encoder(), model.decoder(), cb, alpha, rng);
    check_finite(loss.total.item(), "inference", sampler, idx, true);
    optimizer.zero_grad();
    backward(loss.total);
    optimizer.step();
    stats.recons += loss.recons;
    stats.regula += loss.regula;
    stats.total += loss.total.item();
  }
  if (steps > 0) {
    const double n = static_cast<double>(steps);
    stats.recons /= n;
    stats.regula /= n;
    stats.total /= n;
  }
  return stats;
}

Tensor sac_embeddings(const ContextSampler& sampler, const TimrlModel& model, const std::vector<std::size_t>& idx,
                      bool recompute, Rng& rng) {
  NoGradGuard no_grad;
  const std::size_t latent = model.latent_dim();
  std::vector<double> z(idx.size() * latent, 0.0);
  if (!recompute) {
    for (std::size_t b = 0; b < idx.size(); ++b) {
      const auto& stored = sampler.buffer().at(idx[b]).embedding.z;
      std::copy(stored.begin(), stored.end(), z.begin() + static_cast<std::ptrdiff_t>(b * latent));
    }
    return Tensor({idx.size(), latent}, std::move(z));
  }
  std::vector<std::vector<std::vector<double>>> contexts;
  std::vector<std::size_t> owner;  // batch position of each non-empty context
  for (std::size_t b = 0; b < idx.size(); ++b) {
    auto ctx = sampler.context_before(idx[b]);
    if (ctx.empty()) continue;
    contexts.push_back(std::move(ctx));
    owner.push_back(b);
  }
  if (contexts.empty()) return Tensor({idx.size(), latent}, std::move(z));
  const auto cb = inference::ContextBatch::stack(contexts);
  const Tensor feats = model.encoder().features(cb);
  Tensor noise({contexts.size(), latent}, rng.normal_vector(contexts.size() * latent));
  std::vector<std::vector<double>> sampled(model.encoder().components());
  for (std::size_t k = 0; k < sampled.size(); ++k) {
    bool used = false;
    for (std::size_t c = 0; c < owner.size() && !used; ++c) {
      used = model.component_for(sampler.buffer().at(idx[owner[c]]).embedding.source_component) ==
             static_cast<int>(k);
    }
    if (used) sampled[k] = inference::encode(model.encoder(), feats, static_cast<int>(k), noise).z.to_vector();
  }
  for (std::size_t c = 0; c < owner.size(); ++c) {
    const int k = model.component_for(sampler.buffer().at(idx[owner[c]]).embedding.source_component);
    const auto& src = sampled[static_cast<std::size_t>(k)];
    std::copy(src.begin() + static_cast<std::ptrdiff_t>(c * latent),
              src.begin() + static_cast<std::ptrdiff_t>((c + 1) * latent),
              z.begin() + static_cast<std::ptrdiff_t>(owner[c] * latent));
  }
  return Tensor({idx.size(), latent}, std::move(z));
}

SacStats sac_train_phase(const ContextSampler& sampler, TimrlModel& model, policy::SacLearner& learner,
                         std::size_t steps, std::size_t batch, bool recompute, Rng& rng) {
  SacStats stats;
  const std::size_t s_dim = model.spec().state_dim;
  const std::size_t a_dim = model.spec().action_dim;
  for (std::size_t s = 0; s < steps; ++s) {
    const auto idx = sampler.buffer().sample(batch, rng);
    const std::size_t b = idx.size();
    std::vector<double> states, actions, rewards, next_states;
    states.reserve(b * s_dim);
    actions.reserve(b * a_dim);
    next_states.reserve(b * s_dim);
    for (std::size_t i : idx) {
      const auto& tr = sampler.buffer().at(i).transition;
      states.insert(states.end(), tr.state.begin(), tr.state.end());
      actions.insert(actions.end(), tr.action.begin(), tr.action.end());
      rewards.push_back(tr.reward);
      next_states.insert(next_states.end(), tr.next_state.begin(), tr.next_state.end());
    }
    policy::SacBatch sb;
    sb.states = Tensor({b, s_dim}, std::move(states));
    sb.actions = Tensor({b, a_dim}, std::move(actions));
    sb.rewards = Tensor({b, 1}, std::move(rewards));
    sb.next_states = Tensor({b, s_dim}, std::move(next_states));
    sb.z = sac_embeddings(sampler, model, idx, recompute, rng);
    const Tensor next_noise({b, a_dim}, rng.normal_vector(b * a_dim));
    const Tensor noise({b, a_dim}, rng.normal_vector(b * a_dim));
    const auto losses = learner.update(sb, next_noise, noise);
    check_finite(losses.critic, "critic", sampler, idx, false);
    check_finite(losses.actor, "actor", sampler, idx, false);
    stats.actor += losses.actor;
    stats.critic += losses.critic;
  }
  if (steps > 0) {
    stats.actor /= static_cast<double>(steps);
    stats.critic /= static_cast<double>(steps);
  }
  return stats;
}

// ---------------------------------------------------------------------------

TestResult meta_test(const TimrlModel& model, const std::vector<envs::TaskSchedule>& schedules,
                     std::size_t n_episodes, bool ablate_recognition, std::uint64_t seed, bool parallel) {
  if (n_episodes == 0) throw ContractError("meta_test needs at least one episode");
  if (schedules.empty()) throw ContractError("meta_test needs at least one task schedule");
  std::vector<envs::TaskSchedule> run;
  run.reserve(n_episodes);
  for (std::size_t i = 0; i < n_episodes; ++i) run.push_back(schedules[i % schedules.size()]);

  AgentOptions opts;
  opts.mode = policy::ActionMode::kDeterministic;
  opts.ablate_recognition = ablate_recognition;

  TestResult res;
  res.episodes = collect_rollouts(model, run, opts, seed, parallel);
  const std::size_t k = model.recognition().num_classes();
  res.confusion.assign(k, std::vector<std::size_t>(k, 0));
  res.selections.assign(k, 0);
  std::size_t correct = 0;
  for (std::size_t e = 0; e < res.episodes.size(); ++e) {
    const auto& ep = res.episodes[e];
    res.returns.push_back(ep.episode_return);
    for (std::size_t t = 0; t < ep.recognized.size(); ++t) {
      const int pick = ep.recognized[t];
      if (pick < 0) continue;
      const int truth = run[e].class_at(static_cast<int>(t));
      ++res.confusion[static_cast<std::size_t>(truth)][static_cast<std::size_t>(pick)];
      ++res.selections[static_cast<std::size_t>(pick)];
      ++res.evaluated;
      if (pick == truth) ++correct;
    }
  }
  res.mean_return = mean_of(res.returns);
  double var = 0.0;
  for (double r : res.returns) var += (r - res.mean_return) * (r - res.mean_return);
  res.return_std = std::sqrt(var / static_cast<double>(res.returns.size()));
  res.accuracy = res.evaluated == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(res.evaluated);
  return res;
}

std::vector<double> random_policy_returns(const envs::EnvSpec& spec, const std::vector<envs::TaskSchedule>& schedules,
                                          std::size_t n_episodes, std::uint64_t seed) {
  if (schedules.empty()) throw ContractError("random_policy_returns needs at least one task schedule");
  std::vector<double> out;
  out.reserve(n_episodes);
  for (std::size_t i = 0; i < n_episodes; ++i) {
    envs::RandomAgent agent(spec.action_dim, derive_seed(seed, i));
    out.push_back(envs::episode_return(envs::rollout(spec, agent, schedules[i % schedules.size()])));
  }
  return out;
}

// ---------------------------------------------------------------------------

GroupChecksums group_checksums(const TimrlModel& model) {
  return {checksum(model.inference_params()), checksum(model.recognition_params()),
          checksum(model.policy_params())};
}

namespace {

class Auditor {
 public:
  Auditor(const TimrlModel& model, std::vector<PhaseAudit>& log) : model_(model), log_(log) {}

  template <typename F>
  auto run(int epoch, const std::string& phase, std::initializer_list<const char*> allowed, F&& body) {
    PhaseAudit audit;
    audit.epoch = epoch;
    audit.phase = phase;
    audit.before = group_checksums(model_);
    auto finish = [&] {
      audit.after = group_checksums(model_);
      auto check = [&](const char* name, std::uint64_t a, std::uint64_t b) {
        if (a == b) return;
        for (const char* ok : allowed) {
          if (std::string(ok) == name) return;
        }
        audit.violations.emplace_back(name);
      };
      check("inference", audit.before.inference, audit.after.inference);
      check("recognition", audit.before.recognition, audit.after.recognition);
      check("policy", audit.before.policy, audit.after.policy);
      log_.push_back(std::move(audit));
    };
    if constexpr (std::is_void_v<decltype(body())>) {
      body();
      finish();
    } else {
      auto result = body();
      finish();
      return result;
    }
  }

 private:
  const TimrlModel& model_;
  std::vector<PhaseAudit>& log_;
};

void add_episodes(policy::ReplayBuffer& buffer, envs::RunningNormalizer& normalizer,
                  std::vector<EpisodeRecord>& episodes, std::uint64_t& episode_id) {
  for (auto& ep : episodes) {
    for (std::size_t t = 0; t < ep.transitions.size(); ++t) {
      normalizer.update(ep.transitions[t].state);
      policy::ReplayEntry entry;
      entry.embedding = {ep.embeddings[t], ep.components[t]};
      entry.transition = std::move(ep.transitions[t]);
      entry.episode = episode_id;
      entry.t = static_cast<int>(t);
      buffer.add(std::move(entry));
    }
    ++episode_id;
  }
}

}  // namespace

TrainResult meta_train(const TrainConfig& config, const TrainCallbacks& callbacks) {
  validate(config);
  const auto spec = envs::env_spec(config.env);
  TrainResult res;
  res.model = std::make_unique<TimrlModel>(config, spec);
  TimrlModel& model = *res.model;

  auto split = make_task_split(config, spec);
  res.train_tasks = std::move(split.train);
  res.validation_tasks = std::move(split.validation);
  if (config.epochs == 0) return res;

  policy::ReplayBuffer buffer(static_cast<std::size_t>(config.buffer_capacity));
  const ContextSampler sampler(buffer, model);
  AdamOptions inf_opts{config.lr_inference};
  inf_opts.max_grad_norm = config.max_grad_norm;
  AdamOptions rec_opts{config.lr_recognition};
  rec_opts.max_grad_norm = config.max_grad_norm;
  Adam inference_opt(tensors_of(model.inference_params()), inf_opts);
  Adam recognition_opt(tensors_of(model.recognition_params()), rec_opts);
  policy::SacOptions sac_opts;
  sac_opts.gamma = config.gamma;
  sac_opts.tau = config.tau;
  sac_opts.temperature = config.sac_temperature;
  sac_opts.actor_lr = config.lr_actor;
  sac_opts.critic_lr = config.lr_critic;
  policy::SacLearner learner(model.actor(), model.critic(), sac_opts);
  const auto rec_loss =
      config.recognition_loss == "mse" ? RecognitionLossKind::kMse : RecognitionLossKind::kCrossEntropy;

  Auditor audit(model, res.audits);
  std::uint64_t episode_id = 0;

  try {
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
      const auto e = static_cast<std::uint64_t>(epoch);
      EpochMetrics m;
      m.epoch = epoch;

      // (a) Collection on train tasks.
      audit.run(epoch, "collect", {}, [&] {
        Rng pick(derive_seed(config.seed, kTaskPickStream, e));
        AgentOptions opts;
        opts.ablate_recognition = config.ablate_recognition;
        if (epoch == 1 && config.warmup_rollouts > 0) {
          std::vector<envs::TaskSchedule> warm;
          for (int i = 0; i < config.warmup_rollouts; ++i) {
            warm.push_back(res.train_tasks[pick.index(res.train_tasks.size())]);
          }
          AgentOptions wopts = opts;
          wopts.random_actions = true;
          auto eps = collect_rollouts(model, warm, wopts, derive_seed(config.seed, kWarmupStream),
                                      config.parallel_rollouts);
          add_episodes(buffer, model.normalizer(), eps, episode_id);
        }
        std::vector<envs::TaskSchedule> chosen;
        for (int i = 0; i < config.rollouts_per_epoch; ++i) {
          chosen.push_back(res.train_tasks[pick.index(res.train_tasks.size())]);
        }
        auto eps = collect_rollouts(model, chosen, opts, derive_seed(config.seed, kCollectStream, e),
                                    config.parallel_rollouts);
        add_episodes(buffer, model.normalizer(), eps, episode_id);
      });

      // (b) Task inference.
      const auto inf = audit.run(epoch, "inference", {"inference"}, [&] {
        Rng rng(derive_seed(config.seed, kInferenceStream, e));
        return inference_train_phase(sampler, model, inference_opt, static_cast<std::size_t>(config.inference_steps),
                                     static_cast<std::size_t>(config.context_batch), config.inference_alpha, rng);
      });
      m.recons_loss = inf.recons;
      m.regula_loss = inf.regula;

      // (c) Recognition.
      const auto trace = audit.run(epoch, "recognition", {"recognition"}, [&] {
        Rng rng(derive_seed(config.seed, kRecognitionStream, e));
        return recognition_train_phase(sampler, model.recognition(), recognition_opt,
                                       static_cast<std::size_t>(config.recognition_steps),
                                       static_cast<std::size_t>(config.context_batch), rec_loss, rng);
      });
      m.recognize_loss = mean_of(trace);

      // (d) Policy.
      const auto sac = audit.run(epoch, "sac", {"policy"}, [&] {
        Rng rng(derive_seed(config.seed, kSacStream, e));
        return sac_train_phase(sampler, model, learner, static_cast<std::size_t>(config.sac_steps),
                               static_cast<std::size_t>(config.sac_batch), config.sac_recompute_embedding, rng);
      });
      m.actor_loss = sac.actor;
      m.critic_loss = sac.critic;

      // (e) Validation.
      const auto test = audit.run(epoch, "evaluate", {}, [&] {
        return meta_test(model, res.validation_tasks, static_cast<std::size_t>(config.eval_episodes),
                         config.ablate_recognition, derive_seed(config.seed, kEvalStream, e),
                         config.parallel_rollouts);
      });
      m.mean_test_return = test.mean_return;
      m.recognition_accuracy = test.accuracy;

      res.metrics.push_back(m);
      if (callbacks.on_epoch) callbacks.on_epoch(m, model);
    }
  } catch (const NonFiniteLoss& err) {
    if (!callbacks.dump_dir.empty()) {
      std::filesystem::create_directories(callbacks.dump_dir);
      std::ofstream(callbacks.dump_dir / "nonfinite_batch.txt") << err.what() << "\n" << err.dump();
    }
    throw;
  }
  return res;
}

std::string metrics_csv_header() {
  return "epoch,mean_test_return,recognition_accuracy,recons_loss,regula_loss,recognize_loss,actor_loss,critic_loss";
}

void write_metrics_csv(std::ostream& os, const std::vector<EpochMetrics>& metrics) {
  os << metrics_csv_header() << "\n";
  char buf[512];
  for (const auto& m : metrics) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", m.epoch, m.mean_test_return,
                  m.recognition_accuracy, m.recons_loss, m.regula_loss, m.recognize_loss, m.actor_loss,
                  m.critic_loss);
    os << buf;
  }
}

}  // namespace timrl::trainer
