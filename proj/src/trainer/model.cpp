#include "timrl/trainer/model.hpp"

#include "timrl/numerics/errors.hpp"

namespace timrl::trainer {

namespace {

std::vector<std::size_t> widths(const std::vector<int>& v) { return {v.begin(), v.end()}; }

constexpr const char* kNormMean = "normalizer.mean";
constexpr const char* kNormM2 = "normalizer.m2";
constexpr const char* kNormCount = "normalizer.count";

}  // namespace

TimrlModel::TimrlModel(const TrainConfig& config, const envs::EnvSpec& spec)
    : config_(config), spec_(spec), pad_(envs::global_max_dims()), normalizer_(spec.state_dim) {
  validate(config_);
  if (spec_.num_classes() != envs::env_spec(config_.env).num_classes()) {
    throw DimensionError("config env " + config_.env + " has " +
                         std::to_string(envs::env_spec(config_.env).num_classes()) + " classes, " + spec_.name +
                         " has " + std::to_string(spec_.num_classes()));
  }
  // Separate streams so resizing one network leaves the others' initial values alone.
  Rng enc_rng(derive_seed(config_.seed, 1));
  Rng dec_rng(derive_seed(config_.seed, 2));
  Rng rec_rng(derive_seed(config_.seed, 3));
  Rng act_rng(derive_seed(config_.seed, 4));
  Rng cri_rng(derive_seed(config_.seed, 5));

  inference::EncoderOptions eo;
  eo.latent_dim = static_cast<std::size_t>(config_.latent_dim);
  eo.feature_hidden = static_cast<std::size_t>(config_.feature_hidden);
  eo.feature_dim = static_cast<std::size_t>(config_.feature_dim);
  eo.trunk_hidden = static_cast<std::size_t>(config_.trunk_hidden);
  if (config_.encoder == "single_gaussian") {
    encoder_ = std::make_unique<inference::ProductEncoder>(row_width(), eo, enc_rng);
  } else {
    encoder_ = std::make_unique<inference::GmmEncoder>(row_width(), resolved_components(config_), eo, enc_rng);
  }
  decoder_ = inference::MdpDecoder(layout(), eo.latent_dim, static_cast<std::size_t>(config_.decoder_hidden),
                                   dec_rng);

  inference::RecognitionOptions ro;
  ro.transformer.d_model = static_cast<std::size_t>(config_.d_model);
  ro.transformer.heads = static_cast<std::size_t>(config_.heads);
  ro.transformer.layers = static_cast<std::size_t>(config_.layers);
  ro.transformer.ff_hidden = static_cast<std::size_t>(config_.ff_hidden);
  ro.transformer.ln_eps = config_.ln_eps;
  ro.preproc_hidden = static_cast<std::size_t>(config_.preproc_hidden);
  ro.head_hidden = static_cast<std::size_t>(config_.head_hidden);
  recognition_ = inference::RecognitionNetwork(row_width(), spec_.num_classes(), ro, rec_rng);

  actor_ = policy::Actor(spec_.state_dim, eo.latent_dim, spec_.action_dim, widths(config_.policy_hidden), act_rng);
  critic_ = policy::Critic(spec_.state_dim, spec_.action_dim, eo.latent_dim, widths(config_.policy_hidden),
                           cri_rng);
}

ParamList TimrlModel::inference_params() const {
  ParamList out;
  encoder_->append_params(out);
  decoder_.append_params(out);
  return out;
}

ParamList TimrlModel::recognition_params() const {
  ParamList out;
  recognition_.append_params(out);
  return out;
}

ParamList TimrlModel::policy_params() const {
  ParamList out;
  actor_.append_params(out);
  critic_.append_params(out);
  return out;
}

ParamList TimrlModel::all_params() const {
  ParamList out = inference_params();
  for (auto& p : recognition_params()) out.push_back(std::move(p));
  for (auto& p : policy_params()) out.push_back(std::move(p));
  return out;
}

std::vector<NamedArray> TimrlModel::state() const {
  auto out = snapshot(all_params());
  const std::size_t d = normalizer_.dim();
  out.push_back({kNormMean, {d}, normalizer_.mean()});
  out.push_back({kNormM2, {d}, normalizer_.m2()});
  out.push_back({kNormCount, {1}, {static_cast<double>(normalizer_.count())}});
  return out;
}

void TimrlModel::load_state(const std::vector<NamedArray>& entries) {
  ParamList params = all_params();
  restore(entries, params);
  const NamedArray* mean = nullptr;
  const NamedArray* m2 = nullptr;
  const NamedArray* count = nullptr;
  for (const auto& e : entries) {
    if (e.name == kNormMean) mean = &e;
    if (e.name == kNormM2) m2 = &e;
    if (e.name == kNormCount) count = &e;
  }
  if (mean == nullptr || m2 == nullptr || count == nullptr) {
    throw CheckpointError("checkpoint has no normalizer state");
  }
  if (mean->data.size() != normalizer_.dim() || m2->data.size() != normalizer_.dim() || count->data.size() != 1) {
    throw DimensionError("normalizer: checkpoint has " + shape_str(mean->shape) + ", model expects [" +
                         std::to_string(normalizer_.dim()) + "]");
  }
  normalizer_.set_state(mean->data, m2->data, static_cast<std::size_t>(count->data[0]));
}

}  // namespace timrl::trainer
