#pragma once

#include <memory>

#include "timrl/envs/observation.hpp"
#include "timrl/inference/decoder.hpp"
#include "timrl/inference/encoder.hpp"
#include "timrl/inference/recognition.hpp"
#include "timrl/numerics/checkpoint.hpp"
#include "timrl/policy/sac.hpp"
#include "timrl/trainer/config.hpp"

namespace timrl::trainer {

/// Every learned piece of a run plus the context normalizer.
class TimrlModel {
 public:
  /// Initializes all networks from `config.seed`.
  TimrlModel(const TrainConfig& config, const envs::EnvSpec& spec);

  const TrainConfig& config() const { return config_; }
  const envs::EnvSpec& spec() const { return spec_; }
  const envs::PadDims& pad() const { return pad_; }
  inference::RowLayout layout() const { return {pad_.state, pad_.action}; }
  std::size_t row_width() const { return layout().width(); }
  std::size_t latent_dim() const { return encoder_->latent_dim(); }
  /// Component that actually encodes when the recognizer says `k`.
  int component_for(int k) const { return encoder_->components() == 1 ? 0 : k; }

  const inference::TaskEncoder& encoder() const { return *encoder_; }
  const inference::MdpDecoder& decoder() const { return decoder_; }
  const inference::RecognitionNetwork& recognition() const { return recognition_; }
  policy::Actor& actor() { return actor_; }
  const policy::Actor& actor() const { return actor_; }
  policy::Critic& critic() { return critic_; }
  const policy::Critic& critic() const { return critic_; }
  envs::RunningNormalizer& normalizer() { return normalizer_; }
  const envs::RunningNormalizer& normalizer() const { return normalizer_; }

  /// Encoder and decoder.
  ParamList inference_params() const;
  ParamList recognition_params() const;
  /// Actor and both critics with their targets.
  ParamList policy_params() const;
  ParamList all_params() const;

  /// Parameters plus the normalizer state, in checkpoint form.
  std::vector<NamedArray> state() const;
  /// Throws DimensionError listing every shape mismatch.
  void load_state(const std::vector<NamedArray>& entries);

 private:
  TrainConfig config_;
  envs::EnvSpec spec_;
  envs::PadDims pad_;
  std::unique_ptr<inference::TaskEncoder> encoder_;
  inference::MdpDecoder decoder_;
  inference::RecognitionNetwork recognition_;
  policy::Actor actor_;
  policy::Critic critic_;
  envs::RunningNormalizer normalizer_;
};

}  // namespace timrl::trainer
