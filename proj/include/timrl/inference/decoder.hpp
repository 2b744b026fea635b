#pragma once

#include "timrl/inference/context.hpp"
#include "timrl/neural/mlp.hpp"

namespace timrl::inference {

/// Reconstructs the MDP: (s, a, z) → ŝ' and (s, a, z) → r̂.
class MdpDecoder {
 public:
  MdpDecoder() = default;
  MdpDecoder(const RowLayout& layout, std::size_t latent_dim, std::size_t hidden, Rng& rng);

  /// Inputs are [R×(S+A+L)].
  Tensor predict_next_state(const Tensor& input) const { return state_head_.forward(input); }
  Tensor predict_reward(const Tensor& input) const { return reward_head_.forward(input); }

  const RowLayout& layout() const { return layout_; }
  std::size_t latent_dim() const { return latent_dim_; }
  neural::Mlp& state_head() { return state_head_; }
  neural::Mlp& reward_head() { return reward_head_; }
  void append_params(ParamList& out, const std::string& prefix = "decoder") const;

 private:
  RowLayout layout_;
  std::size_t latent_dim_ = 0;
  neural::Mlp state_head_;
  neural::Mlp reward_head_;
};

}  // namespace timrl::inference
