#include "timrl/inference/decoder.hpp"

namespace timrl::inference {

MdpDecoder::MdpDecoder(const RowLayout& layout, std::size_t latent_dim, std::size_t hidden, Rng& rng)
    : layout_(layout),
      latent_dim_(latent_dim),
      state_head_({layout.state + layout.action + latent_dim, hidden, hidden, layout.state},
                  neural::Activation::kRelu, neural::Activation::kIdentity, rng),
      reward_head_({layout.state + layout.action + latent_dim, hidden, hidden, 1},
                   neural::Activation::kRelu, neural::Activation::kIdentity, rng) {}

void MdpDecoder::append_params(ParamList& out, const std::string& prefix) const {
  state_head_.append_params(out, prefix + ".state_head");
  reward_head_.append_params(out, prefix + ".reward_head");
}

}  // namespace timrl::inference
