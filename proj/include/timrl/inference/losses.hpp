#pragma once

#include <span>
#include <vector>

#include "timrl/inference/context.hpp"
#include "timrl/inference/decoder.hpp"
#include "timrl/inference/encoder.hpp"
#include "timrl/numerics/random.hpp"

namespace timrl::inference {

/// Mean squared error between class probabilities [B×K] and one-hot labels.
Tensor recognition_loss(const Tensor& probs, std::span<const int> labels);
/// Mean negative log-probability of the true labels.
Tensor recognition_cross_entropy(const Tensor& probs, std::span<const int> labels);

/// Mean over rows of ‖s' − ŝ'‖² + (r − r̂)². `rows` are context rows [R×W],
/// `z_rows` the embedding attached to each row [R×L].
Tensor reconstruction_loss(const MdpDecoder& decoder, const Tensor& rows, const Tensor& z_rows);

/// Posterior of the contexts routed to component k.
struct RoutedPosterior {
  int k = 0;
  Tensor mu;
  Tensor sigma;
};

/// Σ_k KL(N(μ_k, σ_k²) ‖ N(μ̂_k, σ̂_k²)), each component's KL averaged over its
/// routed contexts. Components without contexts contribute nothing.
Tensor regularization_loss(const TaskEncoder& encoder, const std::vector<RoutedPosterior>& routed);

/// recons + α·regula.
Tensor inference_loss(const Tensor& recons, const Tensor& regula, double alpha);

struct VaeLoss {
  Tensor total;
  double recons = 0.0;  // summed over components
  double regula = 0.0;
};

/// L = Σ_k [L_recons^(k) + α·L_regula^(k)], every component encoding every
/// context in `batch`.
VaeLoss vae_loss(const TaskEncoder& encoder, const MdpDecoder& decoder, const ContextBatch& batch,
                 double alpha, Rng& rng);

}  // namespace timrl::inference
