#include "timrl/inference/losses.hpp"

#include "timrl/numerics/errors.hpp"
#include "timrl/numerics/ops.hpp"

namespace timrl::inference {

namespace {

Tensor one_hot(std::span<const int> labels, std::size_t rows, std::size_t k) {
  if (labels.size() != rows) {
    throw DimensionError("got " + std::to_string(labels.size()) + " labels for " + std::to_string(rows) +
                         " predictions");
  }
  std::vector<double> data(rows * k, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k) {
      throw ContractError("label " + std::to_string(labels[i]) + " outside [0, " + std::to_string(k) + ")");
    }
    data[i * k + static_cast<std::size_t>(labels[i])] = 1.0;
  }
  return Tensor({rows, k}, std::move(data));
}

Tensor tile_rows(const std::vector<double>& row, std::size_t rows) {
  std::vector<double> data;
  data.reserve(rows * row.size());
  for (std::size_t i = 0; i < rows; ++i) data.insert(data.end(), row.begin(), row.end());
  return Tensor({rows, row.size()}, std::move(data));
}

}  // namespace

Tensor recognition_loss(const Tensor& probs, std::span<const int> labels) {
  return ops::mse(probs, one_hot(labels, probs.rows(), probs.cols()));
}

Tensor recognition_cross_entropy(const Tensor& probs, std::span<const int> labels) {
  const Tensor target = one_hot(labels, probs.rows(), probs.cols());
  const Tensor logp = ops::log(ops::add_scalar(probs, 1e-12));
  return ops::scale(ops::sum(ops::mul(target, logp)), -1.0 / static_cast<double>(probs.rows()));
}

Tensor reconstruction_loss(const MdpDecoder& decoder, const Tensor& rows, const Tensor& z_rows) {
  const RowLayout& lay = decoder.layout();
  if (rows.rank() != 2 || rows.cols() != lay.width()) {
    throw DimensionError("reconstruction: rows " + shape_str(rows.shape()) + " do not have width " +
                         std::to_string(lay.width()));
  }
  if (z_rows.rank() != 2 || z_rows.rows() != rows.rows() || z_rows.cols() != decoder.latent_dim()) {
    throw DimensionError("reconstruction: embeddings " + shape_str(z_rows.shape()) + " do not fit rows " +
                         shape_str(rows.shape()));
  }
  const Tensor input = ops::concat_cols({ops::slice_cols(rows, lay.state_begin(), lay.state + lay.action), z_rows});
  const Tensor next_state = ops::slice_cols(rows, lay.next_state_begin(), lay.state);
  const Tensor reward = ops::slice_cols(rows, lay.reward_col(), 1);
  // mse averages over R·S entries; scaling by S gives the per-row squared norm.
  const Tensor state_term =
      ops::scale(ops::mse(decoder.predict_next_state(input), next_state), static_cast<double>(lay.state));
  const Tensor reward_term = ops::mse(decoder.predict_reward(input), reward);
  return ops::add(state_term, reward_term);
}

Tensor regularization_loss(const TaskEncoder& encoder, const std::vector<RoutedPosterior>& routed) {
  Tensor total;
  for (const auto& r : routed) {
    const std::size_t n = r.mu.rows();
    const Tensor sigma2 = ops::mul(r.sigma, r.sigma);
    const Tensor kl = ops::gaussian_kl(r.mu, sigma2, tile_rows(encoder.prior_mean(r.k), n),
                                       tile_rows(encoder.prior_variance(r.k), n));
    const Tensor term = ops::scale(kl, 1.0 / static_cast<double>(n));
    total = total.defined() ? ops::add(total, term) : term;
  }
  return total.defined() ? total : Tensor::scalar(0.0);
}

Tensor inference_loss(const Tensor& recons, const Tensor& regula, double alpha) {
  if (alpha < 0.0) throw ContractError("inference loss weight must be nonnegative");
  return ops::add(recons, ops::scale(regula, alpha));
}

VaeLoss vae_loss(const TaskEncoder& encoder, const MdpDecoder& decoder, const ContextBatch& batch,
                 double alpha, Rng& rng) {
  const Tensor feats = encoder.features(batch);
  const std::size_t b = batch.contexts();
  const std::size_t l = encoder.latent_dim();
  VaeLoss out;
  for (std::size_t k = 0; k < encoder.components(); ++k) {
    const int kk = static_cast<int>(k);
    const Tensor noise({b, l}, rng.normal_vector(b * l));
    const EncodeResult enc = encode(encoder, feats, kk, noise);
    const Tensor recons = reconstruction_loss(decoder, batch.rows, ops::matmul(batch.expand, enc.z));
    const Tensor regula = regularization_loss(encoder, {{kk, enc.mu, enc.sigma}});
    out.recons += recons.item();
    out.regula += regula.item();
    const Tensor term = inference_loss(recons, regula, alpha);
    out.total = out.total.defined() ? ops::add(out.total, term) : term;
  }
  return out;
}

}  // namespace timrl::inference
