#include "timrl/inference/encoder.hpp"

#include <cmath>

#include "timrl/numerics/errors.hpp"
#include "timrl/numerics/ops.hpp"

namespace timrl::inference {

namespace {

void check_component(int k, std::size_t count) {
  if (k < 0 || static_cast<std::size_t>(k) >= count) {
    throw ContractError("component " + std::to_string(k) + " outside [0, " + std::to_string(count) + ")");
  }
}

// σ = clamp(exp(pre), σ_min, σ_max), clamping before exp to keep it finite.
Tensor positive_scale(const Tensor& pre) {
  return ops::exp(ops::clamp(pre, std::log(kSigmaMin), std::log(kSigmaMax)));
}

}  // namespace

GmmEncoder::GmmEncoder(std::size_t row_width, std::size_t num_components,
                       const EncoderOptions& options, Rng& rng)
    : row_width_(row_width),
      opt_(options),
      feature_net_({row_width, options.feature_hidden, options.feature_dim}, neural::Activation::kRelu,
                   neural::Activation::kRelu, rng) {
  if (num_components == 0) throw ContractError("GMM encoder needs at least one component");
  if (num_components > options.latent_dim) {
    throw ContractError("latent_dim (" + std::to_string(options.latent_dim) +
                        ") must be at least the number of components (" +
                        std::to_string(num_components) + ") to separate the priors");
  }
  for (std::size_t k = 0; k < num_components; ++k) {
    trunks_.emplace_back(std::vector<std::size_t>{options.feature_dim, options.trunk_hidden,
                                                  2 * options.latent_dim},
                         neural::Activation::kRelu, neural::Activation::kIdentity, rng);
    std::vector<double> mean(options.latent_dim, 0.0);
    mean[k] = options.prior_offset;
    prior_means_.push_back(std::move(mean));
  }
  prior_var_.assign(options.latent_dim, options.prior_variance);
}

Tensor GmmEncoder::features(const ContextBatch& batch) const {
  if (batch.rows.cols() != row_width_) {
    throw DimensionError("encoder expects rows of width " + std::to_string(row_width_) + ", got " +
                         shape_str(batch.rows.shape()));
  }
  return ops::matmul(batch.mean_pool, feature_net_.forward(batch.rows));
}

Posterior GmmEncoder::posterior(const Tensor& features, int k) const {
  check_component(k, trunks_.size());
  const Tensor out = trunks_[k].forward(features);
  const std::size_t l = opt_.latent_dim;
  return {ops::slice_cols(out, 0, l), positive_scale(ops::slice_cols(out, l, l))};
}

const std::vector<double>& GmmEncoder::prior_mean(int k) const {
  check_component(k, trunks_.size());
  return prior_means_[k];
}

const std::vector<double>& GmmEncoder::prior_variance(int k) const {
  check_component(k, trunks_.size());
  return prior_var_;
}

void GmmEncoder::append_params(ParamList& out, const std::string& prefix) const {
  feature_net_.append_params(out, prefix + ".features");
  for (std::size_t k = 0; k < trunks_.size(); ++k) {
    trunks_[k].append_params(out, prefix + ".component" + std::to_string(k));
  }
}

ProductEncoder::ProductEncoder(std::size_t row_width, const EncoderOptions& options, Rng& rng)
    : row_width_(row_width),
      opt_(options),
      factor_net_({row_width, options.feature_hidden, options.trunk_hidden, 2 * options.latent_dim},
                  neural::Activation::kRelu, neural::Activation::kIdentity, rng),
      prior_mean_(options.latent_dim, 0.0),
      prior_var_(options.latent_dim, 1.0) {}

Tensor ProductEncoder::features(const ContextBatch& batch) const {
  if (batch.rows.cols() != row_width_) {
    throw DimensionError("encoder expects rows of width " + std::to_string(row_width_) + ", got " +
                         shape_str(batch.rows.shape()));
  }
  const std::size_t l = opt_.latent_dim;
  const Tensor out = factor_net_.forward(batch.rows);
  const Tensor mu_n = ops::slice_cols(out, 0, l);
  // Per-factor variance in [σ_min², σ_max²] via the same clamp as the mixture.
  const Tensor sigma_n = positive_scale(ops::slice_cols(out, l, l));
  const Tensor precision_n = ops::exp(ops::scale(ops::log(ops::mul(sigma_n, sigma_n)), -1.0));
  const Tensor precision = ops::matmul(batch.membership, precision_n);
  const Tensor weighted = ops::matmul(batch.membership, ops::mul(mu_n, precision_n));
  const Tensor log_var = ops::scale(ops::log(precision), -1.0);
  const Tensor var = ops::exp(log_var);
  const Tensor mu = ops::mul(var, weighted);
  const Tensor sigma = ops::exp(ops::scale(log_var, 0.5));
  return ops::concat_cols({mu, sigma});
}

Posterior ProductEncoder::posterior(const Tensor& features, int k) const {
  check_component(k, 1);
  const std::size_t l = opt_.latent_dim;
  return {ops::slice_cols(features, 0, l), ops::slice_cols(features, l, l)};
}

const std::vector<double>& ProductEncoder::prior_mean(int k) const {
  check_component(k, 1);
  return prior_mean_;
}

const std::vector<double>& ProductEncoder::prior_variance(int k) const {
  check_component(k, 1);
  return prior_var_;
}

void ProductEncoder::append_params(ParamList& out, const std::string& prefix) const {
  factor_net_.append_params(out, prefix + ".factors");
}

EncodeResult encode(const TaskEncoder& encoder, const Tensor& features, int k, const Tensor& noise) {
  if (k < 0 || static_cast<std::size_t>(k) >= encoder.components()) {
    throw ContractError("encode: component " + std::to_string(k) + " outside [0, " +
                        std::to_string(encoder.components()) + ")");
  }
  EncodeResult res;
  const Posterior post = encoder.posterior(features, k);
  res.mu = post.mu;
  res.sigma = post.sigma;
  res.z = ops::reparameterize(post.mu, post.sigma, noise);
  res.embedding.z = res.z.to_vector();
  res.embedding.source_component = k;
  return res;
}

GaussianFactor posterior_baseline_product(const std::vector<GaussianFactor>& factors) {
  if (factors.empty()) throw ContractError("product of Gaussians needs at least one factor");
  const std::size_t d = factors.front().mean.size();
  std::vector<double> precision(d, 0.0), weighted(d, 0.0);
  for (const auto& f : factors) {
    if (f.mean.size() != d || f.variance.size() != d) throw DimensionError("Gaussian factors differ in dimension");
    for (std::size_t i = 0; i < d; ++i) {
      if (!(f.variance[i] > 0.0)) throw DomainError("Gaussian factor variance must be positive");
      precision[i] += 1.0 / f.variance[i];
      weighted[i] += f.mean[i] / f.variance[i];
    }
  }
  GaussianFactor out{std::vector<double>(d), std::vector<double>(d)};
  for (std::size_t i = 0; i < d; ++i) {
    out.variance[i] = 1.0 / precision[i];
    out.mean[i] = out.variance[i] * weighted[i];
  }
  return out;
}

}  // namespace timrl::inference
