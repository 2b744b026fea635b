#pragma once

#include <memory>
#include <vector>

#include "timrl/inference/context.hpp"
#include "timrl/neural/mlp.hpp"

namespace timrl::inference {

struct EncoderOptions {
  std::size_t latent_dim = 4;
  std::size_t feature_hidden = 64;
  std::size_t feature_dim = 32;
  std::size_t trunk_hidden = 64;
  /// Component k's prior mean is prior_offset·e_k.
  double prior_offset = 2.0;
  double prior_variance = 1.0;
};

inline constexpr double kSigmaMin = 1e-3;
inline constexpr double kSigmaMax = 10.0;

/// Diagonal Gaussian posterior per context, [B×latent] each.
struct Posterior {
  Tensor mu;
  Tensor sigma;
};

/// Context → Gaussian posterior over task embeddings, one or more components.
class TaskEncoder {
 public:
  virtual ~TaskEncoder() = default;

  virtual std::size_t components() const = 0;
  virtual std::size_t latent_dim() const = 0;
  /// Pooled per-context features shared by every component, [B×F].
  virtual Tensor features(const ContextBatch& batch) const = 0;
  /// Component k's posterior from pooled features.
  virtual Posterior posterior(const Tensor& features, int k) const = 0;
  virtual const std::vector<double>& prior_mean(int k) const = 0;
  virtual const std::vector<double>& prior_variance(int k) const = 0;
  virtual void append_params(ParamList& out, const std::string& prefix = "encoder") const = 0;
};

/// K Gaussian components over a shared per-transition feature network with
/// mean pooling. Component k only runs when selected.
class GmmEncoder : public TaskEncoder {
 public:
  GmmEncoder(std::size_t row_width, std::size_t num_components, const EncoderOptions& options,
             Rng& rng);

  std::size_t components() const override { return trunks_.size(); }
  std::size_t latent_dim() const override { return opt_.latent_dim; }
  Tensor features(const ContextBatch& batch) const override;
  Posterior posterior(const Tensor& features, int k) const override;
  const std::vector<double>& prior_mean(int k) const override;
  const std::vector<double>& prior_variance(int k) const override;
  void append_params(ParamList& out, const std::string& prefix = "encoder") const override;

  std::vector<neural::Mlp>& trunks() { return trunks_; }

 private:
  std::size_t row_width_;
  EncoderOptions opt_;
  neural::Mlp feature_net_;
  std::vector<neural::Mlp> trunks_;
  std::vector<std::vector<double>> prior_means_;
  std::vector<double> prior_var_;
};

/// Single-Gaussian baseline: every transition yields a Gaussian factor and
/// the context posterior is their normalized product. Prior N(0, I).
class ProductEncoder : public TaskEncoder {
 public:
  ProductEncoder(std::size_t row_width, const EncoderOptions& options, Rng& rng);

  std::size_t components() const override { return 1; }
  std::size_t latent_dim() const override { return opt_.latent_dim; }
  /// Returns [mu | sigma] of the product posterior, [B×2L].
  Tensor features(const ContextBatch& batch) const override;
  Posterior posterior(const Tensor& features, int k) const override;
  const std::vector<double>& prior_mean(int k) const override;
  const std::vector<double>& prior_variance(int k) const override;
  void append_params(ParamList& out, const std::string& prefix = "encoder") const override;

 private:
  std::size_t row_width_;
  EncoderOptions opt_;
  neural::Mlp factor_net_;
  std::vector<double> prior_mean_;
  std::vector<double> prior_var_;
};

struct TaskEmbedding {
  std::vector<double> z;
  int source_component = 0;
};

struct EncodeResult {
  TaskEmbedding embedding;
  Tensor z, mu, sigma;
};

/// z = μ_k + σ_k ⊙ noise from component k only. Throws ContractError when k
/// is out of range.
EncodeResult encode(const TaskEncoder& encoder, const Tensor& features, int k, const Tensor& noise);

/// One Gaussian factor N(mean, variance), per dimension.
struct GaussianFactor {
  std::vector<double> mean;
  std::vector<double> variance;
};

/// Normalized product of diagonal Gaussian factors:
/// σ² = (Σ 1/σ_n²)⁻¹, μ = σ²·Σ μ_n/σ_n².
GaussianFactor posterior_baseline_product(const std::vector<GaussianFactor>& factors);

}  // namespace timrl::inference
