#pragma once

#include <cstddef>
#include <vector>

#include "timrl/numerics/tensor.hpp"

namespace timrl::ops {

// Matrix products. All operands are rank-2.
Tensor matmul(const Tensor& a, const Tensor& b);
/// x·Wᵀ + b for x[batch×in], W[out×in], b[out].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);
Tensor transpose(const Tensor& x);

// Elementwise, identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor minimum(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double value);
/// x[m×n] + b[n] added to every row.
Tensor add_row(const Tensor& x, const Tensor& row);

Tensor tanh(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor softplus(const Tensor& x);
/// Gradient passes only where lo < x < hi.
Tensor clamp(const Tensor& x, double lo, double hi);

// Reductions.
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// [m×n] -> [1×n], mean over rows.
Tensor mean_rows(const Tensor& x);
/// [m×n] -> [m×1], sum over columns.
Tensor sum_cols(const Tensor& x);

// Structural.
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& x, std::size_t start, std::size_t count);
Tensor slice_rows(const Tensor& x, std::size_t start, std::size_t count);

/// Row-wise softmax with max subtraction.
Tensor softmax_rows(const Tensor& x);
/// Per-row normalization followed by gain/bias; eps is added to the variance.
Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);

/// KL(N(mu, sigma2) ‖ N(mu_hat, sigma2_hat)) summed over every element.
/// Throws DomainError on nonpositive variances.
Tensor gaussian_kl(const Tensor& mu, const Tensor& sigma2, const Tensor& mu_hat,
                   const Tensor& sigma2_hat);
/// mu + sigma ⊙ noise. `noise` never receives a gradient.
Tensor reparameterize(const Tensor& mu, const Tensor& sigma, const Tensor& noise);
/// Mean of squared differences.
Tensor mse(const Tensor& pred, const Tensor& target);

}  // namespace timrl::ops
