#include "timrl/numerics/optim.hpp"

#include <cmath>

namespace timrl {

Adam::Adam(std::vector<Tensor> params, AdamOptions options)
    : params_(std::move(params)), opt_(options) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

void Adam::step() {
  ++t_;
  double clip = 1.0;
  if (opt_.max_grad_norm > 0.0) {
    double sq = 0.0;
    for (const auto& p : params_) {
      if (!p.has_grad()) continue;
      for (double g : p.impl()->grad) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (norm > opt_.max_grad_norm) clip = opt_.max_grad_norm / norm;
  }
  const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    if (!p.has_grad()) continue;
    const auto& g = p.impl()->grad;
    auto w = p.mutable_data();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double gj = g[j] * clip;
      m[j] = opt_.beta1 * m[j] + (1.0 - opt_.beta1) * gj;
      v[j] = opt_.beta2 * v[j] + (1.0 - opt_.beta2) * gj * gj;
      w[j] -= opt_.lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + opt_.eps);
    }
  }
}

}  // namespace timrl
