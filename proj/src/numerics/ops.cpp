#include "timrl/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <utility>

#include "timrl/numerics/errors.hpp"
#include "timrl/numerics/kernels.hpp"

namespace timrl::ops {

namespace {

using Backward = std::function<void(std::span<const double>)>;

Tensor result(const char* op, Shape shape, std::vector<double> data) {
#ifdef TIMRL_CHECK_FINITE
  for (double v : data) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite output from ") + op);
  }
#else
  (void)op;
#endif
  return Tensor(std::move(shape), std::move(data), false);
}

bool track(std::initializer_list<const Tensor*> inputs) {
  if (!grad_enabled()) return false;
  for (const auto* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

bool track(const std::vector<Tensor>& inputs) {
  if (!grad_enabled()) return false;
  return std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
}

void attach(Tensor& out, const char* op, const std::vector<Tensor>& inputs, Backward rule) {
  auto node = std::make_shared<Node>();
  node->op = op;
  node->inputs.reserve(inputs.size());
  for (const auto& t : inputs) node->inputs.push_back(t.impl());
  node->backward = std::move(rule);
  out.impl()->producer = std::move(node);
  out.set_requires_grad(true);
}

// Gradient buffer of t, or nullptr when t does not take gradients.
double* gbuf(const Tensor& t) {
  if (!t.requires_grad()) return nullptr;
  auto& g = t.impl()->grad;
  if (g.empty()) g.assign(t.size(), 0.0);
  return g.data();
}

void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_str(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

template <typename Fwd, typename Deriv>
Tensor unary(const char* op, const Tensor& x, Fwd fwd, Deriv deriv) {
  std::vector<double> y(x.size());
  const auto xd = x.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = fwd(xd[i]);
  Tensor out = result(op, x.shape(), std::move(y));
  if (track({&x})) {
    Tensor yv = out.detach();
    attach(out, op, {x}, [x, yv, deriv](std::span<const double> g) {
      double* gx = gbuf(x);
      const auto xd = x.data();
      const auto yd = yv.data();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * deriv(xd[i], yd[i]);
    });
  }
  return out;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul: inner dimensions disagree, " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
  }
  std::vector<double> c(m * n);
  kernels::gemm({m, k, n, false, false}, a.data().data(), b.data().data(), c.data(), false);
  Tensor out = result("matmul", {m, n}, std::move(c));
  if (track({&a, &b})) {
    attach(out, "matmul", {a, b}, [a, b, m, k, n](std::span<const double> g) {
      if (double* ga = gbuf(a)) {
        kernels::gemm({m, n, k, false, true}, g.data(), b.data().data(), ga, true);
      }
      if (double* gb = gbuf(b)) {
        kernels::gemm({k, m, n, true, false}, a.data().data(), g.data(), gb, true);
      }
    });
  }
  return out;
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_matrix(x, "linear");
  require_matrix(weight, "linear");
  const std::size_t batch = x.rows(), in = x.cols(), outd = weight.rows();
  if (weight.cols() != in) {
    throw DimensionError("linear: input " + shape_str(x.shape()) + " does not fit weight " +
                         shape_str(weight.shape()));
  }
  if (bias.size() != outd) {
    throw DimensionError("linear: bias " + shape_str(bias.shape()) + " does not fit weight " +
                         shape_str(weight.shape()));
  }
  std::vector<double> y(batch * outd);
  for (std::size_t r = 0; r < batch; ++r) std::copy(bias.data().begin(), bias.data().end(), y.begin() + r * outd);
  kernels::gemm({batch, in, outd, false, true}, x.data().data(), weight.data().data(), y.data(), true);
  Tensor out = result("linear", {batch, outd}, std::move(y));
  if (track({&x, &weight, &bias})) {
    attach(out, "linear", {x, weight, bias}, [x, weight, bias, batch, in, outd](std::span<const double> g) {
      if (double* gx = gbuf(x)) {
        kernels::gemm({batch, outd, in, false, false}, g.data(), weight.data().data(), gx, true);
      }
      if (double* gw = gbuf(weight)) {
        kernels::gemm({outd, batch, in, true, false}, g.data(), x.data().data(), gw, true);
      }
      if (double* gb = gbuf(bias)) {
        for (std::size_t r = 0; r < batch; ++r)
          for (std::size_t j = 0; j < outd; ++j) gb[j] += g[r * outd + j];
      }
    });
  }
  return out;
}

Tensor transpose(const Tensor& x) {
  require_matrix(x, "transpose");
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<double> y(m * n);
  const auto xd = x.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) y[j * m + i] = xd[i * n + j];
  Tensor out = result("transpose", {n, m}, std::move(y));
  if (track({&x})) {
    attach(out, "transpose", {x}, [x, m, n](std::span<const double> g) {
      double* gx = gbuf(x);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += g[j * m + i];
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] + b[i];
  Tensor out = result("add", a.shape(), std::move(y));
  if (track({&a, &b})) {
    attach(out, "add", {a, b}, [a, b](std::span<const double> g) {
      if (double* ga = gbuf(a)) for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      if (double* gb = gbuf(b)) for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] - b[i];
  Tensor out = result("sub", a.shape(), std::move(y));
  if (track({&a, &b})) {
    attach(out, "sub", {a, b}, [a, b](std::span<const double> g) {
      if (double* ga = gbuf(a)) for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      if (double* gb = gbuf(b)) for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] * b[i];
  Tensor out = result("mul", a.shape(), std::move(y));
  if (track({&a, &b})) {
    attach(out, "mul", {a, b}, [a, b](std::span<const double> g) {
      if (double* ga = gbuf(a)) for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b[i];
      if (double* gb = gbuf(b)) for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a[i];
    });
  }
  return out;
}

Tensor minimum(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "minimum");
  std::vector<double> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::min(a[i], b[i]);
  Tensor out = result("minimum", a.shape(), std::move(y));
  if (track({&a, &b})) {
    attach(out, "minimum", {a, b}, [a, b](std::span<const double> g) {
      double* ga = gbuf(a);
      double* gb = gbuf(b);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (a[i] <= b[i]) {
          if (ga) ga[i] += g[i];
        } else if (gb) {
          gb[i] += g[i];
        }
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& x, double factor) {
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] * factor;
  Tensor out = result("scale", x.shape(), std::move(y));
  if (track({&x})) {
    attach(out, "scale", {x}, [x, factor](std::span<const double> g) {
      double* gx = gbuf(x);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * factor;
    });
  }
  return out;
}

Tensor add_scalar(const Tensor& x, double value) {
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] + value;
  Tensor out = result("add_scalar", x.shape(), std::move(y));
  if (track({&x})) {
    attach(out, "add_scalar", {x}, [x](std::span<const double> g) {
      double* gx = gbuf(x);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
  }
  return out;
}

Tensor add_row(const Tensor& x, const Tensor& row) {
  require_matrix(x, "add_row");
  const std::size_t m = x.rows(), n = x.cols();
  if (row.size() != n) {
    throw DimensionError("add_row: row " + shape_str(row.shape()) + " does not fit " +
                         shape_str(x.shape()));
  }
  std::vector<double> y(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) y[i * n + j] = x[i * n + j] + row[j];
  Tensor out = result("add_row", x.shape(), std::move(y));
  if (track({&x, &row})) {
    attach(out, "add_row", {x, row}, [x, row, m, n](std::span<const double> g) {
      if (double* gx = gbuf(x)) for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      if (double* gr = gbuf(row)) {
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) gr[j] += g[i * n + j];
      }
    });
  }
  return out;
}

Tensor tanh(const Tensor& x) {
  return unary("tanh", x, [](double v) { return std::tanh(v); },
               [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& x) {
  return unary("relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
               [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor exp(const Tensor& x) {
  return unary("exp", x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  for (double v : x.data()) {
    if (!(v > 0.0)) throw DomainError("log: argument must be positive, got " + std::to_string(v));
  }
  return unary("log", x, [](double v) { return std::log(v); },
               [](double v, double) { return 1.0 / v; });
}

Tensor softplus(const Tensor& x) {
  return unary("softplus", x,
               [](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); },
               [](double v, double) {
                 return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
               });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  if (lo > hi) throw ContractError("clamp: lower bound exceeds upper bound");
  return unary("clamp", x, [lo, hi](double v) { return std::clamp(v, lo, hi); },
               [lo, hi](double v, double) { return (v > lo && v < hi) ? 1.0 : 0.0; });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  Tensor out = result("sum", {1}, {s});
  if (track({&x})) {
    attach(out, "sum", {x}, [x](std::span<const double> g) {
      double* gx = gbuf(x);
      for (std::size_t i = 0; i < x.size(); ++i) gx[i] += g[0];
    });
  }
  return out;
}

Tensor mean(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  const double n = static_cast<double>(x.size());
  Tensor out = result("mean", {1}, {s / n});
  if (track({&x})) {
    attach(out, "mean", {x}, [x, n](std::span<const double> g) {
      double* gx = gbuf(x);
      for (std::size_t i = 0; i < x.size(); ++i) gx[i] += g[0] / n;
    });
  }
  return out;
}

Tensor mean_rows(const Tensor& x) {
  require_matrix(x, "mean_rows");
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<double> y(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) y[j] += x[i * n + j];
  for (auto& v : y) v /= static_cast<double>(m);
  Tensor out = result("mean_rows", {1, n}, std::move(y));
  if (track({&x})) {
    attach(out, "mean_rows", {x}, [x, m, n](std::span<const double> g) {
      double* gx = gbuf(x);
      const double inv = 1.0 / static_cast<double>(m);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += g[j] * inv;
    });
  }
  return out;
}

Tensor sum_cols(const Tensor& x) {
  require_matrix(x, "sum_cols");
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<double> y(m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) y[i] += x[i * n + j];
  Tensor out = result("sum_cols", {m, 1}, std::move(y));
  if (track({&x})) {
    attach(out, "sum_cols", {x}, [x, m, n](std::span<const double> g) {
      double* gx = gbuf(x);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += g[i];
    });
  }
  return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  for (const auto& p : parts) require_matrix(p, "concat_cols");
  const std::size_t m = parts.front().rows();
  std::size_t n = 0;
  for (const auto& p : parts) {
    if (p.rows() != m) {
      throw DimensionError("concat_cols: row counts differ, " + shape_str(parts.front().shape()) +
                           " vs " + shape_str(p.shape()));
    }
    n += p.cols();
  }
  std::vector<double> y(m * n);
  std::size_t off = 0;
  for (const auto& p : parts) {
    const std::size_t pc = p.cols();
    for (std::size_t i = 0; i < m; ++i)
      std::copy_n(p.data().begin() + i * pc, pc, y.begin() + i * n + off);
    off += pc;
  }
  Tensor out = result("concat_cols", {m, n}, std::move(y));
  if (track(parts)) {
    attach(out, "concat_cols", parts, [parts, m, n](std::span<const double> g) {
      std::size_t off = 0;
      for (const auto& p : parts) {
        const std::size_t pc = p.cols();
        if (double* gp = gbuf(p)) {
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < pc; ++j) gp[i * pc + j] += g[i * n + off + j];
        }
        off += pc;
      }
    });
  }
  return out;
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat_rows: no inputs");
  for (const auto& p : parts) require_matrix(p, "concat_rows");
  const std::size_t n = parts.front().cols();
  std::size_t m = 0;
  for (const auto& p : parts) {
    if (p.cols() != n) {
      throw DimensionError("concat_rows: column counts differ, " +
                           shape_str(parts.front().shape()) + " vs " + shape_str(p.shape()));
    }
    m += p.rows();
  }
  std::vector<double> y;
  y.reserve(m * n);
  for (const auto& p : parts) y.insert(y.end(), p.data().begin(), p.data().end());
  Tensor out = result("concat_rows", {m, n}, std::move(y));
  if (track(parts)) {
    attach(out, "concat_rows", parts, [parts](std::span<const double> g) {
      std::size_t off = 0;
      for (const auto& p : parts) {
        if (double* gp = gbuf(p)) {
          for (std::size_t i = 0; i < p.size(); ++i) gp[i] += g[off + i];
        }
        off += p.size();
      }
    });
  }
  return out;
}

Tensor slice_cols(const Tensor& x, std::size_t start, std::size_t count) {
  require_matrix(x, "slice_cols");
  const std::size_t m = x.rows(), n = x.cols();
  if (count == 0 || start + count > n) {
    throw DimensionError("slice_cols: columns [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") out of range for " + shape_str(x.shape()));
  }
  std::vector<double> y(m * count);
  for (std::size_t i = 0; i < m; ++i)
    std::copy_n(x.data().begin() + i * n + start, count, y.begin() + i * count);
  Tensor out = result("slice_cols", {m, count}, std::move(y));
  if (track({&x})) {
    attach(out, "slice_cols", {x}, [x, m, n, start, count](std::span<const double> g) {
      double* gx = gbuf(x);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < count; ++j) gx[i * n + start + j] += g[i * count + j];
    });
  }
  return out;
}

Tensor slice_rows(const Tensor& x, std::size_t start, std::size_t count) {
  require_matrix(x, "slice_rows");
  const std::size_t m = x.rows(), n = x.cols();
  if (count == 0 || start + count > m) {
    throw DimensionError("slice_rows: rows [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") out of range for " + shape_str(x.shape()));
  }
  std::vector<double> y(x.data().begin() + start * n, x.data().begin() + (start + count) * n);
  Tensor out = result("slice_rows", {count, n}, std::move(y));
  if (track({&x})) {
    attach(out, "slice_rows", {x}, [x, n, start](std::span<const double> g) {
      double* gx = gbuf(x);
      for (std::size_t i = 0; i < g.size(); ++i) gx[start * n + i] += g[i];
    });
  }
  return out;
}

Tensor softmax_rows(const Tensor& x) {
  require_matrix(x, "softmax_rows");
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<double> y(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = x.data().data() + i * n;
    double* out = y.data() + i * n;
    const double mx = *std::max_element(row, row + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      out[j] = std::exp(row[j] - mx);
      z += out[j];
    }
    for (std::size_t j = 0; j < n; ++j) out[j] /= z;
  }
  Tensor out = result("softmax_rows", {m, n}, std::move(y));
  if (track({&x})) {
    Tensor yv = out.detach();
    attach(out, "softmax_rows", {x}, [x, yv, m, n](std::span<const double> g) {
      double* gx = gbuf(x);
      for (std::size_t i = 0; i < m; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += g[i * n + j] * yv[i * n + j];
        for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += yv[i * n + j] * (g[i * n + j] - dot);
      }
    });
  }
  return out;
}

Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  require_matrix(x, "layer_norm_rows");
  const std::size_t m = x.rows(), n = x.cols();
  if (gain.size() != n || bias.size() != n) {
    throw DimensionError("layer_norm_rows: gain " + shape_str(gain.shape()) + " / bias " +
                         shape_str(bias.shape()) + " do not fit " + shape_str(x.shape()));
  }
  std::vector<double> xhat(m * n), inv_std(m), y(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = x.data().data() + i * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat[i * n + j] = (row[j] - mu) * inv_std[i];
      y[i * n + j] = gain[j] * xhat[i * n + j] + bias[j];
    }
  }
  Tensor out = result("layer_norm_rows", {m, n}, std::move(y));
  if (track({&x, &gain, &bias})) {
    attach(out, "layer_norm_rows", {x, gain, bias},
           [x, gain, bias, m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](
               std::span<const double> g) {
             double* gg = gbuf(gain);
             double* gb = gbuf(bias);
             double* gx = gbuf(x);
             const double dn = static_cast<double>(n);
             for (std::size_t i = 0; i < m; ++i) {
               double sum_d = 0.0, sum_dx = 0.0;
               for (std::size_t j = 0; j < n; ++j) {
                 const double gij = g[i * n + j];
                 if (gg) gg[j] += gij * xhat[i * n + j];
                 if (gb) gb[j] += gij;
                 const double d = gij * gain[j];
                 sum_d += d;
                 sum_dx += d * xhat[i * n + j];
               }
               if (!gx) continue;
               for (std::size_t j = 0; j < n; ++j) {
                 const double d = g[i * n + j] * gain[j];
                 gx[i * n + j] += inv_std[i] / dn * (dn * d - sum_d - xhat[i * n + j] * sum_dx);
               }
             }
           });
  }
  return out;
}

Tensor gaussian_kl(const Tensor& mu, const Tensor& sigma2, const Tensor& mu_hat,
                   const Tensor& sigma2_hat) {
  require_same_shape(mu, sigma2, "gaussian_kl");
  require_same_shape(mu, mu_hat, "gaussian_kl");
  require_same_shape(mu, sigma2_hat, "gaussian_kl");
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (!(sigma2[i] > 0.0) || !(sigma2_hat[i] > 0.0)) {
      throw DomainError("gaussian_kl: variances must be strictly positive");
    }
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double diff = mu[i] - mu_hat[i];
    kl += 0.5 * std::log(sigma2_hat[i] / sigma2[i]) +
          (sigma2[i] + diff * diff) / (2.0 * sigma2_hat[i]) - 0.5;
  }
  Tensor out = result("gaussian_kl", {1}, {kl});
  if (track({&mu, &sigma2, &mu_hat, &sigma2_hat})) {
    attach(out, "gaussian_kl", {mu, sigma2, mu_hat, sigma2_hat},
           [mu, sigma2, mu_hat, sigma2_hat](std::span<const double> g) {
             double* gm = gbuf(mu);
             double* gs = gbuf(sigma2);
             double* gmh = gbuf(mu_hat);
             double* gsh = gbuf(sigma2_hat);
             for (std::size_t i = 0; i < mu.size(); ++i) {
               const double diff = mu[i] - mu_hat[i];
               const double sh = sigma2_hat[i];
               if (gm) gm[i] += g[0] * diff / sh;
               if (gmh) gmh[i] -= g[0] * diff / sh;
               if (gs) gs[i] += g[0] * (0.5 / sh - 0.5 / sigma2[i]);
               if (gsh) gsh[i] += g[0] * (0.5 / sh - (sigma2[i] + diff * diff) / (2.0 * sh * sh));
             }
           });
  }
  return out;
}

Tensor reparameterize(const Tensor& mu, const Tensor& sigma, const Tensor& noise) {
  require_same_shape(mu, sigma, "reparameterize");
  require_same_shape(mu, noise, "reparameterize");
  std::vector<double> z(mu.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = mu[i] + sigma[i] * noise[i];
  Tensor out = result("reparameterize", mu.shape(), std::move(z));
  if (track({&mu, &sigma})) {
    Tensor eps = noise.detach();
    attach(out, "reparameterize", {mu, sigma}, [mu, sigma, eps](std::span<const double> g) {
      if (double* gm = gbuf(mu)) for (std::size_t i = 0; i < g.size(); ++i) gm[i] += g[i];
      if (double* gs = gbuf(sigma)) for (std::size_t i = 0; i < g.size(); ++i) gs[i] += g[i] * eps[i];
    });
  }
  return out;
}

Tensor mse(const Tensor& pred, const Tensor& target) {
  require_same_shape(pred, target, "mse");
  const double n = static_cast<double>(pred.size());
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - target[i]) * (pred[i] - target[i]);
  Tensor out = result("mse", {1}, {s / n});
  if (track({&pred, &target})) {
    attach(out, "mse", {pred, target}, [pred, target, n](std::span<const double> g) {
      double* gp = gbuf(pred);
      double* gt = gbuf(target);
      for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = 2.0 * (pred[i] - target[i]) / n * g[0];
        if (gp) gp[i] += d;
        if (gt) gt[i] -= d;
      }
    });
  }
  return out;
}

}  // namespace timrl::ops
