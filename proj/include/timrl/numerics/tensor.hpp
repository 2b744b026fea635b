#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace timrl {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

struct TensorImpl;

/// One recorded operation: its inputs and the rule that pushes the output
/// gradient back into them.
struct Node {
  std::string op;
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  std::function<void(std::span<const double> grad_out)> backward;
};

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until a gradient reaches this tensor
  bool requires_grad = false;
  std::shared_ptr<Node> producer;  // null for leaves
};

/// Dense row-major float64 array with reverse-mode differentiation.
///
/// A Tensor is a cheap handle; copies share storage. Operations record a
/// Node on the output whenever gradient mode is on and any input requires
/// a gradient, so the graph is rebuilt on every forward pass.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0, bool requires_grad = false);
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor vector(std::vector<double> values, bool requires_grad = false);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                       bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t size() const { return impl_->data.size(); }
  /// Leading dimension of a rank-2 tensor.
  std::size_t rows() const;
  /// Trailing dimension of a rank-2 tensor.
  std::size_t cols() const;

  std::span<const double> data() const { return impl_->data; }
  std::span<double> mutable_data() { return impl_->data; }
  double operator[](std::size_t i) const { return impl_->data[i]; }
  double at(std::size_t r, std::size_t c) const;
  double item() const;
  std::vector<double> to_vector() const { return impl_->data; }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool value) { impl_->requires_grad = value; }
  bool has_grad() const { return !impl_->grad.empty(); }
  /// Gradient values; zeros when no gradient has been accumulated.
  std::vector<double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad() { impl_->grad.clear(); }

  /// Deep copy with no history.
  Tensor detach() const;
  bool is_leaf() const { return impl_->producer == nullptr; }
  const std::shared_ptr<TensorImpl>& impl() const { return impl_; }

 private:
  friend Tensor make_tensor(std::shared_ptr<TensorImpl>);
  std::shared_ptr<TensorImpl> impl_;
};

Tensor make_tensor(std::shared_ptr<TensorImpl> impl);

bool grad_enabled();

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Operations reachable from a loss, in topological order (inputs first).
class Tape {
 public:
  static Tape collect(const Tensor& root);
  const std::vector<std::shared_ptr<TensorImpl>>& tensors() const { return order_; }
  std::size_t node_count() const;

 private:
  std::vector<std::shared_ptr<TensorImpl>> order_;
};

/// Populates gradients of every requires_grad tensor reachable from `loss`.
/// Leaf gradients accumulate across calls; intermediate gradients are reset.
void backward(const Tensor& loss);

}  // namespace timrl
