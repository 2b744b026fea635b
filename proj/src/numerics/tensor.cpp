#include "timrl/numerics/tensor.hpp"

#include <sstream>
#include <unordered_set>

#include "timrl/numerics/errors.hpp"

namespace timrl {

namespace {
thread_local bool t_grad_enabled = true;
}  // namespace

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

static void check_shape(const Shape& shape) {
  if (shape.empty()) throw DimensionError("tensor shape must have rank >= 1");
  for (auto d : shape) {
    if (d == 0) throw DimensionError("tensor shape " + shape_str(shape) + " has a zero dimension");
  }
}

Tensor::Tensor(Shape shape, double fill, bool requires_grad) {
  check_shape(shape);
  impl_ = std::make_shared<TensorImpl>();
  impl_->data.assign(shape_numel(shape), fill);
  impl_->shape = std::move(shape);
  impl_->requires_grad = requires_grad;
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad) {
  check_shape(shape);
  if (shape_numel(shape) != data.size()) {
    throw DimensionError("shape " + shape_str(shape) + " does not hold " +
                         std::to_string(data.size()) + " values");
  }
  impl_ = std::make_shared<TensorImpl>();
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(Shape{1}, std::vector<double>{value}, requires_grad);
}

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
  Shape s{values.size()};
  return Tensor(std::move(s), std::move(values), requires_grad);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                      bool requires_grad) {
  return Tensor(Shape{rows, cols}, std::move(values), requires_grad);
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw DimensionError("expected a matrix, got shape " + shape_str(shape()));
  return impl_->shape[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw DimensionError("expected a matrix, got shape " + shape_str(shape()));
  return impl_->shape[1];
}

double Tensor::at(std::size_t r, std::size_t c) const { return impl_->data[r * cols() + c]; }

double Tensor::item() const {
  if (size() != 1) throw ContractError("item() on tensor of shape " + shape_str(shape()));
  return impl_->data[0];
}

std::vector<double> Tensor::grad() const {
  if (impl_->grad.empty()) return std::vector<double>(impl_->data.size(), 0.0);
  return impl_->grad;
}

std::span<double> Tensor::mutable_grad() {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
  return impl_->grad;
}

Tensor Tensor::detach() const {
  return Tensor(impl_->shape, impl_->data, false);
}

Tensor make_tensor(std::shared_ptr<TensorImpl> impl) {
  Tensor t;
  t.impl_ = std::move(impl);
  return t;
}

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

Tape Tape::collect(const Tensor& root) {
  Tape tape;
  std::unordered_set<const TensorImpl*> seen;
  // Iterative post-order DFS; recursion would overflow on long chains.
  std::vector<std::pair<std::shared_ptr<TensorImpl>, std::size_t>> stack;
  stack.emplace_back(root.impl(), 0);
  seen.insert(root.impl().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    const auto& producer = node->producer;
    if (producer && next < producer->inputs.size()) {
      auto child = producer->inputs[next++];
      if (child->requires_grad && seen.insert(child.get()).second) {
        stack.emplace_back(std::move(child), 0);
      }
      continue;
    }
    tape.order_.push_back(node);
    stack.pop_back();
  }
  return tape;
}

std::size_t Tape::node_count() const {
  std::size_t n = 0;
  for (const auto& t : order_) n += t->producer ? 1 : 0;
  return n;
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " +
                        (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
  }
  if (!loss.requires_grad()) {
    throw ContractError("backward() on a loss that does not depend on any requires_grad tensor");
  }
  Tape tape = Tape::collect(loss);
  const auto& order = tape.tensors();
  for (const auto& t : order) {
    if (t->producer) t->grad.assign(t->data.size(), 0.0);
  }
  auto& root = *loss.impl();
  if (root.grad.empty()) root.grad.assign(1, 0.0);
  if (root.producer) {
    root.grad[0] = 1.0;
  } else {
    root.grad[0] += 1.0;
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto& t = *it;
    if (t->producer && t->producer->backward) t->producer->backward(t->grad);
  }
}

}  // namespace timrl
