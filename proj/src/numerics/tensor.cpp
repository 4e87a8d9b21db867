// SPDX-License-Identifier: Apache-2.0
#include "stepcot/numerics/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace stepcot {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

std::span<double> detail::TensorImpl::grad_buffer() {
  if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  return grad;
}

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }
NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor::Tensor(Shape shape, double fill)
    : impl_(std::make_shared<detail::TensorImpl>()) {
  impl_->data.assign(shape_numel(shape), fill);
  impl_->shape = std::move(shape);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : impl_(std::make_shared<detail::TensorImpl>()) {
  if (shape_numel(shape) != data.size())
    throw std::invalid_argument("Tensor: shape " + shape_str(shape) + " does not match " +
                                std::to_string(data.size()) + " values");
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor(Shape{values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
  return Tensor(Shape{rows, cols}, std::move(data));
}

const Shape& Tensor::shape() const {
  if (!impl_) throw std::logic_error("Tensor: undefined tensor");
  return impl_->shape;
}

std::size_t Tensor::size(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size())
    throw std::out_of_range("Tensor::size: axis " + std::to_string(axis) + " out of range for " +
                            shape_str(s));
  return s[axis];
}

std::size_t Tensor::numel() const { return shape_numel(shape()); }
std::span<const double> Tensor::data() const { return impl_->data; }
std::span<double> Tensor::mutable_data() { return impl_->data; }
std::vector<double> Tensor::to_vector() const { return impl_->data; }

double Tensor::item() const {
  if (numel() != 1)
    throw std::invalid_argument("Tensor::item: tensor of shape " + shape_str(shape()) +
                                " is not a scalar");
  return impl_->data[0];
}

double Tensor::at(std::size_t i) const { return impl_->data.at(i); }

double Tensor::at(std::size_t i, std::size_t j) const {
  if (dim() != 2) throw std::invalid_argument("Tensor::at(i, j) needs a matrix");
  return impl_->data.at(i * impl_->shape[1] + j);
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool on) {
  impl_->requires_grad = on;
  return *this;
}

bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

std::vector<double> Tensor::grad() const {
  if (impl_->grad.empty()) return std::vector<double>(impl_->data.size(), 0.0);
  return impl_->grad;
}

std::span<const double> Tensor::grad_view() const { return impl_->grad; }

void Tensor::zero_grad() {
  if (impl_) impl_->grad.clear();
}

void Tensor::backward() const {
  if (numel() != 1)
    throw std::invalid_argument("backward: output of shape " + shape_str(shape()) +
                                " is not a scalar");
  if (!impl_->requires_grad) return;

  // Iterative post-order DFS gives a topological order without recursion
  // depth limits on long recurrent graphs.
  std::vector<detail::TensorImpl*> order;
  std::unordered_set<detail::TensorImpl*> seen;
  std::vector<std::pair<detail::TensorImpl*, std::size_t>> stack{{impl_.get(), 0}};
  seen.insert(impl_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::TensorImpl* p = node->parents[next++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  impl_->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::TensorImpl* node = *it;
    if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
  }
}

Tensor Tensor::detach() const { return Tensor(impl_->shape, impl_->data); }

Tensor Tensor::clone() const {
  Tensor t(impl_->shape, impl_->data);
  t.impl_->requires_grad = impl_->requires_grad;
  return t;
}

Tensor make_op_result(const char* op, Shape shape, std::vector<double> data,
                      std::vector<Tensor> inputs,
                      std::function<void(detail::TensorImpl&)> backward_fn) {
  Tensor out(std::move(shape), std::move(data));
  bool needs = false;
  if (grad_enabled())
    needs = std::any_of(inputs.begin(), inputs.end(),
                        [](const Tensor& t) { return t.requires_grad(); });
  out.impl_->op = op;
  if (needs) {
    out.impl_->requires_grad = true;
    out.impl_->parents.reserve(inputs.size());
    for (auto& t : inputs) out.impl_->parents.push_back(t.impl_);
    out.impl_->backward_fn = std::move(backward_fn);
  }
  return out;
}

}  // namespace stepcot
