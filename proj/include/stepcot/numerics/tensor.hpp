// SPDX-License-Identifier: Apache-2.0
#pragma once

// Dense f64 tensors with a dynamic reverse-mode graph.
//
// A Tensor is a shared handle: copies alias the same storage, which is how
// parameters are shared between a model and its optimizer. Operations on
// tensors that require gradients record their inputs and a backward closure;
// Tensor::backward() replays those closures in reverse topological order.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace stepcot {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until a gradient is accumulated
  bool requires_grad = false;

  // Graph edges, only populated for op outputs built while grad mode is on.
  const char* op = nullptr;
  std::vector<std::shared_ptr<TensorImpl>> parents;
  std::function<void(TensorImpl&)> backward_fn;

  std::span<double> grad_buffer();  // allocates zeros on first use
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor scalar(double v) { return Tensor(Shape{}, std::vector<double>{v}); }
  static Tensor vector(std::initializer_list<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t dim() const { return shape().size(); }
  std::size_t size(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  std::span<double> mutable_data();
  std::vector<double> to_vector() const;
  double item() const;
  double at(std::size_t i) const;
  double at(std::size_t i, std::size_t j) const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool on);
  bool has_grad() const;
  /// Accumulated gradient; zeros when none has been accumulated yet.
  std::vector<double> grad() const;
  std::span<const double> grad_view() const;
  void zero_grad();

  /// Runs reverse-mode accumulation from this scalar (seed 1.0).
  void backward() const;

  /// Value copy that does not participate in the graph.
  Tensor detach() const;
  Tensor clone() const;

  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

  detail::TensorImpl* impl() const { return impl_.get(); }
  const std::shared_ptr<detail::TensorImpl>& impl_ptr() const { return impl_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<detail::TensorImpl> impl_;

  friend Tensor make_op_result(const char*, Shape, std::vector<double>,
                               std::vector<Tensor>, std::function<void(detail::TensorImpl&)>);
};

/// Whether new op results record graph edges (thread-local, default on).
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Builds the result of a differentiable op. The backward closure receives the
/// output node (its grad is populated) and must accumulate into the parents'
/// grad buffers, in the order given by `inputs`. Parents that do not require
/// grad are still passed but their buffers should be skipped.
Tensor make_op_result(const char* op, Shape shape, std::vector<double> data,
                      std::vector<Tensor> inputs,
                      std::function<void(detail::TensorImpl&)> backward_fn);

}  // namespace stepcot
