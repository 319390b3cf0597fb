// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace vdc {

// Storage precision of a tensor. Values are held in doubles either way;
// F32 rounds every op result through float so an optimization run gets
// genuine single-precision numbers (and single-precision gemm) while the
// op kernels stay single-sourced. F64 is the reference mode used by the
// test suite and all finite-difference checks.
enum class Dtype : uint8_t { F32 = 1, F64 = 2 };

Dtype default_dtype();
void set_default_dtype(Dtype d);

// When enabled (the default), every op scans its result and aborts with the
// op name on NaN/Inf, and log/sqrt reject out-of-domain inputs.
bool checked_mode();
void set_checked_mode(bool on);

using Shape = std::vector<size_t>;

size_t shape_size(const Shape& s);
std::string shape_str(const Shape& s);

class Tensor;

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // allocated on first accumulation
  Dtype dtype = Dtype::F64;
  bool requires_grad = false;
  bool leaf = true;
  bool consumed = false;  // backward() already ran through this node
  const char* op = "leaf";
  uint32_t visit_stamp = 0;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad, accumulates into parents' grad buffers.
  std::function<void(Node&)> backward_fn;
};

double* grad_buffer(Node& n);  // zero-initialized on first call

}  // namespace detail

// Dense row-major tensor with reverse-mode autodiff. Tensor is a cheap
// handle sharing its node; clone() makes an independent leaf. Graphs are
// built on the fly by the free-function ops and torn down by backward(),
// which consumes the tape (a second backward over the same output throws).
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, Dtype dtype);
  static Tensor zeros(Shape shape) { return zeros(std::move(shape), default_dtype()); }
  static Tensor full(Shape shape, double value, Dtype dtype);
  static Tensor full(Shape shape, double value) { return full(std::move(shape), value, default_dtype()); }
  static Tensor scalar(double value, Dtype dtype);
  static Tensor scalar(double value) { return scalar(value, default_dtype()); }
  // Leaf constant (no gradient tracking).
  static Tensor constant(Shape shape, std::vector<double> values, Dtype dtype);
  static Tensor constant(Shape shape, std::vector<double> values) {
    return constant(std::move(shape), std::move(values), default_dtype());
  }
  // Leaf with requires_grad set: an optimizable parameter.
  static Tensor variable(Shape shape, std::vector<double> values, Dtype dtype);
  static Tensor variable(Shape shape, std::vector<double> values) {
    return variable(std::move(shape), std::move(values), default_dtype());
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  size_t rank() const { return shape().size(); }
  size_t size() const;
  Dtype dtype() const;
  bool requires_grad() const;
  bool is_leaf() const;
  const char* op_name() const;

  std::span<const double> values() const;
  double value(size_t i) const { return values()[i]; }
  // The single element of a size-1 tensor.
  double scalar_value() const;
  // Leaf-only in-place access (optimizer updates, finite differences).
  std::span<double> mutable_values();

  bool has_grad() const;
  std::span<const double> grad() const;  // throws if no grad accumulated
  void zero_grad();
  void set_requires_grad(bool on);  // leaf only

  // Deep copy as an independent leaf (keeps requires_grad).
  Tensor clone() const;
  // Same values, new constant leaf without a grad path.
  Tensor detach() const;

 private:
  friend Tensor wrap_node(std::shared_ptr<detail::Node> n);
  friend const std::shared_ptr<detail::Node>& unwrap(const Tensor& t);
  std::shared_ptr<detail::Node> node_;
};

// Internal: node-level access for custom ops in other core modules.
Tensor wrap_node(std::shared_ptr<detail::Node> n);
const std::shared_ptr<detail::Node>& unwrap(const Tensor& t);

namespace detail {
// Custom-op entry point used by the sampling / conv / rendering modules.
// backward_fn may be empty when no parent requires grad.
Tensor make_node(const char* op, Shape shape, std::vector<double> values,
                 std::vector<Tensor> parents,
                 std::function<void(Node&)> backward_fn);
}  // namespace detail

// Elementwise binary ops. Shapes must match exactly, or one operand is a
// scalar, or (for rank-2 tensors) one operand is a broadcastable (1,C) row /
// (N,1) column / rank-1 (C) row.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
Tensor operator+(const Tensor& a, double b);
Tensor operator+(double a, const Tensor& b);
Tensor operator-(const Tensor& a, double b);
Tensor operator-(double a, const Tensor& b);
Tensor operator*(const Tensor& a, double b);
Tensor operator*(double a, const Tensor& b);
Tensor operator/(const Tensor& a, double b);
Tensor operator/(double a, const Tensor& b);

Tensor neg(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor sqrt(const Tensor& x);
Tensor abs(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor softplus(const Tensor& x);
Tensor clamp(const Tensor& x, double lo, double hi);
// -(x ln x + (1-x) ln(1-x)) elementwise with 0 ln 0 := 0; derivative is 0 at
// the endpoints.
Tensor binary_entropy(const Tensor& x);

Tensor matmul(const Tensor& a, const Tensor& b);  // (M,K) @ (K,N)

Tensor sum(const Tensor& x);   // -> shape {1}
Tensor mean(const Tensor& x);  // -> shape {1}
// Rank-2 only. axis 0 -> (1,C), axis 1 -> (N,1).
Tensor sum_axis(const Tensor& x, int axis);
// Rank-2, along axis 1: y[i,k] = sum_{j<k} x[i,j].
Tensor cumsum_exclusive(const Tensor& x);

Tensor reshape(const Tensor& x, Shape shape);
Tensor slice_cols(const Tensor& x, size_t c0, size_t c1);  // [c0, c1)
Tensor concat_cols(std::span<const Tensor> parts);
Tensor gather_rows(const Tensor& x, std::vector<uint32_t> rows);
// (1,C) or (C) -> (n,C).
Tensor broadcast_rows(const Tensor& x, size_t n);

// Reverse-mode sweep from a scalar output; writes grads into every
// requires_grad leaf that feeds it, then consumes the tape.
void backward(const Tensor& output);

}  // namespace vdc
