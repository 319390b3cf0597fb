// Copyright (c) 2026 the vdc authors.
// SPDX-License-Identifier: Apache-2.0

#include "vdc/tensor.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

#include "vdc/fastmath.hpp"

#ifdef VDC_USE_CBLAS
#include <cblas.h>
#endif

namespace vdc {

namespace {

std::atomic<Dtype> g_default_dtype{Dtype::F64};
std::atomic<bool> g_checked{true};

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error("vdc: " + msg); }

[[noreturn]] void fail_shape(const char* op, const Shape& a, const Shape& b) {
  throw std::invalid_argument("vdc: shape mismatch in op '" + std::string(op) + "': " +
                              shape_str(a) + " vs " + shape_str(b));
}

void finalize(detail::Node& n) {
  if (n.dtype == Dtype::F32) {
    for (auto& v : n.values) v = double(float(v));
  }
  if (g_checked.load(std::memory_order_relaxed)) {
    for (double v : n.values) {
      if (!std::isfinite(v)) fail("non-finite value produced by op '" + std::string(n.op) + "'");
    }
  }
}

std::shared_ptr<detail::Node> new_leaf(Shape shape, std::vector<double> values, Dtype dtype,
                                       bool requires_grad) {
  if (values.size() != shape_size(shape)) {
    fail("leaf value count does not match shape " + shape_str(shape));
  }
  auto n = std::make_shared<detail::Node>();
  n->shape = std::move(shape);
  n->values = std::move(values);
  n->dtype = dtype;
  n->requires_grad = requires_grad;
  n->leaf = true;
  finalize(*n);
  return n;
}

}  // namespace

size_t shape_size(const Shape& s) {
  size_t n = 1;
  for (size_t d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ")";
  return os.str();
}

Dtype default_dtype() { return g_default_dtype.load(std::memory_order_relaxed); }
void set_default_dtype(Dtype d) { g_default_dtype.store(d, std::memory_order_relaxed); }
bool checked_mode() { return g_checked.load(std::memory_order_relaxed); }
void set_checked_mode(bool on) { g_checked.store(on, std::memory_order_relaxed); }

namespace detail {

double* grad_buffer(Node& n) {
  if (n.grad.empty()) n.grad.assign(n.values.size(), 0.0);
  return n.grad.data();
}

Tensor wrap_node_impl(std::shared_ptr<Node> n);

Tensor make_node(const char* op, Shape shape, std::vector<double> values,
                 std::vector<Tensor> parents, std::function<void(Node&)> backward_fn) {
  if (values.size() != shape_size(shape)) {
    fail(std::string(op) + ": value count does not match shape " + shape_str(shape));
  }
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->values = std::move(values);
  n->op = op;
  n->leaf = false;
  bool any_parent = false, all_f32 = true, needs_grad = false;
  for (const Tensor& p : parents) {
    if (!p.defined()) fail(std::string(op) + ": undefined parent tensor");
    any_parent = true;
    const auto& pn = unwrap(p);
    needs_grad = needs_grad || pn->requires_grad;
    all_f32 = all_f32 && pn->dtype == Dtype::F32;
  }
  n->dtype = any_parent ? (all_f32 ? Dtype::F32 : Dtype::F64) : default_dtype();
  n->requires_grad = needs_grad;
  if (needs_grad) {
    n->parents.reserve(parents.size());
    for (const Tensor& p : parents) n->parents.push_back(unwrap(p));
    n->backward_fn = std::move(backward_fn);
  }
  finalize(*n);
  return wrap_node_impl(std::move(n));
}

}  // namespace detail

Tensor wrap_node(std::shared_ptr<detail::Node> n) {
  Tensor t;
  t.node_ = std::move(n);
  return t;
}

const std::shared_ptr<detail::Node>& unwrap(const Tensor& t) {
  if (!t.defined()) fail("use of an undefined tensor");
  return t.node_;
}

namespace detail {
Tensor wrap_node_impl(std::shared_ptr<Node> n) { return wrap_node(std::move(n)); }
}  // namespace detail

// ---------------------------------------------------------------------------
// Tensor basics

Tensor Tensor::zeros(Shape shape, Dtype dtype) {
  size_t n = shape_size(shape);
  return wrap_node(new_leaf(std::move(shape), std::vector<double>(n, 0.0), dtype, false));
}

Tensor Tensor::full(Shape shape, double value, Dtype dtype) {
  size_t n = shape_size(shape);
  return wrap_node(new_leaf(std::move(shape), std::vector<double>(n, value), dtype, false));
}

Tensor Tensor::scalar(double value, Dtype dtype) {
  return wrap_node(new_leaf(Shape{1}, {value}, dtype, false));
}

Tensor Tensor::constant(Shape shape, std::vector<double> values, Dtype dtype) {
  return wrap_node(new_leaf(std::move(shape), std::move(values), dtype, false));
}

Tensor Tensor::variable(Shape shape, std::vector<double> values, Dtype dtype) {
  return wrap_node(new_leaf(std::move(shape), std::move(values), dtype, true));
}

const Shape& Tensor::shape() const { return unwrap(*this)->shape; }
size_t Tensor::size() const { return unwrap(*this)->values.size(); }
Dtype Tensor::dtype() const { return unwrap(*this)->dtype; }
bool Tensor::requires_grad() const { return unwrap(*this)->requires_grad; }
bool Tensor::is_leaf() const { return unwrap(*this)->leaf; }
const char* Tensor::op_name() const { return unwrap(*this)->op; }

std::span<const double> Tensor::values() const {
  const auto& n = unwrap(*this);
  return {n->values.data(), n->values.size()};
}

double Tensor::scalar_value() const {
  const auto& n = unwrap(*this);
  if (n->values.size() != 1) fail("scalar_value on tensor of shape " + shape_str(n->shape));
  return n->values[0];
}

std::span<double> Tensor::mutable_values() {
  const auto& n = unwrap(*this);
  if (!n->leaf) fail("mutable_values is only allowed on leaf tensors (op '" + std::string(n->op) + "')");
  return {n->values.data(), n->values.size()};
}

bool Tensor::has_grad() const { return !unwrap(*this)->grad.empty(); }

std::span<const double> Tensor::grad() const {
  const auto& n = unwrap(*this);
  if (n->grad.empty()) fail("tensor has no accumulated gradient");
  return {n->grad.data(), n->grad.size()};
}

void Tensor::zero_grad() { unwrap(*this)->grad.clear(); }

void Tensor::set_requires_grad(bool on) {
  const auto& n = unwrap(*this);
  if (!n->leaf) fail("set_requires_grad is only allowed on leaf tensors");
  n->requires_grad = on;
}

Tensor Tensor::clone() const {
  const auto& n = unwrap(*this);
  return wrap_node(new_leaf(n->shape, n->values, n->dtype, n->requires_grad));
}

Tensor Tensor::detach() const {
  const auto& n = unwrap(*this);
  return wrap_node(new_leaf(n->shape, n->values, n->dtype, false));
}

// ---------------------------------------------------------------------------
// Elementwise binary ops with limited broadcasting

namespace {

enum class Map : uint8_t { Full, Scalar, Row, Col };

struct BinPlan {
  size_t rows = 0, cols = 0;  // output extent as (rows, cols)
  Map a = Map::Full, b = Map::Full;
  Shape out_shape;
};

bool is_row_of(const Shape& s, size_t cols) {
  return (s.size() == 1 && s[0] == cols) || (s.size() == 2 && s[0] == 1 && s[1] == cols);
}

bool is_col_of(const Shape& s, size_t rows) {
  return s.size() == 2 && s[0] == rows && s[1] == 1;
}

BinPlan resolve_bin(const char* op, const Shape& sa, const Shape& sb) {
  BinPlan p;
  if (sa == sb) {
    p.rows = 1;
    p.cols = shape_size(sa);
    p.out_shape = sa;
    return p;
  }
  if (shape_size(sb) == 1) {
    p.rows = 1;
    p.cols = shape_size(sa);
    p.b = Map::Scalar;
    p.out_shape = sa;
    return p;
  }
  if (shape_size(sa) == 1) {
    p.rows = 1;
    p.cols = shape_size(sb);
    p.a = Map::Scalar;
    p.out_shape = sb;
    return p;
  }
  if (sa.size() == 2) {
    if (is_row_of(sb, sa[1])) {
      p.rows = sa[0];
      p.cols = sa[1];
      p.b = Map::Row;
      p.out_shape = sa;
      return p;
    }
    if (is_col_of(sb, sa[0])) {
      p.rows = sa[0];
      p.cols = sa[1];
      p.b = Map::Col;
      p.out_shape = sa;
      return p;
    }
  }
  if (sb.size() == 2) {
    if (is_row_of(sa, sb[1])) {
      p.rows = sb[0];
      p.cols = sb[1];
      p.a = Map::Row;
      p.out_shape = sb;
      return p;
    }
    if (is_col_of(sa, sb[0])) {
      p.rows = sb[0];
      p.cols = sb[1];
      p.a = Map::Col;
      p.out_shape = sb;
      return p;
    }
  }
  fail_shape(op, sa, sb);
}

inline size_t map_index(Map m, size_t i, size_t j, size_t cols) {
  switch (m) {
    case Map::Full: return i * cols + j;
    case Map::Scalar: return 0;
    case Map::Row: return j;
    case Map::Col: return i;
  }
  return 0;
}

enum class BinKind { Add, Sub, Mul, Div };

template <class F>
std::vector<double> bin_forward(const BinPlan& p, const double* a, const double* b, F f) {
  std::vector<double> out(p.rows * p.cols);
  if (p.a == Map::Full && p.b == Map::Full) {
    size_t n = out.size();
    for (size_t i = 0; i < n; ++i) out[i] = f(a[i], b[i]);
  } else if (p.a == Map::Full && p.b == Map::Scalar) {
    size_t n = out.size();
    double bv = b[0];
    for (size_t i = 0; i < n; ++i) out[i] = f(a[i], bv);
  } else if (p.a == Map::Scalar && p.b == Map::Full) {
    size_t n = out.size();
    double av = a[0];
    for (size_t i = 0; i < n; ++i) out[i] = f(av, b[i]);
  } else if (p.a == Map::Full && p.b == Map::Row) {
    for (size_t i = 0; i < p.rows; ++i) {
      const double* ar = a + i * p.cols;
      double* orow = out.data() + i * p.cols;
      for (size_t j = 0; j < p.cols; ++j) orow[j] = f(ar[j], b[j]);
    }
  } else {
    for (size_t i = 0; i < p.rows; ++i) {
      for (size_t j = 0; j < p.cols; ++j) {
        out[i * p.cols + j] =
            f(a[map_index(p.a, i, j, p.cols)], b[map_index(p.b, i, j, p.cols)]);
      }
    }
  }
  return out;
}

Tensor binary_op(const char* op, BinKind kind, const Tensor& a, const Tensor& b) {
  const auto& na = unwrap(a);
  const auto& nb = unwrap(b);
  BinPlan plan = resolve_bin(op, na->shape, nb->shape);
  const double* av = na->values.data();
  const double* bv = nb->values.data();
  std::vector<double> out;
  switch (kind) {
    case BinKind::Add: out = bin_forward(plan, av, bv, [](double x, double y) { return x + y; }); break;
    case BinKind::Sub: out = bin_forward(plan, av, bv, [](double x, double y) { return x - y; }); break;
    case BinKind::Mul: out = bin_forward(plan, av, bv, [](double x, double y) { return x * y; }); break;
    case BinKind::Div: out = bin_forward(plan, av, bv, [](double x, double y) { return x / y; }); break;
  }
  auto pa = na;
  auto pb = nb;
  return detail::make_node(op, plan.out_shape, std::move(out), {a, b},
                           [plan, kind, pa, pb](detail::Node& self) {
    const double* g = self.grad.data();
    const double* avv = pa->values.data();
    const double* bvv = pb->values.data();
    size_t cols = plan.cols;
    if (pa->requires_grad) {
      double* ga = detail::grad_buffer(*pa);
      for (size_t i = 0; i < plan.rows; ++i) {
        for (size_t j = 0; j < cols; ++j) {
          size_t oi = i * cols + j;
          size_t ia = map_index(plan.a, i, j, cols);
          double contrib = 0.0;
          switch (kind) {
            case BinKind::Add:
            case BinKind::Sub: contrib = g[oi]; break;
            case BinKind::Mul: contrib = g[oi] * bvv[map_index(plan.b, i, j, cols)]; break;
            case BinKind::Div: contrib = g[oi] / bvv[map_index(plan.b, i, j, cols)]; break;
          }
          ga[ia] += contrib;
        }
      }
    }
    if (pb->requires_grad) {
      double* gb = detail::grad_buffer(*pb);
      for (size_t i = 0; i < plan.rows; ++i) {
        for (size_t j = 0; j < cols; ++j) {
          size_t oi = i * cols + j;
          size_t ib = map_index(plan.b, i, j, cols);
          double contrib = 0.0;
          switch (kind) {
            case BinKind::Add: contrib = g[oi]; break;
            case BinKind::Sub: contrib = -g[oi]; break;
            case BinKind::Mul: contrib = g[oi] * avv[map_index(plan.a, i, j, cols)]; break;
            case BinKind::Div: {
              double d = bvv[ib];
              contrib = -g[oi] * avv[map_index(plan.a, i, j, cols)] / (d * d);
              break;
            }
          }
          gb[ib] += contrib;
        }
      }
    }
  });
}

Tensor scalar_like(const Tensor& ref, double v) { return Tensor::scalar(v, ref.dtype()); }

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary_op("add", BinKind::Add, a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary_op("sub", BinKind::Sub, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary_op("mul", BinKind::Mul, a, b); }
Tensor div(const Tensor& a, const Tensor& b) { return binary_op("div", BinKind::Div, a, b); }

Tensor operator+(const Tensor& a, double b) { return add(a, scalar_like(a, b)); }
Tensor operator+(double a, const Tensor& b) { return add(scalar_like(b, a), b); }
Tensor operator-(const Tensor& a, double b) { return sub(a, scalar_like(a, b)); }
Tensor operator-(double a, const Tensor& b) { return sub(scalar_like(b, a), b); }
Tensor operator*(const Tensor& a, double b) { return mul(a, scalar_like(a, b)); }
Tensor operator*(double a, const Tensor& b) { return mul(scalar_like(b, a), b); }
Tensor operator/(const Tensor& a, double b) { return div(a, scalar_like(a, b)); }
Tensor operator/(double a, const Tensor& b) { return div(scalar_like(b, a), b); }

// ---------------------------------------------------------------------------
// Unary ops

Tensor neg(const Tensor& x) {
  const auto& nx = unwrap(x);
  std::vector<double> out(nx->values.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = -nx->values[i];
  auto px = nx;
  return detail::make_node("neg", nx->shape, std::move(out), {x}, [px](detail::Node& self) {
    if (!px->requires_grad) return;
    double* g = detail::grad_buffer(*px);
    for (size_t i = 0; i < self.grad.size(); ++i) g[i] -= self.grad[i];
  });
}

Tensor exp(const Tensor& x) {
  const auto& nx = unwrap(x);
  std::vector<double> out(nx->values.size());
  fastmath::exp_batch(nx->values.data(), out.data(), out.size());
  auto px = nx;
  return detail::make_node("exp", nx->shape, std::move(out), {x}, [px](detail::Node& self) {
    if (!px->requires_grad) return;
    double* g = detail::grad_buffer(*px);
    for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * self.values[i];
  });
}

Tensor log(const Tensor& x) {
  const auto& nx = unwrap(x);
  std::vector<double> out(nx->values.size());
  for (size_t i = 0; i < out.size(); ++i) {
    double v = nx->values[i];
    if (checked_mode() && v <= 0.0) {
      throw std::domain_error("vdc: log of non-positive input in op 'log'");
    }
    out[i] = std::log(v);
  }
  auto px = nx;
  return detail::make_node("log", nx->shape, std::move(out), {x}, [px](detail::Node& self) {
    if (!px->requires_grad) return;
    double* g = detail::grad_buffer(*px);
    for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] / px->values[i];
  });
}

Tensor sqrt(const Tensor& x) {
  const auto& nx = unwrap(x);
  std::vector<double> out(nx->values.size());
  for (size_t i = 0; i < out.size(); ++i) {
    double v = nx->values[i];
    if (checked_mode() && v < 0.0) {
      throw std::domain_error("vdc: sqrt of negative input in op 'sqrt'");
    }
    out[i] = std::sqrt(v);
  }
  auto px = nx;
  return detail::make_node("sqrt", nx->shape, std::move(out), {x}, [px](detail::Node& self) {
    if (!px->requires_grad) return;
    double* g = detail::grad_buffer(*px);
    for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] / (2.0 * self.values[i]);
  });
}

Tensor abs(const Tensor& x) {
  const auto& nx = unwrap(x);
  std::vector<double> out(nx->values.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::abs(nx->values[i]);
  auto px = nx;
  return detail::make_node("abs", nx->shape, std::move(out), {x}, [px](detail::Node& self) {
    if (!px->requires_grad) return;
    double* g = detail::grad_buffer(*px);
    for (size_t i = 0; i < self.grad.size(); ++i) {
      double v = px->values[i];
      g[i] += self.grad[i] * (v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0));
    }
  });
}

Tensor sigmoid(const Tensor& x) {
  const auto& nx = unwrap(x);
  std::vector<double> out(nx->values.size());
  fastmath::sigmoid_batch(nx->values.data(), out.data(), out.size());
  auto px = nx;
  return detail::make_node("sigmoid", nx->shape, std::move(out), {x}, [px](detail::Node& self) {
    if (!px->requires_grad) return;
    double* g = detail::grad_buffer(*px);
    for (size_t i = 0; i < self.grad.size(); ++i) {
      double s = self.values[i];
      g[i] += self.grad[i] * s * (1.0 - s);
    }
  });
}

Tensor softplus(const Tensor& x) {
  const auto& nx = unwrap(x);
  std::vector<double> out(nx->values.size());
  std::vector<double> deriv;
  bool want_deriv = nx->requires_grad;
  if (want_deriv) deriv.resize(out.size());
  fastmath::softplus_batch(nx->values.data(), out.data(), want_deriv ? deriv.data() : nullptr,
                           out.size());
  auto px = nx;
  return detail::make_node("softplus", nx->shape, std::move(out), {x},
                           [px, deriv = std::move(deriv)](detail::Node& self) {
    if (!px->requires_grad) return;
    double* g = detail::grad_buffer(*px);
    for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * deriv[i];
  });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  if (!(lo <= hi)) fail("clamp: lo > hi");
  const auto& nx = unwrap(x);
  std::vector<double> out(nx->values.size());
  for (size_t i = 0; i < out.size(); ++i) {
    double v = nx->values[i];
    out[i] = v < lo ? lo : (v > hi ? hi : v);
  }
  auto px = nx;
  return detail::make_node("clamp", nx->shape, std::move(out), {x},
                           [px, lo, hi](detail::Node& self) {
    if (!px->requires_grad) return;
    double* g = detail::grad_buffer(*px);
    for (size_t i = 0; i < self.grad.size(); ++i) {
      double v = px->values[i];
      if (v > lo && v < hi) g[i] += self.grad[i];
    }
  });
}

Tensor binary_entropy(const Tensor& x) {
  const auto& nx = unwrap(x);
  std::vector<double> out(nx->values.size());
  for (size_t i = 0; i < out.size(); ++i) {
    double v = nx->values[i];
    if (checked_mode() && (v < 0.0 || v > 1.0)) {
      throw std::domain_error("vdc: input outside [0,1] in op 'binary_entropy'");
    }
    out[i] = (v > 0.0 && v < 1.0) ? -(v * std::log(v) + (1.0 - v) * std::log(1.0 - v)) : 0.0;
  }
  auto px = nx;
  return detail::make_node("binary_entropy", nx->shape, std::move(out), {x},
                           [px](detail::Node& self) {
    if (!px->requires_grad) return;
    double* g = detail::grad_buffer(*px);
    for (size_t i = 0; i < self.grad.size(); ++i) {
      double v = px->values[i];
      if (v > 0.0 && v < 1.0) g[i] += self.grad[i] * std::log((1.0 - v) / v);
    }
  });
}

// ---------------------------------------------------------------------------
// Matrix multiply

namespace {

#ifdef VDC_USE_CBLAS
thread_local std::vector<float> g_f32_a, g_f32_b, g_f32_c;

void to_f32(const double* x, std::vector<float>& buf, size_t n) {
  buf.resize(n);
  for (size_t i = 0; i < n; ++i) buf[i] = float(x[i]);
}
#endif

// C (M x N) = op(A) @ op(B) [+ C if accumulate]; row-major.
void gemm(bool f32, bool trans_a, bool trans_b, size_t m, size_t n, size_t k, const double* a,
          const double* b, double* c, bool accumulate) {
#ifdef VDC_USE_CBLAS
  size_t lda = trans_a ? m : k;
  size_t ldb = trans_b ? k : n;
  if (f32) {
    to_f32(a, g_f32_a, m * k);
    to_f32(b, g_f32_b, k * n);
    g_f32_c.assign(m * n, 0.0f);
    cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans, int(m), int(n), int(k), 1.0f,
                g_f32_a.data(), int(lda), g_f32_b.data(), int(ldb), 0.0f, g_f32_c.data(), int(n));
    if (accumulate) {
      for (size_t i = 0; i < m * n; ++i) c[i] += double(g_f32_c[i]);
    } else {
      for (size_t i = 0; i < m * n; ++i) c[i] = double(g_f32_c[i]);
    }
  } else {
    cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans, int(m), int(n), int(k), 1.0, a, int(lda), b,
                int(ldb), accumulate ? 1.0 : 0.0, c, int(n));
  }
#else
  (void)f32;
  if (!accumulate) std::memset(c, 0, m * n * sizeof(double));
  auto ai = [&](size_t i, size_t p) { return trans_a ? p * m + i : i * k + p; };
  auto bi = [&](size_t p, size_t j) { return trans_b ? j * k + p : p * n + j; };
  for (size_t i = 0; i < m; ++i) {
    for (size_t p = 0; p < k; ++p) {
      double av = a[ai(i, p)];
      double* crow = c + i * n;
      for (size_t j = 0; j < n; ++j) crow[j] += av * b[bi(p, j)];
    }
  }
#endif
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  const auto& na = unwrap(a);
  const auto& nb = unwrap(b);
  if (na->shape.size() != 2 || nb->shape.size() != 2 || na->shape[1] != nb->shape[0]) {
    fail_shape("matmul", na->shape, nb->shape);
  }
  size_t m = na->shape[0], k = na->shape[1], n = nb->shape[1];
  bool f32 = na->dtype == Dtype::F32 && nb->dtype == Dtype::F32;
  std::vector<double> out(m * n);
  gemm(f32, false, false, m, n, k, na->values.data(), nb->values.data(), out.data(), false);
  auto pa = na;
  auto pb = nb;
  return detail::make_node("matmul", {m, n}, std::move(out), {a, b},
                           [pa, pb, m, n, k, f32](detail::Node& self) {
    const double* g = self.grad.data();
    if (pa->requires_grad) {
      gemm(f32, false, true, m, k, n, g, pb->values.data(), detail::grad_buffer(*pa), true);
    }
    if (pb->requires_grad) {
      gemm(f32, true, false, k, n, m, pa->values.data(), g, detail::grad_buffer(*pb), true);
    }
  });
}

// ---------------------------------------------------------------------------
// Reductions and structure ops

Tensor sum(const Tensor& x) {
  const auto& nx = unwrap(x);
  double s = 0.0;
  for (double v : nx->values) s += v;
  auto px = nx;
  return detail::make_node("sum", {1}, {s}, {x}, [px](detail::Node& self) {
    if (!px->requires_grad) return;
    double* g = detail::grad_buffer(*px);
    double g0 = self.grad[0];
    for (size_t i = 0; i < px->values.size(); ++i) g[i] += g0;
  });
}

Tensor mean(const Tensor& x) {
  const auto& nx = unwrap(x);
  if (nx->values.empty()) fail("mean of empty tensor");
  double s = 0.0;
  for (double v : nx->values) s += v;
  double inv_n = 1.0 / double(nx->values.size());
  auto px = nx;
  return detail::make_node("mean", {1}, {s * inv_n}, {x}, [px, inv_n](detail::Node& self) {
    if (!px->requires_grad) return;
    double* g = detail::grad_buffer(*px);
    double g0 = self.grad[0] * inv_n;
    for (size_t i = 0; i < px->values.size(); ++i) g[i] += g0;
  });
}

Tensor sum_axis(const Tensor& x, int axis) {
  const auto& nx = unwrap(x);
  if (nx->shape.size() != 2 || (axis != 0 && axis != 1)) {
    fail("sum_axis expects a rank-2 tensor and axis 0 or 1, got " + shape_str(nx->shape));
  }
  size_t rows = nx->shape[0], cols = nx->shape[1];
  const double* v = nx->values.data();
  std::vector<double> out;
  Shape out_shape;
  if (axis == 1) {
    out.assign(rows, 0.0);
    for (size_t i = 0; i < rows; ++i) {
      double s = 0.0;
      const double* r = v + i * cols;
      for (size_t j = 0; j < cols; ++j) s += r[j];
      out[i] = s;
    }
    out_shape = {rows, 1};
  } else {
    out.assign(cols, 0.0);
    for (size_t i = 0; i < rows; ++i) {
      const double* r = v + i * cols;
      for (size_t j = 0; j < cols; ++j) out[j] += r[j];
    }
    out_shape = {1, cols};
  }
  auto px = nx;
  return detail::make_node("sum_axis", out_shape, std::move(out), {x},
                           [px, rows, cols, axis](detail::Node& self) {
    if (!px->requires_grad) return;
    double* g = detail::grad_buffer(*px);
    const double* go = self.grad.data();
    for (size_t i = 0; i < rows; ++i) {
      for (size_t j = 0; j < cols; ++j) g[i * cols + j] += go[axis == 1 ? i : j];
    }
  });
}

Tensor cumsum_exclusive(const Tensor& x) {
  const auto& nx = unwrap(x);
  if (nx->shape.size() != 2) {
    fail("cumsum_exclusive expects a rank-2 tensor, got " + shape_str(nx->shape));
  }
  size_t rows = nx->shape[0], cols = nx->shape[1];
  std::vector<double> out(rows * cols);
  const double* v = nx->values.data();
  for (size_t i = 0; i < rows; ++i) {
    double run = 0.0;
    for (size_t j = 0; j < cols; ++j) {
      out[i * cols + j] = run;
      run += v[i * cols + j];
    }
  }
  auto px = nx;
  return detail::make_node("cumsum_exclusive", nx->shape, std::move(out), {x},
                           [px, rows, cols](detail::Node& self) {
    if (!px->requires_grad) return;
    double* g = detail::grad_buffer(*px);
    const double* go = self.grad.data();
    // d y[i,k] / d x[i,j] = 1 for k > j: reverse exclusive suffix sums.
    for (size_t i = 0; i < rows; ++i) {
      double run = 0.0;
      for (size_t j = cols; j-- > 0;) {
        g[i * cols + j] += run;
        run += go[i * cols + j];
      }
    }
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  const auto& nx = unwrap(x);
  if (shape_size(shape) != nx->values.size()) {
    fail("reshape from " + shape_str(nx->shape) + " to incompatible " + shape_str(shape));
  }
  auto px = nx;
  return detail::make_node("reshape", std::move(shape), nx->values, {x},
                           [px](detail::Node& self) {
    if (!px->requires_grad) return;
    double* g = detail::grad_buffer(*px);
    for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor slice_cols(const Tensor& x, size_t c0, size_t c1) {
  const auto& nx = unwrap(x);
  if (nx->shape.size() != 2 || c0 >= c1 || c1 > nx->shape[1]) {
    fail("slice_cols [" + std::to_string(c0) + "," + std::to_string(c1) + ") of " +
         shape_str(nx->shape));
  }
  size_t rows = nx->shape[0], cols = nx->shape[1], w = c1 - c0;
  std::vector<double> out(rows * w);
  const double* v = nx->values.data();
  for (size_t i = 0; i < rows; ++i) {
    std::memcpy(out.data() + i * w, v + i * cols + c0, w * sizeof(double));
  }
  auto px = nx;
  return detail::make_node("slice_cols", {rows, w}, std::move(out), {x},
                           [px, rows, cols, c0, w](detail::Node& self) {
    if (!px->requires_grad) return;
    double* g = detail::grad_buffer(*px);
    const double* go = self.grad.data();
    for (size_t i = 0; i < rows; ++i) {
      for (size_t j = 0; j < w; ++j) g[i * cols + c0 + j] += go[i * w + j];
    }
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) fail("concat_cols of zero tensors");
  size_t rows = 0, total = 0;
  for (size_t p = 0; p < parts.size(); ++p) {
    const auto& n = unwrap(parts[p]);
    if (n->shape.size() != 2) fail("concat_cols expects rank-2 tensors");
    if (p == 0) rows = n->shape[0];
    if (n->shape[0] != rows) fail_shape("concat_cols", unwrap(parts[0])->shape, n->shape);
    total += n->shape[1];
  }
  std::vector<double> out(rows * total);
  size_t off = 0;
  std::vector<size_t> offsets(parts.size());
  std::vector<size_t> widths(parts.size());
  for (size_t p = 0; p < parts.size(); ++p) {
    const auto& n = unwrap(parts[p]);
    size_t w = n->shape[1];
    offsets[p] = off;
    widths[p] = w;
    for (size_t i = 0; i < rows; ++i) {
      std::memcpy(out.data() + i * total + off, n->values.data() + i * w, w * sizeof(double));
    }
    off += w;
  }
  std::vector<Tensor> parent_ts(parts.begin(), parts.end());
  std::vector<std::shared_ptr<detail::Node>> pnodes;
  for (const Tensor& t : parts) pnodes.push_back(unwrap(t));
  return detail::make_node("concat_cols", {rows, total}, std::move(out), std::move(parent_ts),
                           [pnodes, rows, total, offsets, widths](detail::Node& self) {
    const double* go = self.grad.data();
    for (size_t p = 0; p < pnodes.size(); ++p) {
      if (!pnodes[p]->requires_grad) continue;
      double* g = detail::grad_buffer(*pnodes[p]);
      size_t w = widths[p], off = offsets[p];
      for (size_t i = 0; i < rows; ++i) {
        for (size_t j = 0; j < w; ++j) g[i * w + j] += go[i * total + off + j];
      }
    }
  });
}

Tensor gather_rows(const Tensor& x, std::vector<uint32_t> rows_idx) {
  const auto& nx = unwrap(x);
  if (nx->shape.size() != 2) fail("gather_rows expects a rank-2 tensor");
  size_t rows = nx->shape[0], cols = nx->shape[1];
  for (uint32_t r : rows_idx) {
    if (r >= rows) fail("gather_rows index " + std::to_string(r) + " out of range");
  }
  std::vector<double> out(rows_idx.size() * cols);
  for (size_t i = 0; i < rows_idx.size(); ++i) {
    std::memcpy(out.data() + i * cols, nx->values.data() + size_t(rows_idx[i]) * cols,
                cols * sizeof(double));
  }
  auto px = nx;
  size_t n_out = rows_idx.size();
  return detail::make_node("gather_rows", {n_out, cols}, std::move(out), {x},
                           [px, cols, idx = std::move(rows_idx)](detail::Node& self) {
    if (!px->requires_grad) return;
    double* g = detail::grad_buffer(*px);
    const double* go = self.grad.data();
    for (size_t i = 0; i < idx.size(); ++i) {
      double* dst = g + size_t(idx[i]) * cols;
      const double* src = go + i * cols;
      for (size_t j = 0; j < cols; ++j) dst[j] += src[j];
    }
  });
}

Tensor broadcast_rows(const Tensor& x, size_t n) {
  const auto& nx = unwrap(x);
  size_t cols = 0;
  if (nx->shape.size() == 1) {
    cols = nx->shape[0];
  } else if (nx->shape.size() == 2 && nx->shape[0] == 1) {
    cols = nx->shape[1];
  } else {
    fail("broadcast_rows expects shape (C) or (1,C), got " + shape_str(nx->shape));
  }
  std::vector<double> out(n * cols);
  for (size_t i = 0; i < n; ++i) {
    std::memcpy(out.data() + i * cols, nx->values.data(), cols * sizeof(double));
  }
  auto px = nx;
  return detail::make_node("broadcast_rows", {n, cols}, std::move(out), {x},
                           [px, n, cols](detail::Node& self) {
    if (!px->requires_grad) return;
    double* g = detail::grad_buffer(*px);
    const double* go = self.grad.data();
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < cols; ++j) g[j] += go[i * cols + j];
    }
  });
}

// ---------------------------------------------------------------------------
// Backward sweep

void backward(const Tensor& output) {
  const auto& out = unwrap(output);
  if (out->values.size() != 1) {
    throw std::invalid_argument("vdc: backward requires a scalar output, got shape " +
                                shape_str(out->shape));
  }
  if (out->consumed) fail("backward called twice on a consumed tape");
  out->consumed = true;
  if (!out->requires_grad) return;

  static std::atomic<uint32_t> stamp_counter{0};
  uint32_t stamp = ++stamp_counter;

  std::vector<detail::Node*> order;
  std::vector<std::pair<detail::Node*, size_t>> stack;
  out->visit_stamp = stamp;
  stack.emplace_back(out.get(), 0);
  while (!stack.empty()) {
    auto& top = stack.back();
    detail::Node* n = top.first;
    if (!n->leaf && n->requires_grad && !n->backward_fn) {
      fail("backward reached a graph region already consumed by a previous backward");
    }
    if (top.second < n->parents.size()) {
      detail::Node* p = n->parents[top.second++].get();
      if (p->visit_stamp != stamp && p->requires_grad) {
        p->visit_stamp = stamp;
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  out->grad.assign(1, 1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->backward_fn) {
      if (n->grad.empty()) n->grad.assign(n->values.size(), 0.0);
      n->backward_fn(*n);
    }
  }
  // Consume the tape: drop closures and parent links so intermediates free up.
  for (detail::Node* n : order) {
    if (!n->leaf) {
      n->backward_fn = nullptr;
      n->parents.clear();
    }
  }
}

}  // namespace vdc
