#include "changecap/graph.hpp"

#include <cmath>
#include <cstring>

#include "changecap/kernels.hpp"

namespace ccap {

const char* op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Matmul: return "matmul";
    case Op::Add: return "add";
    case Op::Sub: return "subtract";
    case Op::Mul: return "elementwise-multiply";
    case Op::ScalarMul: return "scalar-multiply";
    case Op::Relu: return "relu";
    case Op::Softmax: return "softmax-over-axis";
    case Op::LayerNorm: return "layer-normalize";
    case Op::Mean: return "mean-over-axis";
    case Op::Sum: return "sum-over-axis";
    case Op::Concat: return "concat-over-axis";
    case Op::Transpose: return "transpose";
    case Op::Reshape: return "reshape";
    case Op::Embedding: return "embedding-lookup";
    case Op::Exp: return "exponential";
    case Op::Log: return "logarithm";
    case Op::Square: return "square";
    case Op::Sqrt: return "square-root";
  }
  return "?";
}

const Tensor& Var::value() const { return g_->cnode(*this).value; }

const Tensor& Var::grad() const {
  if (!g_->backward_done()) throw StateError("grad requested before backward ran");
  return g_->grad_buffer(id_);
}

bool Var::requires_grad() const { return g_->cnode(*this).requires_grad; }

const Shape& Var::shape() const { return g_->cnode(*this).value.shape; }

Graph::Node& Graph::node(Var v) { return nodes_[static_cast<size_t>(v.id_)]; }
const Graph::Node& Graph::cnode(Var v) const { return nodes_[static_cast<size_t>(v.id_)]; }

void Graph::check_same_graph(Var v) const {
  if (v.g_ != this || v.id_ < 0 || v.id_ >= static_cast<int32_t>(nodes_.size()))
    throw ContractError("variable does not belong to this graph");
}

Tensor& Graph::grad_buffer(int32_t id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (!n.grad_set) {
    n.grad = Tensor::zeros(n.value.shape.empty() ? Shape{} : n.value.shape);
    if (n.value.shape.empty()) n.grad = Tensor::scalar(0.0);
    n.grad_set = true;
  }
  return n.grad;
}

Var Graph::push(Node n, const char* name) {
  if (backward_done_)
    throw StateError("tape already consumed by backward; build a new graph for the next forward");
  for (int32_t in : n.inputs) {
    if (nodes_[static_cast<size_t>(in)].requires_grad) {
      n.requires_grad = true;
      break;
    }
  }
  if (!n.value.all_finite())
    throw NumericError(std::string("non-finite output of ") + name);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int32_t>(nodes_.size() - 1));
}

Var Graph::leaf(Tensor value, bool requires_grad) {
  if (!value.all_finite()) throw NumericError("non-finite leaf tensor");
  Node n;
  n.op = Op::Leaf;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int32_t>(nodes_.size() - 1));
}

namespace {

void require_rank(const Tensor& t, int64_t r, const char* op) {
  if (t.rank() != r)
    throw ShapeError(std::string(op) + " needs rank-" + std::to_string(r) + " input, got " +
                     shape_str(t.shape));
}

int check_axis(const Tensor& t, int axis, const char* op) {
  if (t.rank() == 0 || axis < 0 || axis >= t.rank())
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) +
                     " out of range for shape " + shape_str(t.shape));
  return axis;
}

// decompose shape around an axis: (outer, len, inner)
struct AxisSplit {
  int64_t outer = 1, len = 1, inner = 1;
};
AxisSplit split_axis(const Shape& s, int axis) {
  AxisSplit a;
  for (int i = 0; i < axis; ++i) a.outer *= s[static_cast<size_t>(i)];
  a.len = s[static_cast<size_t>(axis)];
  for (size_t i = static_cast<size_t>(axis) + 1; i < s.size(); ++i) a.inner *= s[i];
  return a;
}

}  // namespace

Var Graph::matmul(Var a, Var b) {
  check_same_graph(a);
  check_same_graph(b);
  const Tensor& A = cnode(a).value;
  const Tensor& B = cnode(b).value;
  require_rank(A, 2, "matmul");
  require_rank(B, 2, "matmul");
  if (A.cols() != B.rows())
    throw ShapeError("matmul: inner dimensions differ, " + shape_str(A.shape) + " x " +
                     shape_str(B.shape));
  Node n;
  n.op = Op::Matmul;
  n.inputs = {a.id_, b.id_};
  n.value = Tensor::zeros({A.rows(), B.cols()});
  kern::matmul(A.data.data(), B.data.data(), n.value.data.data(), A.rows(), A.cols(), B.cols());
  return push(std::move(n), "matmul");
}

Var Graph::add(Var a, Var b) {
  check_same_graph(a);
  check_same_graph(b);
  const Tensor& A = cnode(a).value;
  const Tensor& B = cnode(b).value;
  const bool bias = !same_shape(A, B);
  if (bias) {
    if (!(A.rank() >= 2 && B.rank() == 1 && B.shape[0] == A.shape.back()))
      throw ShapeError("add: shapes " + shape_str(A.shape) + " and " + shape_str(B.shape) +
                       " neither match nor form a last-axis bias");
  }
  Node n;
  n.op = Op::Add;
  n.inputs = {a.id_, b.id_};
  n.axis = bias ? 1 : 0;
  n.value = Tensor::zeros(A.shape);
  if (bias) {
    const int64_t cols = B.shape[0];
    const int64_t rows = A.numel() / cols;
    for (int64_t i = 0; i < rows; ++i)
      kern::add(A.data.data() + i * cols, B.data.data(), n.value.data.data() + i * cols, cols);
  } else {
    kern::add(A.data.data(), B.data.data(), n.value.data.data(), A.numel());
  }
  return push(std::move(n), "add");
}

Var Graph::sub(Var a, Var b) {
  check_same_graph(a);
  check_same_graph(b);
  const Tensor& A = cnode(a).value;
  const Tensor& B = cnode(b).value;
  if (!same_shape(A, B))
    throw ShapeError("subtract: shapes differ, " + shape_str(A.shape) + " vs " +
                     shape_str(B.shape));
  Node n;
  n.op = Op::Sub;
  n.inputs = {a.id_, b.id_};
  n.value = Tensor::zeros(A.shape);
  kern::sub(A.data.data(), B.data.data(), n.value.data.data(), A.numel());
  return push(std::move(n), "subtract");
}

Var Graph::mul(Var a, Var b) {
  check_same_graph(a);
  check_same_graph(b);
  const Tensor& A = cnode(a).value;
  const Tensor& B = cnode(b).value;
  if (!same_shape(A, B))
    throw ShapeError("elementwise-multiply: shapes differ, " + shape_str(A.shape) + " vs " +
                     shape_str(B.shape));
  Node n;
  n.op = Op::Mul;
  n.inputs = {a.id_, b.id_};
  n.value = Tensor::zeros(A.shape);
  kern::mul(A.data.data(), B.data.data(), n.value.data.data(), A.numel());
  return push(std::move(n), "elementwise-multiply");
}

Var Graph::scalar_mul(Var a, double s) {
  check_same_graph(a);
  const Tensor& A = cnode(a).value;
  Node n;
  n.op = Op::ScalarMul;
  n.inputs = {a.id_};
  n.scalar = s;
  n.value = Tensor::zeros(A.shape);
  if (A.shape.empty()) n.value = Tensor::scalar(0.0);
  kern::scale(A.data.data(), n.value.data.data(), s, A.numel());
  return push(std::move(n), "scalar-multiply");
}

Var Graph::relu(Var a) {
  check_same_graph(a);
  const Tensor& A = cnode(a).value;
  Node n;
  n.op = Op::Relu;
  n.inputs = {a.id_};
  n.value = Tensor::zeros(A.shape);
  if (A.shape.empty()) n.value = Tensor::scalar(0.0);
  kern::relu(A.data.data(), n.value.data.data(), A.numel());
  return push(std::move(n), "relu");
}

Var Graph::softmax(Var a, int axis) {
  check_same_graph(a);
  const Tensor& A = cnode(a).value;
  check_axis(A, axis, "softmax-over-axis");
  Node n;
  n.op = Op::Softmax;
  n.inputs = {a.id_};
  n.axis = axis;
  n.value = Tensor::zeros(A.shape);
  const AxisSplit sp = split_axis(A.shape, axis);
  if (sp.inner == 1) {
    kern::softmax_rows(A.data.data(), n.value.data.data(), sp.outer, sp.len);
  } else {
    std::vector<double> row(static_cast<size_t>(sp.len)), out(static_cast<size_t>(sp.len));
    for (int64_t o = 0; o < sp.outer; ++o) {
      for (int64_t i = 0; i < sp.inner; ++i) {
        const int64_t base = o * sp.len * sp.inner + i;
        for (int64_t j = 0; j < sp.len; ++j) row[static_cast<size_t>(j)] = A.data[static_cast<size_t>(base + j * sp.inner)];
        kern::serial::softmax_rows(row.data(), out.data(), 1, sp.len);
        for (int64_t j = 0; j < sp.len; ++j) n.value.data[static_cast<size_t>(base + j * sp.inner)] = out[static_cast<size_t>(j)];
      }
    }
  }
  return push(std::move(n), "softmax-over-axis");
}

Var Graph::layer_norm(Var a, double eps) {
  check_same_graph(a);
  const Tensor& A = cnode(a).value;
  if (A.rank() < 1) throw ShapeError("layer-normalize needs rank >= 1");
  Node n;
  n.op = Op::LayerNorm;
  n.inputs = {a.id_};
  n.scalar = eps;
  n.value = Tensor::zeros(A.shape);
  const int64_t cols = A.shape.back();
  kern::layer_norm_rows(A.data.data(), n.value.data.data(), A.numel() / cols, cols, eps);
  return push(std::move(n), "layer-normalize");
}

Var Graph::mean(Var a, int axis) {
  check_same_graph(a);
  const Tensor& A = cnode(a).value;
  check_axis(A, axis, "mean-over-axis");
  Node n;
  n.op = Op::Mean;
  n.inputs = {a.id_};
  n.axis = axis;
  Shape out = A.shape;
  out.erase(out.begin() + axis);
  n.value = out.empty() ? Tensor::scalar(0.0) : Tensor::zeros(out);
  const AxisSplit sp = split_axis(A.shape, axis);
  const double inv = 1.0 / static_cast<double>(sp.len);
  for (int64_t o = 0; o < sp.outer; ++o) {
    for (int64_t i = 0; i < sp.inner; ++i) {
      double acc = 0.0;
      for (int64_t j = 0; j < sp.len; ++j)
        acc += A.data[static_cast<size_t>((o * sp.len + j) * sp.inner + i)];
      n.value.data[static_cast<size_t>(o * sp.inner + i)] = acc * inv;
    }
  }
  return push(std::move(n), "mean-over-axis");
}

Var Graph::sum(Var a, int axis) {
  check_same_graph(a);
  const Tensor& A = cnode(a).value;
  check_axis(A, axis, "sum-over-axis");
  Node n;
  n.op = Op::Sum;
  n.inputs = {a.id_};
  n.axis = axis;
  Shape out = A.shape;
  out.erase(out.begin() + axis);
  n.value = out.empty() ? Tensor::scalar(0.0) : Tensor::zeros(out);
  const AxisSplit sp = split_axis(A.shape, axis);
  for (int64_t o = 0; o < sp.outer; ++o) {
    for (int64_t i = 0; i < sp.inner; ++i) {
      double acc = 0.0;
      for (int64_t j = 0; j < sp.len; ++j)
        acc += A.data[static_cast<size_t>((o * sp.len + j) * sp.inner + i)];
      n.value.data[static_cast<size_t>(o * sp.inner + i)] = acc;
    }
  }
  return push(std::move(n), "sum-over-axis");
}

Var Graph::sum_all(Var a) {
  check_same_graph(a);
  const int64_t ne = cnode(a).value.numel();
  return sum(reshape(a, {ne}), 0);
}

Var Graph::concat(const std::vector<Var>& xs, int axis) {
  if (xs.empty()) throw ContractError("concat-over-axis needs at least one input");
  for (Var v : xs) check_same_graph(v);
  const Tensor& first = cnode(xs[0]).value;
  check_axis(first, axis, "concat-over-axis");
  Shape out = first.shape;
  int64_t total = first.shape[static_cast<size_t>(axis)];
  for (size_t i = 1; i < xs.size(); ++i) {
    const Tensor& t = cnode(xs[i]).value;
    if (t.rank() != first.rank())
      throw ShapeError("concat-over-axis: rank mismatch, " + shape_str(first.shape) + " vs " +
                       shape_str(t.shape));
    for (int d = 0; d < first.rank(); ++d) {
      if (d == axis) continue;
      if (t.shape[static_cast<size_t>(d)] != first.shape[static_cast<size_t>(d)])
        throw ShapeError("concat-over-axis: shapes " + shape_str(first.shape) + " and " +
                         shape_str(t.shape) + " differ off-axis");
    }
    total += t.shape[static_cast<size_t>(axis)];
  }
  out[static_cast<size_t>(axis)] = total;
  Node n;
  n.op = Op::Concat;
  n.axis = axis;
  for (Var v : xs) n.inputs.push_back(v.id_);
  n.value = Tensor::zeros(out);
  const AxisSplit osp = split_axis(out, axis);
  int64_t offset = 0;  // running offset along the axis
  for (Var v : xs) {
    const Tensor& t = cnode(v).value;
    const int64_t len = t.shape[static_cast<size_t>(axis)];
    for (int64_t o = 0; o < osp.outer; ++o) {
      const double* src = t.data.data() + o * len * osp.inner;
      double* dst = n.value.data.data() + (o * osp.len + offset) * osp.inner;
      std::memcpy(dst, src, sizeof(double) * static_cast<size_t>(len * osp.inner));
    }
    offset += len;
  }
  return push(std::move(n), "concat-over-axis");
}

Var Graph::transpose(Var a) {
  check_same_graph(a);
  const Tensor& A = cnode(a).value;
  require_rank(A, 2, "transpose");
  Node n;
  n.op = Op::Transpose;
  n.inputs = {a.id_};
  n.value = Tensor::zeros({A.cols(), A.rows()});
  for (int64_t i = 0; i < A.rows(); ++i)
    for (int64_t j = 0; j < A.cols(); ++j) n.value.at(j, i) = A.at(i, j);
  return push(std::move(n), "transpose");
}

Var Graph::reshape(Var a, Shape s) {
  check_same_graph(a);
  const Tensor& A = cnode(a).value;
  if (shape_numel(s) != A.numel())
    throw ShapeError("reshape: cannot view " + shape_str(A.shape) + " as " + shape_str(s));
  Node n;
  n.op = Op::Reshape;
  n.inputs = {a.id_};
  n.saved_shape = A.shape;
  n.value.shape = std::move(s);
  n.value.data = A.data;
  return push(std::move(n), "reshape");
}

Var Graph::embedding(Var table, std::vector<int32_t> ids) {
  check_same_graph(table);
  const Tensor& T = cnode(table).value;
  require_rank(T, 2, "embedding-lookup");
  const int64_t vocab = T.rows();
  const int64_t width = T.cols();
  for (int32_t id : ids) {
    if (id < 0 || id >= vocab)
      throw IndexError("embedding-lookup: token id " + std::to_string(id) +
                       " outside table of " + std::to_string(vocab) + " rows");
  }
  Node n;
  n.op = Op::Embedding;
  n.inputs = {table.id_};
  n.ids = std::move(ids);
  n.value = Tensor::zeros({static_cast<int64_t>(n.ids.size()), width});
  for (size_t t = 0; t < n.ids.size(); ++t) {
    std::memcpy(n.value.data.data() + t * static_cast<size_t>(width),
                T.data.data() + static_cast<size_t>(n.ids[t]) * static_cast<size_t>(width),
                sizeof(double) * static_cast<size_t>(width));
  }
  return push(std::move(n), "embedding-lookup");
}

#define CCAP_UNARY(fname, opid, kernel)                       \
  Var Graph::fname(Var a) {                                   \
    check_same_graph(a);                                      \
    const Tensor& A = cnode(a).value;                         \
    Node n;                                                   \
    n.op = opid;                                              \
    n.inputs = {a.id_};                                       \
    n.value = A.shape.empty() ? Tensor::scalar(0.0) : Tensor::zeros(A.shape); \
    kern::kernel(A.data.data(), n.value.data.data(), A.numel()); \
    return push(std::move(n), op_name(opid));                 \
  }

CCAP_UNARY(exp, Op::Exp, exp)
CCAP_UNARY(log, Op::Log, log)
CCAP_UNARY(square, Op::Square, square)
CCAP_UNARY(sqrt, Op::Sqrt, sqrt)
#undef CCAP_UNARY

void Graph::backward(Var loss) {
  check_same_graph(loss);
  if (backward_done_)
    throw StateError("backward already ran on this graph; run a new forward first");
  if (cnode(loss).value.numel() != 1)
    throw ContractError("backward needs a scalar loss, got shape " +
                        shape_str(cnode(loss).value.shape));
  backward_done_ = true;
  Tensor& seed = grad_buffer(loss.id_);
  seed.data[0] = 1.0;
  for (int32_t id = loss.id_; id >= 0; --id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (!n.requires_grad || !n.grad_set) continue;
    backward_node(id);
  }
}

void Graph::backward_node(int32_t id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  const Tensor& g = n.grad;
  auto in_val = [&](int k) -> const Tensor& {
    return nodes_[static_cast<size_t>(n.inputs[static_cast<size_t>(k)])].value;
  };
  auto in_rg = [&](int k) {
    return nodes_[static_cast<size_t>(n.inputs[static_cast<size_t>(k)])].requires_grad;
  };
  auto in_grad = [&](int k) -> Tensor& { return grad_buffer(n.inputs[static_cast<size_t>(k)]); };

  switch (n.op) {
    case Op::Leaf:
      break;
    case Op::Matmul: {
      const Tensor& A = in_val(0);
      const Tensor& B = in_val(1);
      if (in_rg(0)) {
        Tensor tmp = Tensor::zeros(A.shape);
        kern::matmul_bt(g.data.data(), B.data.data(), tmp.data.data(), A.rows(), B.cols(),
                        A.cols());
        kern::axpy(1.0, tmp.data.data(), in_grad(0).data.data(), A.numel());
      }
      if (in_rg(1)) {
        Tensor tmp = Tensor::zeros(B.shape);
        kern::matmul_at(A.data.data(), g.data.data(), tmp.data.data(), A.rows(), A.cols(),
                        B.cols());
        kern::axpy(1.0, tmp.data.data(), in_grad(1).data.data(), B.numel());
      }
      break;
    }
    case Op::Add: {
      if (in_rg(0)) kern::axpy(1.0, g.data.data(), in_grad(0).data.data(), g.numel());
      if (in_rg(1)) {
        if (n.axis == 1) {  // bias over the last axis
          const int64_t cols = in_val(1).numel();
          const int64_t rows = g.numel() / cols;
          Tensor tmp = Tensor::zeros({cols});
          kern::col_sum(g.data.data(), tmp.data.data(), rows, cols);
          kern::axpy(1.0, tmp.data.data(), in_grad(1).data.data(), cols);
        } else {
          kern::axpy(1.0, g.data.data(), in_grad(1).data.data(), g.numel());
        }
      }
      break;
    }
    case Op::Sub: {
      if (in_rg(0)) kern::axpy(1.0, g.data.data(), in_grad(0).data.data(), g.numel());
      if (in_rg(1)) kern::axpy(-1.0, g.data.data(), in_grad(1).data.data(), g.numel());
      break;
    }
    case Op::Mul: {
      if (in_rg(0))
        kern::madd(g.data.data(), in_val(1).data.data(), in_grad(0).data.data(), g.numel());
      if (in_rg(1))
        kern::madd(g.data.data(), in_val(0).data.data(), in_grad(1).data.data(), g.numel());
      break;
    }
    case Op::ScalarMul: {
      if (in_rg(0)) kern::axpy(n.scalar, g.data.data(), in_grad(0).data.data(), g.numel());
      break;
    }
    case Op::Relu: {
      if (in_rg(0)) {
        const Tensor& x = in_val(0);
        Tensor& gx = in_grad(0);
        for (int64_t i = 0; i < g.numel(); ++i)
          if (x.data[static_cast<size_t>(i)] > 0.0)
            gx.data[static_cast<size_t>(i)] += g.data[static_cast<size_t>(i)];
      }
      break;
    }
    case Op::Softmax: {
      if (!in_rg(0)) break;
      const AxisSplit sp = split_axis(in_val(0).shape, n.axis);
      Tensor& gx = in_grad(0);
      if (sp.inner == 1) {
        kern::softmax_rows_backward(n.value.data.data(), g.data.data(), gx.data.data(), sp.outer,
                                    sp.len);
      } else {
        for (int64_t o = 0; o < sp.outer; ++o) {
          for (int64_t i = 0; i < sp.inner; ++i) {
            const int64_t base = o * sp.len * sp.inner + i;
            double dot = 0.0;
            for (int64_t j = 0; j < sp.len; ++j) {
              const size_t idx = static_cast<size_t>(base + j * sp.inner);
              dot += g.data[idx] * n.value.data[idx];
            }
            for (int64_t j = 0; j < sp.len; ++j) {
              const size_t idx = static_cast<size_t>(base + j * sp.inner);
              gx.data[idx] += n.value.data[idx] * (g.data[idx] - dot);
            }
          }
        }
      }
      break;
    }
    case Op::LayerNorm: {
      if (!in_rg(0)) break;
      const Tensor& x = in_val(0);
      const int64_t cols = x.shape.back();
      kern::layer_norm_rows_backward(x.data.data(), g.data.data(), in_grad(0).data.data(),
                                     x.numel() / cols, cols, n.scalar);
      break;
    }
    case Op::Mean:
    case Op::Sum: {
      if (!in_rg(0)) break;
      const AxisSplit sp = split_axis(in_val(0).shape, n.axis);
      const double w = n.op == Op::Mean ? 1.0 / static_cast<double>(sp.len) : 1.0;
      Tensor& gx = in_grad(0);
      for (int64_t o = 0; o < sp.outer; ++o)
        for (int64_t j = 0; j < sp.len; ++j)
          for (int64_t i = 0; i < sp.inner; ++i)
            gx.data[static_cast<size_t>((o * sp.len + j) * sp.inner + i)] +=
                w * g.data[static_cast<size_t>(o * sp.inner + i)];
      break;
    }
    case Op::Concat: {
      const AxisSplit osp = split_axis(n.value.shape, n.axis);
      int64_t offset = 0;
      for (size_t k = 0; k < n.inputs.size(); ++k) {
        const Tensor& t = in_val(static_cast<int>(k));
        const int64_t len = t.shape[static_cast<size_t>(n.axis)];
        if (in_rg(static_cast<int>(k))) {
          Tensor& gx = in_grad(static_cast<int>(k));
          for (int64_t o = 0; o < osp.outer; ++o) {
            const double* src = g.data.data() + (o * osp.len + offset) * osp.inner;
            double* dst = gx.data.data() + o * len * osp.inner;
            kern::axpy(1.0, src, dst, len * osp.inner);
          }
        }
        offset += len;
      }
      break;
    }
    case Op::Transpose: {
      if (!in_rg(0)) break;
      Tensor& gx = in_grad(0);
      const int64_t r = gx.rows(), c = gx.cols();
      for (int64_t i = 0; i < r; ++i)
        for (int64_t j = 0; j < c; ++j) gx.at(i, j) += g.at(j, i);
      break;
    }
    case Op::Reshape: {
      if (in_rg(0)) kern::axpy(1.0, g.data.data(), in_grad(0).data.data(), g.numel());
      break;
    }
    case Op::Embedding: {
      if (!in_rg(0)) break;
      Tensor& gt = in_grad(0);
      const int64_t width = gt.cols();
      for (size_t t = 0; t < n.ids.size(); ++t)
        kern::serial::axpy(1.0, g.data.data() + t * static_cast<size_t>(width),
                           gt.data.data() + static_cast<size_t>(n.ids[t]) * static_cast<size_t>(width),
                           width);
      break;
    }
    case Op::Exp: {
      if (in_rg(0))
        kern::madd(g.data.data(), n.value.data.data(), in_grad(0).data.data(), g.numel());
      break;
    }
    case Op::Log: {
      if (!in_rg(0)) break;
      const Tensor& x = in_val(0);
      Tensor& gx = in_grad(0);
      for (int64_t i = 0; i < g.numel(); ++i)
        gx.data[static_cast<size_t>(i)] +=
            g.data[static_cast<size_t>(i)] / x.data[static_cast<size_t>(i)];
      break;
    }
    case Op::Square: {
      if (!in_rg(0)) break;
      const Tensor& x = in_val(0);
      Tensor& gx = in_grad(0);
      for (int64_t i = 0; i < g.numel(); ++i)
        gx.data[static_cast<size_t>(i)] +=
            2.0 * g.data[static_cast<size_t>(i)] * x.data[static_cast<size_t>(i)];
      break;
    }
    case Op::Sqrt: {
      if (!in_rg(0)) break;
      Tensor& gx = in_grad(0);
      for (int64_t i = 0; i < g.numel(); ++i)
        gx.data[static_cast<size_t>(i)] +=
            0.5 * g.data[static_cast<size_t>(i)] / n.value.data[static_cast<size_t>(i)];
      break;
    }
  }
}

double grad_check(const TensorFn& f, const std::vector<Tensor>& inputs, double eps) {
  if (!(eps > 0.0 && eps <= 1e-3))
    throw ContractError("grad_check eps must lie in (0, 1e-3]");
  for (const Tensor& t : inputs)
    if (!t.all_finite()) throw NumericError("grad_check inputs must be finite");

  std::vector<Tensor> grads;
  {
    Graph g;
    std::vector<Var> vars;
    vars.reserve(inputs.size());
    for (const Tensor& t : inputs) vars.push_back(g.leaf(t, true));
    Var out = f(g, vars);
    if (out.value().numel() != 1)
      throw ContractError("grad_check needs a scalar-valued function");
    g.backward(out);
    for (Var v : vars) grads.push_back(v.grad());
  }

  auto eval = [&](const std::vector<Tensor>& xs) {
    Graph g;
    std::vector<Var> vars;
    vars.reserve(xs.size());
    for (const Tensor& t : xs) vars.push_back(g.leaf(t, false));
    return f(g, vars).value().item();
  };

  double max_err = 0.0;
  std::vector<Tensor> probe = inputs;
  for (size_t i = 0; i < inputs.size(); ++i) {
    for (size_t c = 0; c < probe[i].data.size(); ++c) {
      const double orig = probe[i].data[c];
      probe[i].data[c] = orig + eps;
      const double fp = eval(probe);
      probe[i].data[c] = orig - eps;
      const double fm = eval(probe);
      probe[i].data[c] = orig;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double err = std::abs(grads[i].data[c] - numeric) /
                         std::max(1.0, std::abs(numeric));
      max_err = std::max(max_err, err);
    }
  }
  return max_err;
}

}  // namespace ccap
