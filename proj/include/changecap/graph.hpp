#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "changecap/tensor.hpp"

namespace ccap {

enum class Op : uint8_t {
  Leaf,
  Matmul,
  Add,
  Sub,
  Mul,
  ScalarMul,
  Relu,
  Softmax,
  LayerNorm,
  Mean,
  Sum,
  Concat,
  Transpose,
  Reshape,
  Embedding,
  Exp,
  Log,
  Square,
  Sqrt,
};

const char* op_name(Op op);

class Graph;

// Cheap handle to a node owned by a Graph.
class Var {
 public:
  Var() = default;
  const Tensor& value() const;
  const Tensor& grad() const;  // valid after Graph::backward
  bool requires_grad() const;
  const Shape& shape() const;
  int32_t id() const { return id_; }

 private:
  friend class Graph;
  Var(Graph* g, int32_t id) : g_(g), id_(id) {}
  Graph* g_ = nullptr;
  int32_t id_ = -1;
};

// Define-by-run tape: nodes are appended in topological order as primitives
// execute and the tape is rebuilt for every forward pass. Single-threaded
// per graph; the kernels underneath may parallelize within one op.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var leaf(Tensor value, bool requires_grad = false);

  Var matmul(Var a, Var b);
  // addition of equal shapes, or of a rank-1 bias over the last axis
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scalar_mul(Var a, double s);
  Var relu(Var a);
  Var softmax(Var a, int axis);
  Var layer_norm(Var a, double eps = 1e-5);  // over the last axis, no affine
  Var mean(Var a, int axis);
  Var sum(Var a, int axis);
  Var sum_all(Var a);
  Var concat(const std::vector<Var>& xs, int axis);
  Var transpose(Var a);
  Var reshape(Var a, Shape s);
  Var embedding(Var table, std::vector<int32_t> ids);
  Var exp(Var a);
  Var log(Var a);
  Var square(Var a);
  Var sqrt(Var a);

  // Populates grad for every requires_grad node reachable from loss;
  // unreachable requires_grad leaves read back as zero. One call per tape.
  void backward(Var loss);

  bool backward_done() const { return backward_done_; }
  size_t size() const { return nodes_.size(); }

 private:
  friend class Var;
  struct Node {
    Op op = Op::Leaf;
    std::vector<int32_t> inputs;
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool grad_set = false;
    int axis = 0;
    double scalar = 0.0;
    Shape saved_shape;             // reshape: input shape
    std::vector<int32_t> ids;      // embedding lookup indices
  };

  Var push(Node n, const char* name);
  Node& node(Var v);
  const Node& cnode(Var v) const;
  void check_same_graph(Var v) const;
  Tensor& grad_buffer(int32_t id);
  void backward_node(int32_t id);

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

// Max over all input coordinates of |analytic - central difference| /
// max(1, |central difference|) for a scalar-valued tensor function.
using TensorFn = std::function<Var(Graph&, const std::vector<Var>&)>;
double grad_check(const TensorFn& f, const std::vector<Tensor>& inputs, double eps);

}  // namespace ccap
