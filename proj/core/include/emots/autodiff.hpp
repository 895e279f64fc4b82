#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "emots/tensor.hpp"

namespace emots {

// A named learnable tensor. `grad` always has the shape of `value` and is
// accumulated into by Graph::backward.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(Tensor::zeros_like(value)) {}

  void zero_grad() { grad.zero(); }
};

// Handle to a node on a Graph's tape.
struct Var {
  std::uint32_t id = 0;
};

// Reverse-mode autodiff tape over Tensor-valued nodes. One Graph instance
// records one forward pass; backward() populates Parameter gradients and
// clears the tape. Never shared across threads.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var leaf(Tensor value);
  Var constant(double v) { return leaf(Tensor::scalar(v)); }
  // Binds a parameter leaf; repeated calls with the same parameter on the
  // same graph return the same node so gradients accumulate across uses.
  Var param(Parameter& p);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  std::size_t node_count() const { return nodes_.size(); }

  // y = W x + b-less matrix-vector product; W is (m x n), x is (n).
  Var matvec(Var w, Var x);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise
  Var scale(Var a, double c);
  Var add_n(std::span<const Var> xs);
  Var concat(std::span<const Var> xs);  // rank-1 concatenation
  Var concat(Var a, Var b);
  Var slice(Var x, std::size_t offset, std::size_t len);
  Var tanh(Var x);
  Var sigmoid(Var x);
  Var relu(Var x);
  Var softmax(Var x);  // whole rank-1 vector
  Var dot(Var a, Var b);  // flattened inner product -> scalar
  Var sum(Var x);         // -> scalar
  Var broadcast(Var s, std::size_t n);  // scalar -> n-vector
  Var div_by(Var a, Var s);             // a / scalar s
  // -log softmax(logits)[target]; logits rank-1.
  Var cross_entropy_with_logits(Var logits, std::size_t target);

  // Seeds d(loss)=1, sweeps the tape in reverse, adds leaf gradients into
  // their bound Parameters, then clears the tape. Loss must be scalar.
  void backward(Var loss);

  void clear();

 private:
  enum class Op : std::uint8_t {
    kLeaf, kMatVec, kAdd, kSub, kMul, kScale, kAddN, kConcatN, kSlice,
    kTanh, kSigmoid, kRelu, kSoftmax, kDot, kSum, kBroadcast, kDivByScalar,
    kCrossEntropy,
  };

  struct Node {
    Tensor value;
    Tensor grad;  // allocated on first touch during backward
    Parameter* bound = nullptr;
    Op op = Op::kLeaf;
    std::uint32_t a = 0, b = 0;
    std::uint32_t pool_begin = 0, pool_count = 0;
    std::uint32_t aux = 0;
    double c = 0.0;
  };

  Var push(Node node);
  Tensor& grad_of(std::uint32_t id);
  void backprop_node(std::uint32_t id);

  std::vector<Node> nodes_;
  std::vector<std::uint32_t> pool_;
  std::unordered_map<const Parameter*, std::uint32_t> bound_;
};

using VarSeq = std::vector<Var>;  // one Var per timestep

// One leaf Var per row of a T x d tensor.
VarSeq leaf_rows(Graph& g, const Tensor& values);

}  // namespace emots
