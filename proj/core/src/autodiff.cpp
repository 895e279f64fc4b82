#include "emots/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "emots/errors.hpp"

namespace emots {

namespace {

double stable_logsumexp(std::span<const double> xs) {
  double m = xs[0];
  for (double x : xs) m = std::max(m, x);
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

void softmax_into(std::span<const double> in, std::span<double> out) {
  double m = in[0];
  for (double x : in) m = std::max(m, x);
  double s = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = std::exp(in[i] - m);
    s += out[i];
  }
  for (std::size_t i = 0; i < in.size(); ++i) out[i] /= s;
}

}  // namespace

Var Graph::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Graph::leaf(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Graph::param(Parameter& p) {
  auto it = bound_.find(&p);
  if (it != bound_.end()) return Var{it->second};
  Node n;
  n.value = p.value;
  n.bound = &p;
  Var v = push(std::move(n));
  bound_[&p] = v.id;
  return v;
}

Var Graph::matvec(Var w, Var x) {
  const Tensor& W = nodes_[w.id].value;
  const Tensor& X = nodes_[x.id].value;
  require_shape(W.rank() == 2 && X.rank() == 1 && W.cols() == X.size(),
                "matvec: need (m x n) * (n)");
  Node n;
  n.op = Op::kMatVec;
  n.a = w.id;
  n.b = x.id;
  Tensor out = Tensor::zeros({W.rows()});
  for (std::size_t r = 0; r < W.rows(); ++r) {
    double acc = 0.0;
    const double* wrow = W.data().data() + r * W.cols();
    const double* xd = X.data().data();
    for (std::size_t c2 = 0; c2 < W.cols(); ++c2) acc += wrow[c2] * xd[c2];
    out[r] = acc;
  }
  n.value = std::move(out);
  return push(std::move(n));
}

Var Graph::add(Var a, Var b) {
  const Tensor& A = nodes_[a.id].value;
  const Tensor& B = nodes_[b.id].value;
  require_shape(A.same_shape(B), "add: shape mismatch");
  Node n;
  n.op = Op::kAdd;
  n.a = a.id;
  n.b = b.id;
  Tensor out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += B[i];
  n.value = std::move(out);
  return push(std::move(n));
}

Var Graph::sub(Var a, Var b) {
  const Tensor& A = nodes_[a.id].value;
  const Tensor& B = nodes_[b.id].value;
  require_shape(A.same_shape(B), "sub: shape mismatch");
  Node n;
  n.op = Op::kSub;
  n.a = a.id;
  n.b = b.id;
  Tensor out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= B[i];
  n.value = std::move(out);
  return push(std::move(n));
}

Var Graph::mul(Var a, Var b) {
  const Tensor& A = nodes_[a.id].value;
  const Tensor& B = nodes_[b.id].value;
  require_shape(A.same_shape(B), "mul: shape mismatch");
  Node n;
  n.op = Op::kMul;
  n.a = a.id;
  n.b = b.id;
  Tensor out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= B[i];
  n.value = std::move(out);
  return push(std::move(n));
}

Var Graph::scale(Var a, double c) {
  Node n;
  n.op = Op::kScale;
  n.a = a.id;
  n.c = c;
  Tensor out = nodes_[a.id].value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= c;
  n.value = std::move(out);
  return push(std::move(n));
}

Var Graph::add_n(std::span<const Var> xs) {
  require_shape(!xs.empty(), "add_n: empty input");
  if (xs.size() == 1) return xs[0];
  const Tensor& first = nodes_[xs[0].id].value;
  Node n;
  n.op = Op::kAddN;
  n.pool_begin = static_cast<std::uint32_t>(pool_.size());
  n.pool_count = static_cast<std::uint32_t>(xs.size());
  Tensor out = first;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const Tensor& t = nodes_[xs[i].id].value;
    require_shape(t.same_shape(first), "add_n: shape mismatch");
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += t[j];
  }
  for (Var v : xs) pool_.push_back(v.id);
  n.value = std::move(out);
  return push(std::move(n));
}

Var Graph::concat(std::span<const Var> xs) {
  require_shape(!xs.empty(), "concat: empty input");
  std::size_t total = 0;
  for (Var v : xs) {
    require_shape(nodes_[v.id].value.rank() == 1, "concat: rank-1 only");
    total += nodes_[v.id].value.size();
  }
  Node n;
  n.op = Op::kConcatN;
  n.pool_begin = static_cast<std::uint32_t>(pool_.size());
  n.pool_count = static_cast<std::uint32_t>(xs.size());
  Tensor out = Tensor::zeros({total});
  std::size_t off = 0;
  for (Var v : xs) {
    const Tensor& t = nodes_[v.id].value;
    for (std::size_t i = 0; i < t.size(); ++i) out[off + i] = t[i];
    off += t.size();
    pool_.push_back(v.id);
  }
  n.value = std::move(out);
  return push(std::move(n));
}

Var Graph::concat(Var a, Var b) {
  const Var xs[2] = {a, b};
  return concat(std::span<const Var>(xs, 2));
}

Var Graph::slice(Var x, std::size_t offset, std::size_t len) {
  const Tensor& X = nodes_[x.id].value;
  require_shape(X.rank() == 1 && offset + len <= X.size(), "slice: out of range");
  Node n;
  n.op = Op::kSlice;
  n.a = x.id;
  n.aux = static_cast<std::uint32_t>(offset);
  Tensor out = Tensor::zeros({len});
  for (std::size_t i = 0; i < len; ++i) out[i] = X[offset + i];
  n.value = std::move(out);
  return push(std::move(n));
}

Var Graph::tanh(Var x) {
  Node n;
  n.op = Op::kTanh;
  n.a = x.id;
  Tensor out = nodes_[x.id].value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
  n.value = std::move(out);
  return push(std::move(n));
}

Var Graph::sigmoid(Var x) {
  Node n;
  n.op = Op::kSigmoid;
  n.a = x.id;
  Tensor out = nodes_[x.id].value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-out[i]));
  n.value = std::move(out);
  return push(std::move(n));
}

Var Graph::relu(Var x) {
  Node n;
  n.op = Op::kRelu;
  n.a = x.id;
  Tensor out = nodes_[x.id].value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
  n.value = std::move(out);
  return push(std::move(n));
}

Var Graph::softmax(Var x) {
  const Tensor& X = nodes_[x.id].value;
  require_shape(X.rank() == 1 && X.size() >= 1, "softmax: rank-1 input");
  Node n;
  n.op = Op::kSoftmax;
  n.a = x.id;
  Tensor out = Tensor::zeros({X.size()});
  softmax_into(X.data(), out.data());
  n.value = std::move(out);
  return push(std::move(n));
}

Var Graph::dot(Var a, Var b) {
  const Tensor& A = nodes_[a.id].value;
  const Tensor& B = nodes_[b.id].value;
  require_shape(A.size() == B.size(), "dot: size mismatch");
  Node n;
  n.op = Op::kDot;
  n.a = a.id;
  n.b = b.id;
  double acc = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i) acc += A[i] * B[i];
  n.value = Tensor::scalar(acc);
  return push(std::move(n));
}

Var Graph::sum(Var x) {
  Node n;
  n.op = Op::kSum;
  n.a = x.id;
  double acc = 0.0;
  for (double v : nodes_[x.id].value.data()) acc += v;
  n.value = Tensor::scalar(acc);
  return push(std::move(n));
}

Var Graph::broadcast(Var s, std::size_t count) {
  const Tensor& S = nodes_[s.id].value;
  require_shape(S.size() == 1, "broadcast: scalar input");
  Node n;
  n.op = Op::kBroadcast;
  n.a = s.id;
  Tensor out = Tensor::zeros({count});
  out.fill(S[0]);
  n.value = std::move(out);
  return push(std::move(n));
}

Var Graph::div_by(Var a, Var s) {
  const Tensor& A = nodes_[a.id].value;
  const Tensor& S = nodes_[s.id].value;
  require_shape(S.size() == 1, "div_by: scalar divisor");
  Node n;
  n.op = Op::kDivByScalar;
  n.a = a.id;
  n.b = s.id;
  Tensor out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] /= S[0];
  n.value = std::move(out);
  return push(std::move(n));
}

Var Graph::cross_entropy_with_logits(Var logits, std::size_t target) {
  const Tensor& X = nodes_[logits.id].value;
  require_shape(X.rank() == 1 && target < X.size(), "cross_entropy: bad target");
  Node n;
  n.op = Op::kCrossEntropy;
  n.a = logits.id;
  n.aux = static_cast<std::uint32_t>(target);
  n.value = Tensor::scalar(stable_logsumexp(X.data()) - X[target]);
  return push(std::move(n));
}

Tensor& Graph::grad_of(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor::zeros_like(n.value);
  return n.grad;
}

void Graph::backprop_node(std::uint32_t id) {
  Node& n = nodes_[id];
  const Tensor& g = n.grad;
  switch (n.op) {
    case Op::kLeaf:
      break;
    case Op::kMatVec: {
      const Tensor& W = nodes_[n.a].value;
      const Tensor& X = nodes_[n.b].value;
      Tensor& dW = grad_of(n.a);
      Tensor& dX = grad_of(n.b);
      const std::size_t m = W.rows(), k = W.cols();
      for (std::size_t r = 0; r < m; ++r) {
        const double gr = g[r];
        if (gr == 0.0) continue;
        double* dwrow = dW.data().data() + r * k;
        const double* wrow = W.data().data() + r * k;
        for (std::size_t c2 = 0; c2 < k; ++c2) {
          dwrow[c2] += gr * X[c2];
          dX[c2] += gr * wrow[c2];
        }
      }
      break;
    }
    case Op::kAdd: {
      Tensor& da = grad_of(n.a);
      Tensor& db = grad_of(n.b);
      for (std::size_t i = 0; i < g.size(); ++i) {
        da[i] += g[i];
        db[i] += g[i];
      }
      break;
    }
    case Op::kSub: {
      Tensor& da = grad_of(n.a);
      Tensor& db = grad_of(n.b);
      for (std::size_t i = 0; i < g.size(); ++i) {
        da[i] += g[i];
        db[i] -= g[i];
      }
      break;
    }
    case Op::kMul: {
      const Tensor& A = nodes_[n.a].value;
      const Tensor& B = nodes_[n.b].value;
      Tensor& da = grad_of(n.a);
      Tensor& db = grad_of(n.b);
      for (std::size_t i = 0; i < g.size(); ++i) {
        da[i] += g[i] * B[i];
        db[i] += g[i] * A[i];
      }
      break;
    }
    case Op::kScale: {
      Tensor& da = grad_of(n.a);
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += n.c * g[i];
      break;
    }
    case Op::kAddN: {
      for (std::uint32_t k = 0; k < n.pool_count; ++k) {
        Tensor& dp = grad_of(pool_[n.pool_begin + k]);
        for (std::size_t i = 0; i < g.size(); ++i) dp[i] += g[i];
      }
      break;
    }
    case Op::kConcatN: {
      std::size_t off = 0;
      for (std::uint32_t k = 0; k < n.pool_count; ++k) {
        const std::uint32_t pid = pool_[n.pool_begin + k];
        Tensor& dp = grad_of(pid);
        const std::size_t len = nodes_[pid].value.size();
        for (std::size_t i = 0; i < len; ++i) dp[i] += g[off + i];
        off += len;
      }
      break;
    }
    case Op::kSlice: {
      Tensor& da = grad_of(n.a);
      for (std::size_t i = 0; i < g.size(); ++i) da[n.aux + i] += g[i];
      break;
    }
    case Op::kTanh: {
      const Tensor& y = n.value;
      Tensor& da = grad_of(n.a);
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * (1.0 - y[i] * y[i]);
      break;
    }
    case Op::kSigmoid: {
      const Tensor& y = n.value;
      Tensor& da = grad_of(n.a);
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * y[i] * (1.0 - y[i]);
      break;
    }
    case Op::kRelu: {
      const Tensor& x = nodes_[n.a].value;
      Tensor& da = grad_of(n.a);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (x[i] > 0.0) da[i] += g[i];
      break;
    }
    case Op::kSoftmax: {
      const Tensor& y = n.value;
      Tensor& da = grad_of(n.a);
      double gy = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) gy += g[i] * y[i];
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += y[i] * (g[i] - gy);
      break;
    }
    case Op::kDot: {
      const double g0 = g[0];
      const Tensor& A = nodes_[n.a].value;
      const Tensor& B = nodes_[n.b].value;
      Tensor& da = grad_of(n.a);
      for (std::size_t i = 0; i < A.size(); ++i) da[i] += g0 * B[i];
      Tensor& db = grad_of(n.b);
      for (std::size_t i = 0; i < B.size(); ++i) db[i] += g0 * A[i];
      break;
    }
    case Op::kSum: {
      const double g0 = g[0];
      Tensor& da = grad_of(n.a);
      for (std::size_t i = 0; i < da.size(); ++i) da[i] += g0;
      break;
    }
    case Op::kBroadcast: {
      Tensor& ds = grad_of(n.a);
      double acc = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) acc += g[i];
      ds[0] += acc;
      break;
    }
    case Op::kDivByScalar: {
      const Tensor& A = nodes_[n.a].value;
      const double s = nodes_[n.b].value[0];
      Tensor& da = grad_of(n.a);
      double acc = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        da[i] += g[i] / s;
        acc += g[i] * A[i];
      }
      grad_of(n.b)[0] -= acc / (s * s);
      break;
    }
    case Op::kCrossEntropy: {
      const double g0 = g[0];
      const Tensor& x = nodes_[n.a].value;
      Tensor& da = grad_of(n.a);
      std::vector<double> p(x.size());
      softmax_into(x.data(), p);
      for (std::size_t i = 0; i < x.size(); ++i) da[i] += g0 * p[i];
      da[n.aux] -= g0;
      break;
    }
  }
}

void Graph::backward(Var loss) {
  if (nodes_[loss.id].value.size() != 1)
    throw ShapeError("backward: loss must be scalar");
  grad_of(loss.id)[0] = 1.0;
  for (std::uint32_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.grad.empty()) continue;
    backprop_node(id);
    if (n.bound != nullptr) {
      Tensor& pg = n.bound->grad;
      for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += n.grad[i];
    }
  }
  clear();
}

void Graph::clear() {
  nodes_.clear();
  pool_.clear();
  bound_.clear();
}

VarSeq leaf_rows(Graph& g, const Tensor& values) {
  require_shape(values.rank() == 2, "leaf_rows: rank-2 input");
  VarSeq rows;
  rows.reserve(values.rows());
  for (std::size_t t = 0; t < values.rows(); ++t) rows.push_back(g.leaf(values.row(t)));
  return rows;
}

}  // namespace emots
