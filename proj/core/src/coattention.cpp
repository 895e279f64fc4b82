#include "emots/coattention.hpp"

#include <cmath>

#include "emots/errors.hpp"

namespace emots {

CoAttentionParams make_coattention(const std::string& name, std::size_t d_p, std::size_t d_q,
                                   std::size_t width, RandomStream& rng) {
  CoAttentionParams p;
  Tensor wp = Tensor::matrix(width, d_p);
  xavier_uniform(wp, rng);
  Tensor wq = Tensor::matrix(width, d_q);
  xavier_uniform(wq, rng);
  Tensor wa = Tensor::zeros({2 * width});
  xavier_uniform(wa, rng);
  p.w_p = Parameter(name + ".w_p", std::move(wp));
  p.w_q = Parameter(name + ".w_q", std::move(wq));
  p.w_alpha = Parameter(name + ".w_alpha", std::move(wa));
  return p;
}

CoAttentionVars bind(Graph& g, CoAttentionParams& p) {
  return CoAttentionVars{g.param(p.w_p), g.param(p.w_q), g.param(p.w_alpha), p.width()};
}

CoAttentionTape build_coattention(Graph& g, const CoAttentionVars& params,
                                  std::span<const Var> u_p_rows,
                                  std::span<const Var> u_q_rows,
                                  const CoAttentionTapeOptions& options) {
  require_shape(u_p_rows.size() == u_q_rows.size(), "co-attention: T mismatch");
  const std::size_t T = u_p_rows.size();
  const std::size_t a = params.width;

  VarSeq proj_p(T), proj_q(T);
  for (std::size_t t = 0; t < T; ++t) {
    proj_p[t] = g.tanh(g.matvec(params.w_p, u_p_rows[t]));
    proj_q[t] = g.tanh(g.matvec(params.w_q, u_q_rows[t]));
  }

  const Var wa_p = g.slice(params.w_alpha, 0, a);
  const Var wa_q = g.slice(params.w_alpha, a, a);
  VarSeq score_p(T), score_q(T);
  for (std::size_t t = 0; t < T; ++t) {
    score_p[t] = g.dot(wa_p, proj_p[t]);
    score_q[t] = g.dot(wa_q, proj_q[t]);
  }
  const Var score_q_vec = g.concat(score_q);

  CoAttentionTape tape;
  tape.alpha_rows.reserve(T);
  for (std::size_t i = 0; i < T; ++i)
    tape.alpha_rows.push_back(g.softmax(g.add(g.broadcast(score_p[i], T), score_q_vec)));

  Var col_mean = g.scale(g.add_n(tape.alpha_rows), 1.0 / static_cast<double>(T));
  tape.relevance = g.div_by(col_mean, g.sum(col_mean));

  if (options.with_alignment) {
    tape.s_rows.reserve(T);
    for (std::size_t i = 0; i < T; ++i) {
      VarSeq entries(T);
      for (std::size_t j = 0; j < T; ++j) entries[j] = g.dot(proj_p[i], proj_q[j]);
      tape.s_rows.push_back(g.concat(entries));
    }
  }

  if (options.with_attended) {
    const std::size_t d_p = g.value(u_p_rows[0]).size();
    tape.attended.reserve(T);
    for (std::size_t j = 0; j < T; ++j) {
      VarSeq terms(T);
      for (std::size_t i = 0; i < T; ++i) {
        Var w = g.broadcast(g.slice(tape.alpha_rows[i], j, 1), d_p);
        terms[i] = g.mul(w, u_p_rows[i]);
      }
      tape.attended.push_back(g.add_n(terms));
    }
  }
  return tape;
}

namespace {

Tensor rows_to_matrix(const Graph& g, const VarSeq& rows) {
  Tensor out = Tensor::matrix(rows.size(), g.value(rows[0]).size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Tensor& v = g.value(rows[r]);
    for (std::size_t c = 0; c < v.size(); ++c) out(r, c) = v[c];
  }
  return out;
}

}  // namespace

Tensor soft_alignment(const Tensor& u_p, const Tensor& u_q, CoAttentionParams& params) {
  require_shape(u_p.rank() == 2 && u_q.rank() == 2 && u_p.rows() == u_q.rows(),
                "soft_alignment: same T required");
  Graph g;
  CoAttentionTapeOptions opts;
  opts.with_alignment = true;
  auto tape = build_coattention(g, bind(g, params), leaf_rows(g, u_p), leaf_rows(g, u_q), opts);
  return rows_to_matrix(g, tape.s_rows);
}

Tensor attention_distribution(const Tensor& u_p, const Tensor& u_q, CoAttentionParams& params) {
  require_shape(u_p.rank() == 2 && u_q.rank() == 2 && u_p.rows() == u_q.rows(),
                "attention_distribution: same T required");
  Graph g;
  auto tape = build_coattention(g, bind(g, params), leaf_rows(g, u_p), leaf_rows(g, u_q));
  return rows_to_matrix(g, tape.alpha_rows);
}

CoAttentionMap coattention_map(const Tensor& u_p, const Tensor& u_q, CoAttentionParams& params,
                               std::pair<int, int> pair_ids) {
  require_shape(u_p.rank() == 2 && u_q.rank() == 2 && u_p.rows() == u_q.rows(),
                "coattention_map: same T required");
  Graph g;
  CoAttentionTapeOptions opts;
  opts.with_alignment = true;
  auto tape = build_coattention(g, bind(g, params), leaf_rows(g, u_p), leaf_rows(g, u_q), opts);
  CoAttentionMap map;
  map.pair = pair_ids;
  map.S = rows_to_matrix(g, tape.s_rows);
  map.alpha = rows_to_matrix(g, tape.alpha_rows);
  const Tensor& r = g.value(tape.relevance);
  map.relevance = Tensor::zeros({r.size()});
  for (std::size_t i = 0; i < r.size(); ++i) map.relevance[i] = r[i];
  return map;
}

Tensor attend(const Tensor& alpha, const Tensor& u_p) {
  require_shape(alpha.rank() == 2 && alpha.rows() == alpha.cols(), "attend: alpha must be T x T");
  require_shape(u_p.rank() == 2 && u_p.rows() == alpha.rows(), "attend: u_p rows must match T");
  const std::size_t T = alpha.rows(), d = u_p.cols();
  Tensor u_hat = Tensor::matrix(T, d);
  for (std::size_t j = 0; j < T; ++j)
    for (std::size_t i = 0; i < T; ++i)
      for (std::size_t c = 0; c < d; ++c) u_hat(j, c) += alpha(i, j) * u_p(i, c);
  return u_hat;
}

Tensor relevance(const Tensor& alpha) {
  require_shape(alpha.rank() == 2 && alpha.rows() == alpha.cols(),
                "relevance: alpha must be T x T");
  const std::size_t T = alpha.rows();
  Tensor r = Tensor::zeros({T});
  for (std::size_t j = 0; j < T; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < T; ++i) acc += alpha(i, j);
    r[j] = acc / static_cast<double>(T);
  }
  double total = 0.0;
  for (std::size_t j = 0; j < T; ++j) total += r[j];
  if (total > 0.0)
    for (std::size_t j = 0; j < T; ++j) r[j] /= total;
  return r;
}

}  // namespace emots
