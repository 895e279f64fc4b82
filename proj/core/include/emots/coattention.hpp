#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "emots/autodiff.hpp"
#include "emots/nn.hpp"
#include "emots/random.hpp"
#include "emots/tensor.hpp"

namespace emots {

// Pairwise co-attention parameters: two projection maps into the shared
// attention width `a` and the scoring vector over the concatenated pair.
// All three are pure linear maps (no bias).
struct CoAttentionParams {
  Parameter w_p;      // a x d_p
  Parameter w_q;      // a x d_q
  Parameter w_alpha;  // 2a
  std::size_t width() const { return w_p.value.rows(); }
};

CoAttentionParams make_coattention(const std::string& name, std::size_t d_p, std::size_t d_q,
                                   std::size_t width, RandomStream& rng);

struct CoAttentionVars {
  Var w_p, w_q, w_alpha;
  std::size_t width = 0;
};

CoAttentionVars bind(Graph& g, CoAttentionParams& p);

// Results of one pairwise co-attention pass, as plain tensors.
struct CoAttentionMap {
  std::pair<int, int> pair{0, 0};  // 1-based modality ids (k1 < k2)
  Tensor S;                        // T x T soft alignment
  Tensor alpha;                    // T x T, rows sum to 1
  Tensor relevance;                // T, nonnegative, sums to 1
};

struct CoAttentionTapeOptions {
  bool with_alignment = false;  // build S rows (diagnostics / gradient checks)
  bool with_attended = false;   // build attended features (gradient checks)
};

// Tape-level outputs; rows are rank-1 Vars of length T.
struct CoAttentionTape {
  VarSeq alpha_rows;   // T rows, each row-stochastic over the second index
  Var relevance;       // length-T vector
  VarSeq s_rows;       // T rows when with_alignment
  VarSeq attended;     // T attended feature rows (u_hat) when with_attended
};

// Builds S (optionally), the attention distribution and the per-timestep
// relevance on the tape. The (i,j) logit is w_alpha . tanh(w_p u_p_i (+)
// w_q u_q_j); since tanh acts elementwise on the concatenation, it is
// evaluated as the sum of the two projected halves. Softmax normalizes over
// the second index j for each fixed i.
CoAttentionTape build_coattention(Graph& g, const CoAttentionVars& params,
                                  std::span<const Var> u_p_rows,
                                  std::span<const Var> u_q_rows,
                                  const CoAttentionTapeOptions& options = {});

// Plain-tensor entrypoints (evaluated through the tape builder).
Tensor soft_alignment(const Tensor& u_p, const Tensor& u_q, CoAttentionParams& params);
Tensor attention_distribution(const Tensor& u_p, const Tensor& u_q, CoAttentionParams& params);
CoAttentionMap coattention_map(const Tensor& u_p, const Tensor& u_q, CoAttentionParams& params,
                               std::pair<int, int> pair_ids = {0, 0});

// u_hat[j] = sum_i alpha[i][j] u_p[i]; alpha must be row-stochastic.
Tensor attend(const Tensor& alpha, const Tensor& u_p);

// r[j] = (1/T) sum_i alpha[i][j], renormalized to sum 1.
Tensor relevance(const Tensor& alpha);

}  // namespace emots
