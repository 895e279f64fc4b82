#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "emots/autodiff.hpp"
#include "emots/gc_matrix.hpp"
#include "emots/nn.hpp"
#include "emots/random.hpp"
#include "emots/tensor.hpp"
#include "emots/timeseries.hpp"

namespace emots {

// Component-wise LSTM: p independent LSTMs, each consuming the full stacked
// input X (T x p*E) and regressing the next transformed features of its own
// series through a linear head. Input-weight matrices partition into p column
// blocks of width E; block k of component j carries the influence of series k
// on the prediction of series j, which is what the group-lasso penalty and
// the GC readout act on.
struct ClstmEncoder {
  std::size_t p = 0, E = 0, h = 0;
  std::vector<LstmCellParams> components;  // p cells, input p*E, hidden h
  std::vector<Dense> var_heads;            // p heads, h -> E

  std::vector<Parameter*> parameters();
  // Parameters of component j only (cell + head).
  std::vector<Parameter*> component_parameters(std::size_t j);
};

ClstmEncoder make_clstm(std::size_t p, std::size_t E, std::size_t h, RandomStream& rng,
                        const std::string& name = "clstm");

// --- Transform and stacking ---------------------------------------------------

// Per-timestep softmax(phi(f_t)): every output row lies on the E-simplex.
Tensor pi_transform(const Tensor& features, Dense& phi);
VarSeq pi_transform_rows(Graph& g, const DenseVars& phi, std::span<const Var> feature_rows);

// Row-wise stacking: block k of the output occupies columns [k*E, (k+1)*E).
Tensor stack_rows(std::span<const Tensor> series);  // each T x E -> T x p*E
VarSeq stack_rows(Graph& g, std::span<const VarSeq> series_rows);

// --- Encoding -------------------------------------------------------------------

struct ClstmVars {
  std::vector<LstmVars> cells;
  std::vector<DenseVars> heads;
};

ClstmVars bind(Graph& g, ClstmEncoder& encoder);

// Hidden-state rows per component: result[j][t] is h^(j)_t (length h).
std::vector<VarSeq> clstm_component_hidden(Graph& g, const ClstmVars& vars,
                                           std::span<const Var> x_rows);

// h_enc rows: per-timestep concatenation of the p component hidden states.
VarSeq encode_rows(Graph& g, const ClstmVars& vars, std::span<const Var> x_rows);

// Plain wrapper: X (T x p*E) -> h_enc (T x p*h).
Tensor encode(ClstmEncoder& encoder, const Tensor& X);

// --- VAR loss and training --------------------------------------------------------

struct VarTrainConfig {
  double lambda_group = 1.0;     // sweepable group-lasso weight (lambda)
  double ridge = 1e-4;           // r
  double nonsmooth_param = 1e-3; // l; base scale of the group penalty
  double lr_var = 1e-2;          // initial/maximal line-search step
  std::size_t max_iters = 300;
  double armijo_beta = 0.5;
  double armijo_c = 1e-4;

  // The paper fixes l and leaves lambda to sweep; the penalty applied to the
  // objective is their product.
  double effective_lambda() const { return lambda_group * nonsmooth_param; }
  void validate() const;
};

// Smooth part of the VAR objective on the tape for one component:
//   sum_{t=1}^{T-1} || x_{j,t+1} - head_j(h^(j)_t) ||^2
// plus the component's share of the ridge term. Targets enter as constants so
// the regression pulls the hidden path, not the targets, toward agreement.
Var component_var_loss(Graph& g, const ClstmVars& vars, std::size_t j,
                       std::span<const Var> x_rows, const ClstmEncoder& encoder, double ridge);

// Full smooth VAR objective (all components + ridge) on the tape.
Var var_loss_tape(Graph& g, const ClstmVars& vars, std::span<const Var> x_rows,
                  const ClstmEncoder& encoder, double ridge);

// Plain wrapper over the tape builder; throws ShapeError for T < 2.
double var_loss(ClstmEncoder& encoder, const Tensor& X, double ridge);

// Group-lasso proximal step: for every component j and input block k,
//   ||block|| <= step*lambda  ->  block = 0
//   otherwise                 ->  block *= (1 - step*lambda/||block||).
// Recurrent weights, biases and heads are untouched.
void prox_group_lasso(ClstmEncoder& encoder, double step, double lambda);

// Sum over components and blocks of the input-block norms.
double group_norm(const ClstmEncoder& encoder);

struct FitVarResult {
  std::vector<double> objective_trace;  // smooth + group penalty per iteration
  std::size_t iterations = 0;
  bool converged = false;
};

// Proximal gradient with backtracking line search, component by component
// (the p subproblems are independent). A trial step s maps the weights to
// prox(w - s grad, s*lambda) and is accepted when the composite objective
// drops by at least armijo_c/s * ||w_new - w||^2; otherwise s shrinks by
// armijo_beta. Stops at max_iters or when the relative objective change over
// 10 iterations falls below 1e-6. Throws DivergenceError on NaN, leaving the
// last accepted iterate in place.
FitVarResult fit_var(ClstmEncoder& encoder, const Tensor& X, const VarTrainConfig& config);

// strengths[j][k] = Frobenius norm of input block k of component j.
GCMatrix extract_gc(const ClstmEncoder& encoder, double epsilon);

// CSV report: raw strengths, per-row normalized strengths, 0/1 adjacency,
// plus the epsilon and lambda used.
void write_gc_report(const std::filesystem::path& path, const GCMatrix& gc, double lambda);

// Optional edge comparison against a ground-truth adjacency.
struct GcComparison {
  double precision = 0.0, recall = 0.0, accuracy = 0.0;
};
GcComparison compare_gc(const GCMatrix& estimated, const GCMatrix& truth);

}  // namespace emots
