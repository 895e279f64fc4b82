#include "emots/clstm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "emots/csv.hpp"
#include "emots/errors.hpp"

namespace emots {

std::vector<Parameter*> ClstmEncoder::parameters() {
  std::vector<Parameter*> out;
  for (std::size_t j = 0; j < p; ++j) {
    auto comp = component_parameters(j);
    out.insert(out.end(), comp.begin(), comp.end());
  }
  return out;
}

std::vector<Parameter*> ClstmEncoder::component_parameters(std::size_t j) {
  return {&components[j].input_weights, &components[j].recurrent_weights, &components[j].bias,
          &var_heads[j].weight, &var_heads[j].bias};
}

ClstmEncoder make_clstm(std::size_t p, std::size_t E, std::size_t h, RandomStream& rng,
                        const std::string& name) {
  ClstmEncoder enc;
  enc.p = p;
  enc.E = E;
  enc.h = h;
  for (std::size_t j = 0; j < p; ++j) {
    const std::string comp = name + ".c" + std::to_string(j);
    enc.components.push_back(make_lstm_cell(comp, p * E, h, rng));
    enc.var_heads.push_back(make_dense(comp + ".var_head", h, E, rng));
  }
  return enc;
}

// --- Transform and stacking ----------------------------------------------------

Tensor pi_transform(const Tensor& features, Dense& phi) {
  require_shape(features.rank() == 2 && features.cols() == phi.in(),
                "pi_transform: feature dim must match phi input");
  Graph g;
  DenseVars vars = bind(g, phi);
  VarSeq rows = pi_transform_rows(g, vars, leaf_rows(g, features));
  Tensor out = Tensor::matrix(features.rows(), phi.out());
  for (std::size_t t = 0; t < rows.size(); ++t) {
    const Tensor& v = g.value(rows[t]);
    for (std::size_t c = 0; c < v.size(); ++c) out(t, c) = v[c];
  }
  return out;
}

VarSeq pi_transform_rows(Graph& g, const DenseVars& phi, std::span<const Var> feature_rows) {
  VarSeq out;
  out.reserve(feature_rows.size());
  for (Var row : feature_rows) out.push_back(g.softmax(linear(g, phi, row)));
  return out;
}

Tensor stack_rows(std::span<const Tensor> series) {
  require_shape(!series.empty(), "stack_rows: empty input");
  const std::size_t T = series[0].rows();
  const std::size_t E = series[0].cols();
  for (const Tensor& s : series)
    require_shape(s.rank() == 2 && s.rows() == T && s.cols() == E,
                  "stack_rows: all series need identical T and E");
  Tensor X = Tensor::matrix(T, series.size() * E);
  for (std::size_t k = 0; k < series.size(); ++k)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t c = 0; c < E; ++c) X(t, k * E + c) = series[k](t, c);
  return X;
}

VarSeq stack_rows(Graph& g, std::span<const VarSeq> series_rows) {
  require_shape(!series_rows.empty(), "stack_rows: empty input");
  const std::size_t T = series_rows[0].size();
  VarSeq out;
  out.reserve(T);
  std::vector<Var> per_t(series_rows.size());
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t k = 0; k < series_rows.size(); ++k) {
      require_shape(series_rows[k].size() == T, "stack_rows: T mismatch");
      per_t[k] = series_rows[k][t];
    }
    out.push_back(g.concat(per_t));
  }
  return out;
}

// --- Encoding ---------------------------------------------------------------------

ClstmVars bind(Graph& g, ClstmEncoder& encoder) {
  ClstmVars vars;
  for (std::size_t j = 0; j < encoder.p; ++j) {
    vars.cells.push_back(bind(g, encoder.components[j]));
    vars.heads.push_back(bind(g, encoder.var_heads[j]));
  }
  return vars;
}

std::vector<VarSeq> clstm_component_hidden(Graph& g, const ClstmVars& vars,
                                           std::span<const Var> x_rows) {
  std::vector<VarSeq> hidden(vars.cells.size());
  for (std::size_t j = 0; j < vars.cells.size(); ++j) {
    LstmState state = lstm_zero_state(g, vars.cells[j].hidden);
    hidden[j].reserve(x_rows.size());
    for (Var x : x_rows) {
      state = lstm_step(g, vars.cells[j], x, state);
      hidden[j].push_back(state.h);
    }
  }
  return hidden;
}

VarSeq encode_rows(Graph& g, const ClstmVars& vars, std::span<const Var> x_rows) {
  auto hidden = clstm_component_hidden(g, vars, x_rows);
  VarSeq out;
  out.reserve(x_rows.size());
  std::vector<Var> per_t(vars.cells.size());
  for (std::size_t t = 0; t < x_rows.size(); ++t) {
    for (std::size_t j = 0; j < vars.cells.size(); ++j) per_t[j] = hidden[j][t];
    out.push_back(g.concat(per_t));
  }
  return out;
}

Tensor encode(ClstmEncoder& encoder, const Tensor& X) {
  require_shape(X.rank() == 2 && X.cols() == encoder.p * encoder.E,
                "encode: X must be T x p*E");
  Graph g;
  ClstmVars vars = bind(g, encoder);
  VarSeq rows = encode_rows(g, vars, leaf_rows(g, X));
  Tensor out = Tensor::matrix(X.rows(), encoder.p * encoder.h);
  for (std::size_t t = 0; t < rows.size(); ++t) {
    const Tensor& v = g.value(rows[t]);
    for (std::size_t c = 0; c < v.size(); ++c) out(t, c) = v[c];
  }
  return out;
}

// --- VAR loss ------------------------------------------------------------------------

void VarTrainConfig::validate() const {
  if (lambda_group < 0 || ridge < 0 || nonsmooth_param < 0)
    throw ConfigError("penalties must be nonnegative");
  if (!(lr_var > 0)) throw ConfigError("lr_var must be > 0");
  if (!(armijo_beta > 0 && armijo_beta < 1)) throw ConfigError("armijo_beta must be in (0,1)");
  if (!(armijo_c > 0 && armijo_c < 1)) throw ConfigError("armijo_c must be in (0,1)");
}

namespace {

Var component_ridge(Graph& g, const ClstmVars& vars, std::size_t j, double ridge) {
  const Var weights[3] = {vars.cells[j].wx, vars.cells[j].wh, vars.heads[j].w};
  VarSeq sq;
  for (Var w : weights) sq.push_back(g.dot(w, w));
  return g.scale(g.add_n(sq), ridge);
}

}  // namespace

Var component_var_loss(Graph& g, const ClstmVars& vars, std::size_t j,
                       std::span<const Var> x_rows, const ClstmEncoder& encoder, double ridge) {
  const std::size_t T = x_rows.size();
  if (T < 2) throw ShapeError("var loss needs T >= 2");
  LstmState state = lstm_zero_state(g, vars.cells[j].hidden);
  VarSeq errs;
  errs.reserve(T - 1);
  for (std::size_t t = 0; t + 1 < T; ++t) {
    state = lstm_step(g, vars.cells[j], x_rows[t], state);
    Var pred = linear(g, vars.heads[j], state.h);
    // Target: next transformed features of series j, detached from the tape.
    const Tensor& next = g.value(x_rows[t + 1]);
    Tensor target = Tensor::zeros({encoder.E});
    for (std::size_t c = 0; c < encoder.E; ++c) target[c] = next[j * encoder.E + c];
    Var err = g.sub(g.leaf(std::move(target)), pred);
    errs.push_back(g.dot(err, err));
  }
  Var smooth = g.add_n(errs);
  if (ridge > 0) smooth = g.add(smooth, component_ridge(g, vars, j, ridge));
  return smooth;
}

Var var_loss_tape(Graph& g, const ClstmVars& vars, std::span<const Var> x_rows,
                  const ClstmEncoder& encoder, double ridge) {
  VarSeq parts;
  for (std::size_t j = 0; j < encoder.p; ++j)
    parts.push_back(component_var_loss(g, vars, j, x_rows, encoder, ridge));
  return g.add_n(parts);
}

double var_loss(ClstmEncoder& encoder, const Tensor& X, double ridge) {
  require_shape(X.rank() == 2 && X.cols() == encoder.p * encoder.E,
                "var_loss: X must be T x p*E");
  Graph g;
  ClstmVars vars = bind(g, encoder);
  VarSeq rows = leaf_rows(g, X);
  Var loss = var_loss_tape(g, vars, rows, encoder, ridge);
  return g.value(loss)[0];
}

// --- Prox and GC readout ------------------------------------------------------------

namespace {

double block_norm(const Tensor& w, std::size_t block, std::size_t width) {
  double acc = 0.0;
  for (std::size_t r = 0; r < w.rows(); ++r)
    for (std::size_t c = block * width; c < (block + 1) * width; ++c) acc += w(r, c) * w(r, c);
  return std::sqrt(acc);
}

void prox_component(ClstmEncoder& encoder, std::size_t j, double step, double lambda) {
  const double threshold = step * lambda;
  if (threshold <= 0) return;
  Tensor& w = encoder.components[j].input_weights.value;
  for (std::size_t k = 0; k < encoder.p; ++k) {
    const double norm = block_norm(w, k, encoder.E);
    const double factor = norm <= threshold ? 0.0 : 1.0 - threshold / norm;
    for (std::size_t r = 0; r < w.rows(); ++r)
      for (std::size_t c = k * encoder.E; c < (k + 1) * encoder.E; ++c) w(r, c) *= factor;
  }
}

}  // namespace

void prox_group_lasso(ClstmEncoder& encoder, double step, double lambda) {
  if (!(step > 0)) return;
  for (std::size_t j = 0; j < encoder.p; ++j) prox_component(encoder, j, step, lambda);
}

double group_norm(const ClstmEncoder& encoder) {
  double acc = 0.0;
  for (std::size_t j = 0; j < encoder.p; ++j)
    for (std::size_t k = 0; k < encoder.p; ++k)
      acc += block_norm(encoder.components[j].input_weights.value, k, encoder.E);
  return acc;
}

GCMatrix extract_gc(const ClstmEncoder& encoder, double epsilon) {
  Tensor strengths = Tensor::matrix(encoder.p, encoder.p);
  for (std::size_t j = 0; j < encoder.p; ++j)
    for (std::size_t k = 0; k < encoder.p; ++k)
      strengths(j, k) = block_norm(encoder.components[j].input_weights.value, k, encoder.E);
  return make_gc_matrix(std::move(strengths), epsilon);
}

// --- fit_var -----------------------------------------------------------------------

namespace {

struct ComponentState {
  std::vector<Tensor> values;  // snapshot of the component's parameters
};

ComponentState snapshot(ClstmEncoder& enc, std::size_t j) {
  ComponentState s;
  for (Parameter* p : enc.component_parameters(j)) s.values.push_back(p->value);
  return s;
}

void restore(ClstmEncoder& enc, std::size_t j, const ComponentState& s) {
  auto params = enc.component_parameters(j);
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = s.values[i];
}

double component_group_norm(const ClstmEncoder& enc, std::size_t j) {
  double acc = 0.0;
  for (std::size_t k = 0; k < enc.p; ++k)
    acc += block_norm(enc.components[j].input_weights.value, k, enc.E);
  return acc;
}

double eval_component_smooth(ClstmEncoder& enc, std::size_t j, const Tensor& X, double ridge) {
  Graph g;
  ClstmVars vars = bind(g, enc);
  VarSeq rows = leaf_rows(g, X);
  Var loss = component_var_loss(g, vars, j, rows, enc, ridge);
  return g.value(loss)[0];
}

}  // namespace

FitVarResult fit_var(ClstmEncoder& encoder, const Tensor& X, const VarTrainConfig& config) {
  config.validate();
  require_shape(X.rank() == 2 && X.cols() == encoder.p * encoder.E,
                "fit_var: X must be T x p*E");
  if (X.rows() < 2) throw ShapeError("fit_var needs T >= 2");

  const double lambda = config.effective_lambda();
  FitVarResult result;

  std::vector<double> smooth(encoder.p), penalty(encoder.p);
  std::vector<double> last_step(encoder.p, config.lr_var);
  for (std::size_t j = 0; j < encoder.p; ++j) {
    smooth[j] = eval_component_smooth(encoder, j, X, config.ridge);
    penalty[j] = lambda * component_group_norm(encoder, j);
  }

  auto total_objective = [&]() {
    double acc = 0.0;
    for (std::size_t j = 0; j < encoder.p; ++j) acc += smooth[j] + penalty[j];
    return acc;
  };
  result.objective_trace.push_back(total_objective());

  for (std::size_t iter = 0; iter < config.max_iters; ++iter) {
    for (std::size_t j = 0; j < encoder.p; ++j) {
      auto params = encoder.component_parameters(j);
      for (Parameter* p : params) p->zero_grad();
      {
        Graph g;
        ClstmVars vars = bind(g, encoder);
        VarSeq rows = leaf_rows(g, X);
        Var loss = component_var_loss(g, vars, j, rows, encoder, config.ridge);
        const double v = g.value(loss)[0];
        if (!std::isfinite(v)) throw DivergenceError("VAR loss became non-finite");
        smooth[j] = v;
        g.backward(loss);
      }
      penalty[j] = lambda * component_group_norm(encoder, j);
      const double f_cur = smooth[j] + penalty[j];

      const ComponentState before = snapshot(encoder, j);
      double step = std::min(config.lr_var, 2.0 * last_step[j]);
      bool accepted = false;
      while (step > 1e-16 * config.lr_var) {
        for (std::size_t i = 0; i < params.size(); ++i) {
          Tensor& v = params[i]->value;
          const Tensor& g0 = params[i]->grad;
          const Tensor& w0 = before.values[i];
          for (std::size_t c = 0; c < v.size(); ++c) v[c] = w0[c] - step * g0[c];
        }
        prox_component(encoder, j, step, lambda);

        double move_sq = 0.0;
        for (std::size_t i = 0; i < params.size(); ++i) {
          const Tensor& v = params[i]->value;
          const Tensor& w0 = before.values[i];
          for (std::size_t c = 0; c < v.size(); ++c) {
            const double d = v[c] - w0[c];
            move_sq += d * d;
          }
        }
        const double new_smooth = eval_component_smooth(encoder, j, X, config.ridge);
        const double new_penalty = lambda * component_group_norm(encoder, j);
        const double f_new = new_smooth + new_penalty;
        if (std::isfinite(f_new) &&
            f_new <= f_cur - config.armijo_c / step * move_sq + 1e-15 * std::fabs(f_cur)) {
          smooth[j] = new_smooth;
          penalty[j] = new_penalty;
          last_step[j] = step;
          accepted = true;
          break;
        }
        step *= config.armijo_beta;
      }
      if (!accepted) {
        restore(encoder, j, before);
        // Stationary for this component at this iteration.
      }
    }

    result.objective_trace.push_back(total_objective());
    ++result.iterations;
    const std::size_t n = result.objective_trace.size();
    if (n > 10) {
      const double prev = result.objective_trace[n - 11];
      const double cur = result.objective_trace[n - 1];
      if (std::fabs(prev - cur) < 1e-6 * std::max(std::fabs(prev), 1e-12)) {
        result.converged = true;
        break;
      }
    }
  }
  return result;
}

// --- Reports -----------------------------------------------------------------------

void write_gc_report(const std::filesystem::path& path, const GCMatrix& gc, double lambda) {
  const std::size_t p = gc.series_count();
  std::ostringstream out;
  out << "section,row";
  for (std::size_t k = 0; k < p; ++k) out << ",f_" << (k + 1);
  out << "\n";
  auto emit = [&](const char* section, auto value) {
    for (std::size_t j = 0; j < p; ++j) {
      out << section << ",f_" << (j + 1);
      for (std::size_t k = 0; k < p; ++k) out << "," << value(j, k);
      out << "\n";
    }
  };
  emit("raw", [&](std::size_t j, std::size_t k) { return format_real(gc.strengths(j, k)); });
  emit("normalized",
       [&](std::size_t j, std::size_t k) { return format_real(gc.normalized(j, k)); });
  emit("adjacency",
       [&](std::size_t j, std::size_t k) { return std::string(gc.edge(j, k) ? "1" : "0"); });
  out << "epsilon,," << format_real(gc.epsilon) << "\n";
  out << "lambda,," << format_real(lambda) << "\n";
  write_text_file(path, out.str());
}

GcComparison compare_gc(const GCMatrix& estimated, const GCMatrix& truth) {
  const std::size_t p = estimated.series_count();
  require_shape(p == truth.series_count(), "compare_gc: size mismatch");
  double tp = 0, fp = 0, fn = 0, correct = 0;
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = 0; k < p; ++k) {
      const bool est = estimated.edge(j, k);
      const bool ref = truth.edge(j, k);
      if (est && ref) ++tp;
      if (est && !ref) ++fp;
      if (!est && ref) ++fn;
      if (est == ref) ++correct;
    }
  GcComparison c;
  c.precision = tp + fp > 0 ? tp / (tp + fp) : 1.0;
  c.recall = tp + fn > 0 ? tp / (tp + fn) : 1.0;
  c.accuracy = correct / static_cast<double>(p * p);
  return c;
}

}  // namespace emots
