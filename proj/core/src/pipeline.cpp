#include "emots/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "emots/csv.hpp"
#include "emots/errors.hpp"

namespace emots {

using nlohmann::json;

void PipelineConfig::validate() const {
  if (embed_dim < 1 || hidden < 1 || hidden_dec < 1)
    throw ConfigError("model dimensions must be >= 1");
  if (!(lr > 0) || !(lr_var > 0)) throw ConfigError("learning rates must be > 0");
  if (label_kind == LabelKind::continuous && label_channels != 1 && label_channels != 2)
    throw ConfigError("continuous labels need 1 or 2 channels");
  if (var_weight < 0 || lambda_group < 0 || ridge < 0 || nonsmooth_param < 0)
    throw ConfigError("penalty weights must be nonnegative");
  if (!(epsilon > 0)) throw ConfigError("epsilon must be > 0");
}

std::vector<std::pair<std::size_t, std::size_t>> PipelineModel::pairs() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t p = feature_dims.size();
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j) out.emplace_back(i, j);
  return out;
}

std::vector<Parameter*> PipelineModel::parameters() {
  std::vector<Parameter*> out;
  for (auto& d : phi) {
    out.push_back(&d.weight);
    out.push_back(&d.bias);
  }
  auto enc = encoder.parameters();
  out.insert(out.end(), enc.begin(), enc.end());
  for (auto& c : coatt) {
    out.push_back(&c.w_p);
    out.push_back(&c.w_q);
    out.push_back(&c.w_alpha);
  }
  out.push_back(&gate.weight);
  out.push_back(&gate.bias);
  out.push_back(&decoder.input_weights);
  out.push_back(&decoder.recurrent_weights);
  out.push_back(&decoder.bias);
  out.push_back(&head_hidden.weight);
  out.push_back(&head_hidden.bias);
  out.push_back(&head_out.weight);
  out.push_back(&head_out.bias);
  return out;
}

PipelineModel make_pipeline(const PipelineConfig& config,
                            std::vector<std::size_t> feature_dims) {
  config.validate();
  if (feature_dims.size() < 2) throw ConfigError("pipeline needs p >= 2 modalities");
  PipelineModel m;
  m.config = config;
  m.feature_dims = std::move(feature_dims);
  const std::size_t p = m.feature_dims.size();
  const std::size_t E = config.embed_dim;
  const std::size_t a = config.attention_width ? config.attention_width : E;

  RandomStream rng(config.seed);
  RandomStream phi_rng = rng.fork(1);
  RandomStream enc_rng = rng.fork(2);
  RandomStream coatt_rng = rng.fork(3);
  RandomStream head_rng = rng.fork(4);

  for (std::size_t i = 0; i < p; ++i)
    m.phi.push_back(make_dense("phi" + std::to_string(i), m.feature_dims[i], E, phi_rng));
  m.encoder = make_clstm(p, E, config.hidden, enc_rng);
  for (auto [i, j] : m.pairs()) {
    const std::string name = "coatt" + std::to_string(i) + "_" + std::to_string(j);
    m.coatt.push_back(
        make_coattention(name, m.feature_dims[i], m.feature_dims[j], a, coatt_rng));
  }
  m.gate = make_dense("gate", m.pair_count(), p * config.hidden, head_rng);
  m.decoder =
      make_lstm_cell("decoder", p * config.hidden + config.y_dim(), config.hidden_dec, head_rng);
  m.head_hidden = make_dense("head_hidden", config.hidden_dec, 4, head_rng);
  m.head_out = make_dense("head_out", 4, config.y_out(), head_rng);
  return m;
}

// --- Forward tape ---------------------------------------------------------------

namespace {

Tensor label_row(const LabelTrack& labels, std::size_t t, std::size_t y_dim) {
  Tensor row = Tensor::zeros({y_dim});
  if (labels.kind == LabelKind::continuous) {
    for (std::size_t c = 0; c < labels.channels(); ++c)
      row[c] = labels.continuous_values(t, c);
  } else {
    row[static_cast<std::size_t>(labels.categorical_values[t])] = 1.0;
  }
  return row;
}

std::size_t argmax(std::span<const double> xs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (xs[i] > xs[best]) best = i;
  return best;
}

struct PipelineTape {
  VarSeq x_rows;        // stacked transformed features, T x (p*E)
  VarSeq h_enc_rows;    // T x (p*h)
  VarSeq gate_rows;     // T x (p*h); empty when co-attention is off
  VarSeq y_hat_rows;    // T x y_out
  ClstmVars enc_vars;
  std::vector<CoAttentionTape> coatt_tapes;
};

PipelineTape build_tape(Graph& g, PipelineModel& model, const AlignedSample& sample,
                        const LabelTrack* forcing_labels, bool want_alignment) {
  const std::size_t p = model.modality_count();
  if (sample.modality_count() != p) throw ShapeError("sample modality count mismatch");
  for (std::size_t i = 0; i < p; ++i)
    if (sample.streams[i].dim() != model.feature_dims[i])
      throw ShapeError("feature dim mismatch for modality " + std::to_string(i + 1));
  const std::size_t T = sample.timesteps();
  const std::size_t h = model.config.hidden;
  const auto kind = model.config.label_kind;
  if (forcing_labels != nullptr && forcing_labels->timesteps() != T)
    throw ShapeError("forcing labels length mismatch");

  PipelineTape tape;

  std::vector<VarSeq> raw_rows(p);
  for (std::size_t i = 0; i < p; ++i) raw_rows[i] = leaf_rows(g, sample.streams[i].values);

  std::vector<VarSeq> transformed(p);
  {
    std::vector<DenseVars> phi_vars;
    for (std::size_t i = 0; i < p; ++i) phi_vars.push_back(bind(g, model.phi[i]));
    for (std::size_t i = 0; i < p; ++i)
      transformed[i] = pi_transform_rows(g, phi_vars[i], raw_rows[i]);
  }
  tape.x_rows = stack_rows(g, transformed);

  tape.enc_vars = bind(g, model.encoder);
  tape.h_enc_rows = encode_rows(g, tape.enc_vars, tape.x_rows);

  if (model.config.use_coattention) {
    CoAttentionTapeOptions opts;
    opts.with_alignment = want_alignment;
    const auto pairs = model.pairs();
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      auto [i, j] = pairs[k];
      tape.coatt_tapes.push_back(build_coattention(g, bind(g, model.coatt[k]), raw_rows[i],
                                                   raw_rows[j], opts));
    }
    DenseVars gate_vars = bind(g, model.gate);
    tape.gate_rows.reserve(T);
    std::vector<Var> rel_at_t(pairs.size());
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t k = 0; k < pairs.size(); ++k)
        rel_at_t[k] = g.slice(tape.coatt_tapes[k].relevance, t, 1);
      Var attention = g.concat(rel_at_t);
      tape.gate_rows.push_back(g.sigmoid(linear(g, gate_vars, attention)));
    }
  }

  LstmVars dec_vars = bind(g, model.decoder);
  DenseVars hidden_vars = bind(g, model.head_hidden);
  DenseVars out_vars = bind(g, model.head_out);
  LstmState state = lstm_zero_state(g, model.config.hidden_dec);
  Var y_prev = g.leaf(Tensor::zeros({model.config.y_dim()}));
  tape.y_hat_rows.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    Var context = model.config.use_coattention
                      ? g.mul(tape.h_enc_rows[t], tape.gate_rows[t])
                      : tape.h_enc_rows[t];
    state = lstm_step(g, dec_vars, g.concat(context, y_prev), state);
    Var y_t = linear(g, out_vars, g.relu(linear(g, hidden_vars, state.h)));
    tape.y_hat_rows.push_back(y_t);
    if (t + 1 < T) {
      if (forcing_labels != nullptr) {
        y_prev = g.leaf(label_row(*forcing_labels, t, model.config.y_dim()));
      } else if (kind == LabelKind::continuous) {
        y_prev = y_t;
      } else {
        Tensor onehot = Tensor::zeros({model.config.y_dim()});
        onehot[argmax(g.value(y_t).data())] = 1.0;
        y_prev = g.leaf(std::move(onehot));
      }
    }
  }
  return tape;
}

Tensor rows_to_tensor(const Graph& g, const VarSeq& rows) {
  Tensor out = Tensor::matrix(rows.size(), g.value(rows[0]).size());
  for (std::size_t t = 0; t < rows.size(); ++t) {
    const Tensor& v = g.value(rows[t]);
    for (std::size_t c = 0; c < v.size(); ++c) out(t, c) = v[c];
  }
  return out;
}

Diagnostics collect_diagnostics(Graph& g, PipelineModel& model, const PipelineTape& tape) {
  Diagnostics diag;
  diag.h_enc = rows_to_tensor(g, tape.h_enc_rows);
  if (model.config.use_coattention) {
    diag.gates = rows_to_tensor(g, tape.gate_rows);
    const auto pairs = model.pairs();
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto& ct = tape.coatt_tapes[k];
      CoAttentionMap map;
      map.pair = {static_cast<int>(pairs[k].first + 1), static_cast<int>(pairs[k].second + 1)};
      map.alpha = rows_to_tensor(g, ct.alpha_rows);
      if (!ct.s_rows.empty()) map.S = rows_to_tensor(g, ct.s_rows);
      const Tensor& r = g.value(ct.relevance);
      map.relevance = Tensor::zeros({r.size()});
      for (std::size_t i = 0; i < r.size(); ++i) map.relevance[i] = r[i];
      diag.maps.push_back(std::move(map));
    }
  } else {
    diag.gates = Tensor::matrix(diag.h_enc.rows(), diag.h_enc.cols());
    diag.gates.fill(1.0);
  }
  return diag;
}

Var emotion_loss_tape(Graph& g, const PipelineModel& model, const PipelineTape& tape,
                      const LabelTrack& labels) {
  const std::size_t T = tape.y_hat_rows.size();
  if (labels.timesteps() != T) throw ShapeError("label length mismatch");
  if (model.config.label_kind == LabelKind::continuous) {
    const std::size_t c = labels.channels();
    if (c != model.config.y_out()) throw ShapeError("label channel mismatch");
    if (model.config.loss_one_minus_ccc) {
      VarSeq channel_losses;
      const double n = static_cast<double>(T);
      for (std::size_t ch = 0; ch < c; ++ch) {
        VarSeq preds(T);
        for (std::size_t t = 0; t < T; ++t) preds[t] = g.slice(tape.y_hat_rows[t], ch, 1);
        Var yhat = g.concat(preds);
        double mean_y = 0.0;
        for (std::size_t t = 0; t < T; ++t) mean_y += labels.continuous_values(t, ch);
        mean_y /= n;
        Tensor dev_y = Tensor::zeros({T});
        double var_y = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
          dev_y[t] = labels.continuous_values(t, ch) - mean_y;
          var_y += dev_y[t] * dev_y[t];
        }
        var_y /= n;
        Var mean_hat = g.scale(g.sum(yhat), 1.0 / n);
        Var dev_hat = g.sub(yhat, g.broadcast(mean_hat, T));
        Var var_hat = g.scale(g.dot(dev_hat, dev_hat), 1.0 / n);
        Var cov = g.scale(g.dot(g.leaf(std::move(dev_y)), dev_hat), 1.0 / n);
        Var mean_diff = g.sub(mean_hat, g.constant(mean_y));
        Var denom = g.add(g.add(g.constant(var_y), var_hat), g.mul(mean_diff, mean_diff));
        Var ccc_v = g.div_by(g.scale(cov, 2.0), denom);
        channel_losses.push_back(g.sub(g.constant(1.0), ccc_v));
      }
      return g.scale(g.add_n(channel_losses), 1.0 / static_cast<double>(c));
    }
    VarSeq parts(T);
    for (std::size_t t = 0; t < T; ++t) {
      Var err = g.sub(tape.y_hat_rows[t], g.leaf(labels.continuous_values.row(t)));
      parts[t] = g.dot(err, err);
    }
    return g.scale(g.add_n(parts), 1.0 / static_cast<double>(T * c));
  }
  VarSeq parts(T);
  for (std::size_t t = 0; t < T; ++t)
    parts[t] = g.cross_entropy_with_logits(
        tape.y_hat_rows[t], static_cast<std::size_t>(labels.categorical_values[t]));
  return g.scale(g.add_n(parts), 1.0 / static_cast<double>(T));
}

}  // namespace

ForwardResult forward(PipelineModel& model, const AlignedSample& sample,
                      const ForwardOptions& options) {
  Graph g;
  PipelineTape tape =
      build_tape(g, model, sample, options.forcing_labels, options.want_diagnostics);
  ForwardResult result;
  result.y_hat = rows_to_tensor(g, tape.y_hat_rows);
  if (options.want_diagnostics)
    result.diagnostics = collect_diagnostics(g, model, tape);
  return result;
}

double loss(const PipelineModel& model, const Tensor& y_hat, const LabelTrack& labels) {
  if (y_hat.rank() != 2 || y_hat.rows() != labels.timesteps())
    throw ShapeError("loss: prediction/label length mismatch");
  if (y_hat.cols() != model.config.y_out()) throw ShapeError("loss: output width mismatch");
  const std::size_t T = y_hat.rows();
  if (model.config.label_kind == LabelKind::continuous) {
    if (labels.kind != LabelKind::continuous || labels.channels() != y_hat.cols())
      throw ShapeError("loss: label kind/channel mismatch");
    double acc = 0.0;
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t c = 0; c < y_hat.cols(); ++c) {
        const double d = y_hat(t, c) - labels.continuous_values(t, c);
        acc += d * d;
      }
    return acc / static_cast<double>(T * y_hat.cols());
  }
  if (labels.kind != LabelKind::categorical) throw ShapeError("loss: label kind mismatch");
  double acc = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    double m = y_hat(t, 0);
    for (std::size_t c = 1; c < y_hat.cols(); ++c) m = std::max(m, y_hat(t, c));
    double lse = 0.0;
    for (std::size_t c = 0; c < y_hat.cols(); ++c) lse += std::exp(y_hat(t, c) - m);
    lse = m + std::log(lse);
    acc += lse - y_hat(t, static_cast<std::size_t>(labels.categorical_values[t]));
  }
  return acc / static_cast<double>(T);
}

// --- Training -----------------------------------------------------------------

namespace {

std::vector<Tensor> snapshot_values(std::span<Parameter* const> params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const Parameter* p : params) out.push_back(p->value);
  return out;
}

void restore_values(std::span<Parameter* const> params, const std::vector<Tensor>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

double validation_metric(PipelineModel& model, std::span<const AlignedSample> val_set) {
  if (model.config.label_kind == LabelKind::continuous) {
    double acc = 0.0;
    for (const auto& sample : val_set) {
      PredictResult pred = predict(model, sample);
      acc += mse(sample.labels.continuous_values, pred.y_hat);
    }
    return acc / static_cast<double>(val_set.size());
  }
  double acc = 0.0;
  for (const auto& sample : val_set) {
    PredictResult pred = predict(model, sample);
    acc += top1_accuracy(sample.labels.categorical_values, pred.classes);
  }
  return acc / static_cast<double>(val_set.size());
}

}  // namespace

TrainResult train(PipelineModel& model, std::span<const AlignedSample> train_set,
                  std::span<const AlignedSample> val_set) {
  model.config.validate();
  if (train_set.empty()) throw ConfigError("train set is empty");
  for (const auto& s : train_set) validate(s);

  const PipelineConfig& cfg = model.config;
  auto params = model.parameters();
  Optimizer optimizer(
      OptimizerConfig{.kind = cfg.optimizer, .lr = cfg.lr});
  const double lambda = cfg.effective_lambda();
  // continuous: minimize val MSE; categorical: maximize val accuracy
  const bool minimize = cfg.label_kind == LabelKind::continuous;

  RandomStream rng(cfg.seed);
  RandomStream shuffle_rng = rng.fork(17);

  TrainResult result;
  std::vector<Tensor> best = snapshot_values(params);
  double best_val = minimize ? std::numeric_limits<double>::infinity()
                             : -std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<Tensor> epoch_start = snapshot_values(params);
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t idx : order) {
      const AlignedSample& sample = train_set[idx];
      const LabelTrack* forcing = cfg.teacher_forcing ? &sample.labels : nullptr;
      Graph g;
      PipelineTape tape = build_tape(g, model, sample, forcing, false);
      Var objective = emotion_loss_tape(g, model, tape, sample.labels);
      const double emotion_value = g.value(objective)[0];
      if (cfg.use_gc && cfg.var_mode == VarTrainMode::joint && sample.timesteps() >= 2) {
        Var var_term =
            var_loss_tape(g, tape.enc_vars, tape.x_rows, model.encoder, cfg.ridge);
        objective = g.add(objective, g.scale(var_term, cfg.var_weight));
      }
      const double total_value = g.value(objective)[0];
      if (!std::isfinite(total_value)) {
        restore_values(params, epoch_start);
        throw DivergenceError("training loss became non-finite at epoch " +
                              std::to_string(epoch));
      }
      epoch_loss += emotion_value;
      Optimizer::zero_grad(params);
      g.backward(objective);
      optimizer.step(params);
      if (cfg.use_gc && cfg.var_mode == VarTrainMode::alternating && sample.timesteps() >= 2) {
        // Separate VAR step: plain gradient descent on the smooth VAR loss.
        auto enc_params = model.encoder.parameters();
        Optimizer::zero_grad(enc_params);
        Graph g2;
        ClstmVars enc_vars = bind(g2, model.encoder);
        std::vector<VarSeq> transformed(model.modality_count());
        for (std::size_t i = 0; i < model.modality_count(); ++i) {
          DenseVars phi_vars = bind(g2, model.phi[i]);
          transformed[i] =
              pi_transform_rows(g2, phi_vars, leaf_rows(g2, sample.streams[i].values));
        }
        VarSeq x_rows = stack_rows(g2, transformed);
        Var var_term = var_loss_tape(g2, enc_vars, x_rows, model.encoder, cfg.ridge);
        if (!std::isfinite(g2.value(var_term)[0])) {
          restore_values(params, epoch_start);
          throw DivergenceError("VAR loss became non-finite");
        }
        g2.backward(var_term);
        for (Parameter* p : enc_params)
          for (std::size_t i = 0; i < p->value.size(); ++i)
            p->value[i] -= cfg.lr_var * p->grad[i];
      }
      if (cfg.use_gc) prox_group_lasso(model.encoder, cfg.lr_var, lambda);
    }
    epoch_loss /= static_cast<double>(train_set.size());

    const double val_metric =
        val_set.empty() ? epoch_loss : validation_metric(model, val_set);
    result.history.push_back(TrainHistoryRow{epoch, epoch_loss, val_metric});
    const bool improved = minimize ? val_metric < best_val : val_metric > best_val;
    if (improved) {
      best_val = val_metric;
      best_epoch = epoch;
      best = snapshot_values(params);
    }
  }

  if (cfg.epochs > 0) restore_values(params, best);
  result.best_epoch = best_epoch;
  result.best_val = cfg.epochs > 0 ? best_val : 0.0;
  return result;
}

PredictResult predict(PipelineModel& model, const AlignedSample& sample) {
  ForwardResult fwd = forward(model, sample, ForwardOptions{});
  PredictResult out;
  out.y_hat = std::move(fwd.y_hat);
  if (model.config.label_kind == LabelKind::categorical) {
    out.classes.resize(out.y_hat.rows());
    for (std::size_t t = 0; t < out.y_hat.rows(); ++t) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < out.y_hat.cols(); ++c)
        if (out.y_hat(t, c) > out.y_hat(t, best)) best = c;
      out.classes[t] = static_cast<int>(best);
    }
  }
  return out;
}

// --- Evaluation -------------------------------------------------------------------

EvalReport evaluate(PipelineModel& model, std::span<const AlignedSample> samples) {
  EvalReport report;
  if (model.config.label_kind == LabelKind::continuous) {
    const std::size_t channels = model.config.y_out();
    const char* channel_names[2] = {"valence", "arousal"};
    std::vector<std::vector<std::pair<std::string, double>>> ccc_vals(channels),
        pearson_vals(channels), mse_vals(channels);
    std::vector<std::vector<std::string>> ccc_degen(channels), pearson_degen(channels);
    std::vector<std::pair<std::string, double>> overall_mse;
    for (const auto& sample : samples) {
      PredictResult pred = predict(model, sample);
      overall_mse.emplace_back(sample.sample_id,
                               mse(sample.labels.continuous_values, pred.y_hat));
      for (std::size_t ch = 0; ch < channels; ++ch) {
        std::vector<double> y(sample.timesteps()), yh(sample.timesteps());
        for (std::size_t t = 0; t < sample.timesteps(); ++t) {
          y[t] = sample.labels.continuous_values(t, ch);
          yh[t] = pred.y_hat(t, ch);
        }
        mse_vals[ch].emplace_back(sample.sample_id, mse(y, yh));
        try {
          ccc_vals[ch].emplace_back(sample.sample_id, ccc(y, yh));
        } catch (const DegenerateMetric&) {
          ccc_degen[ch].push_back(sample.sample_id);
        }
        try {
          pearson_vals[ch].emplace_back(sample.sample_id, pearson(y, yh));
        } catch (const DegenerateMetric&) {
          pearson_degen[ch].push_back(sample.sample_id);
        }
      }
    }
    report.metrics.push_back(aggregate_metric("mse", std::move(overall_mse)));
    for (std::size_t ch = 0; ch < channels; ++ch) {
      const std::string suffix = channel_names[ch];
      report.metrics.push_back(
          aggregate_metric("mse_" + suffix, std::move(mse_vals[ch])));
      report.metrics.push_back(aggregate_metric("ccc_" + suffix, std::move(ccc_vals[ch]),
                                                std::move(ccc_degen[ch])));
      report.metrics.push_back(aggregate_metric(
          "pearson_" + suffix, std::move(pearson_vals[ch]), std::move(pearson_degen[ch])));
    }
  } else {
    std::vector<std::pair<std::string, double>> acc;
    report.confusion = Tensor::matrix(27, 27);
    for (const auto& sample : samples) {
      PredictResult pred = predict(model, sample);
      acc.emplace_back(sample.sample_id,
                       top1_accuracy(sample.labels.categorical_values, pred.classes));
      Tensor cm = confusion_matrix(sample.labels.categorical_values, pred.classes);
      for (std::size_t i = 0; i < cm.size(); ++i) report.confusion[i] += cm[i];
    }
    report.metrics.push_back(aggregate_metric("top1_accuracy", std::move(acc)));
  }
  return report;
}

// --- Persistence ---------------------------------------------------------------------

namespace {

json config_to_json(const PipelineModel& model) {
  const PipelineConfig& c = model.config;
  return json{{"kind", "pipeline"},
              {"embed_dim", c.embed_dim},
              {"hidden", c.hidden},
              {"hidden_dec", c.hidden_dec},
              {"label_kind", c.label_kind == LabelKind::continuous ? "continuous" : "categorical"},
              {"label_channels", c.label_channels},
              {"attention_width", c.attention_width},
              {"use_coattention", c.use_coattention},
              {"use_gc", c.use_gc},
              {"teacher_forcing", c.teacher_forcing},
              {"loss_one_minus_ccc", c.loss_one_minus_ccc},
              {"var_mode", c.var_mode == VarTrainMode::joint ? "joint" : "alternating"},
              {"var_weight", c.var_weight},
              {"optimizer", c.optimizer == OptimizerKind::rmsprop ? "rmsprop" : "adam"},
              {"lr", c.lr},
              {"lr_var", c.lr_var},
              {"epochs", c.epochs},
              {"seed", c.seed},
              {"lambda_group", c.lambda_group},
              {"ridge", c.ridge},
              {"nonsmooth_param", c.nonsmooth_param},
              {"epsilon", c.epsilon},
              {"feature_dims", model.feature_dims}};
}

PipelineConfig config_from_json(const json& j) {
  PipelineConfig c;
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.hidden_dec = j.at("hidden_dec").get<std::size_t>();
  c.label_kind = j.at("label_kind").get<std::string>() == "continuous"
                     ? LabelKind::continuous
                     : LabelKind::categorical;
  c.label_channels = j.at("label_channels").get<std::size_t>();
  c.attention_width = j.at("attention_width").get<std::size_t>();
  c.use_coattention = j.at("use_coattention").get<bool>();
  c.use_gc = j.at("use_gc").get<bool>();
  c.teacher_forcing = j.at("teacher_forcing").get<bool>();
  c.loss_one_minus_ccc = j.at("loss_one_minus_ccc").get<bool>();
  c.var_mode = j.at("var_mode").get<std::string>() == "joint" ? VarTrainMode::joint
                                                              : VarTrainMode::alternating;
  c.var_weight = j.at("var_weight").get<double>();
  c.optimizer = j.at("optimizer").get<std::string>() == "rmsprop" ? OptimizerKind::rmsprop
                                                                  : OptimizerKind::adam;
  c.lr = j.at("lr").get<double>();
  c.lr_var = j.at("lr_var").get<double>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.lambda_group = j.at("lambda_group").get<double>();
  c.ridge = j.at("ridge").get<double>();
  c.nonsmooth_param = j.at("nonsmooth_param").get<double>();
  c.epsilon = j.at("epsilon").get<double>();
  return c;
}

}  // namespace

void save_pipeline(const std::filesystem::path& path, PipelineModel& model) {
  auto params = model.parameters();
  save_parameters(path, params, config_to_json(model).dump());
}

PipelineModel load_pipeline(const std::filesystem::path& path) {
  LoadedParameters loaded = load_parameters(path);
  json j;
  try {
    j = json::parse(loaded.config_json);
  } catch (const json::exception&) {
    throw IoError("checkpoint config echo is not valid JSON");
  }
  if (j.value("kind", "") != "pipeline") throw ConfigError("checkpoint is not a pipeline model");
  PipelineConfig config = config_from_json(j);
  auto feature_dims = j.at("feature_dims").get<std::vector<std::size_t>>();
  PipelineModel model = make_pipeline(config, std::move(feature_dims));
  auto params = model.parameters();
  restore_parameters(loaded, params);
  return model;
}

void write_history_csv(const std::filesystem::path& path,
                       std::span<const TrainHistoryRow> history) {
  std::ostringstream out;
  out << "epoch,train_loss,val_metric\n";
  for (const auto& row : history)
    out << row.epoch << "," << format_real(row.train_loss) << ","
        << format_real(row.val_metric) << "\n";
  write_text_file(path, out.str());
}

void write_predictions_csv(const std::filesystem::path& path, const std::string& sample_id,
                           const PredictResult& prediction, LabelKind kind,
                           const LabelTrack* labels) {
  std::ostringstream out;
  const Tensor& y = prediction.y_hat;
  if (kind == LabelKind::continuous) {
    out << "sample_id,t,valence";
    if (y.cols() == 2) out << ",arousal";
    if (labels != nullptr) {
      out << ",label_valence";
      if (labels->channels() == 2) out << ",label_arousal";
    }
    out << "\n";
    for (std::size_t t = 0; t < y.rows(); ++t) {
      out << csv_escape(sample_id) << "," << t;
      for (std::size_t c = 0; c < y.cols(); ++c) out << "," << format_real(y(t, c));
      if (labels != nullptr)
        for (std::size_t c = 0; c < labels->channels(); ++c)
          out << "," << format_real(labels->continuous_values(t, c));
      out << "\n";
    }
  } else {
    out << "sample_id,t,class";
    for (int c = 0; c < kEmotionClassCount; ++c) out << ",logit_" << c;
    if (labels != nullptr) out << ",label_class";
    out << "\n";
    for (std::size_t t = 0; t < y.rows(); ++t) {
      out << csv_escape(sample_id) << "," << t << "," << prediction.classes[t];
      for (std::size_t c = 0; c < y.cols(); ++c) out << "," << format_real(y(t, c));
      if (labels != nullptr) out << "," << labels->categorical_values[t];
      out << "\n";
    }
  }
  write_text_file(path, out.str());
}

void write_relevance_csv(const std::filesystem::path& path,
                         std::span<const CoAttentionMap> maps) {
  std::ostringstream out;
  const std::size_t T = maps.empty() ? 0 : maps[0].relevance.size();
  out << "pair";
  for (std::size_t t = 0; t < T; ++t) out << ",t" << t;
  out << "\n";
  for (const auto& map : maps) {
    out << "f_" << map.pair.first << "-f_" << map.pair.second;
    for (std::size_t t = 0; t < T; ++t) out << "," << format_real(map.relevance[t]);
    out << "\n";
  }
  write_text_file(path, out.str());
}

}  // namespace emots
