#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "emots/autodiff.hpp"
#include "emots/clstm.hpp"
#include "emots/coattention.hpp"
#include "emots/metrics.hpp"
#include "emots/nn.hpp"
#include "emots/timeseries.hpp"

namespace emots {

enum class VarTrainMode { joint, alternating };

struct PipelineConfig {
  std::size_t embed_dim = 16;   // E
  std::size_t hidden = 32;      // h (encoder, per component)
  std::size_t hidden_dec = 32;  // decoder hidden size
  LabelKind label_kind = LabelKind::continuous;
  std::size_t label_channels = 1;  // continuous only: 1 or 2
  std::size_t attention_width = 0; // 0 -> embed_dim

  bool use_coattention = true;
  bool use_gc = true;
  bool teacher_forcing = true;
  bool loss_one_minus_ccc = false;  // continuous training loss variant
  VarTrainMode var_mode = VarTrainMode::joint;
  double var_weight = 0.1;

  OptimizerKind optimizer = OptimizerKind::rmsprop;
  double lr = 1e-3;
  double lr_var = 1e-3;  // prox step scale (joint) / VAR step size (alternating)
  std::size_t epochs = 50;
  std::uint64_t seed = 0;

  double lambda_group = 1.0;
  double ridge = 1e-4;
  double nonsmooth_param = 1e-3;
  double epsilon = 1e-3;  // GC adjacency threshold

  std::size_t y_out() const {
    return label_kind == LabelKind::continuous ? label_channels
                                               : static_cast<std::size_t>(kEmotionClassCount);
  }
  std::size_t y_dim() const { return y_out(); }  // decoder label-feedback width
  double effective_lambda() const { return lambda_group * nonsmooth_param; }
  void validate() const;
};

// End-to-end model: per-modality embeddings, cLSTM encoder, one co-attention
// block per unordered modality pair (lexicographic order), the relevance->gate
// map, the autoregressive LSTM decoder and the two-layer output head (inner
// width fixed at 4).
struct PipelineModel {
  PipelineConfig config;
  std::vector<std::size_t> feature_dims;  // d_i, in stream order
  std::vector<Dense> phi;                 // d_i -> E
  ClstmEncoder encoder;
  std::vector<CoAttentionParams> coatt;   // m = p choose 2
  Dense gate;                             // m -> p*h
  LstmCellParams decoder;                 // input p*h + y_dim
  Dense head_hidden;                      // h_dec -> 4
  Dense head_out;                         // 4 -> y_out

  std::size_t modality_count() const { return feature_dims.size(); }
  std::size_t pair_count() const {
    const std::size_t p = feature_dims.size();
    return p * (p - 1) / 2;
  }
  // Unordered pairs (i < j), 0-based stream indices, lexicographic.
  std::vector<std::pair<std::size_t, std::size_t>> pairs() const;
  std::vector<Parameter*> parameters();
};

PipelineModel make_pipeline(const PipelineConfig& config,
                            std::vector<std::size_t> feature_dims);

// --- Forward -----------------------------------------------------------------

struct Diagnostics {
  std::vector<CoAttentionMap> maps;  // m entries (empty when co-attention off)
  Tensor h_enc;                      // T x p*h
  Tensor gates;                      // T x p*h (all ones when co-attention off)
};

struct ForwardResult {
  Tensor y_hat;  // T x y_out (logits for categorical labels)
  std::optional<Diagnostics> diagnostics;
};

struct ForwardOptions {
  // Non-null: teacher forcing with these labels; null: autoregressive.
  const LabelTrack* forcing_labels = nullptr;
  bool want_diagnostics = false;
};

ForwardResult forward(PipelineModel& model, const AlignedSample& sample,
                      const ForwardOptions& options = {});

// Emotion term of the training objective: continuous -> mean squared error
// over timesteps and channels; categorical -> mean cross-entropy of the
// softmaxed logits. (The VAR term and the group penalty are applied by
// train(): the former is weighted into the objective, the latter through the
// proximal step.)
double loss(const PipelineModel& model, const Tensor& y_hat, const LabelTrack& labels);

// --- Training -----------------------------------------------------------------

struct TrainHistoryRow {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_metric = 0.0;  // continuous: mean MSE; categorical: top-1 accuracy
};

struct TrainResult {
  std::vector<TrainHistoryRow> history;
  std::size_t best_epoch = 0;
  double best_val = 0.0;
};

// Batch-size-1 loop: teacher-forced forward, backward, optimizer step, then
// the group-lasso proximal step when use_gc. The best-validation parameters
// are restored into the model on return. Throws DivergenceError (with the
// last epoch snapshot restored) if the loss goes non-finite.
TrainResult train(PipelineModel& model, std::span<const AlignedSample> train_set,
                  std::span<const AlignedSample> val_set);

struct PredictResult {
  Tensor y_hat;              // T x y_out
  std::vector<int> classes;  // argmax per timestep (categorical only)
};

// Autoregressive inference (no teacher forcing).
PredictResult predict(PipelineModel& model, const AlignedSample& sample);

// --- Evaluation ----------------------------------------------------------------

struct EvalReport {
  std::vector<MetricResult> metrics;
  Tensor confusion;  // 27 x 27 for categorical label sets; empty otherwise
};

EvalReport evaluate(PipelineModel& model, std::span<const AlignedSample> samples);

// --- Persistence ------------------------------------------------------------------

void save_pipeline(const std::filesystem::path& path, PipelineModel& model);
PipelineModel load_pipeline(const std::filesystem::path& path);

void write_history_csv(const std::filesystem::path& path,
                       std::span<const TrainHistoryRow> history);

// `sample_id,t,...` rows; continuous columns valence[,arousal] plus label
// echoes when labels are given, categorical columns class,logit_0..logit_26.
void write_predictions_csv(const std::filesystem::path& path, const std::string& sample_id,
                           const PredictResult& prediction, LabelKind kind,
                           const LabelTrack* labels = nullptr);

// Per-pair relevance tracks: rows labeled "f_{k1}-f_{k2}", columns timesteps.
void write_relevance_csv(const std::filesystem::path& path,
                         std::span<const CoAttentionMap> maps);

}  // namespace emots
