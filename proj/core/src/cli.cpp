#include "emots/cli.hpp"

#include <chrono>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "emots/clstm.hpp"
#include "emots/csv.hpp"
#include "emots/errors.hpp"
#include "emots/metrics.hpp"
#include "emots/pipeline.hpp"

namespace emots {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------- run config

struct RunConfig {
  // synth
  std::size_t p = 4, d = 1, T = 200, n_samples = 20;
  double density = 0.3, coeff_scale = 0.5, noise_std = 0.1;
  std::size_t lag = 1;
  double split_train = 0.7, split_val = 0.15, split_test = 0.15;

  PipelineConfig pipeline;

  std::string data_dir, splits_path, checkpoint_path, sample_dir, truth_path;
  std::string out_dir = ".";
  std::string split_name = "test";
  std::uint64_t seed = 0;
};

const std::set<std::string>& schema() {
  static const std::set<std::string> keys = {
      // synth
      "p", "d", "T", "n_samples", "density", "coeff_scale", "noise_std", "lag",
      "split_train", "split_val", "split_test",
      // model / training
      "embed_dim", "hidden", "hidden_dec", "label_kind", "label_channels",
      "attention_width", "use_coattention", "use_gc", "teacher_forcing",
      "loss_one_minus_ccc", "var_mode", "var_weight", "optimizer", "lr", "lr_var",
      "epochs", "lambda_group", "ridge", "nonsmooth_param", "epsilon",
      // paths and selection
      "data_dir", "splits", "checkpoint", "sample", "truth", "out_dir", "split",
      "seed",
  };
  return keys;
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("key '" + key + "' expects a boolean, got '" + v + "'");
}

std::map<std::string, std::string> parse_config_file(const fs::path& path) {
  const std::string text = read_text_file(path);
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string trimmed = lowercase_trim(line);
    if (trimmed.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + " is not 'key = value'");
    std::string key = lowercase_trim(line.substr(0, eq));
    // Values keep their case (paths); only trim them.
    std::string value = line.substr(eq + 1);
    while (!value.empty() && std::isspace(static_cast<unsigned char>(value.front())))
      value.erase(value.begin());
    while (!value.empty() && std::isspace(static_cast<unsigned char>(value.back())))
      value.pop_back();
    if (!schema().count(key)) throw ConfigError("unknown config key '" + key + "'");
    if (!out.emplace(key, value).second)
      throw ConfigError("duplicate config key '" + key + "'");
  }
  return out;
}

std::size_t to_size(const std::string& v, const std::string& key) {
  const long n = parse_integer(v);
  if (n < 0) throw ConfigError("key '" + key + "' must be >= 0");
  return static_cast<std::size_t>(n);
}

void apply_config(RunConfig& cfg, const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    try {
      if (key == "p") cfg.p = to_size(value, key);
      else if (key == "d") cfg.d = to_size(value, key);
      else if (key == "t") cfg.T = to_size(value, key);
      else if (key == "n_samples") cfg.n_samples = to_size(value, key);
      else if (key == "density") cfg.density = parse_real(value);
      else if (key == "coeff_scale") cfg.coeff_scale = parse_real(value);
      else if (key == "noise_std") cfg.noise_std = parse_real(value);
      else if (key == "lag") cfg.lag = to_size(value, key);
      else if (key == "split_train") cfg.split_train = parse_real(value);
      else if (key == "split_val") cfg.split_val = parse_real(value);
      else if (key == "split_test") cfg.split_test = parse_real(value);
      else if (key == "embed_dim") cfg.pipeline.embed_dim = to_size(value, key);
      else if (key == "hidden") cfg.pipeline.hidden = to_size(value, key);
      else if (key == "hidden_dec") cfg.pipeline.hidden_dec = to_size(value, key);
      else if (key == "label_kind") {
        if (value == "continuous") cfg.pipeline.label_kind = LabelKind::continuous;
        else if (value == "categorical") cfg.pipeline.label_kind = LabelKind::categorical;
        else throw ConfigError("label_kind must be continuous or categorical");
      } else if (key == "label_channels") cfg.pipeline.label_channels = to_size(value, key);
      else if (key == "attention_width") cfg.pipeline.attention_width = to_size(value, key);
      else if (key == "use_coattention") cfg.pipeline.use_coattention = parse_bool(value, key);
      else if (key == "use_gc") cfg.pipeline.use_gc = parse_bool(value, key);
      else if (key == "teacher_forcing") cfg.pipeline.teacher_forcing = parse_bool(value, key);
      else if (key == "loss_one_minus_ccc")
        cfg.pipeline.loss_one_minus_ccc = parse_bool(value, key);
      else if (key == "var_mode") {
        if (value == "joint") cfg.pipeline.var_mode = VarTrainMode::joint;
        else if (value == "alternating") cfg.pipeline.var_mode = VarTrainMode::alternating;
        else throw ConfigError("var_mode must be joint or alternating");
      } else if (key == "var_weight") cfg.pipeline.var_weight = parse_real(value);
      else if (key == "optimizer") {
        if (value == "rmsprop") cfg.pipeline.optimizer = OptimizerKind::rmsprop;
        else if (value == "adam") cfg.pipeline.optimizer = OptimizerKind::adam;
        else throw ConfigError("optimizer must be rmsprop or adam");
      } else if (key == "lr") cfg.pipeline.lr = parse_real(value);
      else if (key == "lr_var") cfg.pipeline.lr_var = parse_real(value);
      else if (key == "epochs") cfg.pipeline.epochs = to_size(value, key);
      else if (key == "lambda_group") cfg.pipeline.lambda_group = parse_real(value);
      else if (key == "ridge") cfg.pipeline.ridge = parse_real(value);
      else if (key == "nonsmooth_param") cfg.pipeline.nonsmooth_param = parse_real(value);
      else if (key == "epsilon") cfg.pipeline.epsilon = parse_real(value);
      else if (key == "data_dir") cfg.data_dir = value;
      else if (key == "splits") cfg.splits_path = value;
      else if (key == "checkpoint") cfg.checkpoint_path = value;
      else if (key == "sample") cfg.sample_dir = value;
      else if (key == "truth") cfg.truth_path = value;
      else if (key == "out_dir") cfg.out_dir = value;
      else if (key == "split") cfg.split_name = value;
      else if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(parse_integer(value));
        cfg.pipeline.seed = cfg.seed;
      }
    } catch (const IngestError& e) {
      throw ConfigError("bad value for key '" + key + "': " + e.what());
    }
  }
}

json config_echo(const RunConfig& cfg, const std::string& command) {
  return json{{"command", command},
              {"p", cfg.p},
              {"d", cfg.d},
              {"T", cfg.T},
              {"n_samples", cfg.n_samples},
              {"density", cfg.density},
              {"coeff_scale", cfg.coeff_scale},
              {"noise_std", cfg.noise_std},
              {"lag", cfg.lag},
              {"embed_dim", cfg.pipeline.embed_dim},
              {"hidden", cfg.pipeline.hidden},
              {"hidden_dec", cfg.pipeline.hidden_dec},
              {"use_coattention", cfg.pipeline.use_coattention},
              {"use_gc", cfg.pipeline.use_gc},
              {"var_weight", cfg.pipeline.var_weight},
              {"optimizer",
               cfg.pipeline.optimizer == OptimizerKind::rmsprop ? "rmsprop" : "adam"},
              {"lr", cfg.pipeline.lr},
              {"lr_var", cfg.pipeline.lr_var},
              {"epochs", cfg.pipeline.epochs},
              {"lambda_group", cfg.pipeline.lambda_group},
              {"ridge", cfg.pipeline.ridge},
              {"nonsmooth_param", cfg.pipeline.nonsmooth_param},
              {"epsilon", cfg.pipeline.epsilon},
              {"seed", cfg.seed}};
}

void write_manifest(const fs::path& dir, const RunConfig& cfg, const std::string& command,
                    double wall_ms, json extra = json::object()) {
  json m{{"format_version", 1},
         {"config", config_echo(cfg, command)},
         {"seed", cfg.seed},
         {"wall_time_ms", wall_ms}};
  for (auto& [k, v] : extra.items()) m[k] = v;
  write_text_file(dir / "manifest.json", m.dump(2) + "\n");
}

struct Stopwatch {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
  }
};

void require_exists(const std::string& path, const std::string& what) {
  if (path.empty()) throw ConfigError(what + " path not set");
  if (!fs::exists(path)) throw ConfigError(what + " does not exist: " + path);
}

std::string sample_name(std::size_t index, std::size_t total) {
  std::size_t width = 3;
  while (total > std::size_t(1) << (10 * width)) ++width;  // keeps names sortable
  std::ostringstream out;
  out << "s";
  std::string digits = std::to_string(index);
  while (digits.size() < width) digits.insert(digits.begin(), '0');
  out << digits;
  return out.str();
}

// ---------------------------------------------------------------- commands

int cmd_synth(const RunConfig& cfg) {
  Stopwatch watch;
  if (cfg.p < 2) throw ConfigError("synth needs p >= 2");
  if (cfg.n_samples < 1) throw ConfigError("synth needs n_samples >= 1");
  const fs::path out(cfg.out_dir);
  fs::create_directories(out / "samples");

  SyntheticSpec spec;
  spec.p = cfg.p;
  spec.d = cfg.d;
  spec.T = cfg.T;
  spec.coeff_scale = cfg.coeff_scale;
  spec.noise_std = cfg.noise_std;
  spec.lag = cfg.lag;
  spec.adjacency = random_adjacency(cfg.p, cfg.density, cfg.seed);

  RandomStream rng(cfg.seed);
  std::vector<std::string> ids;
  for (std::size_t n = 0; n < cfg.n_samples; ++n) {
    spec.seed = rng.next_u64();
    auto [sample, truth] = generate_var(spec);
    sample.sample_id = sample_name(n, cfg.n_samples);
    ids.push_back(sample.sample_id);
    write_sample_dir(out / "samples" / sample.sample_id, sample);
  }
  write_adjacency_csv(out / "gc_truth.csv", spec.adjacency, cfg.p);

  SplitIndices idx = split_samples(
      cfg.n_samples, SplitFractions{cfg.split_train, cfg.split_val, cfg.split_test}, cfg.seed);
  std::map<std::string, std::string> assignment;
  for (std::size_t i : idx.train) assignment[ids[i]] = "train";
  for (std::size_t i : idx.val) assignment[ids[i]] = "val";
  for (std::size_t i : idx.test) assignment[ids[i]] = "test";
  write_split_file(out / "splits.csv", assignment);

  json extra{{"p", cfg.p}, {"d", cfg.d}, {"T", cfg.T}, {"n_samples", cfg.n_samples},
             {"label_kind", "continuous"}, {"sample_ids", ids}};
  write_manifest(out, cfg, "synth", watch.ms(), extra);
  std::cout << "wrote " << cfg.n_samples << " samples to " << out.string() << "\n";
  return 0;
}

SampleSplits load_and_split(const RunConfig& cfg, Dataset& dataset) {
  require_exists(cfg.data_dir, "data_dir");
  dataset = load_dataset(cfg.data_dir);
  const std::string splits =
      cfg.splits_path.empty() ? (fs::path(cfg.data_dir) / "splits.csv").string()
                              : cfg.splits_path;
  require_exists(splits, "splits");
  return apply_split_file(dataset.samples, load_split_file(splits));
}

int cmd_train(RunConfig cfg) {
  Stopwatch watch;
  Dataset dataset;
  SampleSplits splits = load_and_split(cfg, dataset);
  if (splits.train.empty()) throw ConfigError("train split is empty");

  cfg.pipeline.label_kind = dataset.label_kind;
  if (dataset.label_kind == LabelKind::continuous)
    cfg.pipeline.label_channels = dataset.samples.front().labels.channels();

  std::vector<std::size_t> dims;
  for (const auto& s : splits.train.front().streams) dims.push_back(s.dim());
  PipelineModel model = make_pipeline(cfg.pipeline, dims);

  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  TrainResult result;
  try {
    result = train(model, splits.train, splits.val);
  } catch (const DivergenceError&) {
    save_pipeline(out / "checkpoint.bin", model);  // last stable parameters
    throw;
  }
  save_pipeline(out / "checkpoint.bin", model);
  write_history_csv(out / "history.csv", result.history);
  if (cfg.pipeline.use_gc) {
    GCMatrix gc = extract_gc(model.encoder, cfg.pipeline.epsilon);
    write_gc_report(out / "gc_report.csv", gc, cfg.pipeline.effective_lambda());
  }
  json extra{{"best_epoch", result.best_epoch}, {"best_val", result.best_val}};
  write_manifest(out, cfg, "train", watch.ms(), extra);
  std::cout << "trained " << cfg.pipeline.epochs << " epochs; checkpoint at "
            << (out / "checkpoint.bin").string() << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg) {
  Stopwatch watch;
  require_exists(cfg.checkpoint_path, "checkpoint");
  PipelineModel model = load_pipeline(cfg.checkpoint_path);
  Dataset dataset;
  RunConfig local = cfg;
  SampleSplits splits = load_and_split(local, dataset);
  if (dataset.label_kind != model.config.label_kind)
    throw ConfigError("dataset label kind does not match checkpoint");

  std::span<const AlignedSample> chosen;
  if (cfg.split_name == "train") chosen = splits.train;
  else if (cfg.split_name == "val") chosen = splits.val;
  else if (cfg.split_name == "test") chosen = splits.test;
  else throw ConfigError("split must be train, val or test");
  if (chosen.empty()) throw ConfigError("selected split '" + cfg.split_name + "' is empty");

  EvalReport report = evaluate(model, chosen);
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  write_metrics_csv(out / "metrics.csv", report.metrics);
  if (model.config.label_kind == LabelKind::categorical)
    write_confusion_csv(out / "confusion.csv", report.confusion);
  write_manifest(out, cfg, "eval", watch.ms());
  for (const auto& m : report.metrics)
    std::cout << m.name << " (mean over " << m.per_sample.size()
              << " samples): " << format_real(m.value) << "\n";
  return 0;
}

int cmd_gc(const RunConfig& cfg) {
  Stopwatch watch;
  require_exists(cfg.checkpoint_path, "checkpoint");
  PipelineModel model = load_pipeline(cfg.checkpoint_path);
  GCMatrix gc = extract_gc(model.encoder, cfg.pipeline.epsilon);
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  write_gc_report(out / "gc_report.csv", gc, cfg.pipeline.effective_lambda());

  if (!cfg.truth_path.empty()) {
    require_exists(cfg.truth_path, "truth");
    const std::size_t p = model.modality_count();
    auto truth_adj = load_adjacency_csv(cfg.truth_path, p);
    Tensor truth_strengths = Tensor::matrix(p, p);
    for (std::size_t i = 0; i < p * p; ++i) truth_strengths[i] = truth_adj[i] ? 1.0 : 0.0;
    GCMatrix truth = make_gc_matrix(std::move(truth_strengths), 0.5);
    GcComparison c = compare_gc(gc, truth);
    std::ostringstream report;
    report << "metric,value\n";
    report << "precision," << format_real(c.precision) << "\n";
    report << "recall," << format_real(c.recall) << "\n";
    report << "accuracy," << format_real(c.accuracy) << "\n";
    write_text_file(out / "gc_eval.csv", report.str());
    std::cout << "gc edge accuracy vs truth: " << format_real(c.accuracy) << "\n";
  }
  write_manifest(out, cfg, "gc", watch.ms());
  std::cout << "gc report written to " << (out / "gc_report.csv").string() << "\n";
  return 0;
}

int cmd_predict(const RunConfig& cfg) {
  Stopwatch watch;
  require_exists(cfg.checkpoint_path, "checkpoint");
  require_exists(cfg.sample_dir, "sample");
  PipelineModel model = load_pipeline(cfg.checkpoint_path);
  AlignedSample sample = load_sample_dir(cfg.sample_dir, model.modality_count());

  ForwardOptions opts;
  opts.want_diagnostics = model.config.use_coattention;
  ForwardResult fwd = forward(model, sample, opts);
  PredictResult pred;
  pred.y_hat = fwd.y_hat;
  if (model.config.label_kind == LabelKind::categorical) {
    pred.classes.resize(pred.y_hat.rows());
    for (std::size_t t = 0; t < pred.y_hat.rows(); ++t) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < pred.y_hat.cols(); ++c)
        if (pred.y_hat(t, c) > pred.y_hat(t, best)) best = c;
      pred.classes[t] = static_cast<int>(best);
    }
  }

  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  const LabelTrack* labels =
      sample.labels.timesteps() == sample.timesteps() &&
              sample.labels.kind == model.config.label_kind
          ? &sample.labels
          : nullptr;
  write_predictions_csv(out / "predictions.csv", sample.sample_id, pred,
                        model.config.label_kind, labels);
  if (fwd.diagnostics.has_value() && !fwd.diagnostics->maps.empty())
    write_relevance_csv(out / "coattention.csv", fwd.diagnostics->maps);
  write_manifest(out, cfg, "predict", watch.ms());
  std::cout << "predictions written to " << (out / "predictions.csv").string() << "\n";
  return 0;
}

}  // namespace

// ---------------------------------------------------------------- dataset io

void write_sample_dir(const fs::path& dir, const AlignedSample& sample) {
  fs::create_directories(dir);
  for (const auto& stream : sample.streams)
    write_modality_csv(dir / ("modality_" + std::to_string(stream.modality_id) + ".csv"),
                       stream);
  write_label_csv(dir / "labels.csv", sample.labels);
}

AlignedSample load_sample_dir(const fs::path& dir, std::size_t p) {
  std::vector<FeatureStream> streams;
  for (std::size_t k = 1; k <= p; ++k) {
    const fs::path path = dir / ("modality_" + std::to_string(k) + ".csv");
    if (!fs::exists(path)) throw IoError("missing " + path.string());
    streams.push_back(load_modality_csv(path, static_cast<int>(k)));
  }
  LabelTrack labels;
  const fs::path label_path = dir / "labels.csv";
  if (fs::exists(label_path)) {
    labels = load_label_csv(label_path);
  } else {
    // Placeholder constant track so alignment invariants hold for unlabeled
    // prediction inputs.
    labels.kind = LabelKind::continuous;
    labels.continuous_values = Tensor::matrix(streams.front().timesteps(), 1);
  }
  AlignedSample sample =
      align_streams(std::move(streams), std::move(labels), AlignPolicy::strict,
                    dir.filename().string());
  return sample;
}

Dataset load_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw IoError("missing manifest: " + manifest_path.string());
  json manifest;
  try {
    manifest = json::parse(read_text_file(manifest_path));
  } catch (const json::exception& e) {
    throw IoError("bad manifest: " + std::string(e.what()));
  }
  Dataset dataset;
  dataset.p = manifest.at("p").get<std::size_t>();
  dataset.label_kind = manifest.at("label_kind").get<std::string>() == "categorical"
                           ? LabelKind::categorical
                           : LabelKind::continuous;
  for (const auto& id : manifest.at("sample_ids").get<std::vector<std::string>>()) {
    AlignedSample sample = load_sample_dir(dir / "samples" / id, dataset.p);
    sample.sample_id = id;
    dataset.samples.push_back(std::move(sample));
  }
  return dataset;
}

std::vector<std::uint8_t> load_adjacency_csv(const fs::path& path, std::size_t p) {
  const std::string text = read_text_file(path);
  std::vector<std::uint8_t> adj;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ','))
      adj.push_back(parse_integer(cell) != 0 ? 1 : 0);
  }
  if (adj.size() != p * p) throw IoError("adjacency file is not p x p");
  return adj;
}

void write_adjacency_csv(const fs::path& path, const std::vector<std::uint8_t>& adjacency,
                         std::size_t p) {
  std::ostringstream out;
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = 0; k < p; ++k) {
      if (k) out << ",";
      out << (adjacency[j * p + k] ? 1 : 0);
    }
    out << "\n";
  }
  write_text_file(path, out.str());
}

// ---------------------------------------------------------------- entry point

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"multimodal time-series emotion prediction with causal discovery"};
  app.require_subcommand(1);

  std::string config_path, out_dir, data_dir, splits, checkpoint, sample_dir, truth, split_name;
  std::uint64_t seed = 0;
  bool no_coattention = false, no_gc = false;
  std::size_t epochs = 0;
  double lr = 0.0, lambda_group = 0.0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "flat key = value config file");
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--out", out_dir, "output directory");
  };

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic VAR dataset");
  add_common(synth);

  CLI::App* train_cmd = app.add_subcommand("train", "train the emotion pipeline");
  add_common(train_cmd);
  train_cmd->add_option("--data", data_dir, "dataset directory");
  train_cmd->add_option("--splits", splits, "split file (defaults to <data>/splits.csv)");
  train_cmd->add_flag("--no-coattention", no_coattention, "disable co-attention fusion");
  train_cmd->add_flag("--no-gc", no_gc, "disable Granger-causality (VAR) training");
  train_cmd->add_option("--epochs", epochs, "training epochs");
  train_cmd->add_option("--lr", lr, "learning rate");
  train_cmd->add_option("--lambda-group", lambda_group, "group-lasso weight");

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a split");
  add_common(eval_cmd);
  eval_cmd->add_option("--data", data_dir, "dataset directory");
  eval_cmd->add_option("--splits", splits, "split file");
  eval_cmd->add_option("--checkpoint", checkpoint, "model checkpoint");
  eval_cmd->add_option("--split", split_name, "train, val or test (default test)");

  CLI::App* gc_cmd = app.add_subcommand("gc", "extract the Granger-causality report");
  add_common(gc_cmd);
  gc_cmd->add_option("--checkpoint", checkpoint, "model checkpoint");
  gc_cmd->add_option("--truth", truth, "ground-truth adjacency CSV for comparison");

  CLI::App* predict_cmd = app.add_subcommand("predict", "predict one sample");
  add_common(predict_cmd);
  predict_cmd->add_option("--checkpoint", checkpoint, "model checkpoint");
  predict_cmd->add_option("--sample", sample_dir, "sample directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      std::cout << app.help();
      return 0;
    }
    std::cerr << "error: CliError: " << e.what() << "\n";
    return 1;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) {
      require_exists(config_path, "config");
      apply_config(cfg, parse_config_file(config_path));
    }
    // CLI flags override file values.
    auto chosen = app.get_subcommands().front();
    auto is_set = [&](const std::string& flag) {
      const CLI::Option* opt = chosen->get_option_no_throw(flag);
      return opt != nullptr && opt->count() > 0;
    };
    if (is_set("--seed")) {
      cfg.seed = seed;
      cfg.pipeline.seed = seed;
    }
    if (is_set("--out")) cfg.out_dir = out_dir;
    if (is_set("--data")) cfg.data_dir = data_dir;
    if (is_set("--splits")) cfg.splits_path = splits;
    if (is_set("--checkpoint")) cfg.checkpoint_path = checkpoint;
    if (is_set("--sample")) cfg.sample_dir = sample_dir;
    if (is_set("--truth")) cfg.truth_path = truth;
    if (is_set("--split")) cfg.split_name = split_name;
    if (no_coattention) cfg.pipeline.use_coattention = false;
    if (no_gc) cfg.pipeline.use_gc = false;
    if (is_set("--epochs")) cfg.pipeline.epochs = epochs;
    if (is_set("--lr")) cfg.pipeline.lr = lr;
    if (is_set("--lambda-group")) cfg.pipeline.lambda_group = lambda_group;

    if (chosen == synth) return cmd_synth(cfg);
    if (chosen == train_cmd) return cmd_train(cfg);
    if (chosen == eval_cmd) return cmd_eval(cfg);
    if (chosen == gc_cmd) return cmd_gc(cfg);
    if (chosen == predict_cmd) return cmd_predict(cfg);
    throw ConfigError("no command selected");
  } catch (const Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: InternalError: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace emots
