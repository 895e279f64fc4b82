#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "emots/autodiff.hpp"
#include "emots/random.hpp"
#include "emots/tensor.hpp"

namespace emots {

// Dense layer y = Wx + b.
struct Dense {
  Parameter weight;  // out x in
  Parameter bias;    // out
  std::size_t in() const { return weight.value.cols(); }
  std::size_t out() const { return weight.value.rows(); }
};

struct DenseVars {
  Var w, b;
};

// LSTM cell parameters. Gate blocks are stacked along the rows of the 4h-row
// matrices in the fixed order: input, forget, cell candidate, output. The
// forget-gate bias block is initialized to 1, all other biases to 0.
struct LstmCellParams {
  Parameter input_weights;      // 4h x n
  Parameter recurrent_weights;  // 4h x h
  Parameter bias;               // 4h
  std::size_t hidden_size() const { return recurrent_weights.value.cols(); }
  std::size_t input_size() const { return input_weights.value.cols(); }
};

struct LstmVars {
  Var wx, wh, b;
  std::size_t hidden = 0;
};

struct LstmState {
  Var h, c;
};

// Xavier-uniform fill: U(-L, L) with L = sqrt(6 / (fan_in + fan_out)).
void xavier_uniform(Tensor& m, RandomStream& rng);

// Fills each (rows x rows) block of a (k*rows x rows) matrix with a random
// orthogonal matrix (Gaussian + modified Gram-Schmidt).
void orthogonal_blocks(Tensor& m, std::size_t rows, RandomStream& rng);

Dense make_dense(const std::string& name, std::size_t in, std::size_t out, RandomStream& rng);
LstmCellParams make_lstm_cell(const std::string& name, std::size_t input, std::size_t hidden,
                              RandomStream& rng);

DenseVars bind(Graph& g, Dense& d);
LstmVars bind(Graph& g, LstmCellParams& p);

Var linear(Graph& g, const DenseVars& d, Var x);

LstmState lstm_zero_state(Graph& g, std::size_t hidden);
LstmState lstm_step(Graph& g, const LstmVars& cell, Var x, const LstmState& prev);

// --- Optimizers -----------------------------------------------------------

enum class OptimizerKind { rmsprop, adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::rmsprop;
  double lr = 1e-3;
  double rho = 0.9;     // rmsprop decay
  double beta1 = 0.9;   // adam
  double beta2 = 0.999; // adam
  double eps = 1e-8;
};

// Keeps per-parameter moment state across step() calls.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config);  // throws ConfigError if lr <= 0
  void step(std::span<Parameter* const> params);
  static void zero_grad(std::span<Parameter* const> params);
  const OptimizerConfig& config() const { return config_; }

 private:
  struct State {
    Tensor m, v;
    long t = 0;
  };
  OptimizerConfig config_;
  std::map<Parameter*, State> state_;
};

// --- Gradient checking -----------------------------------------------------

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double tolerance = 0.0;
  double worst = 0.0;
  bool pass = false;
};

// Compares reverse-mode gradients of a scalar forward closure against central
// finite differences. Relative error per coordinate is
// |a - fd| / max(|a|, |fd|, 1e-6), so coordinates whose true gradient is zero
// compare against the finite-difference noise floor instead of dividing by
// zero. The closure must be deterministic.
GradCheckReport grad_check(const std::function<Var(Graph&)>& forward,
                           std::span<Parameter* const> params, double tolerance,
                           double fd_step = 1e-5);

// --- Parameter checkpoints --------------------------------------------------

// Binary container: magic, format version, UTF-8 config echo (JSON), then
// name -> shape -> little-endian float64 payload per parameter.
inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

void save_parameters(const std::filesystem::path& path,
                     std::span<Parameter* const> params,
                     const std::string& config_json);

struct LoadedParameters {
  std::map<std::string, Tensor> values;
  std::string config_json;
  std::uint32_t format_version = 0;
};

LoadedParameters load_parameters(const std::filesystem::path& path);

// Copies loaded tensors into an existing parameter set by name; throws
// ConfigError on missing names or shape mismatches.
void restore_parameters(const LoadedParameters& loaded, std::span<Parameter* const> params);

}  // namespace emots
