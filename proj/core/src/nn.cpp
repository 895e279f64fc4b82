#include "emots/nn.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "emots/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are written as little-endian float64");

namespace emots {

void xavier_uniform(Tensor& m, RandomStream& rng) {
  const std::size_t fan_out = m.rank() == 2 ? m.rows() : m.size();
  const std::size_t fan_in = m.rank() == 2 ? m.cols() : 1;
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& x : m.data()) x = rng.uniform(-limit, limit);
}

void orthogonal_blocks(Tensor& m, std::size_t rows, RandomStream& rng) {
  require_shape(m.rank() == 2 && m.cols() == rows && m.rows() % rows == 0,
                "orthogonal_blocks: matrix must stack (rows x rows) blocks");
  const std::size_t blocks = m.rows() / rows;
  std::vector<std::vector<double>> q(rows, std::vector<double>(rows));
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    for (auto& row : q)
      for (double& x : row) x = rng.normal();
    // Modified Gram-Schmidt over rows.
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        double proj = 0.0;
        for (std::size_t k = 0; k < rows; ++k) proj += q[i][k] * q[j][k];
        for (std::size_t k = 0; k < rows; ++k) q[i][k] -= proj * q[j][k];
      }
      double norm = 0.0;
      for (std::size_t k = 0; k < rows; ++k) norm += q[i][k] * q[i][k];
      norm = std::sqrt(norm);
      if (norm < 1e-12) {
        // Degenerate draw; fall back to a unit basis vector.
        for (std::size_t k = 0; k < rows; ++k) q[i][k] = (k == i) ? 1.0 : 0.0;
      } else {
        for (std::size_t k = 0; k < rows; ++k) q[i][k] /= norm;
      }
    }
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t k = 0; k < rows; ++k) m(blk * rows + i, k) = q[i][k];
  }
}

Dense make_dense(const std::string& name, std::size_t in, std::size_t out, RandomStream& rng) {
  Dense d;
  Tensor w = Tensor::matrix(out, in);
  xavier_uniform(w, rng);
  d.weight = Parameter(name + ".weight", std::move(w));
  d.bias = Parameter(name + ".bias", Tensor::zeros({out}));
  return d;
}

LstmCellParams make_lstm_cell(const std::string& name, std::size_t input, std::size_t hidden,
                              RandomStream& rng) {
  LstmCellParams p;
  Tensor wx = Tensor::matrix(4 * hidden, input);
  xavier_uniform(wx, rng);
  Tensor wh = Tensor::matrix(4 * hidden, hidden);
  orthogonal_blocks(wh, hidden, rng);
  Tensor b = Tensor::zeros({4 * hidden});
  for (std::size_t i = hidden; i < 2 * hidden; ++i) b[i] = 1.0;  // forget gate
  p.input_weights = Parameter(name + ".input_weights", std::move(wx));
  p.recurrent_weights = Parameter(name + ".recurrent_weights", std::move(wh));
  p.bias = Parameter(name + ".bias", std::move(b));
  return p;
}

DenseVars bind(Graph& g, Dense& d) {
  return DenseVars{g.param(d.weight), g.param(d.bias)};
}

LstmVars bind(Graph& g, LstmCellParams& p) {
  return LstmVars{g.param(p.input_weights), g.param(p.recurrent_weights), g.param(p.bias),
                  p.hidden_size()};
}

Var linear(Graph& g, const DenseVars& d, Var x) {
  return g.add(g.matvec(d.w, x), d.b);
}

LstmState lstm_zero_state(Graph& g, std::size_t hidden) {
  Var z = g.leaf(Tensor::zeros({hidden}));
  return LstmState{z, z};
}

LstmState lstm_step(Graph& g, const LstmVars& cell, Var x, const LstmState& prev) {
  const std::size_t h = cell.hidden;
  const Var pre[3] = {g.matvec(cell.wx, x), g.matvec(cell.wh, prev.h), cell.b};
  Var gates = g.add_n(std::span<const Var>(pre, 3));
  Var i = g.sigmoid(g.slice(gates, 0, h));
  Var f = g.sigmoid(g.slice(gates, h, h));
  Var cand = g.tanh(g.slice(gates, 2 * h, h));
  Var o = g.sigmoid(g.slice(gates, 3 * h, h));
  Var c = g.add(g.mul(f, prev.c), g.mul(i, cand));
  Var hidden = g.mul(o, g.tanh(c));
  return LstmState{hidden, c};
}

// --- Optimizer --------------------------------------------------------------

Optimizer::Optimizer(OptimizerConfig config) : config_(config) {
  if (!(config_.lr > 0.0)) throw ConfigError("optimizer learning rate must be > 0");
}

void Optimizer::step(std::span<Parameter* const> params) {
  for (Parameter* p : params) {
    State& s = state_[p];
    if (s.m.empty()) {
      s.m = Tensor::zeros_like(p->value);
      s.v = Tensor::zeros_like(p->value);
    }
    ++s.t;
    auto val = p->value.data();
    auto grad = p->grad.data();
    if (config_.kind == OptimizerKind::rmsprop) {
      for (std::size_t i = 0; i < val.size(); ++i) {
        s.v[i] = config_.rho * s.v[i] + (1.0 - config_.rho) * grad[i] * grad[i];
        val[i] -= config_.lr * grad[i] / (std::sqrt(s.v[i]) + config_.eps);
      }
    } else {
      const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(s.t));
      const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(s.t));
      for (std::size_t i = 0; i < val.size(); ++i) {
        s.m[i] = config_.beta1 * s.m[i] + (1.0 - config_.beta1) * grad[i];
        s.v[i] = config_.beta2 * s.v[i] + (1.0 - config_.beta2) * grad[i] * grad[i];
        const double mhat = s.m[i] / bc1;
        const double vhat = s.v[i] / bc2;
        val[i] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
      }
    }
  }
}

void Optimizer::zero_grad(std::span<Parameter* const> params) {
  for (Parameter* p : params) p->zero_grad();
}

// --- Gradient checking -------------------------------------------------------

GradCheckReport grad_check(const std::function<Var(Graph&)>& forward,
                           std::span<Parameter* const> params, double tolerance,
                           double fd_step) {
  GradCheckReport report;
  report.tolerance = tolerance;

  for (Parameter* p : params) p->zero_grad();
  std::map<Parameter*, Tensor> analytic;
  {
    Graph g;
    Var loss = forward(g);
    g.backward(loss);
    for (Parameter* p : params) analytic[p] = p->grad;
  }

  auto eval = [&]() {
    Graph g;
    Var loss = forward(g);
    double v = g.value(loss)[0];
    g.clear();
    return v;
  };

  for (Parameter* p : params) {
    GradCheckEntry entry;
    entry.name = p->name;
    const Tensor& a = analytic[p];
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double original = p->value[i];
      p->value[i] = original + fd_step;
      const double up = eval();
      p->value[i] = original - fd_step;
      const double down = eval();
      p->value[i] = original;
      const double fd = (up - down) / (2.0 * fd_step);
      const double denom = std::max({std::fabs(a[i]), std::fabs(fd), 1e-6});
      entry.max_rel_err = std::max(entry.max_rel_err, std::fabs(a[i] - fd) / denom);
    }
    report.worst = std::max(report.worst, entry.max_rel_err);
    report.entries.push_back(std::move(entry));
  }
  report.pass = report.worst <= tolerance;
  for (Parameter* p : params) p->zero_grad();
  return report;
}

// --- Checkpoints -------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'E', 'M', 'O', 'T', 'S', 'P', 'R', '1'};

template <typename T>
void write_pod(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("truncated checkpoint");
  return v;
}

}  // namespace

void save_parameters(const std::filesystem::path& path,
                     std::span<Parameter* const> params,
                     const std::string& config_json) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(out, kCheckpointFormatVersion);
  write_pod<std::uint64_t>(out, config_json.size());
  out.write(config_json.data(), static_cast<std::streamsize>(config_json.size()));
  write_pod<std::uint64_t>(out, params.size());
  for (const Parameter* p : params) {
    write_pod<std::uint64_t>(out, p->name.size());
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(p->value.rank()));
    for (std::size_t d : p->value.shape()) write_pod<std::uint64_t>(out, d);
    out.write(reinterpret_cast<const char*>(p->value.data().data()),
              static_cast<std::streamsize>(p->value.size() * sizeof(double)));
  }
  if (!out) throw IoError("write failed: " + path.string());
}

LoadedParameters load_parameters(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw IoError("not a parameter checkpoint: " + path.string());
  LoadedParameters loaded;
  loaded.format_version = read_pod<std::uint32_t>(in);
  if (loaded.format_version != kCheckpointFormatVersion)
    throw IoError("unsupported checkpoint format version");
  const auto cfg_len = read_pod<std::uint64_t>(in);
  loaded.config_json.resize(cfg_len);
  in.read(loaded.config_json.data(), static_cast<std::streamsize>(cfg_len));
  const auto count = read_pod<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = read_pod<std::uint64_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(name_len));
    const auto rank = read_pod<std::uint32_t>(in);
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(read_pod<std::uint64_t>(in));
    Tensor t = Tensor::zeros(shape);
    in.read(reinterpret_cast<char*>(t.data().data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!in) throw IoError("truncated checkpoint payload");
    loaded.values.emplace(std::move(name), std::move(t));
  }
  return loaded;
}

void restore_parameters(const LoadedParameters& loaded, std::span<Parameter* const> params) {
  for (Parameter* p : params) {
    auto it = loaded.values.find(p->name);
    if (it == loaded.values.end())
      throw ConfigError("checkpoint is missing parameter '" + p->name + "'");
    if (!it->second.same_shape(p->value))
      throw ConfigError("checkpoint shape mismatch for '" + p->name + "'");
    p->value = it->second;
    p->zero_grad();
  }
}

}  // namespace emots
