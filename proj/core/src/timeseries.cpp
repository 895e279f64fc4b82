#include "emots/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "emots/csv.hpp"
#include "emots/errors.hpp"
#include "emots/random.hpp"

namespace emots {

void validate(const AlignedSample& sample) {
  if (sample.streams.size() < 2) throw AlignError("sample needs p >= 2 streams");
  const std::size_t T = sample.streams.front().timesteps();
  if (T < 1) throw ShapeError("sample needs T >= 1");
  std::set<int> ids;
  for (const auto& s : sample.streams) {
    if (s.timesteps() != T) throw AlignError("stream length mismatch in sample");
    if (s.dim() < 1) throw ShapeError("stream needs d >= 1");
    if (!s.values.all_finite()) throw ShapeError("non-finite feature value");
    if (!ids.insert(s.modality_id).second)
      throw AlignError("duplicate modality_id in sample");
  }
  if (sample.labels.timesteps() != T) throw AlignError("label length mismatch");
  if (sample.labels.kind == LabelKind::continuous) {
    if (sample.labels.continuous_values.empty() || !sample.labels.categorical_values.empty())
      throw ShapeError("continuous label track must populate continuous_values only");
    const std::size_t c = sample.labels.channels();
    if (c != 1 && c != 2) throw ShapeError("continuous labels need 1 or 2 channels");
    if (!sample.labels.continuous_values.all_finite())
      throw ShapeError("non-finite label value");
  } else {
    if (!sample.labels.continuous_values.empty())
      throw ShapeError("categorical label track must populate categorical_values only");
    for (int c : sample.labels.categorical_values)
      if (c < 0 || c >= kEmotionClassCount) throw ShapeError("class id out of range 0..26");
  }
}

// --- CSV ---------------------------------------------------------------------

FeatureStream load_modality_csv(const std::filesystem::path& path, int modality_id) {
  CsvTable table = read_csv(path);
  if (table.rows.empty())
    throw IngestError(IngestError::Cause::empty, "no data rows in " + path.string());
  if (table.header.empty() || table.header[0] != "t")
    throw IngestError(IngestError::Cause::parse, "expected header starting with 't'");
  const std::size_t d = table.header.size() - 1;
  if (d < 1) throw IngestError(IngestError::Cause::parse, "no feature columns");
  const std::size_t T = table.rows.size();
  Tensor values = Tensor::matrix(T, d);
  for (std::size_t r = 0; r < T; ++r) {
    const auto& row = table.rows[r];
    if (row.size() != d + 1)
      throw IngestError(IngestError::Cause::parse, "ragged row in " + path.string());
    const long t = parse_integer(row[0]);
    if (t != static_cast<long>(r))
      throw IngestError(IngestError::Cause::gap,
                        "timesteps must be 0..T-1 with no gaps (saw t=" + row[0] + ")");
    for (std::size_t c = 0; c < d; ++c) values(r, c) = parse_real(row[c + 1]);
  }
  FeatureStream stream;
  stream.modality_id = modality_id;
  stream.modality_name = "f_" + std::to_string(modality_id);
  stream.values = std::move(values);
  return stream;
}

void write_modality_csv(const std::filesystem::path& path, const FeatureStream& stream) {
  std::ostringstream out;
  out << "t";
  for (std::size_t c = 0; c < stream.dim(); ++c) out << ",dim" << c;
  out << "\n";
  for (std::size_t t = 0; t < stream.timesteps(); ++t) {
    out << t;
    for (std::size_t c = 0; c < stream.dim(); ++c) out << "," << format_real(stream.values(t, c));
    out << "\n";
  }
  write_text_file(path, out.str());
}

LabelTrack load_label_csv(const std::filesystem::path& path) {
  CsvTable table = read_csv(path);
  if (table.rows.empty())
    throw IngestError(IngestError::Cause::empty, "no label rows in " + path.string());
  LabelTrack labels;
  const auto& h = table.header;
  const std::size_t T = table.rows.size();
  auto check_t = [&](std::size_t r) {
    if (parse_integer(table.rows[r][0]) != static_cast<long>(r))
      throw IngestError(IngestError::Cause::gap, "label timesteps must be 0..T-1");
  };
  if (h.size() >= 2 && h[0] == "t" && h[1] == "valence") {
    labels.kind = LabelKind::continuous;
    const std::size_t c = h.size() - 1;
    if (c > 2 || (c == 2 && h[2] != "arousal"))
      throw IngestError(IngestError::Cause::parse, "label header must be t,valence[,arousal]");
    labels.continuous_values = Tensor::matrix(T, c);
    for (std::size_t r = 0; r < T; ++r) {
      check_t(r);
      for (std::size_t j = 0; j < c; ++j)
        labels.continuous_values(r, j) = parse_real(table.rows[r][j + 1]);
    }
  } else if (h.size() == 2 && h[0] == "t" && h[1] == "class") {
    labels.kind = LabelKind::categorical;
    labels.categorical_values.resize(T);
    for (std::size_t r = 0; r < T; ++r) {
      check_t(r);
      const long c = parse_integer(table.rows[r][1]);
      if (c < 0 || c >= kEmotionClassCount)
        throw IngestError(IngestError::Cause::parse, "class id out of range 0..26");
      labels.categorical_values[r] = static_cast<int>(c);
    }
  } else {
    throw IngestError(IngestError::Cause::parse,
                      "label header must be t,valence[,arousal] or t,class");
  }
  return labels;
}

void write_label_csv(const std::filesystem::path& path, const LabelTrack& labels) {
  std::ostringstream out;
  if (labels.kind == LabelKind::continuous) {
    out << (labels.channels() == 2 ? "t,valence,arousal" : "t,valence") << "\n";
    for (std::size_t t = 0; t < labels.timesteps(); ++t) {
      out << t;
      for (std::size_t c = 0; c < labels.channels(); ++c)
        out << "," << format_real(labels.continuous_values(t, c));
      out << "\n";
    }
  } else {
    out << "t,class\n";
    for (std::size_t t = 0; t < labels.timesteps(); ++t)
      out << t << "," << labels.categorical_values[t] << "\n";
  }
  write_text_file(path, out.str());
}

// --- Alignment ------------------------------------------------------------------

namespace {

void truncate_stream(FeatureStream& s, std::size_t T) {
  if (s.timesteps() == T) return;
  Tensor cropped = Tensor::matrix(T, s.dim());
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t c = 0; c < s.dim(); ++c) cropped(t, c) = s.values(t, c);
  s.values = std::move(cropped);
}

void truncate_labels(LabelTrack& labels, std::size_t T) {
  if (labels.timesteps() == T) return;
  if (labels.kind == LabelKind::continuous) {
    Tensor cropped = Tensor::matrix(T, labels.channels());
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t c = 0; c < labels.channels(); ++c)
        cropped(t, c) = labels.continuous_values(t, c);
    labels.continuous_values = std::move(cropped);
  } else {
    labels.categorical_values.resize(T);
  }
}

}  // namespace

AlignedSample align_streams(std::vector<FeatureStream> streams, LabelTrack labels,
                            AlignPolicy policy, std::string sample_id) {
  if (streams.size() < 2) throw AlignError("alignment needs p >= 2 streams");
  std::size_t min_T = labels.timesteps();
  bool mismatch = false;
  for (const auto& s : streams) {
    min_T = std::min(min_T, s.timesteps());
    if (s.timesteps() != labels.timesteps()) mismatch = true;
  }
  for (const auto& s : streams)
    if (s.timesteps() != streams.front().timesteps()) mismatch = true;
  if (policy == AlignPolicy::strict && mismatch)
    throw AlignError("strict alignment: stream/label lengths differ");
  if (min_T < 1) throw AlignError("alignment produced empty sample");
  for (auto& s : streams) truncate_stream(s, min_T);
  truncate_labels(labels, min_T);
  AlignedSample sample;
  sample.streams = std::move(streams);
  sample.labels = std::move(labels);
  sample.sample_id = std::move(sample_id);
  validate(sample);
  return sample;
}

// --- Synthetic VAR ----------------------------------------------------------------

std::vector<std::uint8_t> random_adjacency(std::size_t p, double density, std::uint64_t seed) {
  RandomStream rng(seed);
  std::vector<std::uint8_t> adj(p * p, 0);
  for (auto& cell : adj) cell = rng.uniform() < density ? 1 : 0;
  return adj;
}

namespace {

Tensor draw_coefficients(const SyntheticSpec& spec, RandomStream& rng) {
  const std::size_t n = spec.p * spec.d;
  Tensor A = Tensor::matrix(n, n);
  for (std::size_t k = 0; k < spec.p; ++k)
    for (std::size_t j = 0; j < spec.p; ++j) {
      if (!spec.edge(k, j)) continue;
      for (std::size_t r = 0; r < spec.d; ++r)
        for (std::size_t c = 0; c < spec.d; ++c)
          A(k * spec.d + r, j * spec.d + c) = rng.uniform(-spec.coeff_scale, spec.coeff_scale);
    }
  return A;
}

}  // namespace

double companion_spectral_radius(const Tensor& coeffs, std::size_t lag) {
  const std::size_t n = coeffs.rows();
  const std::size_t dim = n * lag;
  // Companion applies: top block = A * z_{lag-1 block}; the rest shifts down.
  // Estimate |lambda|_max from the geometric growth of repeated applications.
  RandomStream rng(0xC0FFEE);
  std::vector<double> v(dim);
  for (double& x : v) x = rng.normal();
  double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
  if (norm == 0.0) return 0.0;
  for (double& x : v) x /= norm;
  std::vector<double> next(dim, 0.0);
  double growth = 0.0;
  const int iters = 200;
  int counted = 0;
  for (int it = 0; it < iters; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < n; ++c) acc += coeffs(r, c) * v[(lag - 1) * n + c];
      next[r] = acc;
    }
    for (std::size_t l = 1; l < lag; ++l)
      for (std::size_t r = 0; r < n; ++r) next[l * n + r] = v[(l - 1) * n + r];
    norm = std::sqrt(std::inner_product(next.begin(), next.end(), next.begin(), 0.0));
    if (norm < 1e-300) return 0.0;
    for (std::size_t i = 0; i < dim; ++i) v[i] = next[i] / norm;
    if (it >= iters / 2) {
      growth += std::log(norm);
      ++counted;
    }
  }
  return std::exp(growth / counted);
}

Tensor var_coefficients(const SyntheticSpec& spec) {
  RandomStream rng(spec.seed);
  RandomStream coeff_rng = rng.fork(1);
  Tensor A = draw_coefficients(spec, coeff_rng);
  for (int attempt = 0; attempt < 20; ++attempt) {
    const double radius = companion_spectral_radius(A, spec.lag);
    if (radius < 0.999) return A;
    const double shrink = std::pow(0.95 / radius, 1.0 / static_cast<double>(spec.lag));
    for (double& x : A.data()) x *= shrink;
  }
  if (companion_spectral_radius(A, spec.lag) < 0.999) return A;
  throw GenError("could not rescale VAR coefficients to stationarity in 20 attempts");
}

std::pair<AlignedSample, GCMatrix> generate_var(const SyntheticSpec& spec) {
  if (spec.p < 2 || spec.d < 1 || spec.T < 1 || spec.lag < 1)
    throw GenError("invalid synthetic spec");
  if (spec.adjacency.size() != spec.p * spec.p)
    throw GenError("adjacency must be p x p");
  if (spec.noise_std < 0) throw GenError("noise_std must be >= 0");

  const Tensor A = var_coefficients(spec);
  RandomStream rng(spec.seed);
  (void)rng.fork(1);  // keep coefficient stream reproducible via var_coefficients
  RandomStream noise = rng.fork(2);

  const std::size_t n = spec.p * spec.d;
  Tensor data = Tensor::matrix(spec.T, n);
  for (std::size_t t = 0; t < spec.T; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      double v = spec.noise_std > 0 ? noise.normal(0.0, spec.noise_std) : 0.0;
      if (t >= spec.lag) {
        for (std::size_t c = 0; c < n; ++c) v += A(i, c) * data(t - spec.lag, c);
      }
      data(t, i) = v;
    }
  }

  AlignedSample sample;
  for (std::size_t k = 0; k < spec.p; ++k) {
    FeatureStream s;
    s.modality_id = static_cast<int>(k + 1);
    s.modality_name = "f_" + std::to_string(k + 1);
    s.values = Tensor::matrix(spec.T, spec.d);
    for (std::size_t t = 0; t < spec.T; ++t)
      for (std::size_t c = 0; c < spec.d; ++c) s.values(t, c) = data(t, k * spec.d + c);
    sample.streams.push_back(std::move(s));
  }

  // Labels: sigmoid of a fixed mean readout of the designated cause series
  // (series 1), scaled so the track actually spans (0, 1).
  sample.labels.kind = LabelKind::continuous;
  sample.labels.continuous_values = Tensor::matrix(spec.T, 1);
  for (std::size_t t = 0; t < spec.T; ++t) {
    double acc = 0.0;
    for (std::size_t c = 0; c < spec.d; ++c) acc += data(t, c);
    acc /= static_cast<double>(spec.d);
    sample.labels.continuous_values(t, 0) = 1.0 / (1.0 + std::exp(-2.0 * acc));
  }
  sample.sample_id = "synthetic";

  Tensor truth = Tensor::matrix(spec.p, spec.p);
  for (std::size_t k = 0; k < spec.p; ++k)
    for (std::size_t j = 0; j < spec.p; ++j) truth(k, j) = spec.edge(k, j) ? 1.0 : 0.0;
  GCMatrix gc = make_gc_matrix(std::move(truth), 0.5);
  return {std::move(sample), std::move(gc)};
}

// --- Splits ---------------------------------------------------------------------

SplitIndices split_samples(std::size_t count, const SplitFractions& fractions,
                           std::uint64_t seed) {
  const double fr[3] = {fractions.train, fractions.val, fractions.test};
  double sum = 0.0;
  for (double f : fr) {
    if (f < 0.0) throw SplitError("fractions must be nonnegative");
    sum += f;
  }
  if (std::fabs(sum - 1.0) > 1e-9) throw SplitError("fractions must sum to 1");
  std::size_t nonempty = 0;
  for (double f : fr)
    if (f > 0.0) ++nonempty;
  if (count < nonempty) throw SplitError("fewer samples than nonempty splits");

  // Floor-then-distribute: floors first, remainder by largest fractional part
  // (ties broken by split order).
  std::size_t sizes[3];
  double fracpart[3];
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double want = fr[i] * static_cast<double>(count);
    sizes[i] = static_cast<std::size_t>(std::floor(want + 1e-12));
    fracpart[i] = want - static_cast<double>(sizes[i]);
    assigned += sizes[i];
  }
  while (assigned < count) {
    int best = 0;
    for (int i = 1; i < 3; ++i)
      if (fracpart[i] > fracpart[best] + 1e-15) best = i;
    ++sizes[best];
    fracpart[best] = -1.0;
    ++assigned;
  }
  // Guarantee nonempty splits get at least one sample.
  for (int i = 0; i < 3; ++i) {
    if (fr[i] > 0.0 && sizes[i] == 0) {
      int donor = 0;
      for (int j = 1; j < 3; ++j)
        if (sizes[j] > sizes[donor]) donor = j;
      --sizes[donor];
      ++sizes[i];
    }
  }

  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  RandomStream rng(seed);
  rng.shuffle(order);

  SplitIndices out;
  std::size_t pos = 0;
  auto take = [&](std::vector<std::size_t>& dst, std::size_t n) {
    dst.assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
               order.begin() + static_cast<std::ptrdiff_t>(pos + n));
    pos += n;
  };
  take(out.train, sizes[0]);
  take(out.val, sizes[1]);
  take(out.test, sizes[2]);
  return out;
}

SampleSplits split_samples(const std::vector<AlignedSample>& samples,
                           const SplitFractions& fractions, std::uint64_t seed) {
  SplitIndices idx = split_samples(samples.size(), fractions, seed);
  SampleSplits out;
  for (std::size_t i : idx.train) out.train.push_back(samples[i]);
  for (std::size_t i : idx.val) out.val.push_back(samples[i]);
  for (std::size_t i : idx.test) out.test.push_back(samples[i]);
  return out;
}

std::map<std::string, std::string> load_split_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw SplitError("split line must be 'sample_id,split'");
    const std::string id = line.substr(0, comma);
    const std::string split = line.substr(comma + 1);
    if (split != "train" && split != "val" && split != "test")
      throw SplitError("split must be train, val or test: got '" + split + "'");
    if (!out.emplace(id, split).second) throw SplitError("duplicate sample id: " + id);
  }
  if (out.empty()) throw SplitError("empty split file: " + path.string());
  return out;
}

void write_split_file(const std::filesystem::path& path,
                      const std::map<std::string, std::string>& assignment) {
  std::ostringstream out;
  for (const auto& [id, split] : assignment) out << id << "," << split << "\n";
  write_text_file(path, out.str());
}

SampleSplits apply_split_file(std::vector<AlignedSample> samples,
                              const std::map<std::string, std::string>& assignment) {
  SampleSplits out;
  for (auto& sample : samples) {
    auto it = assignment.find(sample.sample_id);
    if (it == assignment.end())
      throw SplitError("sample '" + sample.sample_id + "' missing from split file");
    if (it->second == "train") out.train.push_back(std::move(sample));
    else if (it->second == "val") out.val.push_back(std::move(sample));
    else out.test.push_back(std::move(sample));
  }
  return out;
}

// --- GCMatrix helper ---------------------------------------------------------------

GCMatrix make_gc_matrix(Tensor strengths, double epsilon) {
  GCMatrix gc;
  const std::size_t p = strengths.rows();
  gc.normalized = strengths;
  for (std::size_t j = 0; j < p; ++j) {
    double row_max = 0.0;
    for (std::size_t k = 0; k < p; ++k) row_max = std::max(row_max, strengths(j, k));
    if (row_max > 0.0)
      for (std::size_t k = 0; k < p; ++k) gc.normalized(j, k) = strengths(j, k) / row_max;
  }
  gc.adjacency.assign(p * p, 0);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = 0; k < p; ++k)
      gc.adjacency[j * p + k] = strengths(j, k) > epsilon ? 1 : 0;
  gc.strengths = std::move(strengths);
  gc.epsilon = epsilon;
  return gc;
}

}  // namespace emots
