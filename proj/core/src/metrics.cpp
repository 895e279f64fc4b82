#include "emots/metrics.hpp"

#include <cmath>
#include <sstream>

#include "emots/csv.hpp"
#include "emots/errors.hpp"

namespace emots {

namespace {

struct Moments {
  double mean_y = 0, mean_yh = 0, var_y = 0, var_yh = 0, cov = 0;
};

Moments population_moments(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size()) throw MetricError("track length mismatch");
  if (y.size() < 2) throw MetricError("metric needs T >= 2");
  const double n = static_cast<double>(y.size());
  Moments m;
  for (std::size_t i = 0; i < y.size(); ++i) {
    m.mean_y += y[i];
    m.mean_yh += y_hat[i];
  }
  m.mean_y /= n;
  m.mean_yh /= n;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double dy = y[i] - m.mean_y;
    const double dyh = y_hat[i] - m.mean_yh;
    m.var_y += dy * dy;
    m.var_yh += dyh * dyh;
    m.cov += dy * dyh;
  }
  m.var_y /= n;
  m.var_yh /= n;
  m.cov /= n;
  return m;
}

}  // namespace

double ccc(std::span<const double> y, std::span<const double> y_hat) {
  const Moments m = population_moments(y, y_hat);
  if (m.var_y == 0.0 || m.var_yh == 0.0)
    throw DegenerateMetric("ccc undefined for a zero-variance track");
  const double mean_diff = m.mean_y - m.mean_yh;
  return 2.0 * m.cov / (m.var_y + m.var_yh + mean_diff * mean_diff);
}

double mse(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size()) throw ShapeError("mse: length mismatch");
  if (y.empty()) throw ShapeError("mse: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - y_hat[i];
    acc += d * d;
  }
  return acc / static_cast<double>(y.size());
}

double mse(const Tensor& y, const Tensor& y_hat) {
  if (!y.same_shape(y_hat)) throw ShapeError("mse: shape mismatch");
  return mse(y.data(), y_hat.data());
}

double pearson(std::span<const double> y, std::span<const double> y_hat) {
  const Moments m = population_moments(y, y_hat);
  if (m.var_y == 0.0 || m.var_yh == 0.0)
    throw DegenerateMetric("pearson undefined for a zero-variance track");
  return m.cov / (std::sqrt(m.var_y) * std::sqrt(m.var_yh));
}

double top1_accuracy(std::span<const int> labels, std::span<const int> preds) {
  if (labels.size() != preds.size()) throw MetricError("track length mismatch");
  if (labels.empty()) throw MetricError("empty tracks");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] > 26 || preds[i] < 0 || preds[i] > 26)
      throw MetricError("class id out of range 0..26");
    if (labels[i] == preds[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

Tensor confusion_matrix(std::span<const int> labels, std::span<const int> preds) {
  if (labels.size() != preds.size()) throw MetricError("track length mismatch");
  Tensor counts = Tensor::matrix(27, 27);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] > 26 || preds[i] < 0 || preds[i] > 26)
      throw MetricError("class id out of range 0..26");
    counts(static_cast<std::size_t>(labels[i]), static_cast<std::size_t>(preds[i])) += 1.0;
  }
  return counts;
}

MetricResult aggregate_metric(std::string name,
                              std::vector<std::pair<std::string, double>> per_sample,
                              std::vector<std::string> degenerate_samples) {
  MetricResult r;
  r.name = std::move(name);
  r.per_sample = std::move(per_sample);
  r.degenerate_samples = std::move(degenerate_samples);
  double acc = 0.0;
  for (const auto& [id, v] : r.per_sample) acc += v;
  r.value = r.per_sample.empty() ? 0.0 : acc / static_cast<double>(r.per_sample.size());
  return r;
}

void write_metrics_csv(const std::filesystem::path& path,
                       std::span<const MetricResult> results) {
  std::ostringstream out;
  out << "metric,sample_id,value\n";
  for (const auto& r : results) {
    for (const auto& [id, v] : r.per_sample)
      out << r.name << "," << csv_escape(id) << "," << format_real(v) << "\n";
    for (const auto& id : r.degenerate_samples)
      out << r.name << "," << csv_escape(id) << ",degenerate\n";
    out << r.name << ",aggregate," << format_real(r.value) << "\n";
  }
  write_text_file(path, out.str());
}

void write_confusion_csv(const std::filesystem::path& path, const Tensor& counts) {
  std::ostringstream out;
  out << "true\\pred";
  for (std::size_t c = 0; c < counts.cols(); ++c) out << "," << c;
  out << "\n";
  for (std::size_t r = 0; r < counts.rows(); ++r) {
    out << r;
    for (std::size_t c = 0; c < counts.cols(); ++c)
      out << "," << static_cast<long>(counts(r, c));
    out << "\n";
  }
  write_text_file(path, out.str());
}

}  // namespace emots
