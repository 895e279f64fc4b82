#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "emots/tensor.hpp"

namespace emots {

// Lin's concordance correlation coefficient with population (1/T) moments:
//   2 cov(y, y_hat) / (var_y + var_yhat + (mean_y - mean_yhat)^2).
// Throws MetricError for T < 2 and DegenerateMetric when either track has
// zero variance.
double ccc(std::span<const double> y, std::span<const double> y_hat);

// Mean squared error over all timesteps and channels.
double mse(const Tensor& y, const Tensor& y_hat);
double mse(std::span<const double> y, std::span<const double> y_hat);

// Population Pearson correlation; same degenerate handling as ccc.
double pearson(std::span<const double> y, std::span<const double> y_hat);

// Fraction of exact matches; class ids must be in 0..26.
double top1_accuracy(std::span<const int> labels, std::span<const int> preds);

// counts[true][pred], 27 x 27.
Tensor confusion_matrix(std::span<const int> labels, std::span<const int> preds);

struct MetricResult {
  std::string name;
  double value = 0.0;  // unweighted mean over per_sample
  std::vector<std::pair<std::string, double>> per_sample;
  std::vector<std::string> degenerate_samples;  // reported, excluded from the mean
};

MetricResult aggregate_metric(std::string name,
                              std::vector<std::pair<std::string, double>> per_sample,
                              std::vector<std::string> degenerate_samples = {});

// CSV `metric,sample_id,value`; one `aggregate` row per metric and a
// `degenerate` marker row per excluded sample.
void write_metrics_csv(const std::filesystem::path& path,
                       std::span<const MetricResult> results);

void write_confusion_csv(const std::filesystem::path& path, const Tensor& counts);

}  // namespace emots
