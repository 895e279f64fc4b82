#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "emots/gc_matrix.hpp"
#include "emots/tensor.hpp"

namespace emots {

// One modality's T x d feature track. Modality ids are 1-based (1..p) and
// unique within a sample.
struct FeatureStream {
  int modality_id = 0;
  std::string modality_name;
  Tensor values;  // T x d

  std::size_t timesteps() const { return values.empty() ? 0 : values.rows(); }
  std::size_t dim() const { return values.empty() ? 0 : values.cols(); }
};

enum class LabelKind { continuous, categorical };

inline constexpr int kEmotionClassCount = 27;  // 26 classes + "None"

// Per-timestep labels: either a T x c real matrix (c = 1 valence, or
// c = 2 valence+arousal) or T class ids in 0..26.
struct LabelTrack {
  LabelKind kind = LabelKind::continuous;
  Tensor continuous_values;            // T x c when kind == continuous
  std::vector<int> categorical_values; // when kind == categorical

  std::size_t timesteps() const {
    return kind == LabelKind::continuous
               ? (continuous_values.empty() ? 0 : continuous_values.rows())
               : categorical_values.size();
  }
  std::size_t channels() const {
    return kind == LabelKind::continuous ? continuous_values.cols() : 1;
  }
};

struct AlignedSample {
  std::vector<FeatureStream> streams;  // p >= 2, identical T
  LabelTrack labels;
  std::string sample_id;

  std::size_t timesteps() const { return streams.empty() ? 0 : streams.front().timesteps(); }
  std::size_t modality_count() const { return streams.size(); }
};

// Throws on any violated invariant (T >= 1, equal lengths, finite entries,
// unique ids, label kind consistency).
void validate(const AlignedSample& sample);

// --- CSV ingestion ----------------------------------------------------------

// Header `t,dim0,...,dim{d-1}`; rows sorted by t starting at 0 with no gaps.
FeatureStream load_modality_csv(const std::filesystem::path& path, int modality_id);
void write_modality_csv(const std::filesystem::path& path, const FeatureStream& stream);

// Header `t,valence[,arousal]` or `t,class`.
LabelTrack load_label_csv(const std::filesystem::path& path);
void write_label_csv(const std::filesystem::path& path, const LabelTrack& labels);

enum class AlignPolicy { truncate_min, strict };

AlignedSample align_streams(std::vector<FeatureStream> streams, LabelTrack labels,
                            AlignPolicy policy, std::string sample_id = "");

// --- Synthetic VAR generator --------------------------------------------------

struct SyntheticSpec {
  std::size_t p = 4;   // series count
  std::size_t d = 1;   // per-series dimension
  std::size_t T = 200; // length
  std::vector<std::uint8_t> adjacency;  // p*p row-major; [k][j] = j drives k
  double coeff_scale = 0.5;
  double noise_std = 0.1;
  std::uint64_t seed = 0;
  std::size_t lag = 1;

  bool edge(std::size_t k, std::size_t j) const { return adjacency[k * p + j] != 0; }
};

// Random adjacency with the given edge density over all p*p cells.
std::vector<std::uint8_t> random_adjacency(std::size_t p, double density, std::uint64_t seed);

// Generates p series following
//   x_{k,t} = sum_{j : adjacency[k][j]} A_{kj} x_{j,t-lag} + eps,
// eps ~ N(0, noise_std^2), coefficients rescaled until the companion matrix
// has spectral radius < 1 (at most 20 attempts, then GenError). Labels are a
// fixed linear readout of series 1 squashed to [0,1] by a sigmoid, so the
// emotion target is learnable with known provenance. Deterministic in seed.
std::pair<AlignedSample, GCMatrix> generate_var(const SyntheticSpec& spec);

// Full VAR coefficient matrix (p*d x p*d) the generator would emit; exposed
// so tests can check stationarity and closed-form statistics independently.
Tensor var_coefficients(const SyntheticSpec& spec);

// Spectral-radius estimate of the companion matrix of `coeffs` at `lag`
// block structure (power iteration on the companion form).
double companion_spectral_radius(const Tensor& coeffs, std::size_t lag);

// --- Splits -------------------------------------------------------------------

struct SplitFractions {
  double train = 0.8, val = 0.1, test = 0.1;
};

struct SplitIndices {
  std::vector<std::size_t> train, val, test;
};

// Deterministic shuffled partition; sizes follow floor-then-distribute on the
// fractions (largest remainder first). Throws SplitError on bad fractions or
// fewer samples than nonempty splits.
SplitIndices split_samples(std::size_t count, const SplitFractions& fractions,
                           std::uint64_t seed);

struct SampleSplits {
  std::vector<AlignedSample> train, val, test;
};

SampleSplits split_samples(const std::vector<AlignedSample>& samples,
                           const SplitFractions& fractions, std::uint64_t seed);

// Split file: one `sample_id,split` pair per line, split in {train,val,test}.
std::map<std::string, std::string> load_split_file(const std::filesystem::path& path);
void write_split_file(const std::filesystem::path& path,
                      const std::map<std::string, std::string>& assignment);

// Partitions samples according to an explicit assignment; ids missing from
// the map throw SplitError.
SampleSplits apply_split_file(std::vector<AlignedSample> samples,
                              const std::map<std::string, std::string>& assignment);

}  // namespace emots
