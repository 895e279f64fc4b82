#pragma once

#include <cstdint>
#include <vector>

#include "emots/tensor.hpp"

namespace emots {

// p x p causal-strength matrix. Row j, column k reads "series k drives the
// prediction of series j". `strengths` holds raw input-block norms;
// `normalized` is the per-row max-normalized copy used for display;
// `adjacency` is strengths > epsilon.
struct GCMatrix {
  Tensor strengths;                    // p x p, nonnegative
  Tensor normalized;                   // p x p, in [0, 1]
  std::vector<std::uint8_t> adjacency; // p*p row-major booleans
  double epsilon = 0.0;

  std::size_t series_count() const { return strengths.empty() ? 0 : strengths.rows(); }
  bool edge(std::size_t j, std::size_t k) const {
    return adjacency[j * series_count() + k] != 0;
  }
};

// Builds the normalized copy and thresholded adjacency from raw strengths.
GCMatrix make_gc_matrix(Tensor strengths, double epsilon);

}  // namespace emots
