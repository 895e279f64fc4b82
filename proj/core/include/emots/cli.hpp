#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "emots/timeseries.hpp"

namespace emots {

// Dataset directory layout:
//   manifest.json                  config echo, seed, format version, wall time
//   gc_truth.csv                   p x p 0/1 adjacency (synthetic sets)
//   splits.csv                     sample_id,split
//   samples/<id>/modality_<k>.csv  k = 1..p
//   samples/<id>/labels.csv
struct Dataset {
  std::vector<AlignedSample> samples;
  LabelKind label_kind = LabelKind::continuous;
  std::size_t p = 0;
};

Dataset load_dataset(const std::filesystem::path& dir);
void write_sample_dir(const std::filesystem::path& dir, const AlignedSample& sample);
AlignedSample load_sample_dir(const std::filesystem::path& dir, std::size_t p);

std::vector<std::uint8_t> load_adjacency_csv(const std::filesystem::path& path, std::size_t p);
void write_adjacency_csv(const std::filesystem::path& path,
                         const std::vector<std::uint8_t>& adjacency, std::size_t p);

// Entry point behind the `emots` binary. Commands: synth, train, eval, gc,
// predict. Returns the process exit code; every failure prints one
// `error: <kind>: <message>` line on stderr.
int run_cli(const std::vector<std::string>& args);

}  // namespace emots
