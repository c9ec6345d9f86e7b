#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "volkey/config.hpp"
#include "volkey/timing.hpp"
#include "volkey/volume.hpp"

namespace volkey {

struct PipelineTiming {
  /// Mean over the repeats for every (stage, octave, level) recorded by the production code.
  std::vector<StageTiming> means;
  /// Same rows as `means`, holding medians.
  std::vector<StageTiming> medians;
  double total_mean_micros = 0.0;
  double total_median_micros = 0.0;
  std::size_t keypoints = 0;
  std::size_t features = 0;
};

/// Runs extraction plus a self-match `repeats` times after one discarded warm-up run.
/// `config.parallel.workers` is replaced by `workers`.
PipelineTiming time_pipeline(const Volume& volume, const Config& config, int workers, int repeats = 5);

struct SweepRow {
  int chunk = 1;
  double mean_micros = 0.0;
  double median_micros = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // in candidate order
  int fastest_chunk = 0;
  int slowest_chunk = 0;
};

/// Times the Gaussian convolution stage (summed over the whole pyramid) for each tile edge k.
/// Throws a parameter error if `candidates` is empty or contains k < 1.
SweepResult chunk_sweep(const Volume& volume, std::span<const int> candidates, int workers, int repeats = 3,
                        const PyramidOptions& pyramid = {});

void write_csv(std::ostream& out, std::span<const StageTiming> timings);
void emit_csv(std::span<const StageTiming> timings, const std::filesystem::path& path);
std::vector<StageTiming> parse_csv(std::istream& in);

}  // namespace volkey
