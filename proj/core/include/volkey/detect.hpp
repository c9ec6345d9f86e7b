#pragma once

#include <cstdint>
#include <vector>

#include "volkey/parallel.hpp"
#include "volkey/scalespace.hpp"
#include "volkey/timing.hpp"
#include "volkey/volume.hpp"

namespace volkey {

/// Sum over the 80 scale-space neighbours of sign(centre - neighbour). The one-voxel border
/// is left at zero.
struct ExtremumMap {
  Dims dims;
  std::vector<std::int8_t> values;

  int at(int x, int y, int z) const {
    return values[(static_cast<std::size_t>(z) * dims.ny + y) * dims.nx + x];
  }
};

enum class Polarity : int { valley = -1, peak = 1 };

struct Keypoint {
  Vec3 position = Vec3::Zero();  // base-volume voxel units
  double sigma = 0.0;            // base-volume voxel units
  int octave = 0;
  int level = 0;                 // DoG level index within the octave
  double dog_value = 0.0;
  Polarity sign = Polarity::peak;
};

/// Context needed to place extrema of one DoG level in base-volume coordinates.
struct LevelInfo {
  int octave = 0;
  int level = 0;
  double sigma = 0.0;  // absolute scale assigned to keypoints found on this level
};

struct DetectOptions {
  int threshold_band = 0;
  double contrast_min = 0.0;
};

void validate(const DetectOptions& options);

ExtremumMap sum_of_signs_map(const Volume& dog_prev, const Volume& dog_cur, const Volume& dog_next,
                             const ParallelOptions& parallel = {});

/// Peaks are map values >= 80 - band, valleys <= -80 + band; both also need |dog| >= contrast_min.
std::vector<Keypoint> extract_extrema(const ExtremumMap& map, const Volume& dog_cur, int threshold_band,
                                      double contrast_min, const LevelInfo& level = {});

/// Runs every consecutive DoG triple of every octave. Output is ordered by
/// (octave, level, z, y, x).
std::vector<Keypoint> detect_keypoints(const DoGPyramid& dog, const DetectOptions& options = {},
                                       const ParallelOptions& parallel = {}, TimingSink* timing = nullptr);

}  // namespace volkey
