#include "volkey/detect.hpp"

#include <cmath>

#include <fmt/format.h>

#include "volkey/error.hpp"

namespace volkey {

namespace {

inline int sign_of(float d) { return (d > 0.0f) - (d < 0.0f); }

}  // namespace

void validate(const DetectOptions& options) {
  if (options.threshold_band < 0 || options.threshold_band > 80) {
    fail(ErrorKind::parameter, fmt::format("threshold_band must lie in [0, 80], got {}", options.threshold_band));
  }
  if (!(options.contrast_min >= 0.0)) fail(ErrorKind::parameter, "contrast_min must be >= 0");
}

ExtremumMap sum_of_signs_map(const Volume& dog_prev, const Volume& dog_cur, const Volume& dog_next,
                             const ParallelOptions& parallel) {
  const auto& d = dog_cur.dims();
  if (!(dog_prev.dims() == d) || !(dog_next.dims() == d)) {
    fail(ErrorKind::parameter, "sum_of_signs_map: DoG volumes must share dims");
  }
  ExtremumMap map{d, std::vector<std::int8_t>(d.voxel_count(), 0)};
  if (d.min_dim() < 3) return map;

  const Volume* layers[3] = {&dog_prev, &dog_cur, &dog_next};
  parallel_for_tiles(d, parallel, [&](const Box& b) {
    for (int z = std::max(b.z0, 1); z < std::min(b.z1, d.nz - 1); ++z) {
      for (int y = std::max(b.y0, 1); y < std::min(b.y1, d.ny - 1); ++y) {
        for (int x = std::max(b.x0, 1); x < std::min(b.x1, d.nx - 1); ++x) {
          const float centre = dog_cur.at(x, y, z);
          int sum = 0;
          for (int s = 0; s < 3; ++s) {
            const Volume& v = *layers[s];
            for (int dz = -1; dz <= 1; ++dz)
              for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                  if (s == 1 && dx == 0 && dy == 0 && dz == 0) continue;
                  sum += sign_of(centre - v.at(x + dx, y + dy, z + dz));
                }
          }
          map.values[dog_cur.index(x, y, z)] = static_cast<std::int8_t>(sum);
        }
      }
    }
  });
  return map;
}

std::vector<Keypoint> extract_extrema(const ExtremumMap& map, const Volume& dog_cur, int threshold_band,
                                      double contrast_min, const LevelInfo& level) {
  validate(DetectOptions{threshold_band, contrast_min});
  if (!(map.dims == dog_cur.dims())) fail(ErrorKind::parameter, "extract_extrema: map and DoG dims differ");
  const auto& d = map.dims;
  const int peak_min = 80 - threshold_band;
  const int valley_max = -80 + threshold_band;
  std::vector<Keypoint> out;
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        const int v = map.at(x, y, z);
        Polarity sign;
        if (v >= peak_min) {
          sign = Polarity::peak;
        } else if (v <= valley_max) {
          sign = Polarity::valley;
        } else {
          continue;
        }
        // Band 80 would admit every voxel, including the unset border.
        if (v == 0) continue;
        const double dog = dog_cur.at(x, y, z);
        if (std::fabs(dog) < contrast_min) continue;
        Keypoint kp;
        kp.position = Vec3(octave_to_base(x, level.octave), octave_to_base(y, level.octave),
                           octave_to_base(z, level.octave));
        kp.sigma = level.sigma;
        kp.octave = level.octave;
        kp.level = level.level;
        kp.dog_value = dog;
        kp.sign = sign;
        out.push_back(kp);
      }
    }
  }
  return out;
}

std::vector<Keypoint> detect_keypoints(const DoGPyramid& dog, const DetectOptions& options,
                                       const ParallelOptions& parallel, TimingSink* timing) {
  validate(options);
  std::vector<Keypoint> keypoints;
  for (int o = 0; o < static_cast<int>(dog.octaves.size()); ++o) {
    const auto& levels = dog.octaves[o].levels;
    if (levels.size() < 3) fail(ErrorKind::parameter, fmt::format("octave {} has fewer than 3 DoG levels", o));
    for (std::size_t i = 1; i + 1 < levels.size(); ++i) {
      ScopedStageTimer timer(timing, Stage::peak_detect, o, static_cast<int>(i));
      const auto map = sum_of_signs_map(levels[i - 1], levels[i], levels[i + 1], parallel);
      const LevelInfo info{o, static_cast<int>(i), dog.scale(o, static_cast<int>(i))};
      auto found = extract_extrema(map, levels[i], options.threshold_band, options.contrast_min, info);
      keypoints.insert(keypoints.end(), found.begin(), found.end());
    }
  }
  return keypoints;
}

}  // namespace volkey
