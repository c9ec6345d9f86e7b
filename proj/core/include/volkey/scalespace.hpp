#pragma once

#include <filesystem>
#include <vector>

#include "volkey/parallel.hpp"
#include "volkey/timing.hpp"
#include "volkey/volume.hpp"

namespace volkey {

struct GaussianKernel1D {
  double sigma = 0.0;
  int radius = 0;
  std::vector<double> weights;  // 2 * radius + 1 taps, centre at index `radius`
};

/// radius = ceil(3 sigma), weights normalised to sum to one.
GaussianKernel1D gaussian_kernel(double sigma);

/// Applies the kernel along x, then y, then z with replicate padding.
Volume convolve_separable(const Volume& volume, const GaussianKernel1D& kernel, const ParallelOptions& parallel = {});

/// 2x2x2 block mean; output dims are floor(input / 2) and spacing doubles.
Volume subsample_half(const Volume& volume, const ParallelOptions& parallel = {});

/// Voxelwise a - b.
Volume subtract(const Volume& a, const Volume& b, const ParallelOptions& parallel = {});

struct PyramidOptions {
  double base_sigma = 1.6;
  int levels_per_octave = 6;
  int num_octaves = 6;
  /// No octave is created once any of its dims would fall below this.
  int min_octave_dim = 16;
  /// Blur already present in the input, in voxels.
  double input_sigma = 0.0;

  double kappa() const;
};

void validate(const PyramidOptions& options);

struct GaussianOctave {
  Dims dims;
  std::vector<Volume> levels;
  std::vector<double> sigmas;  // absolute, base-volume voxel units
};

struct GaussianPyramid {
  PyramidOptions options;
  std::vector<GaussianOctave> octaves;

  int octave_count() const { return static_cast<int>(octaves.size()); }
  /// Blur of level `level` measured in the octave's own voxel units.
  double local_sigma(int octave, int level) const;
};

struct DoGOctave {
  std::vector<Volume> levels;
  std::vector<double> sigmas;  // absolute sigma of the finer Gaussian level of each pair
};

struct DoGPyramid {
  double kappa = 1.0;
  std::vector<DoGOctave> octaves;

  /// Scale represented by DoG level `level`: the geometric mean of its two Gaussian levels.
  double scale(int octave, int level) const;
};

GaussianPyramid build_gaussian_pyramid(const Volume& volume, const PyramidOptions& options = {},
                                       const ParallelOptions& parallel = {}, TimingSink* timing = nullptr);

/// DoG level i = Gaussian level i - Gaussian level i+1.
DoGPyramid build_dog_pyramid(const GaussianPyramid& pyramid, const ParallelOptions& parallel = {},
                             TimingSink* timing = nullptr);

/// Writes every level as oct<o>_lvl<i>_sigma<s>.f32 (+ sidecar) into `directory`.
void dump_pyramid(const GaussianPyramid& pyramid, const std::filesystem::path& directory);

/// Base-volume coordinate of a voxel centre in octave `octave` (block-mean sub-sampling
/// places octave voxel j at the centre of base voxels 2^o j ... 2^o (j+1) - 1).
inline double octave_to_base(double local, int octave) {
  const double f = static_cast<double>(1 << octave);
  return (local + 0.5) * f - 0.5;
}
inline double base_to_octave(double base, int octave) {
  const double f = static_cast<double>(1 << octave);
  return (base + 0.5) / f - 0.5;
}

}  // namespace volkey
