#include "volkey/scalespace.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "volkey/error.hpp"

namespace volkey {

namespace {

enum class Axis { x, y, z };

// One 1D pass. Each output voxel is a fixed-order sum over the taps, so the result does not
// depend on how the volume is tiled or how many workers run.
void convolve_axis(const Volume& in, Volume& out, const GaussianKernel1D& kernel, Axis axis,
                   const ParallelOptions& parallel) {
  const auto& d = in.dims();
  const int r = kernel.radius;
  const double* w = kernel.weights.data();
  const float* src = in.data().data();
  float* dst = out.data().data();

  std::ptrdiff_t stride = 1;
  int n = d.nx;
  if (axis == Axis::y) {
    stride = d.nx;
    n = d.ny;
  } else if (axis == Axis::z) {
    stride = static_cast<std::ptrdiff_t>(d.nx) * d.ny;
    n = d.nz;
  }

  parallel_for_tiles(d, parallel, [&](const Box& b) {
    for (int z = b.z0; z < b.z1; ++z) {
      for (int y = b.y0; y < b.y1; ++y) {
        for (int x = b.x0; x < b.x1; ++x) {
          const std::size_t idx = in.index(x, y, z);
          const int pos = axis == Axis::x ? x : (axis == Axis::y ? y : z);
          const float* line = src + static_cast<std::ptrdiff_t>(idx) - pos * stride;
          double acc = 0.0;
          if (pos - r >= 0 && pos + r < n) {
            const float* p = line + (pos - r) * stride;
            for (int k = 0; k <= 2 * r; ++k, p += stride) acc += w[k] * *p;
          } else {
            for (int k = -r; k <= r; ++k) {
              const int q = std::clamp(pos + k, 0, n - 1);
              acc += w[k + r] * line[q * stride];
            }
          }
          dst[idx] = static_cast<float>(acc);
        }
      }
    }
  });
}

}  // namespace

GaussianKernel1D gaussian_kernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    fail(ErrorKind::parameter, fmt::format("gaussian sigma must be > 0, got {}", sigma));
  }
  GaussianKernel1D kernel;
  kernel.sigma = sigma;
  kernel.radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  kernel.weights.resize(2 * kernel.radius + 1);
  double sum = 0.0;
  for (int k = -kernel.radius; k <= kernel.radius; ++k) {
    const double v = std::exp(-static_cast<double>(k * k) / (2.0 * sigma * sigma));
    kernel.weights[k + kernel.radius] = v;
    sum += v;
  }
  for (auto& v : kernel.weights) v /= sum;
  return kernel;
}

Volume convolve_separable(const Volume& volume, const GaussianKernel1D& kernel, const ParallelOptions& parallel) {
  Volume tmp(volume.dims(), volume.spacing());
  Volume out(volume.dims(), volume.spacing());
  convolve_axis(volume, tmp, kernel, Axis::x, parallel);
  convolve_axis(tmp, out, kernel, Axis::y, parallel);
  convolve_axis(out, tmp, kernel, Axis::z, parallel);
  return tmp;
}

Volume subsample_half(const Volume& volume, const ParallelOptions& parallel) {
  const auto& d = volume.dims();
  if (d.min_dim() < 2) {
    fail(ErrorKind::size, fmt::format("cannot sub-sample dims ({}, {}, {}): every dim must be >= 2", d.nx, d.ny, d.nz));
  }
  const Dims half{d.nx / 2, d.ny / 2, d.nz / 2};
  const auto& s = volume.spacing();
  Volume out(half, Spacing{2.0 * s.sx, 2.0 * s.sy, 2.0 * s.sz});
  parallel_for_tiles(half, parallel, [&](const Box& b) {
    for (int z = b.z0; z < b.z1; ++z) {
      for (int y = b.y0; y < b.y1; ++y) {
        for (int x = b.x0; x < b.x1; ++x) {
          double acc = 0.0;
          for (int dz = 0; dz < 2; ++dz)
            for (int dy = 0; dy < 2; ++dy)
              for (int dx = 0; dx < 2; ++dx) acc += volume.at(2 * x + dx, 2 * y + dy, 2 * z + dz);
          out.at(x, y, z) = static_cast<float>(acc / 8.0);
        }
      }
    }
  });
  return out;
}

Volume subtract(const Volume& a, const Volume& b, const ParallelOptions& parallel) {
  if (!(a.dims() == b.dims())) fail(ErrorKind::parameter, "subtract: dims differ");
  Volume out(a.dims(), a.spacing());
  const float* pa = a.data().data();
  const float* pb = b.data().data();
  float* po = out.data().data();
  parallel_for_tiles(a.dims(), parallel, [&](const Box& box) {
    for (int z = box.z0; z < box.z1; ++z) {
      for (int y = box.y0; y < box.y1; ++y) {
        const std::size_t row = a.index(0, y, z);
        for (int x = box.x0; x < box.x1; ++x) po[row + x] = pa[row + x] - pb[row + x];
      }
    }
  });
  return out;
}

double PyramidOptions::kappa() const { return std::pow(2.0, 1.0 / static_cast<double>(levels_per_octave - 3)); }

void validate(const PyramidOptions& options) {
  if (!(options.base_sigma > 0.0)) fail(ErrorKind::parameter, "base_sigma must be > 0");
  if (options.levels_per_octave < 4) {
    // kappa = 2^(1/(L-3)) needs L >= 4; L = 3 would put the octave hand-off level at index 0.
    fail(ErrorKind::parameter, fmt::format("levels_per_octave must be >= 4, got {}", options.levels_per_octave));
  }
  if (options.num_octaves < 1) fail(ErrorKind::parameter, "num_octaves must be >= 1");
  if (options.min_octave_dim < 2) fail(ErrorKind::parameter, "min_octave_dim must be >= 2");
  if (options.input_sigma < 0.0 || options.input_sigma >= options.base_sigma) {
    fail(ErrorKind::parameter, "input_sigma must lie in [0, base_sigma)");
  }
}

double GaussianPyramid::local_sigma(int octave, int level) const {
  return octaves.at(octave).sigmas.at(level) / static_cast<double>(1 << octave);
}

double DoGPyramid::scale(int octave, int level) const { return octaves.at(octave).sigmas.at(level) * std::sqrt(kappa); }

GaussianPyramid build_gaussian_pyramid(const Volume& volume, const PyramidOptions& options,
                                       const ParallelOptions& parallel, TimingSink* timing) {
  validate(options);
  validate(parallel);
  GaussianPyramid pyramid;
  pyramid.options = options;
  const double kappa = options.kappa();
  const int handoff = options.levels_per_octave - 3;  // level whose sigma is 2 * base_sigma

  Volume current = volume;
  double current_sigma = options.input_sigma;
  for (int o = 0; o < options.num_octaves; ++o) {
    GaussianOctave octave;
    octave.dims = current.dims();
    const double factor = static_cast<double>(1 << o);
    for (int i = 0; i < options.levels_per_octave; ++i) {
      const double target = options.base_sigma * std::pow(kappa, i);
      const double increment = std::sqrt(std::max(0.0, target * target - current_sigma * current_sigma));
      if (increment > 1e-9) {
        ScopedStageTimer timer(timing, Stage::convolution, o, i);
        current = convolve_separable(current, gaussian_kernel(increment), parallel);
      }
      current_sigma = target;
      octave.levels.push_back(current);
      octave.sigmas.push_back(target * factor);
    }
    pyramid.octaves.push_back(std::move(octave));

    const auto& last = pyramid.octaves.back();
    const Dims next{last.dims.nx / 2, last.dims.ny / 2, last.dims.nz / 2};
    if (o + 1 >= options.num_octaves || next.min_dim() < options.min_octave_dim) break;
    {
      ScopedStageTimer timer(timing, Stage::subsample, o + 1, -1);
      current = subsample_half(last.levels[handoff], parallel);
    }
    current_sigma = options.base_sigma;
  }
  return pyramid;
}

DoGPyramid build_dog_pyramid(const GaussianPyramid& pyramid, const ParallelOptions& parallel, TimingSink* timing) {
  DoGPyramid dog;
  dog.kappa = pyramid.options.kappa();
  for (int o = 0; o < pyramid.octave_count(); ++o) {
    const auto& g = pyramid.octaves[o];
    if (g.levels.size() < 2) fail(ErrorKind::parameter, "DoG needs at least two levels per octave");
    DoGOctave octave;
    for (std::size_t i = 0; i + 1 < g.levels.size(); ++i) {
      ScopedStageTimer timer(timing, Stage::dog, o, static_cast<int>(i));
      octave.levels.push_back(subtract(g.levels[i], g.levels[i + 1], parallel));
      octave.sigmas.push_back(g.sigmas[i]);
    }
    dog.octaves.push_back(std::move(octave));
  }
  return dog;
}

void dump_pyramid(const GaussianPyramid& pyramid, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  for (int o = 0; o < pyramid.octave_count(); ++o) {
    const auto& octave = pyramid.octaves[o];
    for (std::size_t i = 0; i < octave.levels.size(); ++i) {
      save_raw(octave.levels[i], directory / fmt::format("oct{}_lvl{}_sigma{:.3f}.f32", o, i, octave.sigmas[i]));
    }
  }
}

}  // namespace volkey
