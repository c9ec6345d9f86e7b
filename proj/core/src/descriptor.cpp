#include "volkey/descriptor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "volkey/error.hpp"

namespace volkey {

namespace {

constexpr double kPatchHalfWidth = 2.0;  // in sigma units

Vec3 octave_centre(const Keypoint& kp) {
  return {base_to_octave(kp.position.x(), kp.octave), base_to_octave(kp.position.y(), kp.octave),
          base_to_octave(kp.position.z(), kp.octave)};
}

const Volume& level_image(const GaussianPyramid& pyramid, const Keypoint& kp) {
  if (kp.octave < 0 || kp.octave >= pyramid.octave_count()) {
    fail(ErrorKind::parameter, fmt::format("keypoint octave {} outside pyramid", kp.octave));
  }
  const auto& levels = pyramid.octaves[kp.octave].levels;
  if (kp.level < 0 || kp.level >= static_cast<int>(levels.size())) {
    fail(ErrorKind::parameter, fmt::format("keypoint level {} outside octave", kp.level));
  }
  return levels[kp.level];
}

double local_sigma(const Keypoint& kp) { return kp.sigma / static_cast<double>(1 << kp.octave); }

std::vector<Vec3> octahedral_directions() {
  std::vector<Vec3> dirs;
  for (int axis = 0; axis < 3; ++axis)
    for (double s : {1.0, -1.0}) dirs.push_back(s * Vec3::Unit(axis));
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b)
      for (double sa : {1.0, -1.0})
        for (double sb : {1.0, -1.0}) dirs.push_back((sa * Vec3::Unit(a) + sb * Vec3::Unit(b)).normalized());
  return dirs;
}

}  // namespace

std::string_view to_string(DescriptorKind kind) {
  switch (kind) {
    case DescriptorKind::sift_rank: return "siftrank";
    case DescriptorKind::brief: return "brief";
    case DescriptorKind::rrief: return "rrief";
  }
  return "unknown";
}

std::optional<DescriptorKind> parse_descriptor_kind(std::string_view name) {
  if (name == "siftrank") return DescriptorKind::sift_rank;
  if (name == "brief") return DescriptorKind::brief;
  if (name == "rrief") return DescriptorKind::rrief;
  return std::nullopt;
}

double Patch::sample(const Vec3& offset) const {
  if (side == 1) return data[0];
  const double scale = (side - 1) / (2.0 * kPatchHalfWidth);
  const double hi = side - 1;
  const double x = std::clamp((offset.x() + kPatchHalfWidth) * scale, 0.0, hi);
  const double y = std::clamp((offset.y() + kPatchHalfWidth) * scale, 0.0, hi);
  const double z = std::clamp((offset.z() + kPatchHalfWidth) * scale, 0.0, hi);
  const int x0 = std::min(static_cast<int>(x), side - 2);
  const int y0 = std::min(static_cast<int>(y), side - 2);
  const int z0 = std::min(static_cast<int>(z), side - 2);
  const double fx = x - x0, fy = y - y0, fz = z - z0;
  auto lerp = [](double a, double b, double t) { return a + (b - a) * t; };
  const double c00 = lerp(at(x0, y0, z0), at(x0 + 1, y0, z0), fx);
  const double c10 = lerp(at(x0, y0 + 1, z0), at(x0 + 1, y0 + 1, z0), fx);
  const double c01 = lerp(at(x0, y0, z0 + 1), at(x0 + 1, y0, z0 + 1), fx);
  const double c11 = lerp(at(x0, y0 + 1, z0 + 1), at(x0 + 1, y0 + 1, z0 + 1), fx);
  return lerp(lerp(c00, c10, fy), lerp(c01, c11, fy), fz);
}

Patch extract_patch(const GaussianPyramid& pyramid, const Keypoint& keypoint, const OrientationFrame& frame,
                    int side) {
  if (side < 1 || side % 2 == 0) fail(ErrorKind::parameter, fmt::format("patch side must be odd, got {}", side));
  const Volume& image = level_image(pyramid, keypoint);
  const Vec3 centre = octave_centre(keypoint);
  const double sigma = local_sigma(keypoint);
  const double step = side == 1 ? 0.0 : 2.0 * kPatchHalfWidth / (side - 1);

  Patch patch;
  patch.side = side;
  patch.data.resize(static_cast<std::size_t>(side) * side * side);
  std::size_t n = 0;
  for (int k = 0; k < side; ++k)
    for (int j = 0; j < side; ++j)
      for (int i = 0; i < side; ++i) {
        const Vec3 u(-kPatchHalfWidth + i * step, -kPatchHalfWidth + j * step, -kPatchHalfWidth + k * step);
        if (side == 1) {
          patch.data[n++] = static_cast<float>(trilinear_sample(image, centre));
        } else {
          patch.data[n++] = static_cast<float>(trilinear_sample(image, centre + frame.rotation * (sigma * u)));
        }
      }
  return patch;
}

Patch preblur_patch(const Patch& patch, double blur_sigma) {
  if (blur_sigma < 0.0) fail(ErrorKind::parameter, "blur_sigma must be >= 0");
  if (blur_sigma == 0.0 || patch.side <= 1) return patch;
  const Dims dims{patch.side, patch.side, patch.side};
  const Volume blurred = convolve_separable(Volume(dims, {}, patch.data), gaussian_kernel(blur_sigma));
  Patch out;
  out.side = patch.side;
  out.data.assign(blurred.data().begin(), blurred.data().end());
  return out;
}

PointPairSet sample_point_pairs(int method, int n, double sigma_unit, std::uint64_t seed) {
  if (method < 1 || method > 5) fail(ErrorKind::parameter, fmt::format("point-pair method must be 1..5, got {}", method));
  if (n < 1) fail(ErrorKind::parameter, fmt::format("pair count must be >= 1, got {}", n));
  if (!(sigma_unit > 0.0)) fail(ErrorKind::parameter, "sigma_unit must be > 0");

  PointPairSet set;
  set.method = method;
  set.sigma_unit = sigma_unit;
  set.seed = seed;
  set.pairs.reserve(n);

  const double support = 2.0 * sigma_unit;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-support, support);
  std::normal_distribution<double> normal(0.0, sigma_unit);

  auto uniform_ball = [&] {
    for (;;) {
      Vec3 p(uniform(rng), uniform(rng), uniform(rng));
      if (p.norm() <= support) return p;
    }
  };
  auto gaussian_around = [&](const Vec3& mean) {
    for (;;) {
      Vec3 p = mean + Vec3(normal(rng), normal(rng), normal(rng));
      if (p.norm() <= support) return p;
    }
  };

  if (method == 5) {
    const auto dirs = octahedral_directions();
    const double radii[] = {0.5 * sigma_unit, sigma_unit, 1.5 * sigma_unit, 2.0 * sigma_unit};
    std::vector<Vec3> grid;
    for (double r : radii)
      for (const auto& d : dirs) grid.push_back(r * d);
    for (int k = 0; k < n; ++k) set.pairs.push_back({Vec3::Zero(), grid[k % grid.size()]});
    return set;
  }

  for (int k = 0; k < n; ++k) {
    PointPair pair;
    switch (method) {
      case 1:
        pair.first = uniform_ball();
        pair.second = uniform_ball();
        break;
      case 2:
        pair.first = gaussian_around(Vec3::Zero());
        pair.second = gaussian_around(Vec3::Zero());
        break;
      case 3:
        pair.first = gaussian_around(Vec3::Zero());
        pair.second = gaussian_around(pair.first);
        break;
      case 4:
        pair.first = Vec3::Zero();
        pair.second = gaussian_around(Vec3::Zero());
        break;
      default: break;
    }
    set.pairs.push_back(pair);
  }
  return set;
}

std::vector<std::uint16_t> rank_order(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<std::uint16_t> ranks(values.size());
  for (std::size_t r = 0; r < order.size(); ++r) ranks[order[r]] = static_cast<std::uint16_t>(r);
  return ranks;
}

std::vector<double> pair_differences(const Patch& patch, const PointPairSet& pairs) {
  std::vector<double> diffs;
  diffs.reserve(pairs.size());
  for (const auto& p : pairs.pairs) diffs.push_back(patch.sample(p.first) - patch.sample(p.second));
  return diffs;
}

Descriptor brief_descriptor(const Patch& patch, const PointPairSet& pairs) {
  const auto diffs = pair_differences(patch, pairs);
  Descriptor d;
  d.kind = DescriptorKind::brief;
  d.length = static_cast<int>(diffs.size());
  d.bits.assign((diffs.size() + 63) / 64, 0);
  for (std::size_t k = 0; k < diffs.size(); ++k)
    if (diffs[k] > 0.0) d.bits[k / 64] |= std::uint64_t{1} << (k % 64);
  return d;
}

Descriptor rrief_descriptor(const Patch& patch, const PointPairSet& pairs) {
  const auto diffs = pair_differences(patch, pairs);
  Descriptor d;
  d.kind = DescriptorKind::rrief;
  d.length = static_cast<int>(diffs.size());
  d.ranks = rank_order(diffs);
  return d;
}

std::array<double, kSiftRankLength> sift_rank_histogram(const GaussianPyramid& pyramid, const Keypoint& keypoint,
                                                        const OrientationFrame& frame, double radius_factor) {
  const Volume& image = level_image(pyramid, keypoint);
  const Vec3 centre = octave_centre(keypoint);
  const double radius = radius_factor * local_sigma(keypoint);
  const Mat3 to_frame = frame.rotation.transpose();
  const auto& d = image.dims();

  std::array<double, kSiftRankLength> bins{};
  const int x0 = std::max(0, static_cast<int>(std::ceil(centre.x() - radius)));
  const int x1 = std::min(d.nx - 1, static_cast<int>(std::floor(centre.x() + radius)));
  const int y0 = std::max(0, static_cast<int>(std::ceil(centre.y() - radius)));
  const int y1 = std::min(d.ny - 1, static_cast<int>(std::floor(centre.y() + radius)));
  const int z0 = std::max(0, static_cast<int>(std::ceil(centre.z() - radius)));
  const int z1 = std::min(d.nz - 1, static_cast<int>(std::floor(centre.z() + radius)));
  auto octant = [](const Vec3& v) { return (v.x() >= 0.0 ? 1 : 0) | (v.y() >= 0.0 ? 2 : 0) | (v.z() >= 0.0 ? 4 : 0); };

  for (int z = z0; z <= z1; ++z)
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const Vec3 offset = Vec3(x, y, z) - centre;
        if (offset.squaredNorm() > radius * radius) continue;
        const Vec3 g = central_gradient(image, {x, y, z});
        const double mag = g.norm();
        if (mag <= 0.0) continue;
        const int spatial = octant(to_frame * offset);
        const int orientation = octant(to_frame * g);
        bins[spatial * 8 + orientation] += mag;
      }
  return bins;
}

Descriptor sift_rank_descriptor(const GaussianPyramid& pyramid, const Keypoint& keypoint,
                                const OrientationFrame& frame, double radius_factor) {
  const auto bins = sift_rank_histogram(pyramid, keypoint, frame, radius_factor);
  Descriptor d;
  d.kind = DescriptorKind::sift_rank;
  d.length = kSiftRankLength;
  d.ranks = rank_order(bins);
  return d;
}

int bits_per_element(const Descriptor& descriptor) {
  if (descriptor.kind == DescriptorKind::brief) return 1;
  if (descriptor.length <= 2) return 1;
  return std::bit_width(static_cast<unsigned>(descriptor.length - 1));
}

std::size_t packed_size_bytes(const Descriptor& descriptor) {
  const std::size_t bits = static_cast<std::size_t>(descriptor.length) * bits_per_element(descriptor);
  return (bits + 7) / 8;
}

std::vector<std::uint8_t> pack(const Descriptor& descriptor) {
  std::vector<std::uint8_t> out(packed_size_bytes(descriptor), 0);
  const int width = bits_per_element(descriptor);
  std::size_t cursor = 0;
  for (int k = 0; k < descriptor.length; ++k) {
    const unsigned value = descriptor.kind == DescriptorKind::brief ? (descriptor.bit(k) ? 1u : 0u) : descriptor.ranks[k];
    for (int b = 0; b < width; ++b, ++cursor)
      if ((value >> b) & 1u) out[cursor / 8] |= static_cast<std::uint8_t>(1u << (cursor % 8));
  }
  return out;
}

void validate(const DescriptorOptions& options) {
  if (options.n < 1 || options.n > 65535) fail(ErrorKind::parameter, fmt::format("n must lie in [1, 65535], got {}", options.n));
  if (options.method < 1 || options.method > 5) fail(ErrorKind::parameter, fmt::format("method must be 1..5, got {}", options.method));
  if (options.blur_sigma < 0.0) fail(ErrorKind::parameter, "blur_sigma must be >= 0");
  if (options.patch_side < 1 || options.patch_side % 2 == 0) fail(ErrorKind::parameter, "patch_side must be odd");
  if (!(options.sigma_unit > 0.0)) fail(ErrorKind::parameter, "sigma_unit must be > 0");
  if (!(options.radius_factor > 0.0)) fail(ErrorKind::parameter, "radius_factor must be > 0");
}

DescribeResult describe_all(const GaussianPyramid& pyramid, std::span<const OrientedKeypoint> keypoints,
                            const DescriptorOptions& options, const ParallelOptions& parallel, TimingSink* timing) {
  validate(options);
  ScopedStageTimer timer(timing, Stage::descriptor);

  struct Job {
    std::size_t keypoint;
    std::size_t frame;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < keypoints.size(); ++i)
    for (std::size_t f = 0; f < keypoints[i].frames.size(); ++f) jobs.push_back({i, f});

  std::optional<PointPairSet> pairs;
  if (options.kind != DescriptorKind::sift_rank) {
    pairs = sample_point_pairs(options.method, options.n, options.sigma_unit, options.seed);
  }

  std::vector<std::optional<Descriptor>> slots(jobs.size());
  parallel_for(jobs.size(), parallel, [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      const auto& kp = keypoints[jobs[j].keypoint].keypoint;
      const auto& frame = keypoints[jobs[j].keypoint].frames[jobs[j].frame];
      try {
        if (options.kind == DescriptorKind::sift_rank) {
          slots[j] = sift_rank_descriptor(pyramid, kp, frame, options.radius_factor);
        } else {
          const Patch patch = preblur_patch(extract_patch(pyramid, kp, frame, options.patch_side), options.blur_sigma);
          slots[j] = options.kind == DescriptorKind::brief ? brief_descriptor(patch, *pairs) : rrief_descriptor(patch, *pairs);
        }
      } catch (const Error&) {
        slots[j].reset();
      }
    }
  });

  DescribeResult result;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (!slots[j]) {
      ++result.dropped;
      continue;
    }
    const auto& entry = keypoints[jobs[j].keypoint];
    result.features.push_back({entry.keypoint, entry.frames[jobs[j].frame], std::move(*slots[j])});
  }
  return result;
}

}  // namespace volkey
