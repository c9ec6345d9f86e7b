#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "volkey/detect.hpp"
#include "volkey/orient.hpp"
#include "volkey/parallel.hpp"
#include "volkey/scalespace.hpp"
#include "volkey/timing.hpp"

namespace volkey {

enum class DescriptorKind { sift_rank, brief, rrief };

std::string_view to_string(DescriptorKind kind);
std::optional<DescriptorKind> parse_descriptor_kind(std::string_view name);

/// Cube of side^3 samples covering [-2 sigma, 2 sigma]^3 in the keypoint's frame.
struct Patch {
  int side = 0;
  std::vector<float> data;  // x-fastest

  float at(int i, int j, int k) const { return data[(static_cast<std::size_t>(k) * side + j) * side + i]; }
  /// Trilinear sample at an offset given in sigma units (patch support is [-2, 2]^3).
  double sample(const Vec3& offset) const;
};

Patch extract_patch(const GaussianPyramid& pyramid, const Keypoint& keypoint, const OrientationFrame& frame,
                    int side);

/// Separable Gaussian blur in patch-sample units with replicate borders; 0 leaves it unchanged.
Patch preblur_patch(const Patch& patch, double blur_sigma);

/// Point-pair layouts:
///   1: p1, p2 uniform in the ball of radius 2 sigma
///   2: p1, p2 ~ N(0, sigma)
///   3: p1 ~ N(0, sigma), p2 ~ N(p1, sigma)
///   4: p1 = 0, p2 ~ N(0, sigma)
///   5: p1 = 0, p2 on a spherical grid (radii sigma/2 .. 2 sigma x 18 octahedral directions)
/// Random draws landing outside radius 2 sigma are redrawn.
struct PointPair {
  Vec3 first = Vec3::Zero();
  Vec3 second = Vec3::Zero();
};

struct PointPairSet {
  int method = 3;
  double sigma_unit = 1.0;
  std::uint64_t seed = 0;
  std::vector<PointPair> pairs;

  std::size_t size() const { return pairs.size(); }
};

PointPairSet sample_point_pairs(int method, int n, double sigma_unit, std::uint64_t seed);

/// Stable ranks: 0 for the smallest value, ties ordered by index.
std::vector<std::uint16_t> rank_order(std::span<const double> values);

struct Descriptor {
  DescriptorKind kind = DescriptorKind::sift_rank;
  int length = 0;
  std::vector<std::uint16_t> ranks;  // sift_rank, rrief
  std::vector<std::uint64_t> bits;   // brief, packed LSB-first

  bool bit(int k) const { return (bits[k / 64] >> (k % 64)) & 1u; }
  bool operator==(const Descriptor&) const = default;
};

/// sample(p1) - sample(p2) for every pair.
std::vector<double> pair_differences(const Patch& patch, const PointPairSet& pairs);

Descriptor brief_descriptor(const Patch& patch, const PointPairSet& pairs);
Descriptor rrief_descriptor(const Patch& patch, const PointPairSet& pairs);

constexpr int kSiftRankLength = 64;

/// 2x2x2 spatial octants x 8 gradient-sign octants of the reoriented neighbourhood, before ranking.
/// Bin index = spatial_octant * 8 + orientation_octant, octant bits = (x >= 0) | (y >= 0) << 1 | (z >= 0) << 2.
std::array<double, kSiftRankLength> sift_rank_histogram(const GaussianPyramid& pyramid, const Keypoint& keypoint,
                                                        const OrientationFrame& frame, double radius_factor = 4.0);
Descriptor sift_rank_descriptor(const GaussianPyramid& pyramid, const Keypoint& keypoint,
                                const OrientationFrame& frame, double radius_factor = 4.0);

/// 1 for BRIEF, ceil(log2(length)) for rank descriptors.
int bits_per_element(const Descriptor& descriptor);
std::size_t packed_size_bytes(const Descriptor& descriptor);
std::vector<std::uint8_t> pack(const Descriptor& descriptor);

struct DescriptorOptions {
  DescriptorKind kind = DescriptorKind::sift_rank;
  int n = 64;
  int method = 3;
  double blur_sigma = 0.95;
  std::uint64_t seed = 20200101;
  int patch_side = 15;
  double sigma_unit = 1.0;
  double radius_factor = 4.0;
};

void validate(const DescriptorOptions& options);

struct OrientedKeypoint {
  Keypoint keypoint;
  std::vector<OrientationFrame> frames;
};

struct DescribedFeature {
  Keypoint keypoint;
  OrientationFrame frame;
  Descriptor descriptor;
};

struct DescribeResult {
  std::vector<DescribedFeature> features;
  std::size_t dropped = 0;
};

/// One descriptor per (keypoint, frame), in input order.
DescribeResult describe_all(const GaussianPyramid& pyramid, std::span<const OrientedKeypoint> keypoints,
                            const DescriptorOptions& options, const ParallelOptions& parallel = {},
                            TimingSink* timing = nullptr);

}  // namespace volkey
