#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "volkey/descriptor.hpp"
#include "volkey/match.hpp"

namespace volkey {

/// Keypoint text format, one line per (keypoint, frame):
///   x y z sigma octave level dog_value sign r00 r01 r02 r10 r11 r12 r20 r21 r22
/// preceded by a `# volkey keypoints v1` header. Positions are base-volume voxel coordinates.
void write_keypoints(std::ostream& out, std::span<const DescribedFeature> features);
void write_keypoints(const std::filesystem::path& path, std::span<const DescribedFeature> features);

struct FeatureFile {
  DescriptorKind kind = DescriptorKind::sift_rank;
  int length = 0;
  std::uint64_t seed = 0;
  std::vector<DescribedFeature> features;
};

/// Descriptor text format: header `# volkey descriptors v1 kind=<k> n=<length> seed=<s>`, then one
/// line per feature with the 17 keypoint fields followed by either `length` ranks or the packed
/// bits as lowercase hex (bit k in byte k/8, LSB first).
void write_descriptors(std::ostream& out, const FeatureFile& file);
void write_descriptors(const std::filesystem::path& path, const FeatureFile& file);

/// Throws a format error on malformed content, an I/O error if the file cannot be opened.
FeatureFile read_descriptors(std::istream& in);
FeatureFile read_descriptors(const std::filesystem::path& path);

/// `idx_a,idx_b,distance` for each inlier match.
void write_inlier_csv(const std::filesystem::path& path, std::span<const Match> matches,
                      std::span<const int> inliers);

}  // namespace volkey
