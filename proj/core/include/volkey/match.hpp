#pragma once

#include <span>
#include <vector>

#include "volkey/descriptor.hpp"
#include "volkey/parallel.hpp"
#include "volkey/volume.hpp"

namespace volkey {

struct Match {
  int index_a = -1;
  int index_b = -1;
  double distance = 0.0;
  double second_distance = 0.0;
};

/// Hamming distance for BRIEF, Euclidean distance between rank vectors otherwise.
double descriptor_distance(const Descriptor& a, const Descriptor& b);

/// Exhaustive one-directional nearest neighbours from `a` into `b` with a distance-ratio test.
/// Ties resolve to the lower index in `b`. Throws a parameter error if |b| < 2 or kinds differ.
std::vector<Match> nearest_neighbor_matches(std::span<const Descriptor> a, std::span<const Descriptor> b,
                                            double ratio_max, const ParallelOptions& parallel = {});

/// x -> scale * rotation * x + translation
struct SimilarityTransform {
  double scale = 1.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& x) const { return scale * (rotation * x) + translation; }
  SimilarityTransform inverse() const;
};

/// Angle of a rotation matrix in degrees.
double rotation_angle_deg(const Mat3& rotation);

struct FramedKeypoint {
  Vec3 position = Vec3::Zero();
  double sigma = 1.0;
  Mat3 rotation = Mat3::Identity();
};

FramedKeypoint framed(const DescribedFeature& feature);

/// The unique similarity taking keypoint a (position, scale, frame) onto keypoint b.
SimilarityTransform vote_transform(const FramedKeypoint& a, const FramedKeypoint& b);

/// Least-squares similarity mapping src onto dst (closed form, Umeyama).
SimilarityTransform fit_similarity(std::span<const Vec3> src, std::span<const Vec3> dst);

struct HoughOptions {
  double log_scale_bin = 0.2;
  double translation_bin = 8.0;
  int in_plane_sectors = 8;
  int min_votes = 3;
  double log_scale_tolerance = 0.25;
  double rotation_tolerance_deg = 15.0;
  double translation_tolerance = 10.0;
  int refine_iterations = 3;
};

void validate(const HoughOptions& options);

struct Consensus {
  SimilarityTransform transform;
  std::vector<int> inliers;  // indices into the match list, ascending
  int peak_votes = 0;
};

/// Votes every match's transform into a (log scale, rotation, translation) accumulator, fits a
/// similarity to the densest cell and keeps the matches consistent with it.
/// Throws ErrorKind::no_consensus when no cell reaches min_votes.
Consensus hough_consensus(std::span<const Match> matches, std::span<const FramedKeypoint> keypoints_a,
                          std::span<const FramedKeypoint> keypoints_b, const HoughOptions& options = {});

/// True when the per-match transform agrees with `consensus` within the tolerances: scale and
/// rotation compared directly, translation as the transfer error of keypoint a's position.
bool is_inlier(const FramedKeypoint& a, const FramedKeypoint& b, const SimilarityTransform& consensus,
               const HoughOptions& options);

}  // namespace volkey
