#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "volkey/config.hpp"
#include "volkey/descriptor.hpp"
#include "volkey/match.hpp"
#include "volkey/timing.hpp"

namespace volkey {

struct Extraction {
  GaussianPyramid pyramid;
  std::vector<Keypoint> keypoints;          // detector output
  std::vector<OrientedKeypoint> oriented;   // keypoints that received at least one frame
  std::size_t orientation_dropped = 0;
  DescribeResult described;
};

/// Orientation assignment for every keypoint; keypoints with an empty histogram are dropped.
std::vector<OrientedKeypoint> orient_keypoints(const GaussianPyramid& pyramid, std::span<const Keypoint> keypoints,
                                               const OrientOptions& options, const ParallelOptions& parallel,
                                               std::size_t* dropped = nullptr, TimingSink* timing = nullptr);

/// Pyramid, detection, orientation and description of one volume.
Extraction extract_features(const Volume& volume, const Config& config, TimingSink* timing = nullptr);

struct MatchOutcome {
  std::vector<Match> matches;
  std::optional<Consensus> consensus;  // empty when no accumulator cell reached min_votes

  std::size_t inlier_count() const { return consensus ? consensus->inliers.size() : 0; }
};

/// Ratio-test matching from a into b followed by Hough consensus.
MatchOutcome match_features(std::span<const DescribedFeature> a, std::span<const DescribedFeature> b,
                            const Config& config, TimingSink* timing = nullptr);

struct MatchReport {
  std::size_t features_a = 0;
  std::size_t features_b = 0;
  MatchOutcome outcome;

  std::size_t inlier_count() const { return outcome.inlier_count(); }
};

MatchReport count_inlier_matches(const Volume& a, const Volume& b, const Config& config);

}  // namespace volkey
