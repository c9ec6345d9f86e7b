#include "volkey/pipeline.hpp"

#include "volkey/error.hpp"

namespace volkey {

std::vector<OrientedKeypoint> orient_keypoints(const GaussianPyramid& pyramid, std::span<const Keypoint> keypoints,
                                               const OrientOptions& options, const ParallelOptions& parallel,
                                               std::size_t* dropped, TimingSink* timing) {
  validate(options);
  ScopedStageTimer timer(timing, Stage::orient);
  std::vector<std::vector<OrientationFrame>> frames(keypoints.size());
  parallel_for(keypoints.size(), parallel, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      try {
        frames[i] = assign_orientations(pyramid, keypoints[i], options);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::empty_histogram) throw;
        frames[i].clear();
      }
    }
  });

  std::vector<OrientedKeypoint> out;
  std::size_t lost = 0;
  for (std::size_t i = 0; i < keypoints.size(); ++i) {
    if (frames[i].empty()) {
      ++lost;
      continue;
    }
    out.push_back({keypoints[i], std::move(frames[i])});
  }
  if (dropped != nullptr) *dropped = lost;
  return out;
}

Extraction extract_features(const Volume& volume, const Config& config, TimingSink* timing) {
  validate(config);
  Extraction result;
  result.pyramid = build_gaussian_pyramid(volume, config.pyramid, config.parallel, timing);
  const DoGPyramid dog = build_dog_pyramid(result.pyramid, config.parallel, timing);
  result.keypoints = detect_keypoints(dog, config.detect, config.parallel, timing);
  result.oriented = orient_keypoints(result.pyramid, result.keypoints, config.orient, config.parallel,
                                     &result.orientation_dropped, timing);
  result.described = describe_all(result.pyramid, result.oriented, config.descriptor, config.parallel, timing);
  return result;
}

MatchOutcome match_features(std::span<const DescribedFeature> a, std::span<const DescribedFeature> b,
                            const Config& config, TimingSink* timing) {
  validate(config);
  ScopedStageTimer timer(timing, Stage::match);
  std::vector<Descriptor> da, db;
  std::vector<FramedKeypoint> ka, kb;
  da.reserve(a.size());
  db.reserve(b.size());
  for (const auto& f : a) {
    da.push_back(f.descriptor);
    ka.push_back(framed(f));
  }
  for (const auto& f : b) {
    db.push_back(f.descriptor);
    kb.push_back(framed(f));
  }

  MatchOutcome outcome;
  outcome.matches = nearest_neighbor_matches(da, db, config.ratio_max, config.parallel);
  try {
    outcome.consensus = hough_consensus(outcome.matches, ka, kb, config.hough);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::no_consensus) throw;
  }
  return outcome;
}

MatchReport count_inlier_matches(const Volume& a, const Volume& b, const Config& config) {
  const Extraction ea = extract_features(a, config);
  const Extraction eb = extract_features(b, config);
  MatchReport report;
  report.features_a = ea.described.features.size();
  report.features_b = eb.described.features.size();
  if (report.features_b < 2) return report;
  report.outcome = match_features(ea.described.features, eb.described.features, config);
  return report;
}

}  // namespace volkey
