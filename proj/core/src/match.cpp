#include "volkey/match.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <set>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <fmt/format.h>

#include "volkey/error.hpp"
#include "volkey/orient.hpp"

namespace volkey {

namespace {

double hamming(const Descriptor& a, const Descriptor& b) {
  int count = 0;
  for (std::size_t w = 0; w < a.bits.size(); ++w) count += std::popcount(a.bits[w] ^ b.bits[w]);
  return count;
}

double rank_euclidean(const Descriptor& a, const Descriptor& b) {
  std::int64_t sum = 0;
  for (std::size_t k = 0; k < a.ranks.size(); ++k) {
    const std::int64_t d = static_cast<std::int64_t>(a.ranks[k]) - b.ranks[k];
    sum += d * d;
  }
  return std::sqrt(static_cast<double>(sum));
}

void check_compatible(const Descriptor& a, const Descriptor& b) {
  if (a.kind != b.kind) {
    fail(ErrorKind::parameter, fmt::format("descriptor kinds differ: {} vs {}", to_string(a.kind), to_string(b.kind)));
  }
  if (a.length != b.length) fail(ErrorKind::parameter, fmt::format("descriptor lengths differ: {} vs {}", a.length, b.length));
}

Mat3 nearest_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

// Deterministic orthonormal basis (u, v) perpendicular to each histogram direction, used to
// measure the in-plane angle of a rotation.
struct PlaneBasis {
  Vec3 u;
  Vec3 v;
};

const std::vector<PlaneBasis>& plane_bases() {
  static const std::vector<PlaneBasis> bases = [] {
    std::vector<PlaneBasis> out;
    for (const auto& d : histogram_directions()) {
      int k = 0;
      d.cwiseAbs().minCoeff(&k);
      const Vec3 helper = Vec3::Unit(k);
      const Vec3 u = (helper - helper.dot(d) * d).normalized();
      out.push_back({u, d.cross(u)});
    }
    return out;
  }();
  return bases;
}

using CellKey = std::array<int, 6>;  // log scale, direction, sector, tx, ty, tz

// The two bins whose centres bracket `value / width`.
std::array<int, 2> bracket(double value, double width) {
  const double f = value / width - 0.5;
  const int lo = static_cast<int>(std::floor(f));
  return {lo, lo + 1};
}

// Corresponding points for one keypoint: its centre plus one sigma along each frame axis.
void frame_points(const FramedKeypoint& k, std::vector<Vec3>& out) {
  out.push_back(k.position);
  for (int c = 0; c < 3; ++c) out.push_back(k.position + k.sigma * k.rotation.col(c));
}

bool well_spread(std::span<const Vec3> points) {
  if (points.size() < 3) return false;
  Vec3 mean = Vec3::Zero();
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& p : points) cov += (p - mean) * (p - mean).transpose();
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov / static_cast<double>(points.size()));
  // Need spread in at least two directions for the rotation to be determined.
  return eig.eigenvalues()(1) > 1.0;
}

}  // namespace

double descriptor_distance(const Descriptor& a, const Descriptor& b) {
  check_compatible(a, b);
  return a.kind == DescriptorKind::brief ? hamming(a, b) : rank_euclidean(a, b);
}

std::vector<Match> nearest_neighbor_matches(std::span<const Descriptor> a, std::span<const Descriptor> b,
                                            double ratio_max, const ParallelOptions& parallel) {
  if (b.size() < 2) fail(ErrorKind::parameter, fmt::format("need at least 2 descriptors to match against, got {}", b.size()));
  if (!(ratio_max > 0.0)) fail(ErrorKind::parameter, "ratio_max must be > 0");
  for (const auto& d : a) check_compatible(d, b[0]);
  for (const auto& d : b) check_compatible(d, b[0]);

  std::vector<Match> best(a.size());
  parallel_for(a.size(), parallel, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const bool binary = a[i].kind == DescriptorKind::brief;
      double d1 = std::numeric_limits<double>::infinity();
      double d2 = d1;
      int j1 = -1;
      for (std::size_t j = 0; j < b.size(); ++j) {
        const double d = binary ? hamming(a[i], b[j]) : rank_euclidean(a[i], b[j]);
        if (d < d1) {
          d2 = d1;
          d1 = d;
          j1 = static_cast<int>(j);
        } else if (d < d2) {
          d2 = d;
        }
      }
      best[i] = Match{static_cast<int>(i), j1, d1, d2};
    }
  });

  std::vector<Match> kept;
  for (const auto& m : best) {
    // Both distances zero (duplicate descriptors in b) counts as ratio 1.
    const double ratio = m.second_distance > 0.0 ? m.distance / m.second_distance : 1.0;
    if (ratio <= ratio_max) kept.push_back(m);
  }
  return kept;
}

SimilarityTransform SimilarityTransform::inverse() const {
  SimilarityTransform inv;
  inv.scale = 1.0 / scale;
  inv.rotation = rotation.transpose();
  inv.translation = -inv.scale * (inv.rotation * translation);
  return inv;
}

double rotation_angle_deg(const Mat3& rotation) {
  const double c = std::clamp((rotation.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

FramedKeypoint framed(const DescribedFeature& feature) {
  return {feature.keypoint.position, feature.keypoint.sigma, feature.frame.rotation};
}

SimilarityTransform vote_transform(const FramedKeypoint& a, const FramedKeypoint& b) {
  SimilarityTransform t;
  t.scale = b.sigma / a.sigma;
  t.rotation = b.rotation * a.rotation.transpose();
  t.translation = b.position - t.scale * (t.rotation * a.position);
  return t;
}

SimilarityTransform fit_similarity(std::span<const Vec3> src, std::span<const Vec3> dst) {
  if (src.size() != dst.size() || src.size() < 3) fail(ErrorKind::parameter, "fit_similarity needs >= 3 paired points");
  Eigen::Matrix3Xd a(3, src.size());
  Eigen::Matrix3Xd b(3, dst.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    a.col(static_cast<Eigen::Index>(i)) = src[i];
    b.col(static_cast<Eigen::Index>(i)) = dst[i];
  }
  const Eigen::Matrix4d h = Eigen::umeyama(a, b, true);
  SimilarityTransform t;
  const Mat3 sr = h.topLeftCorner<3, 3>();
  t.scale = std::cbrt(sr.determinant());
  t.rotation = nearest_rotation(sr / t.scale);
  t.translation = h.topRightCorner<3, 1>();
  return t;
}

void validate(const HoughOptions& options) {
  if (!(options.log_scale_bin > 0.0) || !(options.translation_bin > 0.0)) fail(ErrorKind::parameter, "Hough bin widths must be > 0");
  if (options.in_plane_sectors < 1) fail(ErrorKind::parameter, "in_plane_sectors must be >= 1");
  if (options.min_votes < 1) fail(ErrorKind::parameter, "min_votes must be >= 1");
  if (!(options.log_scale_tolerance >= 0.0) || !(options.rotation_tolerance_deg >= 0.0) ||
      !(options.translation_tolerance >= 0.0)) {
    fail(ErrorKind::parameter, "Hough tolerances must be >= 0");
  }
  if (options.refine_iterations < 0) fail(ErrorKind::parameter, "refine_iterations must be >= 0");
}

bool is_inlier(const FramedKeypoint& a, const FramedKeypoint& b, const SimilarityTransform& consensus,
               const HoughOptions& options) {
  const auto vote = vote_transform(a, b);
  if (std::fabs(std::log(vote.scale) - std::log(consensus.scale)) > options.log_scale_tolerance) return false;
  if (rotation_angle_deg(vote.rotation * consensus.rotation.transpose()) > options.rotation_tolerance_deg) return false;
  return (b.position - consensus.apply(a.position)).norm() <= options.translation_tolerance;
}

Consensus hough_consensus(std::span<const Match> matches, std::span<const FramedKeypoint> keypoints_a,
                          std::span<const FramedKeypoint> keypoints_b, const HoughOptions& options) {
  validate(options);
  if (matches.empty()) fail(ErrorKind::no_consensus, "no matches to vote with");
  for (const auto& m : matches) {
    if (m.index_a < 0 || m.index_a >= static_cast<int>(keypoints_a.size()) || m.index_b < 0 ||
        m.index_b >= static_cast<int>(keypoints_b.size())) {
      fail(ErrorKind::parameter, "match index outside keypoint list");
    }
  }

  // Translations are voted as the image of the matched centroid in A, which keeps rotation
  // error from smearing far-off keypoints across translation bins.
  Vec3 centre = Vec3::Zero();
  for (const auto& m : matches) centre += keypoints_a[m.index_a].position;
  centre /= static_cast<double>(matches.size());

  const auto dirs = histogram_directions();
  const auto& bases = plane_bases();
  const double sector_width = 2.0 * std::numbers::pi / options.in_plane_sectors;

  std::map<CellKey, std::vector<int>> cells;
  for (int mi = 0; mi < static_cast<int>(matches.size()); ++mi) {
    const auto& m = matches[mi];
    const auto t = vote_transform(keypoints_a[m.index_a], keypoints_b[m.index_b]);
    const Vec3 moved = t.apply(centre);
    const auto ls = bracket(std::log(t.scale), options.log_scale_bin);
    const auto tx = bracket(moved.x(), options.translation_bin);
    const auto ty = bracket(moved.y(), options.translation_bin);
    const auto tz = bracket(moved.z(), options.translation_bin);

    // Rotation cell: nearest two directions for R e_x, nearest two sectors for the angle of R e_y
    // about that direction.
    const Vec3 ex = t.rotation.col(0);
    const Vec3 ey = t.rotation.col(1);
    int d1 = -1, d2 = -1;
    double s1 = -2.0, s2 = -2.0;
    for (int k = 0; k < static_cast<int>(dirs.size()); ++k) {
      const double s = dirs[k].dot(ex);
      if (s > s1) {
        s2 = s1; d2 = d1;
        s1 = s; d1 = k;
      } else if (s > s2) {
        s2 = s; d2 = k;
      }
    }
    for (int dir : {d1, d2}) {
      const double angle = std::atan2(ey.dot(bases[dir].v), ey.dot(bases[dir].u)) + std::numbers::pi;
      const auto sectors = bracket(angle, sector_width);
      for (int sector : sectors) {
        const int wrapped = ((sector % options.in_plane_sectors) + options.in_plane_sectors) % options.in_plane_sectors;
        for (int a : ls)
          for (int x : tx)
            for (int y : ty)
              for (int z : tz) {
                auto& cell = cells[CellKey{a, dir, wrapped, x, y, z}];
                if (cell.empty() || cell.back() != mi) cell.push_back(mi);
              }
      }
    }
  }

  const std::vector<int>* peak = nullptr;
  for (const auto& [key, members] : cells) {
    if (peak == nullptr || members.size() > peak->size()) peak = &members;
  }
  const int votes = static_cast<int>(peak->size());
  if (votes < options.min_votes) {
    fail(ErrorKind::no_consensus, fmt::format("densest Hough cell holds {} votes, need {}", votes, options.min_votes));
  }

  auto fit_frames = [&](const std::vector<int>& members) {
    std::vector<Vec3> src, dst;
    for (int mi : members) {
      frame_points(keypoints_a[matches[mi].index_a], src);
      frame_points(keypoints_b[matches[mi].index_b], dst);
    }
    return fit_similarity(src, dst);
  };
  auto collect_inliers = [&](const SimilarityTransform& t) {
    std::vector<int> inliers;
    for (int mi = 0; mi < static_cast<int>(matches.size()); ++mi) {
      if (is_inlier(keypoints_a[matches[mi].index_a], keypoints_b[matches[mi].index_b], t, options)) inliers.push_back(mi);
    }
    return inliers;
  };

  Consensus result;
  result.peak_votes = votes;
  result.transform = fit_frames(*peak);
  result.inliers = collect_inliers(result.transform);
  for (int it = 0; it < options.refine_iterations && !result.inliers.empty(); ++it) {
    std::vector<Vec3> src, dst;
    for (int mi : result.inliers) {
      src.push_back(keypoints_a[matches[mi].index_a].position);
      dst.push_back(keypoints_b[matches[mi].index_b].position);
    }
    const SimilarityTransform refit = well_spread(src) ? fit_similarity(src, dst) : fit_frames(result.inliers);
    auto inliers = collect_inliers(refit);
    if (inliers.size() < result.inliers.size()) break;
    const bool unchanged = inliers == result.inliers;
    result.transform = refit;
    result.inliers = std::move(inliers);
    if (unchanged) break;
  }
  return result;
}

}  // namespace volkey
