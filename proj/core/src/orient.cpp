#include "volkey/orient.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <fmt/format.h>

#include "volkey/error.hpp"

namespace volkey {

namespace {

constexpr int kDirectionCount = 42;

std::array<Vec3, kDirectionCount> make_directions() {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::array<Vec3, 12> vertices;
  int n = 0;
  for (double a : {-1.0, 1.0})
    for (double b : {-phi, phi}) {
      vertices[n++] = Vec3(0.0, a, b);
      vertices[n++] = Vec3(a, b, 0.0);
      vertices[n++] = Vec3(b, 0.0, a);
    }
  std::array<Vec3, kDirectionCount> dirs;
  int m = 0;
  for (const auto& v : vertices) dirs[m++] = v.normalized();
  // Icosahedron edges join vertices at distance 2 (the unnormalised edge length).
  for (int i = 0; i < 12; ++i)
    for (int j = i + 1; j < 12; ++j)
      if (std::fabs((vertices[i] - vertices[j]).norm() - 2.0) < 1e-9) dirs[m++] = (vertices[i] + vertices[j]).normalized();
  return dirs;
}

const std::array<Vec3, kDirectionCount>& directions() {
  static const auto dirs = make_directions();
  return dirs;
}

Vec3 any_perpendicular(const Vec3& axis) {
  int k = 0;
  axis.cwiseAbs().minCoeff(&k);
  const Vec3 helper = Vec3::Unit(k);
  return (helper - helper.dot(axis) * axis).normalized();
}

}  // namespace

std::span<const Vec3> histogram_directions() { return directions(); }

int nearest_direction(const Vec3& v) {
  const auto& dirs = directions();
  int best = 0;
  double best_dot = -2.0;
  for (int i = 0; i < kDirectionCount; ++i) {
    const double dot = dirs[i].dot(v);
    if (dot > best_dot) {
      best_dot = dot;
      best = i;
    }
  }
  return best;
}

SphericalHistogram::SphericalHistogram()
    : weights(kDirectionCount, 0.0), vector_sums(kDirectionCount, Vec3::Zero()) {}

void validate(const OrientOptions& options) {
  if (!(options.radius_factor > 0.0)) fail(ErrorKind::parameter, "radius_factor must be > 0");
  if (!(options.secondary_ratio > 0.0 && options.secondary_ratio <= 1.0)) {
    fail(ErrorKind::parameter, fmt::format("secondary_ratio must lie in (0, 1], got {}", options.secondary_ratio));
  }
  if (options.max_frames < 1) fail(ErrorKind::parameter, "max_frames must be >= 1");
}

SphericalHistogram gradient_histogram(const GaussianPyramid& pyramid, const Keypoint& keypoint, double radius_factor) {
  if (keypoint.octave < 0 || keypoint.octave >= pyramid.octave_count()) {
    fail(ErrorKind::parameter, fmt::format("keypoint octave {} outside pyramid", keypoint.octave));
  }
  const auto& octave = pyramid.octaves[keypoint.octave];
  if (keypoint.level < 0 || keypoint.level >= static_cast<int>(octave.levels.size())) {
    fail(ErrorKind::parameter, fmt::format("keypoint level {} outside octave", keypoint.level));
  }
  const Volume& image = octave.levels[keypoint.level];
  const double sigma = keypoint.sigma / static_cast<double>(1 << keypoint.octave);
  const double radius = radius_factor * sigma;
  const double window = radius / 2.0;
  const Vec3 centre(base_to_octave(keypoint.position.x(), keypoint.octave),
                    base_to_octave(keypoint.position.y(), keypoint.octave),
                    base_to_octave(keypoint.position.z(), keypoint.octave));

  const auto& d = image.dims();
  const int x0 = std::max(0, static_cast<int>(std::ceil(centre.x() - radius)));
  const int x1 = std::min(d.nx - 1, static_cast<int>(std::floor(centre.x() + radius)));
  const int y0 = std::max(0, static_cast<int>(std::ceil(centre.y() - radius)));
  const int y1 = std::min(d.ny - 1, static_cast<int>(std::floor(centre.y() + radius)));
  const int z0 = std::max(0, static_cast<int>(std::ceil(centre.z() - radius)));
  const int z1 = std::min(d.nz - 1, static_cast<int>(std::floor(centre.z() + radius)));

  const auto& dirs = directions();
  SphericalHistogram hist;
  bool any_voxel = false;
  const double r2 = radius * radius;
  for (int z = z0; z <= z1; ++z) {
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const Vec3 offset = Vec3(x, y, z) - centre;
        const double dist2 = offset.squaredNorm();
        if (dist2 > r2) continue;
        any_voxel = true;
        const Vec3 g = central_gradient(image, {x, y, z});
        const double mag = g.norm();
        if (mag <= 0.0) continue;
        const Vec3 unit = g / mag;
        const double w = mag * std::exp(-dist2 / (2.0 * window * window));
        // A gradient equidistant from several directions splits its vote, which keeps the
        // histogram equivariant under the direction set's symmetries.
        std::array<double, kDirectionCount> dots;
        for (int i = 0; i < kDirectionCount; ++i) dots[i] = dirs[i].dot(unit);
        const double best = *std::max_element(dots.begin(), dots.end());
        const int ties = static_cast<int>(std::count(dots.begin(), dots.end(), best));
        for (int i = 0; i < kDirectionCount; ++i)
          if (dots[i] == best) {
            hist.weights[i] += w / ties;
            hist.vector_sums[i] += (w / ties) * unit;
          }
      }
    }
  }
  if (!any_voxel) fail(ErrorKind::empty_histogram, "keypoint neighbourhood lies outside the volume");
  return hist;
}

std::vector<OrientationFrame> dominant_orientations(const SphericalHistogram& histogram, double secondary_ratio,
                                                    int max_frames, bool refine_peaks) {
  validate(OrientOptions{1.0, secondary_ratio, max_frames, refine_peaks});
  const auto& dirs = directions();
  const auto& w = histogram.weights;
  if (w.size() != dirs.size()) fail(ErrorKind::parameter, "histogram has the wrong number of bins");
  const double max_weight = *std::max_element(w.begin(), w.end());
  if (!(max_weight > 0.0)) return {};

  auto axis_of = [&](int bin) -> Vec3 {
    if (refine_peaks && bin < static_cast<int>(histogram.vector_sums.size())) {
      const Vec3& s = histogram.vector_sums[bin];
      if (s.norm() > 0.0) return s.normalized();
    }
    return dirs[bin];
  };

  std::vector<int> order(dirs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return w[a] > w[b]; });

  std::vector<OrientationFrame> frames;
  for (int bin : order) {
    if (static_cast<int>(frames.size()) >= max_frames) break;
    if (w[bin] < secondary_ratio * max_weight) break;
    const Vec3 primary = axis_of(bin);

    // Secondary axis: the bin with the largest weight times projected length orthogonal to
    // the primary axis.
    double best_score = 0.0;
    Vec3 secondary = Vec3::Zero();
    for (int j = 0; j < static_cast<int>(dirs.size()); ++j) {
      if (j == bin || w[j] <= 0.0) continue;
      const Vec3 a = axis_of(j);
      const Vec3 projected = a - a.dot(primary) * primary;
      const double len = projected.norm();
      const double score = w[j] * len;
      if (len > 1e-6 && score > best_score) {
        best_score = score;
        secondary = projected / len;
      }
    }
    if (best_score <= 0.0) secondary = any_perpendicular(primary);

    OrientationFrame frame;
    frame.rotation.col(0) = primary;
    frame.rotation.col(1) = secondary;
    frame.rotation.col(2) = primary.cross(secondary).normalized();
    frames.push_back(frame);
  }
  return frames;
}

std::vector<OrientationFrame> assign_orientations(const GaussianPyramid& pyramid, const Keypoint& keypoint,
                                                  const OrientOptions& options) {
  validate(options);
  const auto hist = gradient_histogram(pyramid, keypoint, options.radius_factor);
  return dominant_orientations(hist, options.secondary_ratio, options.max_frames, options.refine_peaks);
}

bool is_rotation(const Mat3& m, double tolerance) {
  const Mat3 residual = m.transpose() * m - Mat3::Identity();
  return residual.cwiseAbs().maxCoeff() <= tolerance && std::fabs(m.determinant() - 1.0) <= tolerance;
}

}  // namespace volkey
