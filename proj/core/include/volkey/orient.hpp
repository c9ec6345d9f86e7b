#pragma once

#include <span>
#include <vector>

#include "volkey/detect.hpp"
#include "volkey/scalespace.hpp"
#include "volkey/volume.hpp"

namespace volkey {

/// The 42 unit directions of a once-subdivided icosahedron: 12 vertices followed by 30 edge
/// midpoints, in a fixed order.
std::span<const Vec3> histogram_directions();

/// Index of the direction with the largest dot product against `v` (lowest index on ties).
int nearest_direction(const Vec3& v);

struct SphericalHistogram {
  std::vector<double> weights;  // one per histogram direction
  /// Per-bin weighted sum of unit gradient vectors; used for optional peak refinement.
  std::vector<Vec3> vector_sums;

  SphericalHistogram();
};

struct OrientationFrame {
  Mat3 rotation = Mat3::Identity();  // columns: primary, secondary, tertiary axes
};

struct OrientOptions {
  double radius_factor = 4.0;
  double secondary_ratio = 0.8;
  int max_frames = 4;
  /// Replace each selected bin direction by the mean gradient direction of its votes.
  bool refine_peaks = true;
};

void validate(const OrientOptions& options);

/// Magnitude- and Gaussian-window-weighted histogram of gradient directions within
/// radius_factor * sigma (octave-local) of the keypoint, on the keypoint's own Gaussian level.
SphericalHistogram gradient_histogram(const GaussianPyramid& pyramid, const Keypoint& keypoint, double radius_factor);

std::vector<OrientationFrame> dominant_orientations(const SphericalHistogram& histogram, double secondary_ratio,
                                                    int max_frames = 4, bool refine_peaks = false);

/// Histogram followed by peak selection; an empty result means the keypoint is dropped.
std::vector<OrientationFrame> assign_orientations(const GaussianPyramid& pyramid, const Keypoint& keypoint,
                                                  const OrientOptions& options = {});

bool is_rotation(const Mat3& m, double tolerance = 1e-5);

}  // namespace volkey
