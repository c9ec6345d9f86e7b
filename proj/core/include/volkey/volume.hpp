#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace volkey {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct Dims {
  int nx = 0;
  int ny = 0;
  int nz = 0;

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
  }
  int min_dim() const;
  bool operator==(const Dims&) const = default;
};

/// Millimetres per voxel along each axis.
struct Spacing {
  double sx = 1.0;
  double sy = 1.0;
  double sz = 1.0;

  bool operator==(const Spacing&) const = default;
};

struct VoxelIndex {
  int x = 0;
  int y = 0;
  int z = 0;
};

/// Dense 3D scalar grid stored x-fastest. Every pyramid level is one of these.
class Volume {
 public:
  Volume() = default;
  Volume(Dims dims, Spacing spacing = {}, float fill = 0.0f);
  /// Throws a size error if data.size() != voxel count and a data error on non-finite values.
  Volume(Dims dims, Spacing spacing, std::vector<float> data);

  const Dims& dims() const { return dims_; }
  const Spacing& spacing() const { return spacing_; }
  bool empty() const { return data_.empty(); }

  std::size_t index(int x, int y, int z) const {
    return (static_cast<std::size_t>(z) * dims_.ny + y) * dims_.nx + x;
  }
  float at(int x, int y, int z) const { return data_[index(x, y, z)]; }
  float& at(int x, int y, int z) { return data_[index(x, y, z)]; }
  float at(const VoxelIndex& v) const { return at(v.x, v.y, v.z); }

  /// Replicate-padded access: out-of-range coordinates snap to the nearest border voxel.
  float clamped(int x, int y, int z) const;

  bool contains(int x, int y, int z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < dims_.nx && y < dims_.ny && z < dims_.nz;
  }

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

 private:
  Dims dims_{};
  Spacing spacing_{};
  std::vector<float> data_;
};

// Raw interchange: <stem>.f32 (little-endian float32, x-fastest) + <stem>.hdr.txt sidecar.

Volume load_raw(const std::filesystem::path& path, Dims dims, Spacing spacing);
/// Reads dims and spacing from the sidecar next to `path`.
Volume load_raw(const std::filesystem::path& path);
void save_raw(const Volume& volume, const std::filesystem::path& path);
std::filesystem::path raw_sidecar_path(const std::filesystem::path& path);

/// NIfTI-1 subset: single 3D frame, uint8/int16/float32, optionally gzipped.
Volume load_nifti_subset(const std::filesystem::path& path);

/// Dispatches on extension: .nii / .nii.gz go through the NIfTI reader, anything else is raw.
Volume load_volume(const std::filesystem::path& path);

/// Trilinear interpolation with border clamping; `p` is in voxel units.
double trilinear_sample(const Volume& volume, const Vec3& p);

/// Central differences in the interior, one-sided differences at the border.
Vec3 central_gradient(const Volume& volume, const VoxelIndex& idx);

}  // namespace volkey
