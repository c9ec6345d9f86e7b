// NIfTI-1 single-file reader. Only the fields the pipeline needs are decoded:
// dim[0..4], datatype, pixdim[1..3], vox_offset, scl_slope, scl_inter.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <zlib.h>

#include "volkey/error.hpp"
#include "volkey/volume.hpp"

namespace volkey {

namespace {

constexpr std::size_t kHeaderSize = 348;
constexpr std::int16_t kDtUint8 = 2;
constexpr std::int16_t kDtInt16 = 4;
constexpr std::int16_t kDtFloat32 = 16;

std::vector<unsigned char> read_all_gz(const std::filesystem::path& path) {
  // gzread passes uncompressed files through unchanged.
  gzFile file = gzopen(path.string().c_str(), "rb");
  if (file == nullptr) fail(ErrorKind::io, fmt::format("cannot open '{}'", path.string()));
  std::vector<unsigned char> bytes;
  std::array<unsigned char, 1 << 16> buffer{};
  for (;;) {
    const int got = gzread(file, buffer.data(), static_cast<unsigned>(buffer.size()));
    if (got < 0) {
      gzclose(file);
      fail(ErrorKind::io, fmt::format("read error in '{}'", path.string()));
    }
    if (got == 0) break;
    bytes.insert(bytes.end(), buffer.begin(), buffer.begin() + got);
  }
  gzclose(file);
  return bytes;
}

class FieldReader {
 public:
  FieldReader(const std::vector<unsigned char>& bytes, bool swap) : bytes_(bytes), swap_(swap) {}

  template <typename T>
  T get(std::size_t offset) const {
    std::array<unsigned char, sizeof(T)> raw{};
    std::memcpy(raw.data(), bytes_.data() + offset, sizeof(T));
    if (swap_) std::reverse(raw.begin(), raw.end());
    T value;
    std::memcpy(&value, raw.data(), sizeof(T));
    return value;
  }

 private:
  const std::vector<unsigned char>& bytes_;
  bool swap_;
};

}  // namespace

Volume load_nifti_subset(const std::filesystem::path& path) {
  const auto bytes = read_all_gz(path);
  if (bytes.size() < kHeaderSize) fail(ErrorKind::format, fmt::format("'{}' is shorter than a NIfTI-1 header", path.string()));

  bool swap = false;
  {
    FieldReader native(bytes, false);
    if (native.get<std::int32_t>(0) != static_cast<std::int32_t>(kHeaderSize)) {
      FieldReader swapped(bytes, true);
      if (swapped.get<std::int32_t>(0) != static_cast<std::int32_t>(kHeaderSize)) {
        fail(ErrorKind::format, fmt::format("'{}' has no NIfTI-1 header (sizeof_hdr mismatch)", path.string()));
      }
      swap = true;
    }
  }
  const FieldReader hdr(bytes, swap);

  std::array<std::int16_t, 8> dim{};
  for (int i = 0; i < 8; ++i) dim[i] = hdr.get<std::int16_t>(40 + 2 * i);
  const int ndim = dim[0];
  if (ndim < 1 || ndim > 7) fail(ErrorKind::format, fmt::format("invalid dim[0]={}", ndim));
  for (int i = 4; i <= ndim; ++i) {
    if (dim[i] > 1) fail(ErrorKind::format, fmt::format("only single 3D frames are supported (dim[{}]={})", i, dim[i]));
  }
  Dims dims{1, 1, 1};
  if (ndim >= 1) dims.nx = dim[1];
  if (ndim >= 2) dims.ny = dim[2];
  if (ndim >= 3) dims.nz = dim[3];
  if (dims.nx < 1 || dims.ny < 1 || dims.nz < 1) {
    fail(ErrorKind::format, fmt::format("non-positive dims ({}, {}, {})", dims.nx, dims.ny, dims.nz));
  }

  const auto datatype = hdr.get<std::int16_t>(70);
  std::size_t bytes_per_voxel = 0;
  switch (datatype) {
    case kDtUint8: bytes_per_voxel = 1; break;
    case kDtInt16: bytes_per_voxel = 2; break;
    case kDtFloat32: bytes_per_voxel = 4; break;
    default: fail(ErrorKind::format, fmt::format("unsupported NIfTI datatype code {}", datatype));
  }

  auto pixdim_or_one = [&](int i) {
    const double v = std::fabs(hdr.get<float>(76 + 4 * i));
    return (v > 0.0 && std::isfinite(v)) ? v : 1.0;
  };
  const Spacing spacing{pixdim_or_one(1), pixdim_or_one(2), pixdim_or_one(3)};

  const float vox_offset_f = hdr.get<float>(108);
  const std::size_t vox_offset = vox_offset_f >= 352.0f ? static_cast<std::size_t>(vox_offset_f) : 352;
  const float slope = hdr.get<float>(112);
  const float inter = hdr.get<float>(116);
  const bool scale = std::isfinite(slope) && slope != 0.0f;

  const std::size_t count = dims.voxel_count();
  if (bytes.size() < vox_offset + count * bytes_per_voxel) {
    fail(ErrorKind::format, fmt::format("'{}' is truncated: need {} voxel bytes after offset {}", path.string(),
                                        count * bytes_per_voxel, vox_offset));
  }

  const FieldReader body(bytes, swap);
  std::vector<float> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t at = vox_offset + i * bytes_per_voxel;
    double v = 0.0;
    switch (datatype) {
      case kDtUint8: v = bytes[at]; break;
      case kDtInt16: v = body.get<std::int16_t>(at); break;
      case kDtFloat32: v = body.get<float>(at); break;
      default: break;
    }
    if (scale) v = v * slope + (std::isfinite(inter) ? inter : 0.0f);
    data[i] = static_cast<float>(v);
  }
  return Volume(dims, spacing, std::move(data));
}

}  // namespace volkey
