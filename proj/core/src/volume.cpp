#include "volkey/volume.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "volkey/error.hpp"

namespace volkey {

namespace {

void validate_dims(const Dims& dims) {
  if (dims.nx < 1 || dims.ny < 1 || dims.nz < 1) {
    fail(ErrorKind::parameter, fmt::format("dims must be positive, got ({}, {}, {})", dims.nx, dims.ny, dims.nz));
  }
}

void validate_spacing(const Spacing& s) {
  if (!(s.sx > 0.0) || !(s.sy > 0.0) || !(s.sz > 0.0)) {
    fail(ErrorKind::parameter, fmt::format("spacing must be positive, got ({}, {}, {})", s.sx, s.sy, s.sz));
  }
}

float decode_le_float(const unsigned char* bytes) {
  std::uint32_t bits = 0;
  for (int i = 3; i >= 0; --i) bits = (bits << 8) | bytes[i];
  return std::bit_cast<float>(bits);
}

void encode_le_float(float value, unsigned char* bytes) {
  auto bits = std::bit_cast<std::uint32_t>(value);
  for (int i = 0; i < 4; ++i) {
    bytes[i] = static_cast<unsigned char>(bits & 0xffu);
    bits >>= 8;
  }
}

}  // namespace

int Dims::min_dim() const { return std::min({nx, ny, nz}); }

Volume::Volume(Dims dims, Spacing spacing, float fill) : dims_(dims), spacing_(spacing) {
  validate_dims(dims);
  validate_spacing(spacing);
  data_.assign(dims.voxel_count(), fill);
}

Volume::Volume(Dims dims, Spacing spacing, std::vector<float> data)
    : dims_(dims), spacing_(spacing), data_(std::move(data)) {
  validate_dims(dims);
  validate_spacing(spacing);
  if (data_.size() != dims.voxel_count()) {
    fail(ErrorKind::size, fmt::format("data holds {} values, dims require {}", data_.size(), dims.voxel_count()));
  }
  auto bad = std::find_if(data_.begin(), data_.end(), [](float v) { return !std::isfinite(v); });
  if (bad != data_.end()) {
    fail(ErrorKind::data, fmt::format("non-finite intensity at offset {}", bad - data_.begin()));
  }
}

float Volume::clamped(int x, int y, int z) const {
  x = std::clamp(x, 0, dims_.nx - 1);
  y = std::clamp(y, 0, dims_.ny - 1);
  z = std::clamp(z, 0, dims_.nz - 1);
  return at(x, y, z);
}

std::filesystem::path raw_sidecar_path(const std::filesystem::path& path) {
  auto sidecar = path;
  sidecar.replace_extension(".hdr.txt");
  return sidecar;
}

Volume load_raw(const std::filesystem::path& path, Dims dims, Spacing spacing) {
  validate_dims(dims);
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, fmt::format("cannot open '{}'", path.string()));
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t expected = dims.voxel_count() * 4;
  if (bytes.size() != expected) {
    fail(ErrorKind::format,
         fmt::format("'{}' holds {} bytes, dims ({}, {}, {}) require {}", path.string(), bytes.size(), dims.nx,
                     dims.ny, dims.nz, expected));
  }
  std::vector<float> data(dims.voxel_count());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = decode_le_float(&bytes[4 * i]);
  return Volume(dims, spacing, std::move(data));
}

Volume load_raw(const std::filesystem::path& path) {
  const auto sidecar = raw_sidecar_path(path);
  std::ifstream in(sidecar);
  if (!in) fail(ErrorKind::io, fmt::format("cannot open sidecar '{}'", sidecar.string()));
  Dims dims{};
  Spacing spacing{};
  bool have_dims = false;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    if (key == "dims:") {
      fields >> dims.nx >> dims.ny >> dims.nz;
      have_dims = static_cast<bool>(fields);
    } else if (key == "spacing:") {
      fields >> spacing.sx >> spacing.sy >> spacing.sz;
      if (!fields) fail(ErrorKind::format, fmt::format("malformed spacing line in '{}'", sidecar.string()));
    }
  }
  if (!have_dims) fail(ErrorKind::format, fmt::format("missing dims line in '{}'", sidecar.string()));
  return load_raw(path, dims, spacing);
}

void save_raw(const Volume& volume, const std::filesystem::path& path) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::io, fmt::format("cannot write '{}'", path.string()));
    std::vector<unsigned char> bytes(volume.data().size() * 4);
    for (std::size_t i = 0; i < volume.data().size(); ++i) encode_le_float(volume.data()[i], &bytes[4 * i]);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::io, fmt::format("short write to '{}'", path.string()));
  }
  const auto sidecar = raw_sidecar_path(path);
  std::ofstream hdr(sidecar);
  if (!hdr) fail(ErrorKind::io, fmt::format("cannot write '{}'", sidecar.string()));
  const auto& d = volume.dims();
  const auto& s = volume.spacing();
  hdr << fmt::format("dims: {} {} {}\n", d.nx, d.ny, d.nz);
  hdr << fmt::format("spacing: {} {} {}\n", s.sx, s.sy, s.sz);
}

Volume load_volume(const std::filesystem::path& path) {
  const auto name = path.filename().string();
  auto ends_with = [&](std::string_view suffix) {
    return name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with(".nii") || ends_with(".nii.gz")) return load_nifti_subset(path);
  return load_raw(path);
}

double trilinear_sample(const Volume& volume, const Vec3& p) {
  const auto& d = volume.dims();
  const double x = std::clamp(p.x(), 0.0, static_cast<double>(d.nx - 1));
  const double y = std::clamp(p.y(), 0.0, static_cast<double>(d.ny - 1));
  const double z = std::clamp(p.z(), 0.0, static_cast<double>(d.nz - 1));
  const int x0 = std::min(static_cast<int>(x), d.nx - 1);
  const int y0 = std::min(static_cast<int>(y), d.ny - 1);
  const int z0 = std::min(static_cast<int>(z), d.nz - 1);
  const int x1 = std::min(x0 + 1, d.nx - 1);
  const int y1 = std::min(y0 + 1, d.ny - 1);
  const int z1 = std::min(z0 + 1, d.nz - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double fz = z - z0;

  auto lerp = [](double a, double b, double t) { return a + (b - a) * t; };
  const double c00 = lerp(volume.at(x0, y0, z0), volume.at(x1, y0, z0), fx);
  const double c10 = lerp(volume.at(x0, y1, z0), volume.at(x1, y1, z0), fx);
  const double c01 = lerp(volume.at(x0, y0, z1), volume.at(x1, y0, z1), fx);
  const double c11 = lerp(volume.at(x0, y1, z1), volume.at(x1, y1, z1), fx);
  return lerp(lerp(c00, c10, fy), lerp(c01, c11, fy), fz);
}

Vec3 central_gradient(const Volume& volume, const VoxelIndex& idx) {
  const auto& d = volume.dims();
  auto axis = [&](int i, int n, auto&& get) -> double {
    if (n == 1) return 0.0;
    if (i == 0) return get(1) - get(0);
    if (i == n - 1) return get(n - 1) - get(n - 2);
    return 0.5 * (get(i + 1) - get(i - 1));
  };
  const double gx = axis(idx.x, d.nx, [&](int x) -> double { return volume.at(x, idx.y, idx.z); });
  const double gy = axis(idx.y, d.ny, [&](int y) -> double { return volume.at(idx.x, y, idx.z); });
  const double gz = axis(idx.z, d.nz, [&](int z) -> double { return volume.at(idx.x, idx.y, z); });
  return {gx, gy, gz};
}

}  // namespace volkey
