#pragma once

// Independent reference implementations the library is checked against. Written for clarity,
// not speed; none of them call into the code under test beyond Volume storage.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <zlib.h>

#include "volkey/volume.hpp"

namespace volkey::testing {

inline Volume random_volume(const Dims& dims, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Volume v(dims);
  for (auto& x : v.data()) x = static_cast<float>(u(rng));
  return v;
}

/// Gaussian tap weights evaluated directly from the formula, radius ceil(3 sigma), normalised.
inline std::vector<double> gaussian_taps(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> w;
  for (int k = -radius; k <= radius; ++k) w.push_back(std::exp(-(k * k) / (2.0 * sigma * sigma)));
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& x : w) x /= sum;
  return w;
}

/// Full 3D convolution with the outer-product kernel and replicate borders.
inline Volume dense_gaussian(const Volume& v, double sigma) {
  const auto w = gaussian_taps(sigma);
  const int r = static_cast<int>(w.size() / 2);
  const Dims d = v.dims();
  Volume out(d, v.spacing());
  auto clampi = [](int i, int n) { return std::clamp(i, 0, n - 1); };
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        double acc = 0.0;
        for (int k = -r; k <= r; ++k)
          for (int j = -r; j <= r; ++j)
            for (int i = -r; i <= r; ++i) {
              acc += w[i + r] * w[j + r] * w[k + r] *
                     v.at(clampi(x + i, d.nx), clampi(y + j, d.ny), clampi(z + k, d.nz));
            }
        out.at(x, y, z) = static_cast<float>(acc);
      }
  return out;
}

inline double max_abs_diff(const Volume& a, const Volume& b, int margin = 0) {
  double worst = 0.0;
  const Dims d = a.dims();
  for (int z = margin; z < d.nz - margin; ++z)
    for (int y = margin; y < d.ny - margin; ++y)
      for (int x = margin; x < d.nx - margin; ++x)
        worst = std::max(worst, std::fabs(static_cast<double>(a.at(x, y, z)) - b.at(x, y, z)));
  return worst;
}

/// Sum of sign(centre - neighbour) over the 80 scale-space neighbours.
inline int brute_force_sign_sum(const Volume& prev, const Volume& cur, const Volume& next, int x, int y, int z) {
  const double c = cur.at(x, y, z);
  int sum = 0;
  const Volume* layers[3] = {&prev, &cur, &next};
  for (int l = 0; l < 3; ++l)
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (l == 1 && dx == 0 && dy == 0 && dz == 0) continue;
          const double n = layers[l]->at(x + dx, y + dy, z + dz);
          sum += (c > n) - (c < n);
        }
  return sum;
}

/// +1 strict maximum, -1 strict minimum, 0 otherwise, over the 80 neighbours.
inline int brute_force_extremum(const Volume& prev, const Volume& cur, const Volume& next, int x, int y, int z) {
  const double c = cur.at(x, y, z);
  bool greater = true, smaller = true;
  const Volume* layers[3] = {&prev, &cur, &next};
  for (int l = 0; l < 3; ++l)
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (l == 1 && dx == 0 && dy == 0 && dz == 0) continue;
          const double n = layers[l]->at(x + dx, y + dy, z + dz);
          greater = greater && c > n;
          smaller = smaller && c < n;
        }
  return greater ? 1 : (smaller ? -1 : 0);
}

/// Ranks via argsort of argsort, stable.
inline std::vector<int> double_argsort(const std::vector<double>& values) {
  std::vector<int> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return values[a] < values[b]; });
  std::vector<int> ranks(values.size());
  for (std::size_t r = 0; r < order.size(); ++r) ranks[order[r]] = static_cast<int>(r);
  return ranks;
}

inline int popcount_bits(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (int bit = 0; bit < 64; ++bit) d += ((a[i] >> bit) & 1u) != ((b[i] >> bit) & 1u);
  }
  return d;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("volkey_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Minimal NIfTI-1 writer (348-byte header + 4 padding bytes, little-endian).
struct NiftiSpec {
  std::vector<std::int16_t> dim = {3, 1, 1, 1, 1, 1, 1, 1};
  std::int16_t datatype = 16;
  std::int16_t bitpix = 32;
  std::vector<float> pixdim = {1, 1, 1, 1, 1, 1, 1, 1};
  float scl_slope = 0.0f;
  float scl_inter = 0.0f;
};

inline std::vector<char> nifti_bytes(const NiftiSpec& hdr, const std::vector<char>& payload) {
  std::vector<char> bytes(352 + payload.size(), 0);
  auto put = [&](std::size_t offset, const auto& value) { std::memcpy(bytes.data() + offset, &value, sizeof(value)); };
  put(0, std::int32_t{348});
  for (int i = 0; i < 8; ++i) put(40 + 2 * i, hdr.dim[i]);
  put(70, hdr.datatype);
  put(72, hdr.bitpix);
  for (int i = 0; i < 8; ++i) put(76 + 4 * i, hdr.pixdim[i]);
  put(108, 352.0f);
  put(112, hdr.scl_slope);
  put(116, hdr.scl_inter);
  std::memcpy(bytes.data() + 344, "n+1\0", 4);
  std::copy(payload.begin(), payload.end(), bytes.begin() + 352);
  return bytes;
}

template <typename T>
std::vector<char> payload_of(const std::vector<T>& values) {
  std::vector<char> out(values.size() * sizeof(T));
  std::memcpy(out.data(), values.data(), out.size());
  return out;
}

inline void write_file(const std::filesystem::path& path, const std::vector<char>& bytes, bool gzip = false) {
  if (gzip) {
    gzFile f = gzopen(path.string().c_str(), "wb");
    gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
    gzclose(f);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace volkey::testing
