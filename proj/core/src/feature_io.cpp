#include "volkey/feature_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "volkey/error.hpp"

namespace volkey {

namespace {

constexpr std::string_view kKeypointHeader = "# volkey keypoints v1";
constexpr std::string_view kDescriptorHeader = "# volkey descriptors v1";

void write_feature_fields(std::ostream& out, const DescribedFeature& f) {
  const auto& kp = f.keypoint;
  fmt::print(out, "{} {} {} {} {} {} {} {}", kp.position.x(), kp.position.y(), kp.position.z(), kp.sigma, kp.octave,
             kp.level, kp.dog_value, static_cast<int>(kp.sign));
  const Mat3& r = f.frame.rotation;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) fmt::print(out, " {}", r(i, j));
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, fmt::format("cannot write '{}'", path.string()));
  return out;
}

void check_written(std::ostream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) fail(ErrorKind::io, fmt::format("write to '{}' failed", path.string()));
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

void write_keypoints(std::ostream& out, std::span<const DescribedFeature> features) {
  out << kKeypointHeader << '\n';
  for (const auto& f : features) {
    write_feature_fields(out, f);
    out << '\n';
  }
}

void write_keypoints(const std::filesystem::path& path, std::span<const DescribedFeature> features) {
  auto out = open_out(path);
  write_keypoints(out, features);
  check_written(out, path);
}

void write_descriptors(std::ostream& out, const FeatureFile& file) {
  fmt::print(out, "{} kind={} n={} seed={}\n", kDescriptorHeader, to_string(file.kind), file.length, file.seed);
  for (const auto& f : file.features) {
    if (f.descriptor.kind != file.kind || f.descriptor.length != file.length) {
      fail(ErrorKind::parameter, "descriptor kind/length differs from the file header");
    }
    write_feature_fields(out, f);
    out << ' ';
    if (file.kind == DescriptorKind::brief) {
      for (int byte = 0; byte < (file.length + 7) / 8; ++byte) {
        unsigned value = 0;
        for (int b = 0; b < 8 && byte * 8 + b < file.length; ++b) value |= (f.descriptor.bit(byte * 8 + b) ? 1u : 0u) << b;
        fmt::print(out, "{:02x}", value);
      }
    } else {
      for (std::size_t k = 0; k < f.descriptor.ranks.size(); ++k) fmt::print(out, "{}{}", k == 0 ? "" : " ", f.descriptor.ranks[k]);
    }
    out << '\n';
  }
}

void write_descriptors(const std::filesystem::path& path, const FeatureFile& file) {
  auto out = open_out(path);
  write_descriptors(out, file);
  check_written(out, path);
}

FeatureFile read_descriptors(std::istream& in) {
  FeatureFile file;
  std::string line;
  if (!std::getline(in, line) || !line.starts_with(kDescriptorHeader)) fail(ErrorKind::format, "missing descriptor file header");
  {
    std::istringstream header(line.substr(kDescriptorHeader.size()));
    std::string token;
    bool have_kind = false, have_n = false;
    while (header >> token) {
      const auto eq = token.find('=');
      if (eq == std::string::npos) fail(ErrorKind::format, fmt::format("bad header token '{}'", token));
      const std::string key = token.substr(0, eq), value = token.substr(eq + 1);
      try {
        if (key == "kind") {
          const auto kind = parse_descriptor_kind(value);
          if (!kind) fail(ErrorKind::format, fmt::format("unknown descriptor kind '{}'", value));
          file.kind = *kind;
          have_kind = true;
        } else if (key == "n") {
          file.length = std::stoi(value);
          have_n = true;
        } else if (key == "seed") {
          file.seed = std::stoull(value);
        }
      } catch (const std::logic_error&) {
        fail(ErrorKind::format, fmt::format("bad header value '{}'", token));
      }
    }
    if (!have_kind || !have_n || file.length <= 0) fail(ErrorKind::format, "descriptor header needs kind= and n=");
  }

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    DescribedFeature f;
    auto& kp = f.keypoint;
    double x, y, z;
    int sign = 0;
    row >> x >> y >> z >> kp.sigma >> kp.octave >> kp.level >> kp.dog_value >> sign;
    kp.position = Vec3(x, y, z);
    kp.sign = sign < 0 ? Polarity::valley : Polarity::peak;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) row >> f.frame.rotation(i, j);
    if (!row) fail(ErrorKind::format, fmt::format("line {}: truncated keypoint fields", line_no));

    f.descriptor.kind = file.kind;
    f.descriptor.length = file.length;
    if (file.kind == DescriptorKind::brief) {
      std::string hex;
      row >> hex;
      if (hex.size() != static_cast<std::size_t>((file.length + 7) / 8) * 2) {
        fail(ErrorKind::format, fmt::format("line {}: expected {} hex digits", line_no, (file.length + 7) / 8 * 2));
      }
      f.descriptor.bits.assign((file.length + 63) / 64, 0);
      for (int k = 0; k < file.length; ++k) {
        const int byte = k / 8;
        const int hi = hex_value(hex[2 * byte]), lo = hex_value(hex[2 * byte + 1]);
        if (hi < 0 || lo < 0) fail(ErrorKind::format, fmt::format("line {}: bad hex digit", line_no));
        if ((((hi << 4) | lo) >> (k % 8)) & 1) f.descriptor.bits[k / 64] |= std::uint64_t{1} << (k % 64);
      }
    } else {
      f.descriptor.ranks.resize(file.length);
      for (auto& r : f.descriptor.ranks) {
        int value = -1;
        row >> value;
        if (!row || value < 0 || value >= file.length) fail(ErrorKind::format, fmt::format("line {}: bad rank", line_no));
        r = static_cast<std::uint16_t>(value);
      }
    }
    std::string extra;
    if (row >> extra) fail(ErrorKind::format, fmt::format("line {}: trailing data", line_no));
    file.features.push_back(std::move(f));
  }
  return file;
}

FeatureFile read_descriptors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, fmt::format("cannot open '{}'", path.string()));
  return read_descriptors(in);
}

void write_inlier_csv(const std::filesystem::path& path, std::span<const Match> matches, std::span<const int> inliers) {
  auto out = open_out(path);
  out << "idx_a,idx_b,distance\n";
  for (int i : inliers) {
    const auto& m = matches[static_cast<std::size_t>(i)];
    fmt::print(out, "{},{},{}\n", m.index_a, m.index_b, m.distance);
  }
  check_written(out, path);
}

}  // namespace volkey
