#include "volkey/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include <fmt/format.h>

#include "volkey/error.hpp"

namespace volkey {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  text = trim(text);
  if constexpr (std::is_floating_point_v<T>) {
    // std::from_chars for double is not available on every supported toolchain.
    std::string copy(text);
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(copy, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (copy.empty() || used != copy.size()) fail(ErrorKind::parameter, fmt::format("{}: cannot parse '{}' as a number", key, text));
    return static_cast<T>(value);
  } else {
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
      fail(ErrorKind::parameter, fmt::format("{}: cannot parse '{}' as an integer", key, text));
    }
    return value;
  }
}

bool parse_bool(std::string_view key, std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  fail(ErrorKind::parameter, fmt::format("{}: cannot parse '{}' as a boolean", key, text));
}

template <typename T, typename Member>
ConfigField number_field(std::string_view key, std::string_view help, Member member) {
  return ConfigField{
      key, help, [member](const Config& c) { return fmt::format("{}", member(const_cast<Config&>(c))); },
      [member, key](Config& c, std::string_view v) { member(c) = parse_number<T>(key, v); }};
}

std::vector<ConfigField> make_fields() {
  std::vector<ConfigField> f;
  f.push_back(number_field<double>("base_sigma", "blur of the first pyramid level, voxels",
                                   [](Config& c) -> double& { return c.pyramid.base_sigma; }));
  f.push_back(number_field<int>("levels_per_octave", "Gaussian levels per octave (kappa = 2^(1/(L-3)))",
                                [](Config& c) -> int& { return c.pyramid.levels_per_octave; }));
  f.push_back(number_field<int>("num_octaves", "maximum number of octaves",
                                [](Config& c) -> int& { return c.pyramid.num_octaves; }));
  f.push_back(number_field<int>("min_octave_dim", "stop adding octaves below this edge length",
                                [](Config& c) -> int& { return c.pyramid.min_octave_dim; }));
  f.push_back(number_field<double>("input_sigma", "blur already present in the input, voxels",
                                   [](Config& c) -> double& { return c.pyramid.input_sigma; }));
  f.push_back(number_field<int>("threshold_band", "accept sum-of-signs values within this band of +/-80",
                                [](Config& c) -> int& { return c.detect.threshold_band; }));
  f.push_back(number_field<double>("contrast_min", "minimum |DoG| for a keypoint",
                                   [](Config& c) -> double& { return c.detect.contrast_min; }));
  f.push_back(number_field<double>("radius_factor", "orientation/descriptor neighbourhood radius in sigma",
                                   [](Config& c) -> double& { return c.orient.radius_factor; }));
  f.push_back(number_field<double>("secondary_ratio", "extra orientation peaks down to this fraction of the max",
                                   [](Config& c) -> double& { return c.orient.secondary_ratio; }));
  f.push_back(number_field<int>("max_frames", "orientation frames per keypoint",
                                [](Config& c) -> int& { return c.orient.max_frames; }));
  f.push_back(ConfigField{"refine_peaks", "use the mean gradient direction of each selected histogram bin",
                          [](const Config& c) { return std::string(c.orient.refine_peaks ? "true" : "false"); },
                          [](Config& c, std::string_view v) { c.orient.refine_peaks = parse_bool("refine_peaks", v); }});
  f.push_back(ConfigField{"descriptor", "siftrank | brief | rrief",
                          [](const Config& c) { return std::string(to_string(c.descriptor.kind)); },
                          [](Config& c, std::string_view v) {
                            const auto kind = parse_descriptor_kind(trim(v));
                            if (!kind) fail(ErrorKind::parameter, fmt::format("descriptor: unknown kind '{}'", v));
                            c.descriptor.kind = *kind;
                          }});
  f.push_back(number_field<int>("n", "BRIEF / RRIEF point pairs", [](Config& c) -> int& { return c.descriptor.n; }));
  f.push_back(number_field<int>("method", "point-pair sampling method 1..5",
                                [](Config& c) -> int& { return c.descriptor.method; }));
  f.push_back(number_field<double>("blur_sigma", "patch pre-blur in patch samples (0 = none)",
                                   [](Config& c) -> double& { return c.descriptor.blur_sigma; }));
  f.push_back(number_field<std::uint64_t>("seed", "point-pair sampling seed",
                                          [](Config& c) -> std::uint64_t& { return c.descriptor.seed; }));
  f.push_back(number_field<int>("patch_side", "patch samples per edge (odd)",
                                [](Config& c) -> int& { return c.descriptor.patch_side; }));
  f.push_back(number_field<double>("sigma_unit", "point-pair spread in keypoint sigmas",
                                   [](Config& c) -> double& { return c.descriptor.sigma_unit; }));
  f.push_back(number_field<double>("descriptor_radius_factor", "SIFT-Rank neighbourhood radius in sigma",
                                   [](Config& c) -> double& { return c.descriptor.radius_factor; }));
  f.push_back(number_field<double>("ratio_max", "nearest / second-nearest distance ratio limit",
                                   [](Config& c) -> double& { return c.ratio_max; }));
  f.push_back(number_field<double>("hough_log_scale_bin", "accumulator bin width in log scale",
                                   [](Config& c) -> double& { return c.hough.log_scale_bin; }));
  f.push_back(number_field<double>("hough_translation_bin", "accumulator bin width in voxels",
                                   [](Config& c) -> double& { return c.hough.translation_bin; }));
  f.push_back(number_field<int>("hough_sectors", "in-plane rotation sectors",
                                [](Config& c) -> int& { return c.hough.in_plane_sectors; }));
  f.push_back(number_field<int>("min_votes", "votes needed for a consensus",
                                [](Config& c) -> int& { return c.hough.min_votes; }));
  f.push_back(number_field<double>("log_scale_tolerance", "inlier limit on |log s - log s*|",
                                   [](Config& c) -> double& { return c.hough.log_scale_tolerance; }));
  f.push_back(number_field<double>("rotation_tolerance_deg", "inlier limit on rotation difference, degrees",
                                   [](Config& c) -> double& { return c.hough.rotation_tolerance_deg; }));
  f.push_back(number_field<double>("translation_tolerance", "inlier limit on transfer error, voxels",
                                   [](Config& c) -> double& { return c.hough.translation_tolerance; }));
  f.push_back(number_field<int>("refine_iterations", "least-squares refits of the consensus",
                                [](Config& c) -> int& { return c.hough.refine_iterations; }));
  f.push_back(number_field<int>("workers", "worker threads", [](Config& c) -> int& { return c.parallel.workers; }));
  f.push_back(number_field<int>("chunk", "work tile edge k (k^3 voxels per task)",
                                [](Config& c) -> int& { return c.parallel.chunk; }));
  return f;
}

}  // namespace

std::span<const ConfigField> config_fields() {
  static const std::vector<ConfigField> fields = make_fields();
  return fields;
}

void validate(const Config& config) {
  validate(config.pyramid);
  validate(config.detect);
  validate(config.orient);
  validate(config.descriptor);
  if (!(config.ratio_max > 0.0)) fail(ErrorKind::parameter, "ratio_max must be > 0");
  validate(config.hough);
  validate(config.parallel);
}

void set_config_value(Config& config, std::string_view key, std::string_view value) {
  for (const auto& field : config_fields()) {
    if (field.key == key) {
      field.set(config, value);
      return;
    }
  }
  fail(ErrorKind::parameter, fmt::format("unknown config key '{}'", key));
}

std::string to_text(const Config& config) {
  std::string out;
  for (const auto& field : config_fields()) out += fmt::format("{} = {}\n", field.key, field.get(config));
  return out;
}

Config parse_config_text(std::string_view text, Config base) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(ErrorKind::parameter, fmt::format("config line {}: expected key = value", line_no));
    set_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  validate(base);
  return base;
}

Config load_config(const std::filesystem::path& path, Config base) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, fmt::format("cannot open config '{}'", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), std::move(base));
}

}  // namespace volkey
