#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>

#include "volkey/descriptor.hpp"
#include "volkey/detect.hpp"
#include "volkey/match.hpp"
#include "volkey/orient.hpp"
#include "volkey/parallel.hpp"
#include "volkey/scalespace.hpp"

namespace volkey {

/// Every tunable of the extract / match / bench pipeline.
struct Config {
  PyramidOptions pyramid;
  DetectOptions detect;
  OrientOptions orient;
  DescriptorOptions descriptor;
  double ratio_max = 0.9;
  HoughOptions hough;
  ParallelOptions parallel;
};

void validate(const Config& config);

/// One flat `key = value` entry. `get` renders the current value so that `set` reproduces it exactly.
struct ConfigField {
  std::string_view key;
  std::string_view help;
  std::function<std::string(const Config&)> get;
  std::function<void(Config&, std::string_view)> set;
};

std::span<const ConfigField> config_fields();

/// Throws a parameter error for unknown keys or unparsable values.
void set_config_value(Config& config, std::string_view key, std::string_view value);

/// Serialises every field, one `key = value` per line.
std::string to_text(const Config& config);

/// Parses `key = value` lines on top of `base`; `#` starts a comment. The result is validated.
Config parse_config_text(std::string_view text, Config base = {});
Config load_config(const std::filesystem::path& path, Config base = {});

}  // namespace volkey
