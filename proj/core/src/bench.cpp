#include "volkey/bench.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "volkey/error.hpp"
#include "volkey/pipeline.hpp"

namespace volkey {

namespace {

constexpr std::array<std::string_view, 7> kStageNames = {"convolution", "subsample", "dog", "peak_detect",
                                                         "orient", "descriptor", "match"};
constexpr std::string_view kCsvHeader = "stage,octave,level,workers,chunk,wall_micros";

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

double total_micros(const TimingSink& sink) {
  double sum = 0.0;
  for (const auto& t : sink.timings()) sum += t.wall_micros;
  return sum;
}

}  // namespace

std::string_view to_string(Stage stage) { return kStageNames[static_cast<std::size_t>(stage)]; }

std::optional<Stage> parse_stage(std::string_view name) {
  for (std::size_t i = 0; i < kStageNames.size(); ++i)
    if (kStageNames[i] == name) return static_cast<Stage>(i);
  return std::nullopt;
}

PipelineTiming time_pipeline(const Volume& volume, const Config& config, int workers, int repeats) {
  if (repeats < 1) fail(ErrorKind::parameter, "repeats must be >= 1");
  Config cfg = config;
  cfg.parallel.workers = workers;
  validate(cfg);

  using Key = std::tuple<int, int, int>;  // stage, octave, level
  std::map<Key, std::vector<double>> samples;
  std::vector<double> totals;
  PipelineTiming result;

  for (int run = 0; run <= repeats; ++run) {
    TimingSink sink(cfg.parallel.workers, cfg.parallel.chunk);
    const Extraction extraction = extract_features(volume, cfg, &sink);
    const auto& features = extraction.described.features;
    if (features.size() >= 2) {
      match_features(features, features, cfg, &sink);
    } else {
      ScopedStageTimer nothing_to_match(&sink, Stage::match);
    }
    if (run == 0) continue;  // warm-up
    result.keypoints = extraction.keypoints.size();
    result.features = features.size();
    for (const auto& t : sink.timings()) samples[{static_cast<int>(t.stage), t.octave, t.level}].push_back(t.wall_micros);
    totals.push_back(total_micros(sink));
  }

  for (const auto& [key, values] : samples) {
    const auto [stage, octave, level] = key;
    const StageTiming row{static_cast<Stage>(stage), octave, level, cfg.parallel.workers, cfg.parallel.chunk, 0.0};
    StageTiming mean_row = row, median_row = row;
    mean_row.wall_micros = mean_of(values);
    median_row.wall_micros = median_of(values);
    result.means.push_back(mean_row);
    result.medians.push_back(median_row);
  }
  result.total_mean_micros = mean_of(totals);
  result.total_median_micros = median_of(totals);
  return result;
}

SweepResult chunk_sweep(const Volume& volume, std::span<const int> candidates, int workers, int repeats,
                        const PyramidOptions& pyramid) {
  if (candidates.empty()) fail(ErrorKind::parameter, "chunk sweep needs at least one candidate");
  if (repeats < 1) fail(ErrorKind::parameter, "repeats must be >= 1");
  SweepResult result;
  for (int k : candidates) {
    const ParallelOptions par{workers, k};
    validate(par);
    std::vector<double> runs;
    for (int run = 0; run <= repeats; ++run) {
      TimingSink sink(workers, k);
      build_gaussian_pyramid(volume, pyramid, par, &sink);
      if (run == 0) continue;
      double conv = 0.0;
      for (const auto& t : sink.timings())
        if (t.stage == Stage::convolution) conv += t.wall_micros;
      runs.push_back(conv);
    }
    result.rows.push_back({k, mean_of(runs), median_of(runs)});
  }
  const auto by_median = [](const SweepRow& a, const SweepRow& b) { return a.median_micros < b.median_micros; };
  result.fastest_chunk = std::min_element(result.rows.begin(), result.rows.end(), by_median)->chunk;
  result.slowest_chunk = std::max_element(result.rows.begin(), result.rows.end(), by_median)->chunk;
  return result;
}

void write_csv(std::ostream& out, std::span<const StageTiming> timings) {
  out << kCsvHeader << '\n';
  for (const auto& t : timings) {
    fmt::print(out, "{},{},{},{},{},{}\n", to_string(t.stage), t.octave, t.level, t.workers, t.chunk, t.wall_micros);
  }
}

void emit_csv(std::span<const StageTiming> timings, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, fmt::format("cannot write '{}'", path.string()));
  write_csv(out, timings);
  out.flush();
  if (!out) fail(ErrorKind::io, fmt::format("write to '{}' failed", path.string()));
}

std::vector<StageTiming> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) fail(ErrorKind::format, "missing timing CSV header");
  std::vector<StageTiming> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (fields.size() != 6) fail(ErrorKind::format, fmt::format("timing CSV row has {} fields", fields.size()));
    const auto stage = parse_stage(fields[0]);
    if (!stage) fail(ErrorKind::format, fmt::format("unknown stage '{}'", fields[0]));
    try {
      rows.push_back({*stage, std::stoi(fields[1]), std::stoi(fields[2]), std::stoi(fields[3]), std::stoi(fields[4]),
                      std::stod(fields[5])});
    } catch (const std::logic_error&) {
      fail(ErrorKind::format, fmt::format("bad timing CSV row '{}'", line));
    }
  }
  return rows;
}

}  // namespace volkey
