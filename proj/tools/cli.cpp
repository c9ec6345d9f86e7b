#include "cli.hpp"

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "volkey/bench.hpp"
#include "volkey/config.hpp"
#include "volkey/feature_io.hpp"
#include "volkey/pipeline.hpp"

namespace volkey::cli {

namespace {

/// Raw strings for every config flag the user passed; applied after the config file.
struct Overrides {
  std::map<std::string, std::string> values;
  std::string config_path;
};

void add_config_flags(CLI::App& cmd, Overrides& overrides, std::initializer_list<std::string_view> skip = {}) {
  const Config defaults;
  cmd.add_option("--config", overrides.config_path, "flat key = value config file; flags below override it");
  for (const auto& field : config_fields()) {
    if (std::find(skip.begin(), skip.end(), field.key) != skip.end()) continue;
    const std::string key(field.key);
    cmd.add_option_function<std::string>(
           "--" + key, [&overrides, key](const std::string& value) { overrides.values[key] = value; },
           std::string(field.help))
        ->default_str(field.get(defaults))
        ->type_name("");
  }
}

Config resolve_config(const Overrides& overrides) {
  Config config = overrides.config_path.empty() ? Config{} : load_config(overrides.config_path);
  for (const auto& [key, value] : overrides.values) set_config_value(config, key, value);
  validate(config);
  return config;
}

void print_stage_summary(std::ostream& out, std::span<const StageTiming> timings) {
  std::map<Stage, double> per_stage;
  for (const auto& t : timings) per_stage[t.stage] += t.wall_micros;
  for (const auto& [stage, micros] : per_stage) fmt::print(out, "  {:<12} {:>12.1f} us\n", to_string(stage), micros);
}

void print_transform(std::ostream& out, const SimilarityTransform& t) {
  fmt::print(out, "scale {:.6f}\nrotation_deg {:.4f}\n", t.scale, rotation_angle_deg(t.rotation));
  for (int i = 0; i < 3; ++i) {
    fmt::print(out, "R{} {:.6f} {:.6f} {:.6f}\n", i, t.rotation(i, 0), t.rotation(i, 1), t.rotation(i, 2));
  }
  fmt::print(out, "translation {:.4f} {:.4f} {:.4f}\n", t.translation.x(), t.translation.y(), t.translation.z());
}

int cmd_extract(const std::string& input, const std::string& prefix, const std::string& dump_dir,
                const Overrides& overrides, std::ostream& out) {
  const Config config = resolve_config(overrides);
  const Volume volume = load_volume(input);
  TimingSink sink(config.parallel.workers, config.parallel.chunk);
  const Extraction extraction = extract_features(volume, config, &sink);
  if (!dump_dir.empty()) dump_pyramid(extraction.pyramid, dump_dir);

  FeatureFile file;
  file.kind = config.descriptor.kind;
  file.length = config.descriptor.kind == DescriptorKind::sift_rank ? kSiftRankLength : config.descriptor.n;
  file.seed = config.descriptor.seed;
  file.features = extraction.described.features;
  write_keypoints(prefix + ".keypoints.txt", file.features);
  write_descriptors(prefix + ".desc.txt", file);

  fmt::print(out, "keypoints {}\nfeatures {}\n", extraction.keypoints.size(), file.features.size());
  fmt::print(out, "dropped_orientation {}\ndropped_descriptor {}\n", extraction.orientation_dropped,
             extraction.described.dropped);
  fmt::print(out, "stage totals:\n");
  print_stage_summary(out, sink.timings());
  return ok;
}

int cmd_match(const std::string& path_a, const std::string& path_b, const std::string& csv_path,
              const Overrides& overrides, std::ostream& out) {
  const Config config = resolve_config(overrides);
  const FeatureFile a = read_descriptors(path_a);
  const FeatureFile b = read_descriptors(path_b);
  if (a.kind != b.kind || a.length != b.length) {
    fail(ErrorKind::parameter, fmt::format("descriptor mismatch: {} n={} vs {} n={}", to_string(a.kind), a.length,
                                           to_string(b.kind), b.length));
  }
  const MatchOutcome outcome = match_features(a.features, b.features, config);
  fmt::print(out, "features_a {}\nfeatures_b {}\nmatches {}\n", a.features.size(), b.features.size(),
             outcome.matches.size());
  if (!outcome.consensus) {
    fmt::print(out, "inliers 0\n");
    fail(ErrorKind::no_consensus, "no Hough cell reached min_votes");
  }
  fmt::print(out, "inliers {}\npeak_votes {}\n", outcome.inlier_count(), outcome.consensus->peak_votes);
  print_transform(out, outcome.consensus->transform);
  if (!csv_path.empty()) write_inlier_csv(csv_path, outcome.matches, outcome.consensus->inliers);
  return ok;
}

int cmd_bench(const std::string& input, std::vector<int> workers, const std::vector<int>& chunks, int repeats,
              const std::string& csv_path, const Overrides& overrides, std::ostream& out) {
  const Config config = resolve_config(overrides);
  const Volume volume = load_volume(input);
  if (workers.empty()) workers.push_back(config.parallel.workers);

  std::vector<StageTiming> rows;
  std::vector<std::pair<int, PipelineTiming>> runs;
  for (int w : workers) {
    auto timing = time_pipeline(volume, config, w, repeats);
    rows.insert(rows.end(), timing.means.begin(), timing.means.end());
    runs.emplace_back(w, std::move(timing));
  }
  if (csv_path.empty()) {
    write_csv(out, rows);
  } else {
    emit_csv(rows, csv_path);
  }

  fmt::print(out, "\nworkers  total_mean_us  total_median_us  speedup  keypoints  features\n");
  const double reference = runs.front().second.total_mean_micros;
  for (const auto& [w, t] : runs) {
    fmt::print(out, "{:>7}  {:>13.1f}  {:>15.1f}  {:>7.2f}  {:>9}  {:>8}\n", w, t.total_mean_micros,
               t.total_median_micros, t.total_mean_micros > 0 ? reference / t.total_mean_micros : 0.0, t.keypoints,
               t.features);
  }

  if (!chunks.empty()) {
    const auto sweep = chunk_sweep(volume, chunks, workers.back(), repeats, config.pyramid);
    fmt::print(out, "\nchunk  conv_mean_us  conv_median_us\n");
    for (const auto& row : sweep.rows) {
      fmt::print(out, "{:>5}  {:>12.1f}  {:>14.1f}\n", row.chunk, row.mean_micros, row.median_micros);
    }
    fmt::print(out, "fastest_chunk {}\nslowest_chunk {}\n", sweep.fastest_chunk, sweep.slowest_chunk);
  }
  return ok;
}

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io: return io_error;
    case ErrorKind::format: return format_error;
    case ErrorKind::data: return data_error;
    case ErrorKind::parameter: return parameter_error;
    case ErrorKind::size: return size_error;
    case ErrorKind::no_consensus: return no_consensus;
    case ErrorKind::empty_histogram: return failure;
  }
  return failure;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Volumetric keypoint extraction, description and matching"};
  app.require_subcommand(1);
  app.footer(
      "Descriptor defaults: descriptor=siftrank; for brief/rrief n=64 pairs, method 3, blur_sigma=0.95 patch "
      "samples.\nExit codes: 0 ok, 2 I/O, 3 format, 4 data, 5 parameter, 6 size, 7 no consensus, 1 other.");

  Overrides extract_overrides, match_overrides, bench_overrides;

  auto* extract = app.add_subcommand("extract", "detect and describe keypoints in one volume");
  std::string extract_input, extract_prefix, dump_dir;
  extract->add_option("input", extract_input, "volume (.nii, .nii.gz, or .f32 with .hdr.txt sidecar)")->required();
  extract->add_option("-o,--output", extract_prefix, "output prefix; writes <prefix>.keypoints.txt and <prefix>.desc.txt")
      ->required();
  extract->add_option("--dump-pyramid", dump_dir, "also write every Gaussian level into this directory");
  add_config_flags(*extract, extract_overrides);

  auto* match = app.add_subcommand("match", "match two descriptor files and report the Hough consensus");
  std::string match_a, match_b, match_csv;
  match->add_option("a", match_a, "descriptor file matched from")->required();
  match->add_option("b", match_b, "descriptor file matched into")->required();
  match->add_option("--csv", match_csv, "write inlier matches as idx_a,idx_b,distance");
  add_config_flags(*match, match_overrides);

  auto* bench = app.add_subcommand("bench", "time every pipeline stage and optionally sweep tile sizes");
  std::string bench_input, bench_csv;
  std::vector<int> bench_workers, bench_chunks;
  int repeats = 5;
  bench->add_option("input", bench_input, "volume to time")->required();
  bench->add_option("--workers", bench_workers, "worker counts to compare (repeatable)")->allow_extra_args(false)->delimiter(',');
  bench->add_option("--chunks", bench_chunks, "tile edges to sweep, e.g. 1,2,5,9,10")->delimiter(',');
  bench->add_option("--repeat", repeats, "timed repetitions after one warm-up run")->capture_default_str();
  bench->add_option("--csv", bench_csv, "write stage timings here instead of stdout");
  add_config_flags(*bench, bench_overrides, {"workers"});

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return ok;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return ok;
    } catch (const CLI::ParseError& e) {
      // Subcommand help requests arrive here too.
      if (e.get_exit_code() == 0) {
        for (auto* sub : app.get_subcommands()) out << sub->help();
        return ok;
      }
      err << "error: " << e.what() << "\n";
      return parameter_error;
    }

    if (*extract) return cmd_extract(extract_input, extract_prefix, dump_dir, extract_overrides, out);
    if (*match) return cmd_match(match_a, match_b, match_csv, match_overrides, out);
    if (*bench) return cmd_bench(bench_input, bench_workers, bench_chunks, repeats, bench_csv, bench_overrides, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return failure;
  }
  return failure;
}

}  // namespace volkey::cli
