#pragma once

#include <chrono>
#include <optional>
#include <string_view>
#include <vector>

namespace volkey {

enum class Stage { convolution, subsample, dog, peak_detect, orient, descriptor, match };

std::string_view to_string(Stage stage);
std::optional<Stage> parse_stage(std::string_view name);

struct StageTiming {
  Stage stage = Stage::convolution;
  int octave = -1;  // -1 when the stage is not per-octave
  int level = -1;
  int workers = 1;
  int chunk = 1;
  double wall_micros = 0.0;
};

/// Collects per-stage wall times from the production code paths. Stages accept a nullable
/// pointer to one of these; passing nullptr disables timing.
class TimingSink {
 public:
  TimingSink(int workers = 1, int chunk = 1) : workers_(workers), chunk_(chunk) {}

  void record(Stage stage, int octave, int level, double micros) {
    timings_.push_back({stage, octave, level, workers_, chunk_, micros});
  }
  const std::vector<StageTiming>& timings() const { return timings_; }
  void clear() { timings_.clear(); }

 private:
  int workers_;
  int chunk_;
  std::vector<StageTiming> timings_;
};

class ScopedStageTimer {
 public:
  ScopedStageTimer(TimingSink* sink, Stage stage, int octave = -1, int level = -1)
      : sink_(sink), stage_(stage), octave_(octave), level_(level), start_(std::chrono::steady_clock::now()) {}
  ScopedStageTimer(const ScopedStageTimer&) = delete;
  ScopedStageTimer& operator=(const ScopedStageTimer&) = delete;
  ~ScopedStageTimer() {
    if (sink_ == nullptr) return;
    const auto elapsed = std::chrono::steady_clock::now() - start_;
    sink_->record(stage_, octave_, level_, std::chrono::duration<double, std::micro>(elapsed).count());
  }

 private:
  TimingSink* sink_;
  Stage stage_;
  int octave_;
  int level_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace volkey
