#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "uwdock/detect.hpp"
#include "uwdock/scenario.hpp"

namespace uwdock {

/// Stage-transition record in an episode timeline.
struct StageEventRecord {
  double t = 0.0;
  std::string stage;
};

/// Outcome of one docking episode (possibly several attempts via the
/// missed-approach retry loop).
struct EpisodeResult {
  bool success = false;
  int retries_used = 0;
  int attempts = 1;
  double duration_s = 0.0;
  double cte_mean = 0.0;           // |cross-track| over approach + terminal
  double cte_max = 0.0;
  double cte_terminal_mean = 0.0;  // terminal homing only
  double min_lateral_miss = -1.0;  // lateral offset when crossing the dock plane
  std::string termination;  // latch | no_fix_timeout | retries_exhausted | timeout
  std::vector<StageEventRecord> timeline;
  std::uint64_t seed = 0;
};

struct EpisodeOptions {
  const TinyNet* nn = nullptr;       // required when detector == NN
  std::string trajectory_path;       // JSONL log, empty = no log
  std::string frames_dir;            // PPM dumps, empty = none
};

/// Run one seeded episode: dynamics at 100 Hz, camera/detector at 10 Hz,
/// acoustic channel at its configured rate. Success means the nose entered
/// the docking envelope within the approach-angle tolerance.
EpisodeResult run_episode(const ScenarioConfig& scenario, std::uint64_t seed,
                          const EpisodeOptions& options = {});

/// Aggregated outcome of one scenario cell.
struct CellResult {
  ScenarioConfig scenario;
  std::vector<EpisodeResult> episodes;
  int attempts = 0;
  int successes = 0;
  double success_rate = 0.0;
  double wilson_lo = 0.0;
  double wilson_hi = 0.0;
  double cte_mean = 0.0;
  double cte_max = 0.0;
  double cte_terminal_mean = 0.0;
};

struct BenchReport {
  std::vector<CellResult> cells;
  std::uint64_t base_seed = 0;
};

/// Run every cell until its stop rule (successes target or episode cap).
/// Episodes are computed in parallel with per-episode derived seeds; the
/// kept set is the ordered prefix that satisfies the stop rule, so the
/// report is deterministic regardless of the thread count.
BenchReport run_bench(const std::vector<ScenarioConfig>& matrix,
                      std::uint64_t base_seed, int jobs,
                      const TinyNet* nn = nullptr,
                      std::ostream* progress = nullptr);

/// Wilson 95% confidence interval for a binomial proportion.
void wilson_interval(int successes, int attempts, double* lo, double* hi);

/// Table-shaped results CSV (documented column order, stable formatting).
void write_bench_csv(const BenchReport& report, const std::string& path);

/// One JSON record per episode (summary + stage timeline).
void write_bench_jsonl(const BenchReport& report, const std::string& path);

/// Maximum on-axis range at which the brightest-pixel detector still finds
/// the beacon (centered within 5% of the frame) in the given water.
double bp_detection_range(const WaterModel& water, const CameraModel& camera,
                          const SceneParams& scene, double bp_threshold);

/// Bisect the green-channel attenuation until the BP detection range hits
/// target_range within +/-0.25 m; red/blue are scaled by the fixed ratios
/// (1.5x and 1.2x green). Throws NoConvergenceError after 50 steps.
WaterModel calibrate_water(double target_range, const CameraModel& camera,
                           const SceneParams& scene, double bp_threshold,
                           const WaterModel& base);

}  // namespace uwdock
