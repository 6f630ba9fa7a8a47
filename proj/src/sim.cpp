#include "uwdock/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include "json.hpp"
#include "uwdock/acoustic.hpp"
#include "uwdock/dubins.hpp"
#include "uwdock/errors.hpp"
#include "uwdock/image_io.hpp"
#include "uwdock/rng.hpp"

namespace uwdock {

namespace {

constexpr double kDt = 0.01;          // dynamics step, 100 Hz
constexpr int kCameraDivider = 10;    // camera/detector at 10 Hz
constexpr int kLogDivider = 10;       // trajectory log at 10 Hz
constexpr double kNoseOffset = 0.75;  // m, nose point ahead of body origin
constexpr double kDriftResample = 10.0;  // s between dock drift resamples

struct EpisodeContext {
  const ScenarioConfig& cfg;
  Rng spawn_rng;
  Rng drift_rng;
  Rng frame_rng;
  AcousticChannel channel;
  DockPose dock_true;
  DockPose dock_est;
  bool have_fix = false;
  Vec3 current = Vec3::Zero();
};

Vec3 nose_position(const VehicleState& s) {
  return s.eta1 + rotation_j1(s.eta2) * Vec3(kNoseOffset, 0.0, 0.0);
}

/// Path for the current stage. ApproachSetup and Approach are Dubins legs
/// planned from the vehicle pose; TerminalHoming is the two-waypoint line.
Path plan_stage_path(DockingStage stage, const VehicleState& state,
                     const DockPose& dock_est, const GuidanceParams& gp) {
  const auto wps = stage_waypoints(dock_est, stage, gp);
  if (stage == DockingStage::TerminalHoming) {
    return Path::line(wps[0].position, wps[1].position, wps[0].depth,
                      wps[1].depth);
  }
  const Pose2 start{state.eta1.x(), state.eta1.y(), state.eta2.z()};
  const Pose2 goal{wps[0].position.x(), wps[0].position.y(), wps[0].heading};
  const DubinsPath dubins = plan_dubins(start, goal, gp.turn_radius,
                                        state.eta1.z(), wps[0].depth);
  Path path;
  path.points = dubins.samples;
  path.length = dubins.length();
  return path;
}

}  // namespace

EpisodeResult run_episode(const ScenarioConfig& scenario, std::uint64_t seed,
                          const EpisodeOptions& options) {
  scenario.validate();
  if (scenario.detector == DetectorKind::NN && options.nn == nullptr) {
    throw ConfigError("episode: NN detector selected but no network provided");
  }

  EpisodeContext ctx{
      scenario,
      Rng(Rng::derive(seed, {1})),
      Rng(Rng::derive(seed, {2})),
      Rng(Rng::derive(seed, {4})),
      AcousticChannel([&] {
        AcousticChannelParams p = scenario.acoustic;
        p.seed = Rng::derive(seed, {3});
        return p;
      }()),
      DockPose{},
      DockPose{},
  };

  // True dock pose: random heading, fixed position, configured depth.
  ctx.dock_true.position = Vec2::Zero();
  ctx.dock_true.depth = scenario.dock.depth;
  ctx.dock_true.heading = ctx.spawn_rng.uniform(-kPi, kPi);

  // Ambient current.
  double current_dir = 0.0;
  switch (scenario.current_policy) {
    case CurrentPolicy::Perpendicular:
      current_dir = wrap_pi(ctx.dock_true.heading + kPi / 2.0);
      break;
    case CurrentPolicy::Random:
      current_dir = ctx.spawn_rng.uniform(-kPi, kPi);
      break;
    case CurrentPolicy::Fixed:
      current_dir = deg2rad(scenario.current_direction_deg);
      break;
  }
  ctx.current = {scenario.current_magnitude * std::cos(current_dir),
                 scenario.current_magnitude * std::sin(current_dir), 0.0};

  // Spawn 10-15 m in front of the dock inside a bearing cone, heading
  // roughly at the dock with jitter, on the surface at rest.
  VehicleState state;
  {
    const double dist = ctx.spawn_rng.uniform(scenario.spawn.dist_min,
                                              scenario.spawn.dist_max);
    const double cone = deg2rad(scenario.spawn.cone_deg);
    const double bearing = ctx.dock_true.heading + kPi +
                           ctx.spawn_rng.uniform(-cone, cone);
    state.eta1 = {ctx.dock_true.position.x() + dist * std::cos(bearing),
                  ctx.dock_true.position.y() + dist * std::sin(bearing), 0.0};
    const double to_dock = std::atan2(ctx.dock_true.position.y() - state.eta1.y(),
                                      ctx.dock_true.position.x() - state.eta1.x());
    const double jit = deg2rad(scenario.spawn.heading_jitter_deg);
    state.eta2 = {0.0, 0.0, wrap_pi(to_dock + ctx.spawn_rng.uniform(-jit, jit))};
  }

  const Autopilot autopilot;
  const GuidanceParams& gp = scenario.guidance;

  DockingStage stage = DockingStage::ApproachSetup;
  Path path;  // empty until the first fix arrives
  IlosState ilos;
  bool have_path = false;

  EpisodeResult result;
  result.seed = seed;
  result.timeline.push_back({0.0, to_string(stage)});

  std::ofstream traj;
  if (!options.trajectory_path.empty()) {
    traj.open(options.trajectory_path);
    if (!traj) throw ConfigError("episode: cannot open " + options.trajectory_path);
  }
  if (!options.frames_dir.empty()) {
    std::filesystem::create_directories(options.frames_dir);
  }

  // Cross-track accumulators (approach + terminal homing).
  double cte_sum = 0.0, cte_terminal_sum = 0.0;
  std::size_t cte_n = 0, cte_terminal_n = 0;

  // Dock drift state.
  double next_drift_resample = 0.0;

  // Envelope-crossing bookkeeping.
  double prev_along = -1e9;
  bool latched = false;
  bool missed = false;

  std::optional<Detection> detection;
  double frame_range = 0.0;
  int frame_count = 0;

  const int max_steps = static_cast<int>(scenario.limits.max_time_s / kDt);
  for (int step_idx = 0; step_idx < max_steps; ++step_idx) {
    const double t = step_idx * kDt;

    // Dock drift: slow random walk in position and heading.
    if (t >= next_drift_resample) {
      const double ang = ctx.drift_rng.uniform(-kPi, kPi);
      const double mag = ctx.drift_rng.uniform(0.0, scenario.dock.drift_speed);
      ctx.dock_true.drift_velocity = {mag * std::cos(ang), mag * std::sin(ang)};
      ctx.dock_true.yaw_drift = deg2rad(
          ctx.drift_rng.uniform(-scenario.dock.yaw_jitter_dps,
                                scenario.dock.yaw_jitter_dps));
      next_drift_resample += kDriftResample;
    }
    ctx.dock_true.position += ctx.dock_true.drift_velocity * kDt;
    ctx.dock_true.heading = wrap_pi(ctx.dock_true.heading +
                                    ctx.dock_true.yaw_drift * kDt);

    // Acoustic channel.
    std::optional<AcousticFix> fix = ctx.channel.poll(t, ctx.dock_true);
    if (fix) {
      ctx.dock_est.position = fix->position;
      ctx.dock_est.heading = fix->heading;
      ctx.dock_est.depth = scenario.dock.depth;
      ctx.have_fix = true;
      // Replan the remaining path of the current stage with the new pose,
      // except when a Dubins leg is nearly finished (a replan there can
      // only insert a loop; the next stage replans anyway).
      bool replan = true;
      if (have_path &&
          (stage == DockingStage::ApproachSetup ||
           stage == DockingStage::Approach)) {
        const PathPoint& end = path.points.back();
        const double to_goal =
            std::hypot(state.eta1.x() - end.x, state.eta1.y() - end.y);
        replan = to_goal > 2.5 * gp.turn_radius;
      }
      if (replan) {
        const double sigma = ilos.sigma;  // keep the current-rejection bias
        path = plan_stage_path(stage, state, ctx.dock_est, gp);
        ilos = IlosState{};
        ilos.sigma = sigma;
        have_path = true;
      }
    }

    if (!ctx.have_fix && t >= scenario.limits.no_fix_timeout_s) {
      result.termination = "no_fix_timeout";
      result.duration_s = t;
      break;
    }

    // Camera + detector at 10 Hz, terminal homing only (the fusion ignores
    // detections in every other stage).
    const bool camera_tick = step_idx % kCameraDivider == 0;
    if (camera_tick) {
      detection.reset();
      if (stage == DockingStage::TerminalHoming &&
          scenario.detector != DetectorKind::None) {
        const Vec3 beacon = beacon_world_position(ctx.dock_true);
        const Vec3 cam_world =
            state.eta1 + rotation_j1(state.eta2) * scenario.camera.mount_translation;
        frame_range = (beacon - cam_world).norm();
        Rng rng(Rng::derive(seed, {5, static_cast<std::uint64_t>(frame_count)}));
        const RasterImage frame = attenuate(
            render_unattenuated(&ctx.dock_true, state, scenario.camera,
                                scenario.water, scenario.scene, rng),
            frame_range, scenario.water);
        if (scenario.detector == DetectorKind::BP) {
          detection = brightest_pixel(frame, scenario.bp_threshold);
        } else {
          detection = options.nn->forward(frame);
        }
        if (!options.frames_dir.empty()) {
          write_ppm(frame, options.frames_dir + "/frame_" +
                               std::to_string(frame_count) + ".ppm");
        }
        ++frame_count;
      }
    }

    // Guidance: ILOS heading + path depth, optically refined in terminal
    // homing when a confident detection exists.
    SteeringCommand cmd;
    cmd.surge = gp.surge_setpoint;
    if (have_path && !path.empty()) {
      cmd.heading = ilos_heading(state, path, gp.lookahead, gp.kappa, kDt, ilos,
                                 gp.sigma_max);
      cmd.depth = path_depth(path, ilos);
    } else {
      cmd.heading = state.eta2.z();
      cmd.depth = 0.0;
      cmd.surge = 0.0;
    }
    cmd = fuse_guidance(cmd, detection, stage, scenario.camera, scenario.optical,
                        state.eta2.z(), state.eta2.y());

    // Cross-track accounting during approach and terminal homing.
    if (have_path && (stage == DockingStage::Approach ||
                      stage == DockingStage::TerminalHoming)) {
      const double e = std::abs(cross_track_error(state, path, ilos));
      cte_sum += e;
      ++cte_n;
      result.cte_max = std::max(result.cte_max, e);
      if (stage == DockingStage::TerminalHoming) {
        cte_terminal_sum += e;
        ++cte_terminal_n;
      }
    }

    // Dynamics step.
    const ControlInput input = autopilot.compute(state, cmd, scenario.hydro);
    state = uwdock::step(state, input, ctx.current, scenario.hydro, kDt);

    // Envelope check against the true dock (terminal homing only).
    StageEvents events;
    if (stage == DockingStage::TerminalHoming) {
      const Vec3 entrance = beacon_world_position(ctx.dock_true);
      const Vec3 axis = {std::cos(ctx.dock_true.heading),
                         std::sin(ctx.dock_true.heading), 0.0};
      const Vec3 rel = nose_position(state) - entrance;
      const double along = rel.dot(axis);
      const double lateral = (rel - along * axis).norm();
      const double heading_err =
          std::abs(wrap_pi(state.eta2.z() - ctx.dock_true.heading));
      if (prev_along < 0.0 && along >= 0.0) {
        if (result.min_lateral_miss < 0.0 || lateral < result.min_lateral_miss) {
          result.min_lateral_miss = lateral;
        }
        if (lateral <= scenario.envelope.radius &&
            heading_err <= deg2rad(scenario.envelope.heading_tolerance_deg)) {
          latched = true;
        }
      }
      if (!latched && along > 1.0) missed = true;  // passed the dock plane
      prev_along = along;
    } else {
      prev_along = -1e9;
    }

    events.latch = latched;
    events.path_complete =
        (have_path && path_complete(state, path, ilos)) || missed;
    events.envelope_missed = missed;
    events.optical_lost =
        stage == DockingStage::TerminalHoming && camera_tick && !detection;

    const bool any_event = events.latch || events.path_complete ||
                           events.envelope_missed;
    if (any_event) {
      const DockingStage next = docking_fsm_step(stage, events);
      if (next != stage) {
        stage = next;
        result.timeline.push_back({state.t, to_string(stage)});
        latched = false;
        missed = false;
        prev_along = -1e9;
        if (stage == DockingStage::Docked) {
          result.success = true;
          result.termination = "latch";
          result.duration_s = state.t;
          break;
        }
        if (stage == DockingStage::MissedApproach) {
          ++result.retries_used;
          if (result.retries_used > scenario.stop.max_retries) {
            result.termination = "retries_exhausted";
            result.duration_s = state.t;
            break;
          }
          // Transient state: immediately restart the approach.
          stage = docking_fsm_step(stage, StageEvents{});
          result.timeline.push_back({state.t, to_string(stage)});
        }
        path = plan_stage_path(stage, state, ctx.dock_est, gp);
        ilos = IlosState{};
        have_path = true;
        detection.reset();
      }
    }

    if (traj && step_idx % kLogDivider == 0) {
      nlohmann::json line = {
          {"t", state.t},
          {"stage", to_string(stage)},
          {"eta", {state.eta1.x(), state.eta1.y(), state.eta1.z(),
                   state.eta2.x(), state.eta2.y(), state.eta2.z()}},
          {"v", {state.v1.x(), state.v1.y(), state.v1.z(), state.v2.x(),
                 state.v2.y(), state.v2.z()}}};
      if (have_path) {
        line["cte"] = cross_track_error(state, path, ilos);
      }
      if (fix) {
        line["fix"] = {{"x", fix->position.x()},
                       {"y", fix->position.y()},
                       {"heading", fix->heading}};
      }
      if (camera_tick && detection) {
        line["detection"] = {{"present", detection->present},
                             {"x", detection->x},
                             {"y", detection->y}};
      }
      traj << line.dump() << "\n";
    }
  }

  if (result.termination.empty()) {
    result.termination = "timeout";
    result.duration_s = scenario.limits.max_time_s;
  }
  result.attempts = result.retries_used + 1;
  result.cte_mean = cte_n > 0 ? cte_sum / static_cast<double>(cte_n) : 0.0;
  result.cte_terminal_mean =
      cte_terminal_n > 0 ? cte_terminal_sum / static_cast<double>(cte_terminal_n)
                         : 0.0;
  return result;
}

void wilson_interval(int successes, int attempts, double* lo, double* hi) {
  if (attempts <= 0) {
    *lo = 0.0;
    *hi = 0.0;
    return;
  }
  const double z = 1.959963984540054;  // 97.5th normal percentile
  const double n = attempts;
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  *lo = std::max(0.0, center - half);
  *hi = std::min(1.0, center + half);
}

BenchReport run_bench(const std::vector<ScenarioConfig>& matrix,
                      std::uint64_t base_seed, int jobs, const TinyNet* nn,
                      std::ostream* progress) {
  if (matrix.empty()) throw ConfigError("bench: empty scenario matrix");
  if (jobs < 1) jobs = 1;

  BenchReport report;
  report.base_seed = base_seed;

  for (size_t cell_idx = 0; cell_idx < matrix.size(); ++cell_idx) {
    const ScenarioConfig& scenario = matrix[cell_idx];
    const int cap = scenario.stop.max_episodes;
    std::vector<EpisodeResult> episodes(static_cast<size_t>(cap));
    std::vector<char> done(static_cast<size_t>(cap), 0);

    std::atomic<int> next_index{0};
    std::atomic<int> stop_at{cap};  // episodes with index >= stop_at are skipped
    std::mutex mutex;

    auto worker = [&] {
      while (true) {
        const int idx = next_index.fetch_add(1);
        if (idx >= cap || idx >= stop_at.load()) return;
        EpisodeOptions opts;
        opts.nn = nn;
        EpisodeResult r = run_episode(
            scenario,
            Rng::derive(base_seed, {cell_idx, static_cast<std::uint64_t>(idx)}),
            opts);
        std::lock_guard<std::mutex> lock(mutex);
        episodes[static_cast<size_t>(idx)] = std::move(r);
        done[static_cast<size_t>(idx)] = 1;
        // Stop rule on the ordered prefix: the smallest k such that
        // episodes [0..k] contain the target number of successes.
        int successes = 0;
        for (int k = 0; k < cap; ++k) {
          if (!done[static_cast<size_t>(k)]) break;
          if (episodes[static_cast<size_t>(k)].success) ++successes;
          if (successes >= scenario.stop.successes) {
            if (k + 1 < stop_at.load()) stop_at.store(k + 1);
            return;
          }
        }
      }
    };

    // The NN detector requires the caller-provided network.
    if (scenario.detector == DetectorKind::NN && nn == nullptr) {
      throw ConfigError("bench: scenario '" + scenario.name +
                        "' needs an NN but none was provided");
    }

    {
      std::vector<std::thread> pool;
      const int n_threads = std::min(jobs, cap);
      pool.reserve(static_cast<size_t>(n_threads));
      for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }

    // Deterministic kept prefix.
    CellResult cell;
    cell.scenario = scenario;
    int successes = 0;
    int kept = 0;
    for (int k = 0; k < cap && done[static_cast<size_t>(k)]; ++k) {
      kept = k + 1;
      if (episodes[static_cast<size_t>(k)].success) ++successes;
      if (successes >= scenario.stop.successes) break;
    }
    double cte_acc = 0.0, cte_term_acc = 0.0, cte_max = 0.0;
    for (int k = 0; k < kept; ++k) {
      const EpisodeResult& r = episodes[static_cast<size_t>(k)];
      cell.attempts += r.attempts;
      cell.successes += r.success ? 1 : 0;
      cte_acc += r.cte_mean;
      cte_term_acc += r.cte_terminal_mean;
      cte_max = std::max(cte_max, r.cte_max);
      cell.episodes.push_back(r);
    }
    cell.success_rate =
        cell.attempts > 0 ? static_cast<double>(cell.successes) / cell.attempts : 0.0;
    wilson_interval(cell.successes, cell.attempts, &cell.wilson_lo, &cell.wilson_hi);
    cell.cte_mean = kept > 0 ? cte_acc / kept : 0.0;
    cell.cte_terminal_mean = kept > 0 ? cte_term_acc / kept : 0.0;
    cell.cte_max = cte_max;
    report.cells.push_back(std::move(cell));

    if (progress != nullptr) {
      const CellResult& c = report.cells.back();
      (*progress) << scenario.name << ": " << c.successes << "/" << c.attempts
                  << " (rate " << c.success_rate << ", episodes "
                  << c.episodes.size() << ")\n";
    }
  }
  return report;
}

void write_bench_csv(const BenchReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("bench: cannot open " + path);
  out << "scenario,detector,current_mps,current_policy,water,episodes,attempts,"
         "successes,success_rate,wilson_lo,wilson_hi,cte_mean_m,cte_max_m,"
         "cte_terminal_mean_m\n";
  char buf[512];
  for (const auto& cell : report.cells) {
    std::snprintf(buf, sizeof(buf),
                  "%s,%s,%.3f,%s,%s,%zu,%d,%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                  cell.scenario.name.c_str(), to_string(cell.scenario.detector),
                  cell.scenario.current_magnitude,
                  to_string(cell.scenario.current_policy),
                  cell.scenario.water.label.c_str(), cell.episodes.size(),
                  cell.attempts, cell.successes, cell.success_rate,
                  cell.wilson_lo, cell.wilson_hi, cell.cte_mean, cell.cte_max,
                  cell.cte_terminal_mean);
    out << buf;
  }
}

void write_bench_jsonl(const BenchReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("bench: cannot open " + path);
  for (const auto& cell : report.cells) {
    for (size_t i = 0; i < cell.episodes.size(); ++i) {
      const EpisodeResult& r = cell.episodes[i];
      nlohmann::json j = {
          {"scenario", cell.scenario.name},
          {"episode", i},
          {"seed", r.seed},
          {"success", r.success},
          {"attempts", r.attempts},
          {"retries", r.retries_used},
          {"termination", r.termination},
          {"duration_s", r.duration_s},
          {"cte_mean", r.cte_mean},
          {"cte_max", r.cte_max},
          {"cte_terminal_mean", r.cte_terminal_mean},
          {"min_lateral_miss", r.min_lateral_miss},
      };
      nlohmann::json timeline = nlohmann::json::array();
      for (const auto& ev : r.timeline) {
        timeline.push_back({{"t", ev.t}, {"stage", ev.stage}});
      }
      j["timeline"] = timeline;
      out << j.dump() << "\n";
    }
  }
}

double bp_detection_range(const WaterModel& water, const CameraModel& camera,
                          const SceneParams& scene, double bp_threshold) {
  // On-axis probe: camera at depth z looking along +x, beacon dead ahead.
  SceneParams probe_scene = scene;
  probe_scene.glare_probability = 0.0;  // calibration uses a clean scene

  auto detected = [&](double d) {
    VehicleState auv;
    auv.eta1 = {0.0, 0.0, 2.0};
    DockPose dock;
    dock.position = {camera.mount_translation.x() + d, 0.0};
    dock.depth = 2.0;
    dock.heading = kPi;  // entrance facing the camera
    Rng rng(0);
    const RasterImage frame =
        attenuate(render_unattenuated(&dock, auv, camera, water, probe_scene, rng),
                  d, water);
    const Detection det = brightest_pixel(frame, bp_threshold);
    return det.present >= 0.5 && std::abs(det.x - 0.5) < 0.05 &&
           std::abs(det.y - 0.5) < 0.05;
  };

  double lo = 0.5;
  if (!detected(lo)) return 0.0;
  double hi = 40.0;
  if (detected(hi)) return hi;
  for (int i = 0; i < 40; ++i) {
    const double mid = 0.5 * (lo + hi);
    (detected(mid) ? lo : hi) = mid;
  }
  return lo;
}

WaterModel calibrate_water(double target_range, const CameraModel& camera,
                           const SceneParams& scene, double bp_threshold,
                           const WaterModel& base) {
  if (target_range < 1.0 || target_range > 20.0) {
    throw ConfigError("calibrate: target range must lie in [1, 20] m");
  }
  auto with_green = [&](double green) {
    WaterModel w = base;
    w.beta = {1.5 * green, green, 1.2 * green};
    return w;
  };
  auto range_of = [&](double green) {
    return bp_detection_range(with_green(green), camera, scene, bp_threshold);
  };

  double lo = 1e-4, hi = 1.0;  // range(lo) must exceed target, range(hi) be below
  if (range_of(lo) < target_range) {
    throw NoConvergenceError("calibrate: target unreachable even in clear water");
  }
  double result = -1.0;
  for (int i = 0; i < 50; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double r = range_of(mid);
    if (std::abs(r - target_range) <= 0.25) {
      result = mid;
      break;
    }
    if (r > target_range) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  if (result < 0.0) {
    throw NoConvergenceError("calibrate: no convergence after 50 bisection steps");
  }
  return with_green(result);
}

}  // namespace uwdock
