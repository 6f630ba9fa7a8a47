#include "uwdock/guidance.hpp"

#include <algorithm>
#include <cmath>

#include "uwdock/detect.hpp"
#include "uwdock/errors.hpp"
#include "uwdock/optics.hpp"

namespace uwdock {

void GuidanceParams::validate() const {
  if (!(r_as > r_a && r_a > r_h1 && r_h1 > 0.0)) {
    throw ConfigError("guidance: require r_as > r_a > r_h1 > 0");
  }
  if (!(r_h2 > 0.0)) throw ConfigError("guidance: require r_h2 > 0");
  if (!(turn_radius > 0.0)) throw ConfigError("guidance: turn_radius must be positive");
  if (!(lookahead > 0.0)) throw ConfigError("guidance: lookahead must be positive");
  if (kappa < 0.0) throw ConfigError("guidance: kappa must be non-negative");
}

const char* to_string(DockingStage stage) {
  switch (stage) {
    case DockingStage::ApproachSetup: return "approach_setup";
    case DockingStage::Approach: return "approach";
    case DockingStage::TerminalHoming: return "terminal_homing";
    case DockingStage::Docked: return "docked";
    case DockingStage::MissedApproach: return "missed_approach";
  }
  return "?";
}

std::vector<Waypoint> stage_waypoints(const DockPose& dock, DockingStage stage,
                                      const GuidanceParams& params) {
  const Vec2 dir = dock.direction();
  switch (stage) {
    case DockingStage::ApproachSetup:
      // Surface leg: alignment point r_as m back along the centerline.
      return {{dock.position - params.r_as * dir, 0.0, dock.heading}};
    case DockingStage::Approach:
      return {{dock.position - params.r_a * dir, dock.depth, dock.heading}};
    case DockingStage::TerminalHoming:
      return {{dock.position - params.r_h1 * dir, dock.depth, dock.heading},
              {dock.position + params.r_h2 * dir, dock.depth, dock.heading}};
    default:
      throw InvalidTransitionError("stage_waypoints: no geometry for stage");
  }
}

namespace {

/// Nearest-sample search restricted to a forward window so progress along
/// self-crossing Dubins paths stays monotone.
std::size_t advance_progress(const VehicleState& state, const Path& path,
                             std::size_t from) {
  constexpr std::size_t kWindow = 80;  // samples (~20 m at 0.25 m spacing)
  const std::size_t last = path.points.size() - 1;
  std::size_t best = from;
  double best_d2 = std::numeric_limits<double>::infinity();
  const std::size_t hi = std::min(last, from + kWindow);
  for (std::size_t i = from; i <= hi; ++i) {
    const double dx = state.eta1.x() - path.points[i].x;
    const double dy = state.eta1.y() - path.points[i].y;
    const double d2 = dx * dx + dy * dy;
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return best;
}

}  // namespace

double cross_track_error(const VehicleState& state, const Path& path,
                         const IlosState& ilos) {
  const PathPoint& p = path.points[std::min(ilos.progress, path.points.size() - 1)];
  const double dx = state.eta1.x() - p.x;
  const double dy = state.eta1.y() - p.y;
  return -std::sin(p.psi) * dx + std::cos(p.psi) * dy;
}

double ilos_heading(const VehicleState& state, const Path& path,
                    double lookahead, double kappa, double dt, IlosState& ilos,
                    double sigma_max) {
  if (path.empty()) throw ConfigError("ilos_heading: empty path");
  ilos.progress = advance_progress(state, path, ilos.progress);
  const PathPoint& p = path.points[ilos.progress];
  const double e = cross_track_error(state, path, ilos);

  const double biased = e + kappa * ilos.sigma;
  const double sigma_dot = lookahead * e / (lookahead * lookahead + biased * biased);
  ilos.sigma = clamp(ilos.sigma + sigma_dot * dt, -sigma_max, sigma_max);

  return wrap_pi(p.psi - std::atan2(e + kappa * ilos.sigma, lookahead));
}

double path_depth(const Path& path, const IlosState& ilos) {
  return path.points[std::min(ilos.progress, path.points.size() - 1)].depth;
}

bool path_complete(const VehicleState& state, const Path& path,
                   const IlosState& ilos, double capture_radius) {
  if (path.empty()) return true;
  const PathPoint& last = path.points.back();
  const double dist =
      std::hypot(state.eta1.x() - last.x, state.eta1.y() - last.y);
  if (dist <= capture_radius) return true;
  return ilos.progress + 1 >= path.points.size() && dist <= 4.0 * capture_radius;
}

DockingStage docking_fsm_step(DockingStage stage, const StageEvents& ev) {
  if (stage == DockingStage::Docked) {
    throw InvalidTransitionError("fsm: Docked is terminal");
  }
  // Latch and envelope events only exist during terminal homing.
  if (ev.latch && stage != DockingStage::TerminalHoming) {
    throw InvalidTransitionError("fsm: latch outside terminal homing");
  }
  if (ev.envelope_missed && stage != DockingStage::TerminalHoming) {
    throw InvalidTransitionError("fsm: envelope_missed outside terminal homing");
  }

  switch (stage) {
    case DockingStage::ApproachSetup:
      // The surface GPS fix is assumed to succeed once the leg completes.
      if (ev.path_complete) return DockingStage::Approach;
      return stage;
    case DockingStage::Approach:
      if (ev.path_complete) return DockingStage::TerminalHoming;
      return stage;
    case DockingStage::TerminalHoming:
      if (ev.latch) return DockingStage::Docked;
      if (ev.envelope_missed && ev.path_complete) {
        return DockingStage::MissedApproach;
      }
      return stage;
    case DockingStage::MissedApproach:
      // Transient retry state: the next step restarts the approach.
      return DockingStage::Approach;
    case DockingStage::Docked:
      break;
  }
  throw InvalidTransitionError("fsm: unreachable stage");
}

SteeringCommand fuse_guidance(const SteeringCommand& path_cmd,
                              const std::optional<Detection>& detection,
                              DockingStage stage, const CameraModel& camera,
                              const OpticalGuidanceGains& gains,
                              double current_heading, double current_pitch) {
  (void)camera;  // detections arrive already normalized to the image frame
  if (stage != DockingStage::TerminalHoming || !detection ||
      detection->present < gains.presence_threshold) {
    return path_cmd;
  }
  // Normalized offsets in [-1, 1] from the image center; x right, y down.
  const double off_x = 2.0 * (detection->x - 0.5);
  const double off_y = 2.0 * (detection->y - 0.5);
  SteeringCommand cmd = path_cmd;
  cmd.heading = wrap_pi(current_heading + gains.heading_gain * off_x);
  cmd.pitch = current_pitch - gains.pitch_gain * off_y;
  return cmd;
}

ControlInput Autopilot::compute(const VehicleState& state,
                                const SteeringCommand& cmd,
                                const HydroParams& hydro) const {
  ControlInput u;

  // Surge: proportional with a damping feedforward at the setpoint.
  const double surge_ff = -hydro.damping[0] * cmd.surge;
  u.thrust = clamp(kp_surge * (cmd.surge - state.v1.x()) + surge_ff, 0.0,
                   hydro.thrust_max);

  // Pitch from the depth loop unless the command overrides it. Positive
  // depth error (too shallow) pitches the nose down (theta < 0).
  double pitch_d;
  if (cmd.pitch) {
    pitch_d = clamp(*cmd.pitch, -pitch_limit, pitch_limit);
  } else {
    const double depth_err = cmd.depth - state.eta1.z();
    pitch_d = clamp(-depth_gain * depth_err, -pitch_limit, pitch_limit);
  }

  const double heading_err = wrap_pi(cmd.heading - state.eta2.z());
  u.fin_moments.z() =
      clamp(kp_heading * heading_err - kd_heading * state.v2.z(),
            -hydro.fin_moment_max, hydro.fin_moment_max);
  u.fin_moments.y() =
      clamp(kp_pitch * (pitch_d - state.eta2.y()) - kd_pitch * state.v2.y(),
            -hydro.fin_moment_max, hydro.fin_moment_max);
  u.fin_moments.x() = clamp(-kp_roll * state.eta2.x() - kd_roll * state.v2.x(),
                            -hydro.fin_moment_max, hydro.fin_moment_max);
  return u;
}

}  // namespace uwdock
