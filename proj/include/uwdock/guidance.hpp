#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "uwdock/dubins.hpp"
#include "uwdock/math_util.hpp"
#include "uwdock/vehicle.hpp"

namespace uwdock {

struct Detection;   // detect.hpp
struct CameraModel; // optics.hpp

/// Dock position, depth and heading; drifts slowly to emulate the
/// station-keeping ASV.
struct DockPose {
  Vec2 position = Vec2::Zero();
  double depth = 2.0;     // z_dock, m (positive down)
  double heading = 0.0;   // rad
  Vec2 drift_velocity = Vec2::Zero();  // m/s, |.| <= 0.05 by config cap
  double yaw_drift = 0.0;              // rad/s, |.| <= 0.5 deg/s by config cap

  /// Unit vector along the dock centerline (the direction a docked
  /// vehicle points).
  Vec2 direction() const {
    return {std::cos(heading), std::sin(heading)};
  }
};

/// Geometry and controller constants of the docking maneuver.
struct GuidanceParams {
  double r_as = 30.0;        // m behind dock, approach-setup goal
  double r_a = 20.0;         // m before dock, approach goal
  double r_h1 = 15.0;        // m before dock, start of terminal line
  double r_h2 = 5.0;         // m after dock, end of terminal line
  double turn_radius = 5.0;  // m
  double lookahead = 4.0;    // ILOS lookahead distance, m
  double kappa = 0.3;        // ILOS integral gain
  double surge_setpoint = 1.2;  // m/s
  double sigma_max = 20.0;   // anti-windup clamp on the ILOS integral, m
  double depth_gain = 0.35;  // rad of pitch command per m of depth error
  double pitch_limit = deg2rad(30.0);

  void validate() const;
};

enum class DockingStage {
  ApproachSetup,
  Approach,
  TerminalHoming,
  Docked,
  MissedApproach,
};

const char* to_string(DockingStage stage);

/// Goal waypoint of a docking stage.
struct Waypoint {
  Vec2 position = Vec2::Zero();
  double depth = 0.0;
  double heading = 0.0;
};

/// Waypoints defining the stage geometry relative to the (estimated) dock:
/// ApproachSetup ends r_as m behind the dock on the surface, Approach ends
/// r_a m before it at dock depth, TerminalHoming is the line from r_h1 m
/// before to r_h2 m after the dock along its centerline.
std::vector<Waypoint> stage_waypoints(const DockPose& dock, DockingStage stage,
                                      const GuidanceParams& params);

/// Integrator state of the ILOS law.
struct IlosState {
  double sigma = 0.0;        // integral of cross-track error, m
  std::size_t progress = 0;  // monotone index into the path samples
};

/// Signed cross-track error (positive starboard of the path) at the
/// follower's current progress point.
double cross_track_error(const VehicleState& state, const Path& path,
                         const IlosState& ilos);

/// Lookahead ILOS desired heading: psi_d = gamma_p - atan2(e + kappa*sigma,
/// lookahead), with sigma integrated as sigma_dot = lookahead * e /
/// (lookahead^2 + (e + kappa*sigma)^2) and clamped to +/- sigma_max.
double ilos_heading(const VehicleState& state, const Path& path,
                    double lookahead, double kappa, double dt, IlosState& ilos,
                    double sigma_max = 20.0);

/// Path depth at the follower's progress point.
double path_depth(const Path& path, const IlosState& ilos);

/// True when the follower has consumed the path (progress at the last
/// sample or within the capture radius of the endpoint).
bool path_complete(const VehicleState& state, const Path& path,
                   const IlosState& ilos, double capture_radius = 1.5);

/// Events fed to the docking state machine on each step.
struct StageEvents {
  bool path_complete = false;
  bool fix_received = false;
  bool latch = false;
  bool optical_lost = false;
  bool envelope_missed = false;
};

/// One transition of the docking state machine. Throws
/// InvalidTransitionError for undefined (stage, event) pairs; Docked is
/// terminal and rejects every event.
DockingStage docking_fsm_step(DockingStage stage, const StageEvents& events);

/// Heading/depth command produced by the path-following layer; pitch is an
/// optional override that bypasses the depth loop (used by optical homing).
struct SteeringCommand {
  double heading = 0.0;
  double depth = 0.0;
  double surge = 1.2;
  std::optional<double> pitch;
};

struct OpticalGuidanceGains {
  double heading_gain = 0.5;  // rad per normalized image offset
  double pitch_gain = 0.3;    // rad per normalized image offset
  double presence_threshold = 0.5;
};

/// Blend the optical detection into the steering command during terminal
/// homing; in every other case (wrong stage, absent or sub-threshold
/// detection) the path command passes through unchanged.
SteeringCommand fuse_guidance(const SteeringCommand& path_cmd,
                              const std::optional<Detection>& detection,
                              DockingStage stage, const CameraModel& camera,
                              const OpticalGuidanceGains& gains,
                              double current_heading, double current_pitch);

/// Inner-loop PD attitude controller turning a steering command into
/// thruster/fin actuation.
struct Autopilot {
  double kp_heading = 8.0;
  double kd_heading = 6.0;
  double kp_pitch = 10.0;
  double kd_pitch = 8.0;
  double kp_roll = 2.0;
  double kd_roll = 1.0;
  double kp_surge = 20.0;
  double depth_gain = 0.35;
  double pitch_limit = deg2rad(30.0);

  ControlInput compute(const VehicleState& state, const SteeringCommand& cmd,
                       const HydroParams& hydro) const;
};

}  // namespace uwdock
