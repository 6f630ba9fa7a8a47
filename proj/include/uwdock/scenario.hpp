#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uwdock/acoustic.hpp"
#include "uwdock/guidance.hpp"
#include "uwdock/optics.hpp"
#include "uwdock/vehicle.hpp"

namespace uwdock {

enum class DetectorKind { NN, BP, None };
enum class CurrentPolicy { Perpendicular, Random, Fixed };

const char* to_string(DetectorKind kind);
const char* to_string(CurrentPolicy policy);

struct SpawnParams {
  double dist_min = 10.0;          // m in front of the dock
  double dist_max = 15.0;
  double cone_deg = 25.0;          // bearing spread around the centerline
  double heading_jitter_deg = 30.0;
};

struct DockParams {
  double depth = 2.0;              // m
  double drift_speed = 0.02;       // m/s random-walk magnitude
  double yaw_jitter_dps = 0.1;     // deg/s
  double drift_cap = 0.05;         // m/s (invariant cap)
  double yaw_cap_dps = 0.5;        // deg/s (invariant cap)
};

struct StopRule {
  int successes = 20;
  int max_episodes = 200;
  int max_retries = 2;             // retries per episode after a missed approach
};

struct EpisodeLimits {
  double max_time_s = 600.0;
  double no_fix_timeout_s = 90.0;
};

struct EnvelopeParams {
  double radius = 0.5;             // m, disk at the dock entrance
  double heading_tolerance_deg = 30.0;
};

/// Full description of one benchmark cell / episode setup.
struct ScenarioConfig {
  int version = 1;
  std::string name = "custom";
  DetectorKind detector = DetectorKind::BP;
  double bp_threshold = 0.34;
  std::string nn_weights;          // path, optional (CLI may override)
  WaterModel water = WaterModel::jerlov("IC");
  SceneParams scene;
  double current_magnitude = 0.0;  // m/s
  CurrentPolicy current_policy = CurrentPolicy::Perpendicular;
  double current_direction_deg = 0.0;  // Fixed policy only
  SpawnParams spawn;
  DockParams dock;
  AcousticChannelParams acoustic;
  GuidanceParams guidance;
  CameraModel camera;
  OpticalGuidanceGains optical;
  EnvelopeParams envelope;
  StopRule stop;
  EpisodeLimits limits;
  HydroParams hydro = HydroParams::iver3_defaults();

  void validate() const;
};

/// Parse a scenario file (versioned schema; unknown keys are rejected).
ScenarioConfig load_scenario(const std::string& path);

/// Serialize back to the file schema.
std::string scenario_to_json(const ScenarioConfig& config);

/// Benchmark presets:
///  t1  - {NN, BP} x {0, 0.1, 0.25 m/s perpendicular} in 5C water,
///  t2  - the same grid in IC water,
///  t3  - NN in 7C water with a 0.05 m/s random-direction current,
///  all - t1 + t2 + t3 (the thirteen-cell bench).
std::vector<ScenarioConfig> preset_matrix(const std::string& name);

}  // namespace uwdock
