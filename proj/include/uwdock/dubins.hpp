#pragma once

#include <array>
#include <string>
#include <vector>

#include "uwdock/math_util.hpp"

namespace uwdock {

enum class DubinsWord { LSL, RSR, LSR, RSL, RLR, LRL };

const char* to_string(DubinsWord word);

/// One point of a sampled path: arc length from the start, planar position,
/// tangent heading and interpolated depth.
struct PathPoint {
  double s = 0.0;
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;
  double depth = 0.0;
};

/// Generic followable path (Dubins sample set or a straight line).
struct Path {
  std::vector<PathPoint> points;
  double length = 0.0;

  bool empty() const { return points.size() < 2; }

  /// Straight segment between two waypoints with linear depth.
  static Path line(const Vec2& a, const Vec2& b, double depth_a, double depth_b,
                   double ds = 0.25);
};

/// Shortest curvature-bounded path between two planar poses.
struct DubinsPath {
  DubinsWord word = DubinsWord::LSL;
  std::array<double, 3> seg_lengths = {0.0, 0.0, 0.0};  // meters
  double radius = 1.0;
  Pose2 start;
  Pose2 goal;
  double depth_start = 0.0;
  double depth_goal = 0.0;
  std::vector<PathPoint> samples;

  double length() const {
    return seg_lengths[0] + seg_lengths[1] + seg_lengths[2];
  }

  /// Exact pose at arc length s (clamped to [0, length]).
  Pose2 pose_at(double s) const;

  /// Depth linearly interpolated over arc length.
  double depth_at(double s) const;

  /// Resample into a followable Path at spacing ds; the final point lands
  /// exactly on the goal pose.
  Path sample(double ds = 0.25) const;
};

/// Plan the shortest Dubins path among the six admissible words.
///
/// Candidate words are validated by forward evaluation (end-pose closure)
/// before the minimum is taken. A coincident start/goal pose yields a
/// zero-length degenerate path. Throws ConfigError for non-finite poses or
/// a non-positive radius.
DubinsPath plan_dubins(const Pose2& start, const Pose2& goal, double turn_radius,
                       double depth_start = 0.0, double depth_goal = 0.0);

}  // namespace uwdock
