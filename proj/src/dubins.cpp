#include "uwdock/dubins.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "uwdock/errors.hpp"

namespace uwdock {

const char* to_string(DubinsWord word) {
  switch (word) {
    case DubinsWord::LSL: return "LSL";
    case DubinsWord::RSR: return "RSR";
    case DubinsWord::LSR: return "LSR";
    case DubinsWord::RSL: return "RSL";
    case DubinsWord::RLR: return "RLR";
    case DubinsWord::LRL: return "LRL";
  }
  return "?";
}

namespace {

enum class Seg { L, S, R };

constexpr std::array<std::array<Seg, 3>, 6> kSegments = {{
    {Seg::L, Seg::S, Seg::L},
    {Seg::R, Seg::S, Seg::R},
    {Seg::L, Seg::S, Seg::R},
    {Seg::R, Seg::S, Seg::L},
    {Seg::R, Seg::L, Seg::R},
    {Seg::L, Seg::R, Seg::L},
}};

/// Advance a pose along one segment of normalized length (radius 1).
Pose2 advance(const Pose2& pose, Seg seg, double len) {
  Pose2 out = pose;
  switch (seg) {
    case Seg::S:
      out.x += len * std::cos(pose.psi);
      out.y += len * std::sin(pose.psi);
      break;
    case Seg::L:
      out.psi = pose.psi + len;
      out.x += std::sin(out.psi) - std::sin(pose.psi);
      out.y -= std::cos(out.psi) - std::cos(pose.psi);
      break;
    case Seg::R:
      out.psi = pose.psi - len;
      out.x -= std::sin(out.psi) - std::sin(pose.psi);
      out.y += std::cos(out.psi) - std::cos(pose.psi);
      break;
  }
  return out;
}

struct Candidate {
  DubinsWord word;
  std::array<double, 3> t = {0.0, 0.0, 0.0};  // normalized lengths
};

/// Closed-form segment parameters for each word in normalized coordinates
/// (d = distance / radius, alpha/beta headings relative to the base line).
std::optional<Candidate> solve_word(DubinsWord word, double alpha, double beta,
                                    double d) {
  const double sa = std::sin(alpha), ca = std::cos(alpha);
  const double sb = std::sin(beta), cb = std::cos(beta);
  const double cab = std::cos(alpha - beta);
  Candidate c{word, {0.0, 0.0, 0.0}};
  switch (word) {
    case DubinsWord::LSL: {
      const double p_sq = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sa - sb);
      if (p_sq < 0.0) return std::nullopt;
      const double tmp = std::atan2(cb - ca, d + sa - sb);
      c.t = {wrap_2pi(-alpha + tmp), std::sqrt(p_sq), wrap_2pi(beta - tmp)};
      return c;
    }
    case DubinsWord::RSR: {
      const double p_sq = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sb - sa);
      if (p_sq < 0.0) return std::nullopt;
      const double tmp = std::atan2(ca - cb, d - sa + sb);
      c.t = {wrap_2pi(alpha - tmp), std::sqrt(p_sq), wrap_2pi(-beta + tmp)};
      return c;
    }
    case DubinsWord::LSR: {
      const double p_sq = -2.0 + d * d + 2.0 * cab + 2.0 * d * (sa + sb);
      if (p_sq < 0.0) return std::nullopt;
      const double p = std::sqrt(p_sq);
      const double tmp =
          std::atan2(-ca - cb, d + sa + sb) - std::atan2(-2.0, p);
      c.t = {wrap_2pi(-alpha + tmp), p, wrap_2pi(-wrap_2pi(beta) + tmp)};
      return c;
    }
    case DubinsWord::RSL: {
      const double p_sq = -2.0 + d * d + 2.0 * cab - 2.0 * d * (sa + sb);
      if (p_sq < 0.0) return std::nullopt;
      const double p = std::sqrt(p_sq);
      const double tmp =
          std::atan2(ca + cb, d - sa - sb) - std::atan2(2.0, p);
      c.t = {wrap_2pi(alpha - tmp), p, wrap_2pi(beta - tmp)};
      return c;
    }
    case DubinsWord::RLR: {
      const double tmp = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sa - sb)) / 8.0;
      if (std::abs(tmp) > 1.0) return std::nullopt;
      const double p = wrap_2pi(2.0 * kPi - std::acos(tmp));
      const double t =
          wrap_2pi(alpha - std::atan2(ca - cb, d - sa + sb) + p / 2.0);
      c.t = {t, p, wrap_2pi(alpha - beta - t + p)};
      return c;
    }
    case DubinsWord::LRL: {
      const double tmp = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sb - sa)) / 8.0;
      if (std::abs(tmp) > 1.0) return std::nullopt;
      const double p = wrap_2pi(2.0 * kPi - std::acos(tmp));
      const double t =
          wrap_2pi(-alpha + std::atan2(-ca + cb, d + sa - sb) + p / 2.0);
      c.t = {t, p, wrap_2pi(wrap_2pi(beta) - alpha - t + p)};
      return c;
    }
  }
  return std::nullopt;
}

/// End pose of a normalized candidate starting from (0, 0, alpha).
Pose2 evaluate(const Candidate& c, double alpha) {
  Pose2 pose{0.0, 0.0, alpha};
  const auto& segs = kSegments[static_cast<int>(c.word)];
  for (int i = 0; i < 3; ++i) pose = advance(pose, segs[i], c.t[i]);
  return pose;
}

bool closes(const Candidate& c, double alpha, double beta, double d) {
  const Pose2 end = evaluate(c, alpha);
  const double pos_err = std::hypot(end.x - d, end.y);
  const double ang_err = std::abs(wrap_pi(end.psi - beta));
  return pos_err < 1e-7 && ang_err < 1e-7;
}

}  // namespace

Pose2 DubinsPath::pose_at(double s) const {
  s = clamp(s, 0.0, length());
  Pose2 pose = start;
  const auto& segs = kSegments[static_cast<int>(word)];
  for (int i = 0; i < 3; ++i) {
    const double take = std::min(s, seg_lengths[i]);
    Pose2 scaled = {pose.x / radius, pose.y / radius, pose.psi};
    scaled = advance(scaled, segs[i], take / radius);
    pose = {scaled.x * radius, scaled.y * radius, scaled.psi};
    s -= take;
    if (s <= 0.0) break;
  }
  pose.psi = wrap_pi(pose.psi);
  return pose;
}

double DubinsPath::depth_at(double s) const {
  const double total = length();
  if (total <= 0.0) return depth_goal;
  const double f = clamp(s / total, 0.0, 1.0);
  return depth_start + f * (depth_goal - depth_start);
}

Path DubinsPath::sample(double ds) const {
  Path path;
  const double total = length();
  const int n = std::max(2, static_cast<int>(std::ceil(total / ds)) + 1);
  path.points.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double s = total * static_cast<double>(i) / (n - 1);
    const Pose2 pose = pose_at(s);
    path.points.push_back({s, pose.x, pose.y, pose.psi, depth_at(s)});
  }
  path.length = total;
  return path;
}

Path Path::line(const Vec2& a, const Vec2& b, double depth_a, double depth_b,
                double ds) {
  Path path;
  const double total = (b - a).norm();
  const double psi = std::atan2(b.y() - a.y(), b.x() - a.x());
  const int n = std::max(2, static_cast<int>(std::ceil(total / ds)) + 1);
  path.points.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double f = static_cast<double>(i) / (n - 1);
    const Vec2 p = a + f * (b - a);
    path.points.push_back(
        {f * total, p.x(), p.y(), psi, depth_a + f * (depth_b - depth_a)});
  }
  path.length = total;
  return path;
}

DubinsPath plan_dubins(const Pose2& start, const Pose2& goal, double turn_radius,
                       double depth_start, double depth_goal) {
  if (!std::isfinite(start.x) || !std::isfinite(start.y) ||
      !std::isfinite(start.psi) || !std::isfinite(goal.x) ||
      !std::isfinite(goal.y) || !std::isfinite(goal.psi)) {
    throw ConfigError("plan_dubins: poses must be finite");
  }
  if (!(turn_radius > 0.0)) {
    throw ConfigError("plan_dubins: turn radius must be positive");
  }

  DubinsPath best;
  best.radius = turn_radius;
  best.start = start;
  best.goal = goal;
  best.depth_start = depth_start;
  best.depth_goal = depth_goal;

  const double dx = goal.x - start.x;
  const double dy = goal.y - start.y;
  const double dist = std::hypot(dx, dy);

  // Degenerate: identical pose, zero-length path.
  if (dist < 1e-12 && std::abs(wrap_pi(goal.psi - start.psi)) < 1e-12) {
    best.seg_lengths = {0.0, 0.0, 0.0};
    best.samples = best.sample().points;
    return best;
  }

  const double phi = std::atan2(dy, dx);
  const double d = dist / turn_radius;
  const double alpha = wrap_2pi(start.psi - phi);
  const double beta = wrap_2pi(goal.psi - phi);

  double best_len = std::numeric_limits<double>::infinity();
  bool found = false;
  for (int w = 0; w < 6; ++w) {
    const auto word = static_cast<DubinsWord>(w);
    const auto cand = solve_word(word, alpha, beta, d);
    if (!cand || !closes(*cand, alpha, beta, d)) continue;
    const double len = (cand->t[0] + cand->t[1] + cand->t[2]) * turn_radius;
    if (len < best_len) {
      best_len = len;
      best.word = word;
      best.seg_lengths = {cand->t[0] * turn_radius, cand->t[1] * turn_radius,
                          cand->t[2] * turn_radius};
      found = true;
    }
  }
  if (!found) {
    throw ConfigError("plan_dubins: no word closed on the goal pose");
  }
  best.samples = best.sample().points;
  return best;
}

}  // namespace uwdock
