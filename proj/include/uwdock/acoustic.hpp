#pragma once

#include <cstdint>
#include <optional>

#include "uwdock/guidance.hpp"
#include "uwdock/math_util.hpp"
#include "uwdock/rng.hpp"

namespace uwdock {

/// Rate, reliability and noise of the USBL-style dock pose message.
struct AcousticChannelParams {
  double rate_hz = 0.33;
  double p_success = 0.9;
  double sigma_x = 2.0;        // m
  double sigma_y = 2.0;        // m
  double sigma_heading = 5.0;  // degrees
  std::uint64_t seed = 0;

  void validate() const;
};

/// Noisy dock pose estimate delivered over the channel.
struct AcousticFix {
  Vec2 position = Vec2::Zero();
  double heading = 0.0;
  double t = 0.0;
};

/// Simulates the low-rate acoustic localization link: one transmission slot
/// every 1/rate seconds, received with probability p, corrupted by white
/// Gaussian noise on position and heading.
class AcousticChannel {
 public:
  AcousticChannel() : AcousticChannel(AcousticChannelParams{}) {}
  explicit AcousticChannel(const AcousticChannelParams& params);

  /// Poll at simulation time t (non-decreasing across calls). Returns a fix
  /// when a slot boundary has passed and the Bernoulli draw succeeds;
  /// dropped slots are a modeled outcome, not an error.
  std::optional<AcousticFix> poll(double t, const DockPose& true_dock);

  const AcousticChannelParams& params() const { return params_; }

 private:
  AcousticChannelParams params_;
  Rng rng_;
  double next_slot_ = 0.0;
};

}  // namespace uwdock
