#include "uwdock/acoustic.hpp"

#include "uwdock/errors.hpp"

namespace uwdock {

void AcousticChannelParams::validate() const {
  if (!(rate_hz > 0.0)) throw ConfigError("acoustic: rate must be positive");
  if (p_success < 0.0 || p_success > 1.0) {
    throw ConfigError("acoustic: success probability must lie in [0, 1]");
  }
  if (sigma_x < 0.0 || sigma_y < 0.0 || sigma_heading < 0.0) {
    throw ConfigError("acoustic: noise sigmas must be non-negative");
  }
}

AcousticChannel::AcousticChannel(const AcousticChannelParams& params)
    : params_(params), rng_(params.seed) {
  params_.validate();
  next_slot_ = 1.0 / params_.rate_hz;
}

std::optional<AcousticFix> AcousticChannel::poll(double t,
                                                 const DockPose& true_dock) {
  if (t < next_slot_) return std::nullopt;
  // Consume exactly one slot per emission opportunity; if polling paused for
  // several slots, skip the missed ones rather than bursting.
  const double period = 1.0 / params_.rate_hz;
  while (next_slot_ + period <= t) next_slot_ += period;
  next_slot_ += period;

  if (!rng_.bernoulli(params_.p_success)) return std::nullopt;

  AcousticFix fix;
  fix.position.x() = true_dock.position.x() + rng_.normal(0.0, params_.sigma_x);
  fix.position.y() = true_dock.position.y() + rng_.normal(0.0, params_.sigma_y);
  fix.heading =
      wrap_pi(true_dock.heading + rng_.normal(0.0, deg2rad(params_.sigma_heading)));
  fix.t = t;
  return fix;
}

}  // namespace uwdock
