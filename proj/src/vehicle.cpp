#include "uwdock/vehicle.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "uwdock/errors.hpp"

namespace uwdock {

HydroParams HydroParams::iver3_defaults() {
  HydroParams p;
  // Rigid body: m = 30 kg, slender-body inertia about a 1.5 m hull.
  Vec6 rb;
  rb << 30.0, 30.0, 30.0, 0.18, 5.6, 5.6;
  p.m_rb = rb.asDiagonal();
  // Added mass: small in surge, near body mass in sway/heave.
  Vec6 ma;
  ma << 1.5, 28.0, 28.0, 0.02, 4.0, 4.0;
  p.m_a = ma.asDiagonal();
  p.damping << -8.0, -40.0, -40.0, -1.5, -12.0, -12.0;
  p.thrust_max = 25.0;
  p.fin_force_max = 0.0;
  p.fin_moment_max = 6.0;
  p.speed_cap = 2.0;
  return p;
}

void HydroParams::validate() const {
  const Mat6 m = mass();
  if (!m.isApprox(m.transpose(), 1e-9)) {
    throw ConfigError("hydro: M = M_RB + M_A must be symmetric");
  }
  Eigen::LLT<Mat6> llt(m);
  if (llt.info() != Eigen::Success) {
    throw ConfigError("hydro: M = M_RB + M_A must be positive definite");
  }
  for (int i = 0; i < 6; ++i) {
    if (!(damping[i] < 0.0)) {
      throw ConfigError("hydro: damping coefficients must be strictly negative");
    }
  }
  if (!(thrust_max > 0.0) || fin_force_max < 0.0 || !(fin_moment_max > 0.0) ||
      !(speed_cap > 0.0)) {
    throw ConfigError("hydro: actuator limits and speed cap must be positive");
  }
}

Mat3 rotation_j1(const Vec3& eta2) {
  const double cphi = std::cos(eta2[0]), sphi = std::sin(eta2[0]);
  const double cth = std::cos(eta2[1]), sth = std::sin(eta2[1]);
  const double cpsi = std::cos(eta2[2]), spsi = std::sin(eta2[2]);
  Mat3 j1;
  j1 << cpsi * cth, -spsi * cphi + cpsi * sth * sphi,
      spsi * sphi + cpsi * cphi * sth,
      spsi * cth, cpsi * cphi + sphi * sth * spsi,
      -cpsi * sphi + sth * spsi * cphi,
      -sth, cth * sphi, cth * cphi;
  return j1;
}

Mat6 rotation_body_to_earth(const Vec3& eta2) {
  if (std::abs(eta2[1]) >= kPi / 2.0 - kGimbalEpsilon) {
    throw GimbalLockError("pitch within gimbal guard of +/-90 deg");
  }
  const double cphi = std::cos(eta2[0]), sphi = std::sin(eta2[0]);
  const double cth = std::cos(eta2[1]), tth = std::tan(eta2[1]);
  Mat3 j2;
  j2 << 1.0, sphi * tth, cphi * tth,
      0.0, cphi, -sphi,
      0.0, sphi / cth, cphi / cth;
  Mat6 j = Mat6::Zero();
  j.topLeftCorner<3, 3>() = rotation_j1(eta2);
  j.bottomRightCorner<3, 3>() = j2;
  return j;
}

Mat6 coriolis_matrix(const Mat6& mass, const Vec3& v1, const Vec3& v2) {
  const Vec3 a = mass.topLeftCorner<3, 3>() * v1 + mass.topRightCorner<3, 3>() * v2;
  const Vec3 b = mass.bottomLeftCorner<3, 3>() * v1 + mass.bottomRightCorner<3, 3>() * v2;
  Mat6 c = Mat6::Zero();
  c.topRightCorner<3, 3>() = -skew(a);
  c.bottomLeftCorner<3, 3>() = -skew(a);
  c.bottomRightCorner<3, 3>() = -skew(b);
  return c;
}

namespace {

struct Derivative {
  Vec3 d_eta1;
  Vec3 d_eta2;
  Vec6 d_v;
};

Derivative dynamics(const Vec3& eta2, const Vec6& v, const ControlInput& u,
                    const Vec3& current, const HydroParams& p,
                    const Eigen::LDLT<Mat6>& mass_solver) {
  const Mat6 j = rotation_body_to_earth(eta2);
  const Vec6 eta_dot = j * v;

  Vec6 tau;
  tau << u.thrust + u.fin_forces[0], u.fin_forces[1], u.fin_forces[2],
      u.fin_moments[0], u.fin_moments[1], u.fin_moments[2];

  const Mat6 c = coriolis_matrix(p.mass(), v.head<3>(), v.tail<3>());
  const Vec6 damp = p.damping.cwiseProduct(v);  // D(V)V with D = -diag(...)
  const Vec6 v_dot = mass_solver.solve(tau - c * v + damp);

  Derivative d;
  d.d_eta1 = eta_dot.head<3>() + current;
  d.d_eta2 = eta_dot.tail<3>();
  d.d_v = v_dot;
  return d;
}

}  // namespace

VehicleState step(const VehicleState& state, const ControlInput& input,
                  const Vec3& current, const HydroParams& params, double dt) {
  if (!(dt > 0.0) || dt > 0.1) {
    throw ConfigError("step: dt must lie in (0, 0.1]");
  }

  ControlInput u = input;
  u.thrust = clamp(u.thrust, -params.thrust_max, params.thrust_max);
  for (int i = 0; i < 3; ++i) {
    u.fin_forces[i] = clamp(u.fin_forces[i], -params.fin_force_max, params.fin_force_max);
    u.fin_moments[i] = clamp(u.fin_moments[i], -params.fin_moment_max, params.fin_moment_max);
  }

  const Eigen::LDLT<Mat6> mass_solver(params.mass());

  Vec6 v0;
  v0 << state.v1, state.v2;

  const auto k1 = dynamics(state.eta2, v0, u, current, params, mass_solver);
  const auto k2 = dynamics(state.eta2 + 0.5 * dt * k1.d_eta2, v0 + 0.5 * dt * k1.d_v,
                           u, current, params, mass_solver);
  const auto k3 = dynamics(state.eta2 + 0.5 * dt * k2.d_eta2, v0 + 0.5 * dt * k2.d_v,
                           u, current, params, mass_solver);
  const auto k4 = dynamics(state.eta2 + dt * k3.d_eta2, v0 + dt * k3.d_v,
                           u, current, params, mass_solver);

  VehicleState out;
  out.t = state.t + dt;
  out.eta1 = state.eta1 +
             dt / 6.0 * (k1.d_eta1 + 2.0 * k2.d_eta1 + 2.0 * k3.d_eta1 + k4.d_eta1);
  out.eta2 = state.eta2 +
             dt / 6.0 * (k1.d_eta2 + 2.0 * k2.d_eta2 + 2.0 * k3.d_eta2 + k4.d_eta2);
  Vec6 v = v0 + dt / 6.0 * (k1.d_v + 2.0 * k2.d_v + 2.0 * k3.d_v + k4.d_v);

  // Linear damping is only valid below the speed cap; saturate the excess
  // smoothly (identity below the cap, C1-continuous at it).
  const double speed = v.head<3>().norm();
  if (speed > params.speed_cap) {
    const double capped =
        params.speed_cap +
        0.5 * params.speed_cap * std::tanh(2.0 * (speed - params.speed_cap) / params.speed_cap);
    v.head<3>() *= capped / speed;
  }

  out.v1 = v.head<3>();
  out.v2 = v.tail<3>();
  for (int i = 0; i < 3; ++i) out.eta2[i] = wrap_pi(out.eta2[i]);

  if (!out.eta1.allFinite() || !out.eta2.allFinite() || !out.v1.allFinite() ||
      !out.v2.allFinite()) {
    throw NumericalDivergenceError("step: non-finite state after RK4 step");
  }
  return out;
}

double kinetic_energy(const VehicleState& state, const HydroParams& params) {
  Vec6 v;
  v << state.v1, state.v2;
  return 0.5 * v.dot(params.mass() * v);
}

HydroParams load_hydro_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("hydro: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("hydro: parse error in " + path + ": " + e.what());
  }

  static const char* kKeys[] = {"mass_rb_diag", "mass_added_diag", "damping",
                                "thrust_max", "fin_force_max", "fin_moment_max",
                                "speed_cap"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool known = false;
    for (const char* k : kKeys) known |= key == k;
    if (!known) throw ConfigError("hydro: unknown key '" + key + "'");
  }

  HydroParams p = HydroParams::iver3_defaults();
  auto read_vec6 = [&](const char* key, auto setter) {
    if (!j.contains(key)) return;
    const auto& arr = j.at(key);
    if (!arr.is_array() || arr.size() != 6) {
      throw ConfigError(std::string("hydro: '") + key + "' must have 6 entries");
    }
    Vec6 v;
    for (int i = 0; i < 6; ++i) v[i] = arr[i].get<double>();
    setter(v);
  };
  read_vec6("mass_rb_diag", [&](const Vec6& v) { p.m_rb = v.asDiagonal(); });
  read_vec6("mass_added_diag", [&](const Vec6& v) { p.m_a = v.asDiagonal(); });
  read_vec6("damping", [&](const Vec6& v) { p.damping = v; });
  if (j.contains("thrust_max")) p.thrust_max = j.at("thrust_max").get<double>();
  if (j.contains("fin_force_max")) p.fin_force_max = j.at("fin_force_max").get<double>();
  if (j.contains("fin_moment_max")) p.fin_moment_max = j.at("fin_moment_max").get<double>();
  if (j.contains("speed_cap")) p.speed_cap = j.at("speed_cap").get<double>();
  p.validate();
  return p;
}

}  // namespace uwdock
