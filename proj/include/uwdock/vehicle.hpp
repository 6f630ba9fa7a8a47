#pragma once

#include <string>

#include "uwdock/math_util.hpp"

namespace uwdock {

/// Earth-fixed pose and body-fixed velocity of the AUV.
///
/// eta1 = [x, y, z] (m, NED, z down), eta2 = [phi, theta, psi] (rad),
/// v1 = [u, v, w] body-fixed linear velocity (m/s),
/// v2 = [p, q, r] body-fixed angular rate (rad/s).
struct VehicleState {
  Vec3 eta1 = Vec3::Zero();
  Vec3 eta2 = Vec3::Zero();
  Vec3 v1 = Vec3::Zero();
  Vec3 v2 = Vec3::Zero();
  double t = 0.0;
};

/// Rigid-body + added-mass model coefficients and actuator limits.
///
/// Damping follows the SNAME sign convention: the linear coefficients
/// X_u .. N_r are negative and enter the equations as D = -diag(...).
struct HydroParams {
  Mat6 m_rb = Mat6::Identity();
  Mat6 m_a = Mat6::Zero();
  Vec6 damping = Vec6::Constant(-1.0);  // [X_u, Y_v, Z_w, K_p, M_q, N_r]
  double thrust_max = 25.0;             // N
  double fin_force_max = 0.0;           // N, zero disables the force channel
  double fin_moment_max = 6.0;          // N*m
  double speed_cap = 2.0;               // m/s, validity bound of linear damping

  Mat6 mass() const { return m_rb + m_a; }

  /// Iver3-like defaults (length 1.5 m, mass 30 kg, cruise 1.0-1.5 m/s).
  static HydroParams iver3_defaults();

  /// Throws ConfigError when an invariant is violated (M not SPD,
  /// non-negative damping entries, non-positive limits).
  void validate() const;
};

/// Thruster and fin commands; components are clamped to the actuator
/// limits inside step().
struct ControlInput {
  double thrust = 0.0;            // N along body x
  Vec3 fin_forces = Vec3::Zero();   // N
  Vec3 fin_moments = Vec3::Zero();  // N*m
};

/// Margin kept between |theta| and pi/2 before Euler kinematics degenerate.
inline constexpr double kGimbalEpsilon = 1e-3;

/// 6x6 block-diagonal transform [J1 0; 0 J2] from body rates to
/// earth-frame pose rates. Throws GimbalLockError near |theta| = pi/2.
Mat6 rotation_body_to_earth(const Vec3& eta2);

/// 3x3 body-to-earth rotation (the J1 block).
Mat3 rotation_j1(const Vec3& eta2);

/// Coriolis/centripetal matrix built from M with the standard rigid-body +
/// added-mass skew construction; skew-symmetric for any M.
Mat6 coriolis_matrix(const Mat6& mass, const Vec3& v1, const Vec3& v2);

/// Advance the 6-DOF model by one RK4 step of size dt.
///
/// The ambient current is an earth-frame water velocity added kinematically
/// to the position rate, so v1 stays the velocity relative to the water.
/// Throws NumericalDivergenceError if the state leaves the finite range and
/// GimbalLockError if pitch reaches the guard band.
VehicleState step(const VehicleState& state, const ControlInput& input,
                  const Vec3& current, const HydroParams& params, double dt);

/// Kinetic energy 0.5 * V' M V of the body-frame velocity.
double kinetic_energy(const VehicleState& state, const HydroParams& params);

/// Load hydrodynamic parameters from a JSON file (schema in README).
HydroParams load_hydro_params(const std::string& path);

}  // namespace uwdock
