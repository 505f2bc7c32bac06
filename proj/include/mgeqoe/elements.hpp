#pragma once

// Modified generalized equinoctial orbital elements and both directions of the
// Cartesian <-> element transformation.
//
// The perturbing potential U passed to these functions is always the full,
// offset-inclusive value. The generalized quantities (h_tilde, e_tilde, p_tilde)
// depend on the potential level; the recovered Cartesian state does not, as long
// as both directions see the same U.

#include <cmath>
#include <string>

#include "mgeqoe/core.hpp"

namespace mgeqoe {

struct MGeqoeState {
  double p_tilde = 0.0;  // generalized semi-latus rectum
  double p1 = 0.0;
  double p2 = 0.0;
  double q1 = 0.0;
  double q2 = 0.0;
  double L = 0.0;  // true longitude, unwrapped along trajectories

  Vec6 to_vector() const {
    Vec6 y;
    y << p_tilde, p1, p2, q1, q2, L;
    return y;
  }
  static MGeqoeState from_vector(const Vec6& y) { return {y[0], y[1], y[2], y[3], y[4], y[5]}; }

  /// 1 + p1 sin L + p2 cos L, i.e. p_tilde / r.
  double radius_denominator() const { return 1.0 + p1 * std::sin(L) + p2 * std::cos(L); }
};

struct GeneralizedQuantities {
  double U = 0.0;
  double U_eff = 0.0;
  double h = 0.0;
  double h_tilde = 0.0;
  Vec3 e_tilde = Vec3::Zero();
  double E_total = 0.0;
  double r = 0.0;
  double r_dot = 0.0;
  double Psi = 0.0;  // generalized longitude of periapsis, diagnostic only
};

struct EquinoctialBasis {
  Vec3 e_X;
  Vec3 e_Y;
  Vec3 e_Z;
};

/// Guard on 1 + e_h . e_z below which q1, q2 blow up (retrograde equatorial).
inline constexpr double kRetrogradeTolerance = 1e-10;

/// h^2 / (2 r^2) + U.
inline double effective_potential(const CartesianState& s, double U) {
  const double r2 = s.r.squaredNorm();
  return s.r.cross(s.v).squaredNorm() / (2.0 * r2) + U;
}

inline double generalized_angular_momentum(double r, double U_eff,
                                           double epoch = std::numeric_limits<double>::quiet_NaN()) {
  if (U_eff < 0.0) {
    std::string msg = "U_eff = " + std::to_string(U_eff) + " < 0; the potential offset is missing or too small";
    if (!std::isnan(epoch)) msg += " (epoch " + std::to_string(epoch) + ")";
    fail(ErrorCode::NegativeEffectivePotential, msg, epoch);
  }
  return std::sqrt(2.0 * r * r * U_eff);
}

inline Vec3 generalized_eccentricity(const CartesianState& s, double h_tilde, double mu) {
  const OrbitalFrame f = orbital_frame_basis(s);
  const double r = s.r.norm();
  const double r_dot = s.r.dot(s.v) / r;
  const Vec3 v_tilde = r_dot * f.e_r + (h_tilde / r) * f.e_f;
  return v_tilde.cross(s.r.cross(v_tilde)) / mu - f.e_r;
}

inline EquinoctialBasis equinoctial_basis(double q1, double q2) {
  const double k = 1.0 / (1.0 + q1 * q1 + q2 * q2);
  EquinoctialBasis b;
  b.e_X = k * Vec3(1.0 - q1 * q1 + q2 * q2, 2.0 * q1 * q2, -2.0 * q1);
  b.e_Y = k * Vec3(2.0 * q1 * q2, 1.0 + q1 * q1 - q2 * q2, 2.0 * q2);
  b.e_Z = k * Vec3(2.0 * q1, -2.0 * q2, 1.0 - q1 * q1 - q2 * q2);
  return b;
}

inline GeneralizedQuantities generalized_quantities(const CartesianState& s, double U, double mu) {
  GeneralizedQuantities g;
  g.U = U;
  g.r = s.r.norm();
  g.r_dot = s.r.dot(s.v) / g.r;
  g.h = s.r.cross(s.v).norm();
  g.U_eff = effective_potential(s, U);
  g.h_tilde = generalized_angular_momentum(g.r, g.U_eff);
  g.e_tilde = generalized_eccentricity(s, g.h_tilde, mu);
  g.E_total = 0.5 * s.v.squaredNorm() - mu / g.r + U;
  return g;
}

inline MGeqoeState cart_to_mgeqoe(const CartesianState& s, double U, double mu) {
  const double r = s.r.norm();
  if (!(r > 0.0)) fail(ErrorCode::DegenerateGeometry, "zero position vector");
  const OrbitalFrame f = orbital_frame_basis(s);
  const double denom = 1.0 + f.e_h.z();
  if (denom <= kRetrogradeTolerance) {
    fail(ErrorCode::SingularOrientation, "retrograde equatorial orbit, q1/q2 undefined");
  }
  const double h_tilde = generalized_angular_momentum(r, effective_potential(s, U));
  const Vec3 e_tilde = generalized_eccentricity(s, h_tilde, mu);

  MGeqoeState m;
  m.p_tilde = h_tilde * h_tilde / mu;
  m.q1 = f.e_h.x() / denom;
  m.q2 = -f.e_h.y() / denom;
  const EquinoctialBasis b = equinoctial_basis(m.q1, m.q2);
  m.p1 = e_tilde.dot(b.e_Y);
  m.p2 = e_tilde.dot(b.e_X);
  m.L = std::atan2(s.r.dot(b.e_Y), s.r.dot(b.e_X));
  return m;
}

/// Diagnostic Psi = atan2(p1, p2); the transformation itself never needs it.
inline double generalized_longitude_of_periapsis(const MGeqoeState& m) { return std::atan2(m.p1, m.p2); }

/// Position is rebuilt first since it needs no potential; `potential_at(r, epoch)`
/// is then evaluated there to recover the osculating angular momentum.
template <class PotentialFn>
CartesianState mgeqoe_to_cart(const MGeqoeState& m, double mu, PotentialFn&& potential_at, double epoch) {
  if (!(m.p_tilde > 0.0)) fail(ErrorCode::InvalidArgument, "p_tilde must be positive", epoch);
  const double sl = std::sin(m.L);
  const double cl = std::cos(m.L);
  const double denom = 1.0 + m.p1 * sl + m.p2 * cl;
  if (!(denom > 0.0)) fail(ErrorCode::HyperbolicBranch, "1 + p1 sin L + p2 cos L <= 0", epoch);

  const double h_tilde = std::sqrt(m.p_tilde * mu);
  const double r = m.p_tilde / denom;
  const double X = r * cl;
  const double Y = r * sl;
  const EquinoctialBasis b = equinoctial_basis(m.q1, m.q2);
  CartesianState s;
  s.r = X * b.e_X + Y * b.e_Y;

  const double r_dot = mu / h_tilde * (m.p2 * sl - m.p1 * cl);
  const double U = potential_at(static_cast<const Vec3&>(s.r), epoch);
  const double h2 = h_tilde * h_tilde - 2.0 * r * r * U;
  if (h2 < 0.0) fail(ErrorCode::InconsistentPotential, "h_tilde^2 - 2 r^2 U < 0", epoch);
  const double h = std::sqrt(h2);
  const double X_dot = r_dot * X / r - h * Y / (r * r);
  const double Y_dot = r_dot * Y / r + h * X / (r * r);
  s.v = X_dot * b.e_X + Y_dot * b.e_Y;
  return s;
}

/// Shift `angle` by a multiple of 2 pi so it lies within pi of `reference`.
inline double align_angle(double angle, double reference) {
  return angle - kTwoPi * std::round((angle - reference) / kTwoPi);
}

}  // namespace mgeqoe
