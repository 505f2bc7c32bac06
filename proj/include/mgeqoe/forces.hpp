#pragma once

// Perturbing potentials and forces, orbital-frame projections, the energy
// rate, and the constant potential offset that keeps U_eff non-negative.
//
// Sign convention: the third-body potential is the negative antiderivative of
// the standard tidal acceleration, so that F = P - grad U reproduces the
// relative N-body equations exactly.

#include <algorithm>
#include <cmath>
#include <vector>

#include "mgeqoe/core.hpp"
#include "mgeqoe/trajectory.hpp"

namespace mgeqoe {

struct PerturbingBody {
  Body body;
  double mu;  // canonical
};

struct PerturbationModel {
  Body central = Body::Earth;
  std::vector<PerturbingBody> potential_bodies;
  std::vector<PerturbingBody> force_bodies;
  double u_offset = 0.0;

  void validate() const {
    auto check = [&](const std::vector<PerturbingBody>& list) {
      for (const auto& pb : list) {
        if (pb.body == central) fail(ErrorCode::InvalidArgument, "central body listed as a perturber");
        if (!(pb.mu > 0.0) || !std::isfinite(pb.mu)) fail(ErrorCode::InvalidArgument, "perturber mu must be positive");
      }
    };
    check(potential_bodies);
    check(force_bodies);
    if (!std::isfinite(u_offset)) fail(ErrorCode::InvalidArgument, "potential offset must be finite");
  }

  /// Earth-Moon-Sun model: the other primary as a potential, the Sun as an
  /// external force.
  static PerturbationModel cislunar(Body central, const BodyConstants& c) {
    PerturbationModel m;
    m.central = central;
    const Body other = central == Body::Moon ? Body::Earth : Body::Moon;
    m.potential_bodies.push_back({other, c.mu_canonical(other)});
    m.force_bodies.push_back({Body::Sun, c.mu_canonical(Body::Sun)});
    return m;
  }
};

struct ForceProjection {
  double F_r = 0.0, F_f = 0.0, F_h = 0.0;
  double P_r = 0.0, P_f = 0.0, P_h = 0.0;
};

inline constexpr double kProximityTolerance = 1e-10;

namespace detail {
inline void check_geometry(const Vec3& r, const Vec3& r_cp) {
  if ((r - r_cp).norm() < kProximityTolerance) fail(ErrorCode::Proximity, "object collides with perturbing body");
  if (r_cp.norm() < kProximityTolerance) fail(ErrorCode::Proximity, "perturbing body coincides with central body");
}
}  // namespace detail

/// U_P = -mu_P (1/|r - r_CP| - r.r_CP / |r_CP|^3).
inline double third_body_potential(const Vec3& r, const Vec3& r_cp, double mu_p) {
  detail::check_geometry(r, r_cp);
  const double rc = r_cp.norm();
  return -mu_p * (1.0 / (r - r_cp).norm() - r.dot(r_cp) / (rc * rc * rc));
}

inline Vec3 third_body_acceleration(const Vec3& r, const Vec3& r_cp, double mu_p) {
  detail::check_geometry(r, r_cp);
  const Vec3 d = r_cp - r;
  const double dn = d.norm();
  const double rc = r_cp.norm();
  return mu_p * (d / (dn * dn * dn) - r_cp / (rc * rc * rc));
}

/// dU_P/dt at fixed r, through the perturber's motion only.
inline double potential_time_partial(const Vec3& r, const Vec3& r_cp, const Vec3& v_cp, double mu_p) {
  detail::check_geometry(r, r_cp);
  const Vec3 d = r - r_cp;
  const double dn = d.norm();
  const double rc = r_cp.norm();
  const double rc3 = rc * rc * rc;
  return -mu_p * (d.dot(v_cp) / (dn * dn * dn) - r.dot(v_cp) / rc3 +
                  3.0 * r.dot(r_cp) * r_cp.dot(v_cp) / (rc3 * rc * rc));
}

inline ForceProjection project_forces(const Vec3& F_total, const Vec3& P_ext, const OrbitalFrame& f) {
  return {F_total.dot(f.e_r), F_total.dot(f.e_f), F_total.dot(f.e_h),
          P_ext.dot(f.e_r),   P_ext.dot(f.e_f),   P_ext.dot(f.e_h)};
}

inline ForceProjection project_forces(const Vec3& F_total, const Vec3& P_ext, const CartesianState& s) {
  return project_forces(F_total, P_ext, orbital_frame_basis(s));
}

inline double energy_rate(double dU_dt, double r_dot, double h, double r, double P_r, double P_f) {
  return dU_dt + r_dot * P_r + (h / r) * P_f;
}

inline double instantaneous_offset(const CartesianState& s, double U, double mu) {
  const double r = s.r.norm();
  const double r_dot = s.r.dot(s.v) / r;
  const double h2 = s.r.cross(s.v).squaredNorm();
  return -U - h2 / (2.0 * r * r) - 0.25 * r_dot * r_dot + mu / (2.0 * r);
}

inline constexpr double kDefaultOffsetMargin = 1e-10;

/// Maximum of the instantaneous offset over a Cartesian trajectory plus a
/// margin. `potential_at(r, t)` must return U without any offset.
template <class PotentialFn>
double offset_for_trajectory(const Trajectory& traj, PotentialFn&& potential_at, double mu,
                             double margin = kDefaultOffsetMargin) {
  if (traj.empty()) fail(ErrorCode::InvalidArgument, "offset needs a non-empty trajectory");
  if (traj.kind != CoordinateKind::Cartesian) fail(ErrorCode::InvalidArgument, "offset needs a Cartesian trajectory");
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const CartesianState s = CartesianState::from_vector(traj.states[i]);
    best = std::max(best, instantaneous_offset(s, potential_at(static_cast<const Vec3&>(s.r), traj.epochs[i]), mu));
  }
  return best + margin;
}

}  // namespace mgeqoe
