#pragma once

// Dynamics right-hand sides (Cartesian relative N-body and M-GEqOE), an
// adaptive embedded Runge-Kutta integrator that lands exactly on the output
// grid, and trajectory conversion/comparison.

#include <boost/numeric/odeint/stepper/runge_kutta_fehlberg78.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "mgeqoe/core.hpp"
#include "mgeqoe/elements.hpp"
#include "mgeqoe/ephemeris.hpp"
#include "mgeqoe/forces.hpp"
#include "mgeqoe/trajectory.hpp"

namespace mgeqoe {

struct OdeSettings {
  double rel_tol = 1e-12;
  double abs_tol = 1e-13;
  double h_init = 1e-3;
  double h_min = 1e-12;
  double h_max = 0.1;
  std::size_t max_steps = 10'000'000;
  std::vector<double> output_grid;

  void validate(double t0, double t1) const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) fail(ErrorCode::InvalidArgument, "tolerances must be positive");
    if (!(h_min > 0.0) || !(h_min <= h_init) || !(h_init <= h_max)) {
      fail(ErrorCode::InvalidArgument, "step bounds must satisfy 0 < h_min <= h_init <= h_max");
    }
    if (!(t1 > t0)) fail(ErrorCode::InvalidArgument, "integration span must be non-degenerate and forward");
    for (std::size_t i = 0; i < output_grid.size(); ++i) {
      if (output_grid[i] < t0 || output_grid[i] > t1) fail(ErrorCode::InvalidArgument, "output grid outside span");
      if (i > 0 && !(output_grid[i] > output_grid[i - 1])) {
        fail(ErrorCode::InvalidArgument, "output grid must be strictly increasing");
      }
    }
  }
};

/// `count` evenly spaced epochs covering [t0, t1], both ends included.
inline std::vector<double> uniform_grid(double t0, double t1, std::size_t count) {
  if (count < 2) fail(ErrorCode::InvalidArgument, "grid needs at least two points");
  std::vector<double> g(count);
  for (std::size_t i = 0; i < count; ++i) g[i] = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(count - 1);
  g.back() = t1;
  return g;
}

struct DynamicsConfig {
  Body central = Body::Earth;
  double mu_central = 0.0;  // canonical
  PerturbationModel perturbations;
  std::shared_ptr<const EphemerisProvider> ephemeris;

  void validate() const {
    if (!(mu_central > 0.0)) fail(ErrorCode::InvalidArgument, "central gravitational parameter must be positive");
    if (perturbations.central != central) fail(ErrorCode::InvalidArgument, "perturbation model central body mismatch");
    perturbations.validate();
    const bool needs_ephemeris = !perturbations.potential_bodies.empty() || !perturbations.force_bodies.empty();
    if (needs_ephemeris && !ephemeris) fail(ErrorCode::InvalidArgument, "perturbers configured without an ephemeris");
    if (ephemeris) {
      if (!ephemeris->has(central)) fail(ErrorCode::UnknownBody, "ephemeris cannot locate the central body");
      for (const auto* list : {&perturbations.potential_bodies, &perturbations.force_bodies}) {
        for (const auto& pb : *list) {
          if (!ephemeris->has(pb.body)) fail(ErrorCode::UnknownBody, "ephemeris lacks " + std::string(to_string(pb.body)));
        }
      }
    }
  }

  /// Two-body configuration with no perturbations.
  static DynamicsConfig keplerian(Body central, double mu) {
    DynamicsConfig c;
    c.central = central;
    c.mu_central = mu;
    c.perturbations.central = central;
    return c;
  }
};

struct PerturbationEval {
  double U = 0.0;                      // offset-inclusive
  Vec3 potential_accel = Vec3::Zero();  // -grad U
  double dU_dt = 0.0;
  Vec3 P = Vec3::Zero();                // non-potential force per unit mass
};

inline PerturbationEval evaluate_perturbations(const DynamicsConfig& cfg, const Vec3& r, double t) {
  PerturbationEval e;
  for (const auto& pb : cfg.perturbations.potential_bodies) {
    const BodyState s = relative_state(*cfg.ephemeris, cfg.central, pb.body, t);
    e.U += third_body_potential(r, s.r, pb.mu);
    e.potential_accel += third_body_acceleration(r, s.r, pb.mu);
    e.dU_dt += potential_time_partial(r, s.r, s.v, pb.mu);
  }
  for (const auto& pb : cfg.perturbations.force_bodies) {
    const BodyState s = relative_state(*cfg.ephemeris, cfg.central, pb.body, t);
    e.P += third_body_acceleration(r, s.r, pb.mu);
  }
  e.U += cfg.perturbations.u_offset;
  return e;
}

/// Perturbing potential without the offset.
inline double raw_potential(const DynamicsConfig& cfg, const Vec3& r, double t) {
  double U = 0.0;
  for (const auto& pb : cfg.perturbations.potential_bodies) {
    U += third_body_potential(r, relative_state(*cfg.ephemeris, cfg.central, pb.body, t).r, pb.mu);
  }
  return U;
}

inline double potential(const DynamicsConfig& cfg, const Vec3& r, double t) {
  return raw_potential(cfg, r, t) + cfg.perturbations.u_offset;
}

inline Vec6 cartesian_rhs(double t, const Vec6& y, const DynamicsConfig& cfg) {
  const Vec3 r = y.head<3>();
  const double rn = r.norm();
  if (!(rn > 0.0)) fail(ErrorCode::DegenerateGeometry, "object at the central body", t);
  Vec3 a = -cfg.mu_central / (rn * rn * rn) * r;
  for (const auto* list : {&cfg.perturbations.potential_bodies, &cfg.perturbations.force_bodies}) {
    for (const auto& pb : *list) {
      a += third_body_acceleration(r, relative_state(*cfg.ephemeris, cfg.central, pb.body, t).r, pb.mu);
    }
  }
  Vec6 dy;
  dy << y.tail<3>(), a;
  return dy;
}

inline constexpr double kEccentricitySingularityTolerance = 1e-12;

inline Vec6 mgeqoe_rhs(double t, const Vec6& y, const DynamicsConfig& cfg) {
  const MGeqoeState m = MGeqoeState::from_vector(y);
  const double mu = cfg.mu_central;
  if (!(m.p_tilde > 0.0)) fail(ErrorCode::InvalidArgument, "p_tilde must be positive", t);
  const double sl = std::sin(m.L);
  const double cl = std::cos(m.L);
  const double denom = 1.0 + m.p1 * sl + m.p2 * cl;
  if (!(denom > 0.0)) fail(ErrorCode::HyperbolicBranch, "1 + p1 sin L + p2 cos L <= 0", t);
  const double one_minus_e2 = 1.0 - m.p1 * m.p1 - m.p2 * m.p2;
  if (std::abs(one_minus_e2) < kEccentricitySingularityTolerance) {
    fail(ErrorCode::EccentricitySingularity, "p1^2 + p2^2 = 1, generalized semi-major axis undefined", t);
  }

  const double h_tilde = std::sqrt(m.p_tilde * mu);
  const double r = m.p_tilde / denom;
  const double X = r * cl;
  const double Y = r * sl;
  const EquinoctialBasis b = equinoctial_basis(m.q1, m.q2);
  const Vec3 pos = X * b.e_X + Y * b.e_Y;
  const double r_dot = mu / h_tilde * (m.p2 * sl - m.p1 * cl);

  const PerturbationEval pe = evaluate_perturbations(cfg, pos, t);
  const double U = pe.U;
  const double h2 = h_tilde * h_tilde - 2.0 * r * r * U;
  if (h2 <= 0.0) fail(ErrorCode::InconsistentPotential, "h_tilde^2 - 2 r^2 U <= 0", t);
  const double h = std::sqrt(h2);

  OrbitalFrame f;
  f.e_r = cl * b.e_X + sl * b.e_Y;
  f.e_f = -sl * b.e_X + cl * b.e_Y;
  f.e_h = b.e_Z;
  const ForceProjection fp = project_forces(pe.potential_accel + pe.P, pe.P, f);

  // Angular velocity of the equinoctial frame; tan(i/2) sin(omega + theta) = q2 sin L - q1 cos L.
  const double normal_rate = r / h * fp.F_h;
  const double w_X = normal_rate * cl;
  const double w_Y = normal_rate * sl;
  const double w_Z = -normal_rate * (m.q2 * sl - m.q1 * cl);
  const double E_dot = energy_rate(pe.dU_dt, r_dot, h, r, fp.P_r, fp.P_f);

  const double a_tilde = m.p_tilde / one_minus_e2;
  const double work = 2.0 * U - r * fp.F_r;
  const double spin = (h - h_tilde) / (r * r) - w_Z;
  const double q_scale = 0.5 * (1.0 + m.q1 * m.q1 + m.q2 * m.q2);

  Vec6 dy;
  dy[0] = 2.0 / mu * (r * r * E_dot + r * r_dot * work);
  dy[1] = m.p2 * spin + (X / a_tilde + 2.0 * m.p2) * work / h_tilde +
          (Y * (r + m.p_tilde) + r * r * m.p1) * E_dot / (h_tilde * h_tilde);
  dy[2] = -m.p1 * spin - (Y / a_tilde + 2.0 * m.p1) * work / h_tilde +
          (X * (r + m.p_tilde) + r * r * m.p2) * E_dot / (h_tilde * h_tilde);
  dy[3] = q_scale * w_Y;
  dy[4] = q_scale * w_X;
  dy[5] = h / (r * r) - w_Z;
  return dy;
}

// -----------------------------------------------------------------------------
// Integration

namespace detail {
using OdeState = std::array<double, 6>;

inline OdeState to_array(const Vec6& v) { return {v[0], v[1], v[2], v[3], v[4], v[5]}; }
inline Vec6 to_vec(const OdeState& a) {
  Vec6 v;
  v << a[0], a[1], a[2], a[3], a[4], a[5];
  return v;
}
}  // namespace detail

/// Adaptive Runge-Kutta-Fehlberg 7(8) with a mixed absolute/relative max-norm
/// error control. States are produced exactly at the output grid epochs by
/// shortening the step that would cross each one.
template <class Rhs>
Trajectory integrate(Rhs&& rhs, const Vec6& y0, double t0, double t1, const OdeSettings& settings,
                     CoordinateKind kind = CoordinateKind::Cartesian, Body center = Body::Earth) {
  using namespace boost::numeric::odeint;
  using detail::OdeState;
  settings.validate(t0, t1);
  const std::vector<double> grid = settings.output_grid.empty() ? std::vector<double>{t0, t1} : settings.output_grid;

  Trajectory traj;
  traj.kind = kind;
  traj.center = center;
  traj.epochs.reserve(grid.size());
  traj.states.reserve(grid.size());

  auto system = [&rhs](const OdeState& x, OdeState& dxdt, double t) {
    dxdt = detail::to_array(rhs(t, detail::to_vec(x)));
  };
  runge_kutta_fehlberg78<OdeState> stepper;

  double t = t0;
  OdeState y = detail::to_array(y0);
  double h = settings.h_init;
  std::size_t steps = 0;
  constexpr double kSafety = 0.9;
  constexpr double kGrowMax = 5.0;
  constexpr double kShrinkMin = 0.2;

  for (double target : grid) {
    while (t < target) {
      const double remaining = target - t;
      double h_try = std::min({h, settings.h_max, remaining});
      for (;;) {
        if (++steps > settings.max_steps) fail(ErrorCode::StepFailure, "step budget exhausted", t);
        const bool lands = h_try >= remaining;
        OdeState trial = y;
        OdeState err{};
        double ratio = 0.0;
        bool rhs_failed = false;
        try {
          stepper.do_step(system, trial, t, h_try, err);
          for (std::size_t i = 0; i < 6; ++i) {
            const double scale = settings.abs_tol + settings.rel_tol * std::max(std::abs(y[i]), std::abs(trial[i]));
            ratio = std::max(ratio, std::abs(err[i]) / scale);
          }
          if (!std::isfinite(ratio)) rhs_failed = true;
        } catch (const Error&) {
          // A trial stage can leave the domain of the dynamics when the step is
          // too large; shrink unless already at the floor.
          if (h_try * 0.25 < settings.h_min && !lands) throw;
          rhs_failed = true;
        }
        if (!rhs_failed && ratio <= 1.0) {
          y = trial;
          t = lands ? target : t + h_try;
          const double grow = ratio == 0.0 ? kGrowMax : std::clamp(kSafety * std::pow(ratio, -1.0 / 8.0), kShrinkMin, kGrowMax);
          const double h_next = std::min(h_try * grow, settings.h_max);
          h = lands ? std::max(h, h_next) : h_next;
          break;
        }
        const double shrink = rhs_failed ? 0.25 : std::clamp(kSafety * std::pow(ratio, -1.0 / 8.0), kShrinkMin, 1.0);
        h_try *= shrink;
        if (h_try < settings.h_min) {
          fail(ErrorCode::StepFailure, "step size fell below h_min at epoch " + std::to_string(t), t);
        }
        h = h_try;
      }
    }
    traj.epochs.push_back(target);
    traj.states.push_back(detail::to_vec(y));
  }
  return traj;
}

inline Trajectory propagate(CoordinateKind kind, const Vec6& ic, double t0, double t1, const DynamicsConfig& cfg,
                            const OdeSettings& settings) {
  cfg.validate();
  if (kind == CoordinateKind::Cartesian) {
    return integrate([&cfg](double t, const Vec6& y) { return cartesian_rhs(t, y, cfg); }, ic, t0, t1, settings,
                     kind, cfg.central);
  }
  return integrate([&cfg](double t, const Vec6& y) { return mgeqoe_rhs(t, y, cfg); }, ic, t0, t1, settings, kind,
                   cfg.central);
}

// -----------------------------------------------------------------------------
// Conversions and the M-GEqOE run pipeline

inline MGeqoeState to_elements(const CartesianState& s, double t, const DynamicsConfig& cfg) {
  return cart_to_mgeqoe(s, potential(cfg, s.r, t), cfg.mu_central);
}

inline CartesianState to_cartesian_state(const MGeqoeState& m, double t, const DynamicsConfig& cfg) {
  return mgeqoe_to_cart(m, cfg.mu_central, [&cfg](const Vec3& r, double tt) { return potential(cfg, r, tt); }, t);
}

inline Trajectory to_cartesian(const Trajectory& traj, const DynamicsConfig& cfg) {
  if (traj.kind == CoordinateKind::Cartesian) return traj;
  Trajectory out{CoordinateKind::Cartesian, traj.center, traj.epochs, {}};
  out.states.reserve(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out.states.push_back(to_cartesian_state(MGeqoeState::from_vector(traj.states[i]), traj.epochs[i], cfg).to_vector());
  }
  return out;
}

/// Element history of a Cartesian trajectory, L unwrapped along the sequence.
inline Trajectory to_mgeqoe(const Trajectory& traj, const DynamicsConfig& cfg) {
  if (traj.kind == CoordinateKind::MGeqoe) return traj;
  Trajectory out{CoordinateKind::MGeqoe, traj.center, traj.epochs, {}};
  out.states.reserve(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    Vec6 e = to_elements(CartesianState::from_vector(traj.states[i]), traj.epochs[i], cfg).to_vector();
    if (i > 0) e[5] = align_angle(e[5], out.states.back()[5]);
    out.states.push_back(e);
  }
  return out;
}

/// Copy of `cfg` with the potential offset fixed from a Cartesian trajectory.
inline DynamicsConfig with_offset_from(const DynamicsConfig& cfg, const Trajectory& cartesian,
                                       double margin = kDefaultOffsetMargin) {
  DynamicsConfig out = cfg;
  out.perturbations.u_offset = offset_for_trajectory(
      cartesian, [&cfg](const Vec3& r, double t) { return raw_potential(cfg, r, t); }, cfg.mu_central, margin);
  return out;
}

struct MGeqoeRun {
  Trajectory cartesian_prepass;
  DynamicsConfig config;  // offset fixed
  MGeqoeState initial;
  Trajectory elements;
};

/// Cartesian pre-pass on the output grid, offset, element initialization, then
/// M-GEqOE propagation.
inline MGeqoeRun run_mgeqoe_pipeline(const CartesianState& ic, double t0, double t1, const DynamicsConfig& cfg,
                                     const OdeSettings& settings, double margin = kDefaultOffsetMargin) {
  MGeqoeRun run;
  run.cartesian_prepass = propagate(CoordinateKind::Cartesian, ic.to_vector(), t0, t1, cfg, settings);
  run.config = with_offset_from(cfg, run.cartesian_prepass, margin);
  run.initial = to_elements(ic, t0, run.config);
  run.elements = propagate(CoordinateKind::MGeqoe, run.initial.to_vector(), t0, t1, run.config, settings);
  return run;
}

// -----------------------------------------------------------------------------
// Comparison

struct ErrorSeries {
  std::vector<double> epochs;
  std::vector<double> pos_err_km;
  std::vector<double> vel_err_kms;
};

inline ErrorSeries compare_cartesian(const Trajectory& a, const Trajectory& b, const CanonicalUnits& units) {
  if (a.kind != CoordinateKind::Cartesian || b.kind != CoordinateKind::Cartesian) {
    fail(ErrorCode::InvalidArgument, "comparison expects Cartesian trajectories");
  }
  if (a.center != b.center) fail(ErrorCode::GridMismatch, "trajectories have different centers");
  if (a.epochs != b.epochs) fail(ErrorCode::GridMismatch, "trajectories have different epoch grids");
  ErrorSeries e;
  e.epochs = a.epochs;
  e.pos_err_km.reserve(a.size());
  e.vel_err_kms.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Vec6 d = a.states[i] - b.states[i];
    e.pos_err_km.push_back(d.head<3>().norm() * units.l_star);
    e.vel_err_kms.push_back(d.tail<3>().norm() * units.v_star);
  }
  return e;
}

inline ErrorSeries compare_trajectories(const Trajectory& a, const Trajectory& b, const DynamicsConfig& cfg,
                                        const CanonicalUnits& units) {
  return compare_cartesian(to_cartesian(a, cfg), to_cartesian(b, cfg), units);
}

/// Index of the smallest-radius epoch of a Cartesian trajectory.
inline std::size_t periapsis_index(const Trajectory& cartesian) {
  if (cartesian.empty() || cartesian.kind != CoordinateKind::Cartesian) {
    fail(ErrorCode::InvalidArgument, "periapsis search needs a non-empty Cartesian trajectory");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < cartesian.size(); ++i) {
    if (cartesian.states[i].head<3>().norm() < cartesian.states[best].head<3>().norm()) best = i;
  }
  return best;
}

}  // namespace mgeqoe
