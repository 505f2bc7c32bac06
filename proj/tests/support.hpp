#pragma once

// Independent oracles for the tests: textbook two-body relations written from
// classical elements, with no code shared with the library transforms.

#include <cmath>
#include <memory>
#include <cstdint>
#include <random>
#include <vector>

#include "mgeqoe/mgeqoe.hpp"

namespace mgeqoe::test {

struct Classical {
  double a, e, i, raan, argp, nu;
};

inline Mat3 rot_z(double a) {
  Mat3 m;
  m << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return m;
}

inline Mat3 rot_x(double a) {
  Mat3 m;
  m << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return m;
}

/// Perifocal state rotated by R3(raan) R1(i) R3(argp).
inline CartesianState classical_to_cartesian(const Classical& c, double mu) {
  const double p = c.a * (1.0 - c.e * c.e);
  const double r = p / (1.0 + c.e * std::cos(c.nu));
  const Vec3 r_pf(r * std::cos(c.nu), r * std::sin(c.nu), 0.0);
  const Vec3 v_pf = std::sqrt(mu / p) * Vec3(-std::sin(c.nu), c.e + std::cos(c.nu), 0.0);
  const Mat3 R = rot_z(c.raan) * rot_x(c.i) * rot_z(c.argp);
  return {R * r_pf, R * v_pf};
}

inline double mean_from_true(double nu, double e) {
  const double E = 2.0 * std::atan(std::sqrt((1.0 - e) / (1.0 + e)) * std::tan(nu / 2.0));
  return E - e * std::sin(E);
}

inline double true_from_mean(double M, double e) {
  double E = e < 0.8 ? M : kPi;
  for (int k = 0; k < 100; ++k) {
    const double dE = (E - e * std::sin(E) - M) / (1.0 - e * std::cos(E));
    E -= dE;
    if (std::abs(dE) < 1e-15) break;
  }
  return 2.0 * std::atan2(std::sqrt(1.0 + e) * std::sin(E / 2.0), std::sqrt(1.0 - e) * std::cos(E / 2.0));
}

/// Two-body state after dt by advancing the mean anomaly.
inline CartesianState kepler_at(Classical c, double mu, double dt) {
  const double n = std::sqrt(mu / (c.a * c.a * c.a));
  c.nu = true_from_mean(mean_from_true(c.nu, c.e) + n * dt, c.e);
  return classical_to_cartesian(c, mu);
}

inline double period(double a, double mu) { return kTwoPi * std::sqrt(a * a * a / mu); }

/// Random bounded elliptic orbit; inclination stays away from 180 deg.
inline Classical random_classical(std::mt19937_64& rng, double a_min, double a_max, double e_max = 0.9) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return {a_min + (a_max - a_min) * u(rng), e_max * u(rng), 3.0 * u(rng), kTwoPi * u(rng), kTwoPi * u(rng),
          kTwoPi * u(rng)};
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline double rel_err(const Vec6& a, const Vec6& b) { return (a - b).norm() / b.norm(); }

/// Moon-centred cislunar dynamics with the analytic ephemeris.
inline DynamicsConfig cislunar_config(Body central, double moon_phase = 0.0, double sun_phase = 1.0,
                                      const BodyConstants& c = {}) {
  DynamicsConfig cfg = DynamicsConfig::keplerian(central, c.mu_canonical(central));
  cfg.perturbations = PerturbationModel::cislunar(central, c);
  cfg.ephemeris = std::make_shared<AnalyticCircularEphemeris>(AnalyticCircularEphemeris::cislunar_default(c, moon_phase, sun_phase));
  return cfg;
}

// -----------------------------------------------------------------------------
// Finite-difference audits

/// Richardson-extrapolated central difference of f at 0.
template <class F>
double central_difference(F&& f, double h) {
  const double d1 = (f(h) - f(-h)) / (2 * h);
  const double d2 = (f(h / 2) - f(-h / 2)) / h;
  return (4 * d2 - d1) / 3;
}

struct Geometry {
  Vec3 r, r_cp, v_cp;
  double mu;
};

/// Object within a few tenths of the origin, perturber at 0.5..2.5, never
/// closer to the object than a fifth of its own distance.
inline Geometry random_geometry(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Geometry g;
  g.r_cp = Vec3(n(rng), n(rng), n(rng)).normalized() * (0.5 + 2.0 * u(rng));
  g.v_cp = Vec3(n(rng), n(rng), n(rng));
  do {
    g.r = Vec3(n(rng), n(rng), n(rng)) * 0.3;
  } while ((g.r - g.r_cp).norm() < 0.2 * g.r_cp.norm());
  g.mu = 0.001 + u(rng);
  return g;
}

/// Worst relative error of the third-body acceleration against -grad U.
inline double gradient_audit(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int k = 0; k < count; ++k) {
    const Geometry g = random_geometry(rng);
    Vec3 grad;
    for (int j = 0; j < 3; ++j) {
      grad[j] = central_difference([&](double h) { return third_body_potential(g.r + h * Vec3::Unit(j), g.r_cp, g.mu); }, 1e-4);
    }
    const Vec3 a = third_body_acceleration(g.r, g.r_cp, g.mu);
    worst = std::max(worst, (a + grad).norm() / a.norm());
  }
  return worst;
}

/// Worst relative error of dU/dt for a perturber moving through r_cp with v_cp.
/// The denominator is floored at 1e-3 mu_P where the rate crosses zero.
inline double time_partial_audit(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int k = 0; k < count; ++k) {
    const Geometry g = random_geometry(rng);
    const double fd = central_difference([&](double t) { return third_body_potential(g.r, g.r_cp + t * g.v_cp, g.mu); }, 1e-4);
    const double an = potential_time_partial(g.r, g.r_cp, g.v_cp, g.mu);
    worst = std::max(worst, std::abs(an - fd) / std::max(std::abs(an), 1e-3 * g.mu));
  }
  return worst;
}

/// Compares mgeqoe_rhs with finite differences of the element transform along
/// the Cartesian flow, at every epoch of `cart`. Returns the worst relative
/// error per channel, each floored at 1e-3 of that channel's peak rate so that
/// zero crossings do not dominate.
inline Vec6 chain_rule_audit(const Trajectory& cart, const DynamicsConfig& cfg) {
  auto flow = [&](double t, const Vec6& x, double dt) {
    Vec6 y = x;
    const int n = 8;
    const double h = dt / n;
    for (int k = 0; k < n; ++k) {
      const double tt = t + k * h;
      const Vec6 k1 = cartesian_rhs(tt, y, cfg);
      const Vec6 k2 = cartesian_rhs(tt + h / 2, y + h / 2 * k1, cfg);
      const Vec6 k3 = cartesian_rhs(tt + h / 2, y + h / 2 * k2, cfg);
      const Vec6 k4 = cartesian_rhs(tt + h, y + h * k3, cfg);
      y += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return to_elements(CartesianState::from_vector(y), t + dt, cfg).to_vector();
  };
  std::vector<Vec6> fd, an;
  for (std::size_t i = 0; i < cart.size(); ++i) {
    const double t = cart.epochs[i];
    const Vec6& x = cart.states[i];
    const Vec6 e0 = to_elements(CartesianState::from_vector(x), t, cfg).to_vector();
    auto E = [&](double dt) {
      Vec6 e = flow(t, x, dt);
      e[5] = align_angle(e[5], e0[5]);
      return e;
    };
    const double d = 1e-4;
    const Vec6 D1 = (E(d) - E(-d)) / (2 * d);
    const Vec6 D2 = (E(d / 2) - E(-d / 2)) / d;
    fd.push_back((4 * D2 - D1) / 3);
    an.push_back(mgeqoe_rhs(t, e0, cfg));
  }
  Vec6 worst = Vec6::Zero();
  for (int k = 0; k < 6; ++k) {
    double peak = 0.0;
    for (const auto& a : an) peak = std::max(peak, std::abs(a[k]));
    for (std::size_t i = 0; i < an.size(); ++i) {
      worst[k] = std::max(worst[k], std::abs(fd[i][k] - an[i][k]) / std::max(std::abs(an[i][k]), 1e-3 * peak));
    }
  }
  return worst;
}

/// Apolune of the bundled 40000 x 4000 km polar lunar orbit, canonical units.
inline CartesianState lunar_apolune(const BodyConstants& c = {}) {
  return nondimensionalize({{40000.0, 0.0, 0.0}, {0.0, 0.0, 0.1492831372989535}}, c.units());
}

}  // namespace mgeqoe::test
