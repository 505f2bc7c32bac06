#pragma once

// Canonical units, body constants, state vectors and the frame conversions
// shared by the rest of the library. All quantities past the I/O boundary are
// in canonical (Earth-Moon CR3BP) units.

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "mgeqoe/error.hpp"

namespace mgeqoe {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kSecondsPerDay = 86400.0;
inline constexpr double kAstronomicalUnitKm = 149597870.7;

enum class Body { Earth, Moon, Sun };

constexpr std::string_view to_string(Body body) {
  switch (body) {
    case Body::Earth: return "earth";
    case Body::Moon: return "moon";
    case Body::Sun: return "sun";
  }
  return "?";
}

inline std::optional<Body> parse_body(std::string_view name) {
  if (name == "earth" || name == "Earth") return Body::Earth;
  if (name == "moon" || name == "Moon") return Body::Moon;
  if (name == "sun" || name == "Sun") return Body::Sun;
  return std::nullopt;
}

/// Characteristic quantities of the Earth-Moon system.
struct CanonicalUnits {
  double l_star;  // km
  double gm_sum;  // km^3/s^2
  double t_star;  // s
  double v_star;  // km/s
};

inline CanonicalUnits make_canonical_units(double l_star, double mu_earth, double mu_moon) {
  if (!(l_star > 0.0) || !(mu_earth > 0.0) || !(mu_moon > 0.0) || !std::isfinite(l_star) ||
      !std::isfinite(mu_earth) || !std::isfinite(mu_moon)) {
    fail(ErrorCode::InvalidArgument, "canonical units need positive finite l*, mu_earth, mu_moon");
  }
  CanonicalUnits u{};
  u.l_star = l_star;
  u.gm_sum = mu_earth + mu_moon;
  u.t_star = std::sqrt(l_star * l_star * l_star / u.gm_sum);
  u.v_star = l_star / u.t_star;
  return u;
}

/// Gravitational parameters (km^3/s^2) and the characteristic length (km).
/// One record so that a constants file can override any of them.
struct BodyConstants {
  double mu_earth = 398600.435507;
  double mu_moon = 4902.800118;
  double mu_sun = 1.32712440041e11;
  double l_star_km = 384400.0;

  double mu(Body body) const {
    switch (body) {
      case Body::Earth: return mu_earth;
      case Body::Moon: return mu_moon;
      case Body::Sun: return mu_sun;
    }
    fail(ErrorCode::UnknownBody, "no gravitational parameter for body");
  }

  void validate() const {
    for (double x : {mu_earth, mu_moon, mu_sun, l_star_km}) {
      if (!(x > 0.0) || !std::isfinite(x)) {
        fail(ErrorCode::InvalidArgument, "body constants must be positive and finite");
      }
    }
  }

  CanonicalUnits units() const { return make_canonical_units(l_star_km, mu_earth, mu_moon); }

  /// Gravitational parameter in canonical units.
  double mu_canonical(Body body) const { return mu(body) / (mu_earth + mu_moon); }
};

struct CartesianState {
  Vec3 r = Vec3::Zero();
  Vec3 v = Vec3::Zero();

  Vec6 to_vector() const {
    Vec6 y;
    y << r, v;
    return y;
  }
  static CartesianState from_vector(const Vec6& y) {
    return {y.head<3>(), y.tail<3>()};
  }
  bool finite() const { return r.allFinite() && v.allFinite(); }
};

inline CartesianState nondimensionalize(const CartesianState& dimensional, const CanonicalUnits& u) {
  return {dimensional.r / u.l_star, dimensional.v / u.v_star};
}

inline CartesianState dimensionalize(const CartesianState& canonical, const CanonicalUnits& u) {
  return {canonical.r * u.l_star, canonical.v * u.v_star};
}

/// Radial / transverse / normal triad of the osculating orbit.
struct OrbitalFrame {
  Vec3 e_r;
  Vec3 e_f;
  Vec3 e_h;
};

inline constexpr double kDegenerateAngularMomentum = 1e-14;

inline OrbitalFrame orbital_frame_basis(const CartesianState& s) {
  const double r = s.r.norm();
  if (!(r > 0.0)) fail(ErrorCode::DegenerateGeometry, "zero position vector");
  const Vec3 h = s.r.cross(s.v);
  const double hn = h.norm();
  if (!(hn > kDegenerateAngularMomentum * r * std::max(s.v.norm(), 1e-300))) {
    fail(ErrorCode::DegenerateGeometry, "rectilinear motion, angular momentum vanishes");
  }
  OrbitalFrame f;
  f.e_r = s.r / r;
  f.e_h = h / hn;
  f.e_f = f.e_h.cross(f.e_r);
  return f;
}

/// Instantaneous Earth-Moon rotating frame: x toward the Moon from the Earth,
/// z along the Earth-Moon orbital angular momentum. The origin is kept at the
/// origin of the input states.
struct RotatingFrame {
  Mat3 axes;    // columns are x, y, z expressed in the inertial frame
  Vec3 omega;   // inertial angular velocity of the frame
};

inline RotatingFrame earth_moon_rotating_frame(const CartesianState& earth, const CartesianState& moon) {
  const Vec3 d = moon.r - earth.r;
  const Vec3 dv = moon.v - earth.v;
  const double dn = d.norm();
  if (!(dn > 0.0)) fail(ErrorCode::DegenerateGeometry, "coincident primaries");
  const Vec3 h = d.cross(dv);
  const double hn = h.norm();
  if (!(hn > 0.0)) fail(ErrorCode::DegenerateGeometry, "primaries in rectilinear relative motion");
  RotatingFrame f;
  const Vec3 x = d / dn;
  const Vec3 z = h / hn;
  f.axes.col(0) = x;
  f.axes.col(1) = z.cross(x);
  f.axes.col(2) = z;
  f.omega = h / (dn * dn);
  return f;
}

inline CartesianState inertial_to_rotating(const CartesianState& state, const CartesianState& earth,
                                           const CartesianState& moon, double /*epoch*/) {
  const RotatingFrame f = earth_moon_rotating_frame(earth, moon);
  return {f.axes.transpose() * state.r, f.axes.transpose() * (state.v - f.omega.cross(state.r))};
}

inline CartesianState rotating_to_inertial(const CartesianState& state, const CartesianState& earth,
                                           const CartesianState& moon, double /*epoch*/) {
  const RotatingFrame f = earth_moon_rotating_frame(earth, moon);
  const Vec3 r = f.axes * state.r;
  return {r, f.axes * state.v + f.omega.cross(r)};
}

}  // namespace mgeqoe
