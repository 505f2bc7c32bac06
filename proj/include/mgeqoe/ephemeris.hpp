#pragma once

// Perturbing-body ephemerides. Providers report geocentric states in canonical
// units; `relative_state` and `recenter` express them about any body.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mgeqoe/core.hpp"

namespace mgeqoe {

struct BodyState {
  Vec3 r = Vec3::Zero();
  Vec3 v = Vec3::Zero();
};

class EphemerisProvider {
 public:
  virtual ~EphemerisProvider() = default;

  /// Geocentric state of `body`; the Earth itself is always at the origin.
  virtual BodyState state_of(Body body, double epoch) const = 0;
  virtual bool has(Body body) const = 0;
  virtual std::pair<double, double> span() const = 0;
};

inline BodyState relative_state(const EphemerisProvider& eph, Body center, Body body, double epoch) {
  const BodyState b = eph.state_of(body, epoch);
  const BodyState c = eph.state_of(center, epoch);
  return {b.r - c.r, b.v - c.v};
}

/// Re-express a state known relative to `from` as a state relative to `to`.
inline BodyState recenter(const EphemerisProvider& eph, Body from, Body to, const BodyState& s, double epoch) {
  const BodyState offset = relative_state(eph, to, from, epoch);
  return {s.r + offset.r, s.v + offset.v};
}

// -----------------------------------------------------------------------------
// Analytic circular orbits

struct CircularOrbit {
  double radius = 1.0;
  double rate = 1.0;
  double phase = 0.0;
  Vec3 normal = Vec3::UnitZ();
};

class AnalyticCircularEphemeris final : public EphemerisProvider {
 public:
  explicit AnalyticCircularEphemeris(std::map<Body, CircularOrbit> orbits) : orbits_(std::move(orbits)) {
    for (auto& [body, o] : orbits_) {
      if (body == Body::Earth) fail(ErrorCode::InvalidArgument, "the Earth is the ephemeris origin");
      if (!(o.radius > 0.0) || !std::isfinite(o.rate)) fail(ErrorCode::InvalidArgument, "bad circular orbit parameters");
      const double n = o.normal.norm();
      if (!(n > 0.0)) fail(ErrorCode::InvalidArgument, "orbit normal must be non-zero");
      o.normal /= n;
      Basis b;
      const Vec3 node = Vec3::UnitZ().cross(o.normal);
      b.u = node.norm() > 1e-12 ? Vec3(node.normalized()) : Vec3(Vec3::UnitX());
      b.w = o.normal.cross(b.u);
      bases_[body] = b;
    }
  }

  /// Moon on the unit circle at unit rate; Sun at 1 AU with the Keplerian rate
  /// implied by the constant set. Both in the reference xy-plane unless
  /// normals are given.
  static AnalyticCircularEphemeris cislunar_default(const BodyConstants& c, double moon_phase = 0.0,
                                                    double sun_phase = 0.0, Vec3 moon_normal = Vec3::UnitZ(),
                                                    Vec3 sun_normal = Vec3::UnitZ()) {
    const double r_sun = kAstronomicalUnitKm / c.l_star_km;
    const double mu_sun = c.mu_canonical(Body::Sun);
    std::map<Body, CircularOrbit> orbits;
    orbits[Body::Moon] = {1.0, 1.0, moon_phase, moon_normal};
    orbits[Body::Sun] = {r_sun, std::sqrt((mu_sun + 1.0) / (r_sun * r_sun * r_sun)), sun_phase, sun_normal};
    return AnalyticCircularEphemeris(std::move(orbits));
  }

  BodyState state_of(Body body, double epoch) const override {
    if (body == Body::Earth) return {};
    const auto it = orbits_.find(body);
    if (it == orbits_.end()) fail(ErrorCode::UnknownBody, std::string(to_string(body)) + " not in analytic ephemeris");
    const CircularOrbit& o = it->second;
    const Basis& b = bases_.at(body);
    const double angle = o.rate * epoch + o.phase;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {o.radius * (c * b.u + s * b.w), o.radius * o.rate * (-s * b.u + c * b.w)};
  }

  bool has(Body body) const override { return body == Body::Earth || orbits_.count(body) > 0; }

  std::pair<double, double> span() const override {
    return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  }

  const std::map<Body, CircularOrbit>& orbits() const { return orbits_; }

 private:
  struct Basis {
    Vec3 u, w;
  };
  std::map<Body, CircularOrbit> orbits_;
  std::map<Body, Basis> bases_;
};

inline BodyState analytic_state(const AnalyticCircularEphemeris& eph, Body body, double epoch) {
  return eph.state_of(body, epoch);
}

// -----------------------------------------------------------------------------
// Tabulated states, cubic Hermite interpolation

struct EphemerisSamples {
  std::vector<double> epochs;
  std::vector<BodyState> states;
};

class TabulatedEphemeris final : public EphemerisProvider {
 public:
  explicit TabulatedEphemeris(std::map<Body, EphemerisSamples> table) : table_(std::move(table)) {
    if (table_.empty()) fail(ErrorCode::InvalidArgument, "empty ephemeris table");
    for (const auto& [body, samples] : table_) {
      if (body == Body::Earth) fail(ErrorCode::InvalidArgument, "the Earth is the ephemeris origin");
      if (samples.epochs.size() < 2 || samples.epochs.size() != samples.states.size()) {
        fail(ErrorCode::InvalidArgument, "tabulated body needs at least two samples");
      }
      for (std::size_t i = 1; i < samples.epochs.size(); ++i) {
        if (!(samples.epochs[i] > samples.epochs[i - 1])) {
          fail(ErrorCode::InvalidArgument, "ephemeris epochs must be strictly increasing per body");
        }
      }
    }
  }

  BodyState state_of(Body body, double epoch) const override {
    if (body == Body::Earth) return {};
    const auto it = table_.find(body);
    if (it == table_.end()) fail(ErrorCode::UnknownBody, std::string(to_string(body)) + " not in ephemeris table");
    const EphemerisSamples& s = it->second;
    if (!(epoch >= s.epochs.front() && epoch <= s.epochs.back())) {
      fail(ErrorCode::OutOfRange, "epoch outside tabulated ephemeris span", epoch);
    }
    auto upper = std::upper_bound(s.epochs.begin(), s.epochs.end(), epoch);
    std::size_t k = static_cast<std::size_t>(upper - s.epochs.begin());
    if (k == s.epochs.size()) k -= 1;
    const std::size_t i = k - 1;
    if (epoch == s.epochs[i]) return s.states[i];
    if (epoch == s.epochs[k]) return s.states[k];

    const double dt = s.epochs[k] - s.epochs[i];
    const double u = (epoch - s.epochs[i]) / dt;
    const double u2 = u * u;
    const double u3 = u2 * u;
    const double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u, h01 = -2 * u3 + 3 * u2, h11 = u3 - u2;
    const double d00 = 6 * u2 - 6 * u, d10 = 3 * u2 - 4 * u + 1, d01 = -6 * u2 + 6 * u, d11 = 3 * u2 - 2 * u;
    const BodyState& a = s.states[i];
    const BodyState& b = s.states[k];
    BodyState out;
    out.r = h00 * a.r + h10 * dt * a.v + h01 * b.r + h11 * dt * b.v;
    out.v = (d00 * a.r + d01 * b.r) / dt + d10 * a.v + d11 * b.v;
    return out;
  }

  bool has(Body body) const override { return body == Body::Earth || table_.count(body) > 0; }

  std::pair<double, double> span() const override {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (const auto& [body, s] : table_) {
      lo = std::max(lo, s.epochs.front());
      hi = std::min(hi, s.epochs.back());
    }
    return {lo, hi};
  }

  const std::map<Body, EphemerisSamples>& table() const { return table_; }

 private:
  std::map<Body, EphemerisSamples> table_;
};

inline BodyState tabulated_state(const TabulatedEphemeris& table, Body body, double epoch) {
  return table.state_of(body, epoch);
}

inline constexpr const char* kEphemerisCsvHeader = "body,epoch,rx,ry,rz,vx,vy,vz";

/// Reads the `body,epoch,rx,ry,rz,vx,vy,vz` format (canonical units, geocentric).
inline TabulatedEphemeris read_ephemeris_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::Io, "ephemeris file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kEphemerisCsvHeader) fail(ErrorCode::Io, "ephemeris header must be '" + std::string(kEphemerisCsvHeader) + "'");
  std::map<Body, EphemerisSamples> table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 8) fail(ErrorCode::Io, "ephemeris line " + std::to_string(line_no) + ": expected 8 fields");
    const auto body = parse_body(fields[0]);
    if (!body) fail(ErrorCode::Io, "ephemeris line " + std::to_string(line_no) + ": unknown body '" + fields[0] + "'");
    double x[7];
    try {
      for (int j = 0; j < 7; ++j) x[j] = std::stod(fields[j + 1]);
    } catch (const std::exception&) {
      fail(ErrorCode::Io, "ephemeris line " + std::to_string(line_no) + ": bad number");
    }
    auto& s = table[*body];
    s.epochs.push_back(x[0]);
    s.states.push_back({Vec3(x[1], x[2], x[3]), Vec3(x[4], x[5], x[6])});
  }
  return TabulatedEphemeris(std::move(table));
}

inline TabulatedEphemeris load_ephemeris_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open ephemeris file '" + path + "'");
  return read_ephemeris_csv(in);
}

}  // namespace mgeqoe
