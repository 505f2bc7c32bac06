#pragma once

// Scenario files: dimensional inputs (km, km/s, days, seconds) converted to the
// canonical setup consumed by the propagators.

#include <cmath>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mgeqoe/ephemeris.hpp"
#include "mgeqoe/io.hpp"
#include "mgeqoe/propagation.hpp"
#include "mgeqoe/uncertainty.hpp"

namespace mgeqoe {

struct Scenario {
  std::string name;
  std::filesystem::path source;
  Body central = Body::Earth;
  BodyConstants constants;

  // Ephemeris
  std::string provider = "analytic";
  std::filesystem::path ephemeris_file;
  double moon_phase_deg = 0.0;
  double sun_phase_deg = 0.0;
  Vec3 moon_normal = Vec3::UnitZ();
  Vec3 sun_normal = Vec3::UnitZ();

  // Dynamics toggles
  bool third_body = true;
  bool sun = true;

  CartesianState initial_km;  // km, km/s, relative to the central body
  double epoch_days = 0.0;
  double span_days = 0.0;
  double grid_step_s = 0.0;  // 0 selects grid_points
  std::size_t grid_points = 1000;

  OdeSettings ode;
  double offset_margin = kDefaultOffsetMargin;
  std::vector<CoordinateKind> kinds{CoordinateKind::Cartesian, CoordinateKind::MGeqoe};

  std::optional<EnsembleSpec> ensemble;
  std::size_t hz_stride = 1;

  bool runs(CoordinateKind k) const {
    for (auto x : kinds) {
      if (x == k) return true;
    }
    return false;
  }
};

namespace detail {

inline std::filesystem::path resolve_relative(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base.parent_path() / path;
}

inline std::size_t count_value(const ConfigTable& t, const std::string& key, std::size_t fallback, double min = 1) {
  if (!t.has(key)) return fallback;
  const double v = t.number(key);
  if (!(v >= min) || v != std::floor(v) || v > 1e15) fail(ErrorCode::Config, "'" + key + "' must be an integer >= " + format_double(min));
  return static_cast<std::size_t>(v);
}

}  // namespace detail

inline Scenario parse_scenario(const ConfigTable& t, const std::filesystem::path& source) {
  Scenario s;
  s.source = source;
  s.name = t.string("name", source.stem().string());

  const std::string central = t.string("central", "earth");
  const auto body = parse_body(central);
  if (!body || *body == Body::Sun) fail(ErrorCode::Config, "central must be 'earth' or 'moon', got '" + central + "'");
  s.central = *body;
  if (t.has("constants")) s.constants = read_constants(detail::resolve_relative(source, t.string("constants")));

  s.provider = t.string("ephemeris.provider", "analytic");
  if (s.provider == "analytic") {
    s.moon_phase_deg = t.number("ephemeris.moon_phase_deg", 0.0);
    s.sun_phase_deg = t.number("ephemeris.sun_phase_deg", 0.0);
    if (t.has("ephemeris.moon_normal")) s.moon_normal = t.vec3("ephemeris.moon_normal");
    if (t.has("ephemeris.sun_normal")) s.sun_normal = t.vec3("ephemeris.sun_normal");
    if (!(s.moon_normal.norm() > 0.0) || !(s.sun_normal.norm() > 0.0)) fail(ErrorCode::Config, "orbit normals must be non-zero");
  } else if (s.provider == "tabulated") {
    s.ephemeris_file = detail::resolve_relative(source, t.string("ephemeris.file"));
    if (!std::filesystem::is_regular_file(s.ephemeris_file)) {
      fail(ErrorCode::Config, "ephemeris file '" + s.ephemeris_file.string() + "' does not exist");
    }
  } else {
    fail(ErrorCode::Config, "ephemeris.provider must be 'analytic' or 'tabulated'");
  }

  s.third_body = t.boolean("dynamics.third_body", true);
  s.sun = t.boolean("dynamics.sun", true);

  s.initial_km = {t.vec3("initial.r_km"), t.vec3("initial.v_kms")};
  if (!s.initial_km.finite()) fail(ErrorCode::Config, "initial state must be finite");
  s.epoch_days = t.number("initial.epoch_days", 0.0);

  s.span_days = t.number("span.days");
  if (!(s.span_days > 0.0) || !std::isfinite(s.span_days)) fail(ErrorCode::Config, "span.days must be positive");
  if (t.has("span.grid_step_s")) {
    s.grid_step_s = t.number("span.grid_step_s");
    if (!(s.grid_step_s > 0.0)) fail(ErrorCode::Config, "span.grid_step_s must be positive");
  }
  s.grid_points = detail::count_value(t, "span.grid_points", 1000, 2);

  s.ode.rel_tol = t.number("ode.rel_tol", s.ode.rel_tol);
  s.ode.abs_tol = t.number("ode.abs_tol", s.ode.abs_tol);
  s.ode.h_init = t.number("ode.h_init", s.ode.h_init);
  s.ode.h_min = t.number("ode.h_min", s.ode.h_min);
  s.ode.h_max = t.number("ode.h_max", s.ode.h_max);
  s.ode.max_steps = detail::count_value(t, "ode.max_steps", s.ode.max_steps);
  s.offset_margin = t.number("ode.offset_margin", s.offset_margin);
  if (!(s.offset_margin >= 0.0)) fail(ErrorCode::Config, "ode.offset_margin must be non-negative");

  if (t.has("run.kinds")) {
    s.kinds.clear();
    for (const auto& k : t.strings("run.kinds")) {
      const auto kind = parse_kind(k);
      if (!kind) fail(ErrorCode::Config, "unknown coordinate kind '" + k + "'");
      if (!s.runs(*kind)) s.kinds.push_back(*kind);
    }
    if (s.kinds.empty()) fail(ErrorCode::Config, "run.kinds is empty");
  }

  if (t.has("ensemble.n_samples")) {
    EnsembleSpec e;
    e.n_samples = detail::count_value(t, "ensemble.n_samples", e.n_samples, 2);
    e.sigma_pos_km = t.number("ensemble.sigma_pos_km", e.sigma_pos_km);
    e.sigma_vel_kms = t.number("ensemble.sigma_vel_kms", e.sigma_vel_kms);
    e.seed = detail::count_value(t, "ensemble.seed", e.seed, 0);
    try {
      e.validate();
    } catch (const Error& err) {
      fail(ErrorCode::Config, std::string("ensemble: ") + err.what());
    }
    s.ensemble = e;
    s.hz_stride = detail::count_value(t, "ensemble.hz_stride", 1);
  }

  for (const auto& [key, value] : t.values()) {
    static const char* known[] = {"name", "central", "constants", "ephemeris.", "dynamics.", "initial.",
                                  "span.", "ode.", "run.", "ensemble."};
    bool ok = false;
    for (const char* k : known) {
      const std::string prefix(k);
      ok = ok || (prefix.back() == '.' ? key.rfind(prefix, 0) == 0 : key == prefix);
    }
    if (!ok) fail(ErrorCode::Config, "unknown scenario key '" + key + "'");
  }
  return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  return parse_scenario(ConfigTable::load(path), path);
}

/// Canonical quantities derived from a scenario.
struct ScenarioSetup {
  CanonicalUnits units;
  DynamicsConfig config;  // offset not yet fixed
  CartesianState initial;
  double t0 = 0.0;
  double t1 = 0.0;
  OdeSettings settings;  // with the output grid
};

inline std::vector<double> scenario_grid(const Scenario& s, const CanonicalUnits& u, double t0, double t1) {
  if (s.grid_step_s <= 0.0) return uniform_grid(t0, t1, s.grid_points);
  const double step = s.grid_step_s / u.t_star;
  const double count = std::floor((t1 - t0) / step * (1.0 + 1e-12));
  if (count < 1.0) fail(ErrorCode::Config, "grid step exceeds the span");
  if (count > 1e7) fail(ErrorCode::Config, "grid step gives more than 1e7 epochs");
  std::vector<double> g;
  for (std::size_t k = 0; k <= static_cast<std::size_t>(count); ++k) g.push_back(t0 + static_cast<double>(k) * step);
  if (t1 - g.back() > 1e-9 * step) {
    g.push_back(t1);
  } else {
    g.back() = t1;
  }
  return g;
}

inline std::shared_ptr<const EphemerisProvider> make_ephemeris(const Scenario& s) {
  if (s.provider == "tabulated") {
    try {
      return std::make_shared<TabulatedEphemeris>(load_ephemeris_csv(s.ephemeris_file.string()));
    } catch (const Error& e) {
      fail(ErrorCode::Config, std::string("ephemeris: ") + e.what());
    }
  }
  const double deg = kPi / 180.0;
  return std::make_shared<AnalyticCircularEphemeris>(AnalyticCircularEphemeris::cislunar_default(
      s.constants, s.moon_phase_deg * deg, s.sun_phase_deg * deg, s.moon_normal, s.sun_normal));
}

inline ScenarioSetup build_setup(const Scenario& s) {
  ScenarioSetup st;
  st.units = s.constants.units();
  st.initial = nondimensionalize(s.initial_km, st.units);
  st.t0 = s.epoch_days * kSecondsPerDay / st.units.t_star;
  st.t1 = st.t0 + s.span_days * kSecondsPerDay / st.units.t_star;

  st.config = DynamicsConfig::keplerian(s.central, s.constants.mu_canonical(s.central));
  st.config.ephemeris = make_ephemeris(s);
  const PerturbationModel full = PerturbationModel::cislunar(s.central, s.constants);
  if (s.third_body) st.config.perturbations.potential_bodies = full.potential_bodies;
  if (s.sun) st.config.perturbations.force_bodies = full.force_bodies;

  const auto [lo, hi] = st.config.ephemeris->span();
  if (st.t0 < lo || st.t1 > hi) fail(ErrorCode::Config, "ephemeris does not cover the scenario span");
  if (!st.config.ephemeris->has(Body::Moon)) fail(ErrorCode::Config, "ephemeris must provide the Moon");
  try {
    st.config.validate();
  } catch (const Error& e) {
    fail(ErrorCode::Config, e.what());
  }

  st.settings = s.ode;
  st.settings.output_grid = scenario_grid(s, st.units, st.t0, st.t1);
  try {
    st.settings.validate(st.t0, st.t1);
  } catch (const Error& e) {
    fail(ErrorCode::Config, std::string("ode: ") + e.what());
  }
  return st;
}

}  // namespace mgeqoe
