#pragma once

// Command implementations behind the `mgeqoe` executable. Every command
// computes all of its outputs in memory first and writes them only on success,
// so a failed run leaves no partial files behind.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mgeqoe/io.hpp"
#include "mgeqoe/parallel.hpp"
#include "mgeqoe/propagation.hpp"
#include "mgeqoe/scenario.hpp"
#include "mgeqoe/uncertainty.hpp"

namespace mgeqoe {

/// Named file contents awaiting a single write pass.
class OutputSet {
 public:
  std::ostringstream& add(const std::string& name) {
    files_.emplace_back(name, std::make_unique<std::ostringstream>());
    return *files_.back().second;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& f : files_) out.push_back(f.first);
    return out;
  }

  std::string content(const std::string& name) const {
    for (const auto& f : files_) {
      if (f.first == name) return f.second->str();
    }
    fail(ErrorCode::InvalidArgument, "no output named '" + name + "'");
  }

  void write_to(const std::filesystem::path& dir) const {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorCode::Io, "cannot create '" + dir.string() + "': " + ec.message());
    for (const auto& [name, body] : files_) {
      auto out = open_output(dir / name);
      out << body->str();
      if (!out) fail(ErrorCode::Io, "write failed for '" + (dir / name).string() + "'");
    }
  }

 private:
  std::vector<std::pair<std::string, std::unique_ptr<std::ostringstream>>> files_;
};

namespace detail {

inline void put_row(std::ostream& out, std::initializer_list<double> values) {
  bool first = true;
  for (double v : values) {
    if (!first) out << ',';
    out << format_double(v);
    first = false;
  }
  out << '\n';
}

inline void put_trajectory(std::ostream& out, const Trajectory& traj) {
  out << "epoch,kind,x1,x2,x3,x4,x5,x6\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out << format_double(traj.epochs[i]) << ',' << to_string(traj.kind);
    for (int k = 0; k < 6; ++k) out << ',' << format_double(traj.states[i][k]);
    out << '\n';
  }
}

inline void put_key_values(std::ostream& out, const KeyValues& kv) {
  for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
}

inline KeyValues base_metadata(const Scenario& s, const ScenarioSetup& st, const DynamicsConfig& cfg) {
  return {{"center", std::string(to_string(cfg.central))},
          {"units", "canonical"},
          {"l_star_km", format_double(st.units.l_star)},
          {"t_star_s", format_double(st.units.t_star)},
          {"v_star_kms", format_double(st.units.v_star)},
          {"mu_central", format_double(cfg.mu_central)},
          {"u_offset", format_double(cfg.perturbations.u_offset)},
          {"scenario", std::filesystem::absolute(s.source).lexically_normal().string()},
          {"scenario_name", s.name}};
}

/// Dimensional views of a Cartesian trajectory: inertial about the central
/// body, and in the Earth-Moon rotating frame with the same origin.
inline void put_views(std::ostream& inertial, std::ostream& rotating, const Trajectory& cart,
                      const ScenarioSetup& st) {
  const char* header = "epoch_days,x_km,y_km,z_km,vx_kms,vy_kms,vz_kms\n";
  inertial << header;
  rotating << header;
  const auto& eph = *st.config.ephemeris;
  for (std::size_t i = 0; i < cart.size(); ++i) {
    const double t = cart.epochs[i];
    const double days = t * st.units.t_star / kSecondsPerDay;
    const CartesianState s = CartesianState::from_vector(cart.states[i]);
    const BodyState e = relative_state(eph, cart.center, Body::Earth, t);
    const BodyState m = relative_state(eph, cart.center, Body::Moon, t);
    const CartesianState rot = inertial_to_rotating(s, {e.r, e.v}, {m.r, m.v}, t);
    const CartesianState a = dimensionalize(s, st.units);
    const CartesianState b = dimensionalize(rot, st.units);
    put_row(inertial, {days, a.r.x(), a.r.y(), a.r.z(), a.v.x(), a.v.y(), a.v.z()});
    put_row(rotating, {days, b.r.x(), b.r.y(), b.r.z(), b.v.x(), b.v.y(), b.v.z()});
  }
}

inline void put_element_history(std::ostream& out, const Trajectory& elements, const CanonicalUnits& u) {
  out << "epoch_days,p_tilde_km,p1,p2,q1,q2,L_rad\n";
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const Vec6& e = elements.states[i];
    put_row(out, {elements.epochs[i] * u.t_star / kSecondsPerDay, e[0] * u.l_star, e[1], e[2], e[3], e[4], e[5]});
  }
}

inline void put_errors(std::ostream& out, const ErrorSeries& e) {
  out << "epoch,pos_err_km,vel_err_kms\n";
  for (std::size_t i = 0; i < e.epochs.size(); ++i) put_row(out, {e.epochs[i], e.pos_err_km[i], e.vel_err_kms[i]});
}

}  // namespace detail

// -----------------------------------------------------------------------------
// propagate

struct PropagateResult {
  ScenarioSetup setup;
  DynamicsConfig config;  // offset fixed
  Trajectory cartesian;   // Cartesian run (also the pre-pass)
  std::optional<Trajectory> elements;
  std::optional<ErrorSeries> errors;
  OutputSet files;
};

/// Cartesian pre-pass, offset, element initialization and the requested runs.
inline PropagateResult propagate_scenario(const Scenario& s) {
  PropagateResult r;
  r.setup = build_setup(s);
  const ScenarioSetup& st = r.setup;
  r.cartesian = propagate(CoordinateKind::Cartesian, st.initial.to_vector(), st.t0, st.t1, st.config, st.settings);
  r.config = with_offset_from(st.config, r.cartesian, s.offset_margin);
  if (s.runs(CoordinateKind::MGeqoe)) {
    const MGeqoeState m0 = to_elements(st.initial, st.t0, r.config);
    r.elements = propagate(CoordinateKind::MGeqoe, m0.to_vector(), st.t0, st.t1, r.config, st.settings);
  }

  const KeyValues meta = detail::base_metadata(s, st, r.config);
  auto emit = [&](const Trajectory& traj) {
    const std::string kind(to_string(traj.kind));
    detail::put_trajectory(r.files.add("trajectory_" + kind + ".csv"), traj);
    KeyValues kv = meta;
    kv["kind"] = kind;
    detail::put_key_values(r.files.add("trajectory_" + kind + ".meta"), kv);
  };
  auto views = [&](const Trajectory& cart, const std::string& kind) {
    auto& inertial = r.files.add("inertial_" + kind + ".csv");
    detail::put_views(inertial, r.files.add("rotating_" + kind + ".csv"), cart, st);
  };

  if (s.runs(CoordinateKind::Cartesian)) {
    emit(r.cartesian);
    views(r.cartesian, "cartesian");
  }
  if (r.elements) {
    emit(*r.elements);
    const Trajectory mapped = to_cartesian(*r.elements, r.config);
    views(mapped, "mgeqoe");
    detail::put_element_history(r.files.add("elements.csv"), *r.elements, st.units);
    if (s.runs(CoordinateKind::Cartesian)) {
      r.errors = compare_cartesian(mapped, r.cartesian, st.units);
      detail::put_errors(r.files.add("errors.csv"), *r.errors);
    }
  } else {
    detail::put_element_history(r.files.add("elements.csv"), to_mgeqoe(r.cartesian, r.config), st.units);
  }
  return r;
}

// -----------------------------------------------------------------------------
// compare

/// Loads a trajectory written by `propagate` and maps it to Cartesian form.
/// Element trajectories need the scenario and offset recorded in the sidecar.
inline std::pair<Trajectory, CanonicalUnits> load_cartesian_view(const std::filesystem::path& csv) {
  Trajectory traj = read_trajectory_csv(csv);
  const auto meta_path = sidecar_path(csv);
  KeyValues meta;
  if (std::filesystem::exists(meta_path)) meta = read_key_values(meta_path);
  CanonicalUnits units = BodyConstants{}.units();
  if (meta.count("l_star_km") && meta.count("t_star_s") && meta.count("v_star_kms")) {
    units.l_star = parse_double(meta["l_star_km"], meta_path.string());
    units.t_star = parse_double(meta["t_star_s"], meta_path.string());
    units.v_star = parse_double(meta["v_star_kms"], meta_path.string());
  }
  if (traj.kind == CoordinateKind::Cartesian) return {traj, units};

  if (!meta.count("scenario") || !meta.count("u_offset")) {
    fail(ErrorCode::Config, "'" + csv.string() + "' holds elements; its sidecar must name the scenario and offset");
  }
  const Scenario s = load_scenario(meta["scenario"]);
  ScenarioSetup st = build_setup(s);
  if (st.config.central != traj.center) fail(ErrorCode::Config, "scenario central body differs from the trajectory");
  st.config.perturbations.u_offset = parse_double(meta["u_offset"], meta_path.string());
  return {to_cartesian(traj, st.config), st.units};
}

inline ErrorSeries compare_files(const std::filesystem::path& a, const std::filesystem::path& b) {
  const auto [ta, ua] = load_cartesian_view(a);
  const auto [tb, ub] = load_cartesian_view(b);
  if (ua.l_star != ub.l_star || ua.v_star != ub.v_star) fail(ErrorCode::GridMismatch, "trajectories use different units");
  return compare_cartesian(ta, tb, ua);
}

inline void write_error_series(const std::filesystem::path& path, const ErrorSeries& e) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ostringstream ss;
  detail::put_errors(ss, e);
  auto out = open_output(path);
  out << ss.str();
}

// -----------------------------------------------------------------------------
// Monte Carlo

struct McOptions {
  double alpha = kDefaultAlpha;
  std::vector<double> epochs_days;  // relative to the scenario epoch
  std::size_t hz_stride = 0;        // 0 uses the scenario value
  std::size_t workers = 0;          // 0 uses hardware concurrency
};

struct McResult {
  ScenarioSetup setup;
  DynamicsConfig config;
  std::size_t periapsis = 0;
  std::vector<std::size_t> snapshots;  // grid indices
  std::vector<Ensemble> ensembles;
  std::vector<HzSeries> hz;
  OutputSet files;
};

inline std::size_t nearest_index(const std::vector<double>& grid, double t) {
  const auto it = std::lower_bound(grid.begin(), grid.end(), t);
  if (it == grid.begin()) return 0;
  if (it == grid.end()) return grid.size() - 1;
  const std::size_t k = static_cast<std::size_t>(it - grid.begin());
  return (t - grid[k - 1] <= grid[k] - t) ? k - 1 : k;
}

inline McResult montecarlo_scenario(const Scenario& s, const McOptions& opt) {
  if (!s.ensemble) fail(ErrorCode::Config, "scenario has no [ensemble] section");
  if (!(opt.alpha > 0.0 && opt.alpha < 1.0)) fail(ErrorCode::Config, "alpha must lie in (0, 1)");
  McResult r;
  r.setup = build_setup(s);
  const ScenarioSetup& st = r.setup;
  const EnsembleSpec& spec = *s.ensemble;
  const std::size_t workers = resolve_workers(opt.workers);
  const std::vector<double>& grid = st.settings.output_grid;

  const Trajectory nominal = propagate(CoordinateKind::Cartesian, st.initial.to_vector(), st.t0, st.t1, st.config, st.settings);
  r.config = with_offset_from(st.config, nominal, s.offset_margin);
  r.periapsis = periapsis_index(nominal);

  r.snapshots = {0, r.periapsis};
  for (double d : opt.epochs_days) {
    const double t = st.t0 + d * kSecondsPerDay / st.units.t_star;
    if (t < st.t0 - 1e-12 || t > st.t1 + 1e-12) fail(ErrorCode::Config, "requested epoch " + format_double(d) + " days is outside the span");
    r.snapshots.push_back(nearest_index(grid, t));
  }
  std::sort(r.snapshots.begin(), r.snapshots.end());
  r.snapshots.erase(std::unique(r.snapshots.begin(), r.snapshots.end()), r.snapshots.end());

  const std::size_t stride = opt.hz_stride > 0 ? opt.hz_stride : s.hz_stride;
  std::vector<std::size_t> hz_indices;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i % stride == 0 || i + 1 == grid.size() || std::binary_search(r.snapshots.begin(), r.snapshots.end(), i)) {
      hz_indices.push_back(i);
    }
  }

  const auto samples = sample_initial_ensemble(st.initial, spec, st.units);
  for (CoordinateKind kind : s.kinds) {
    r.ensembles.push_back(propagate_ensemble(samples, kind, r.config, st.settings, st.t0, st.t1, workers));
    r.hz.push_back(hz_series(r.ensembles.back(), opt.alpha, workers, 0, hz_indices));
  }

  KeyValues meta = detail::base_metadata(s, st, r.config);
  meta["seed"] = std::to_string(spec.seed);
  meta["n_samples"] = std::to_string(spec.n_samples);
  meta["sigma_pos_km"] = format_double(spec.sigma_pos_km);
  meta["sigma_vel_kms"] = format_double(spec.sigma_vel_kms);
  meta["alpha"] = format_double(opt.alpha);
  meta["periapsis_index"] = std::to_string(r.periapsis);

  for (std::size_t k = 0; k < s.kinds.size(); ++k) {
    const std::string kind(to_string(s.kinds[k]));
    const Ensemble& ens = r.ensembles[k];

    auto& hz = r.files.add("hz_" + kind + ".csv");
    hz << "epoch,hz,p_value,reject,beta\n";
    for (std::size_t i = 0; i < r.hz[k].epochs.size(); ++i) {
      const HzTestResult& h = r.hz[k].results[i];
      hz << format_double(r.hz[k].epochs[i]) << ',' << format_double(h.hz) << ',' << format_double(h.p_value) << ','
         << (h.reject ? 1 : 0) << ',' << format_double(h.beta) << '\n';
    }

    auto& snap = r.files.add("ensemble_" + kind + ".csv");
    snap << "sample_id,epoch,x1,x2,x3,x4,x5,x6\n";
    for (std::size_t idx : r.snapshots) {
      const Matrix& m = ens.samples[idx];
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        snap << i << ',' << format_double(ens.epochs[idx]);
        for (int c = 0; c < 6; ++c) snap << ',' << format_double(m(i, c));
        snap << '\n';
      }
    }
    KeyValues kv = meta;
    kv["kind"] = kind;
    detail::put_key_values(r.files.add("ensemble_" + kind + ".meta"), kv);

    for (std::size_t idx : r.snapshots) {
      char tag[32];
      std::snprintf(tag, sizeof tag, "%06zu", idx);
      const Matrix& m = ens.samples[idx];
      auto& pairs = r.files.add("pairs_" + kind + "_" + tag + ".csv");
      pairs << "sample_id,x1,x2,x3,x4,x5,x6\n";
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        pairs << i;
        for (int c = 0; c < 6; ++c) pairs << ',' << format_double(m(i, c));
        pairs << '\n';
      }
      auto& eig = r.files.add("eigen_" + kind + "_" + tag + ".csv");
      eig << "sample_id,lambda_1,lambda_2,lambda_3,lambda_4,lambda_5,lambda_6\n";
      const Matrix proj = eigenspace_projection(m);
      for (Eigen::Index i = 0; i < proj.rows(); ++i) {
        eig << i;
        for (int c = 0; c < 6; ++c) eig << ',' << format_double(proj(i, c));
        eig << '\n';
      }
    }
  }

  auto& index = r.files.add("snapshots.csv");
  index << "grid_index,epoch,epoch_days,label\n";
  for (std::size_t idx : r.snapshots) {
    const char* label = idx == r.periapsis ? "periapsis" : (idx == 0 ? "initial" : "requested");
    index << idx << ',' << format_double(grid[idx]) << ',' << format_double(grid[idx] * st.units.t_star / kSecondsPerDay)
          << ',' << label << '\n';
  }
  return r;
}

}  // namespace mgeqoe
