#pragma once

// Monte Carlo ensembles, sample statistics, the Henze-Zirkler multivariate
// normality test and covariance-eigenspace projections.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mgeqoe/core.hpp"
#include "mgeqoe/elements.hpp"
#include "mgeqoe/parallel.hpp"
#include "mgeqoe/propagation.hpp"

namespace mgeqoe {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct EnsembleSpec {
  std::size_t n_samples = 10000;
  double sigma_pos_km = 1.0;
  double sigma_vel_kms = 1e-5;
  std::uint64_t seed = 1;

  void validate() const {
    if (n_samples < 2) fail(ErrorCode::InvalidArgument, "ensemble needs at least two samples");
    if (!(sigma_pos_km > 0.0) || !(sigma_vel_kms > 0.0)) fail(ErrorCode::InvalidArgument, "sigmas must be positive");
  }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent generator for one sample, keyed on (seed, sample id) only.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(splitmix64(id)), static_cast<std::uint32_t>(splitmix64(id) >> 32)};
  return std::mt19937_64(seq);
}

/// Standard-normal draws, `rows` x `cols`, one substream per row.
inline Matrix standard_normal_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Matrix X(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    auto gen = substream(seed, i);
    std::normal_distribution<double> nd;
    for (std::size_t j = 0; j < cols; ++j) X(i, j) = nd(gen);
  }
  return X;
}

/// Gaussian cloud about `mean` (canonical) with diagonal covariance given
/// dimensionally by the spec.
inline std::vector<CartesianState> sample_initial_ensemble(const CartesianState& mean, const EnsembleSpec& spec,
                                                           const CanonicalUnits& units) {
  spec.validate();
  const double sp = spec.sigma_pos_km / units.l_star;
  const double sv = spec.sigma_vel_kms / units.v_star;
  const Matrix z = standard_normal_matrix(spec.n_samples, 6, spec.seed);
  std::vector<CartesianState> out(spec.n_samples);
  for (std::size_t i = 0; i < spec.n_samples; ++i) {
    out[i].r = mean.r + sp * Vec3(z(i, 0), z(i, 1), z(i, 2));
    out[i].v = mean.v + sv * Vec3(z(i, 3), z(i, 4), z(i, 5));
  }
  return out;
}

/// Per-epoch sample matrices (n_samples x 6).
struct Ensemble {
  CoordinateKind kind = CoordinateKind::Cartesian;
  Body center = Body::Earth;
  std::vector<double> epochs;
  std::vector<Matrix> samples;

  std::size_t n_samples() const { return samples.empty() ? 0 : static_cast<std::size_t>(samples.front().rows()); }
};

inline double circular_mean(const Eigen::Ref<const Vector>& angles) {
  double s = 0.0, c = 0.0;
  for (Eigen::Index i = 0; i < angles.size(); ++i) {
    s += std::sin(angles[i]);
    c += std::cos(angles[i]);
  }
  return std::atan2(s, c);
}

/// Puts every sample's L on one branch, following `reference` from epoch to epoch.
inline void align_longitudes(Ensemble& ens) {
  double reference = 0.0;
  for (std::size_t e = 0; e < ens.epochs.size(); ++e) {
    Matrix& m = ens.samples[e];
    const double cm = circular_mean(m.col(5));
    reference = e == 0 ? cm : align_angle(cm, reference);
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, 5) = align_angle(m(i, 5), reference);
    reference = m.col(5).mean();
  }
}

/// Propagates every sample under `cfg`. For the M-GEqOE kind the samples are
/// converted with the offset already fixed in `cfg`.
inline Ensemble propagate_ensemble(const std::vector<CartesianState>& samples, CoordinateKind kind,
                                   const DynamicsConfig& cfg, const OdeSettings& settings, double t0, double t1,
                                   std::size_t workers = 1) {
  cfg.validate();
  if (samples.empty()) fail(ErrorCode::InvalidArgument, "empty ensemble");
  const std::vector<double> grid = settings.output_grid.empty() ? std::vector<double>{t0, t1} : settings.output_grid;

  std::vector<Vec6> initial(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    try {
      initial[i] = kind == CoordinateKind::Cartesian ? samples[i].to_vector() : to_elements(samples[i], t0, cfg).to_vector();
    } catch (const Error& e) {
      fail(e.code(), "sample " + std::to_string(i) + ": " + e.message(), t0);
    }
  }
  if (kind == CoordinateKind::MGeqoe) {
    Vector L0(static_cast<Eigen::Index>(initial.size()));
    for (std::size_t i = 0; i < initial.size(); ++i) L0[static_cast<Eigen::Index>(i)] = initial[i][5];
    const double ref = circular_mean(L0);
    for (auto& y : initial) y[5] = align_angle(y[5], ref);
  }

  Ensemble ens;
  ens.kind = kind;
  ens.center = cfg.central;
  ens.epochs = grid;
  ens.samples.assign(grid.size(), Matrix(static_cast<Eigen::Index>(samples.size()), 6));

  parallel_for(samples.size(), workers, [&](std::size_t i) {
    Trajectory traj;
    try {
      traj = propagate(kind, initial[i], t0, t1, cfg, settings);
    } catch (const Error& e) {
      throw Error(e.code(), "sample " + std::to_string(i) + ": " + e.message(), e.epoch());
    }
    for (std::size_t k = 0; k < grid.size(); ++k) {
      ens.samples[k].row(static_cast<Eigen::Index>(i)) = traj.states[k].transpose();
    }
  });
  if (kind == CoordinateKind::MGeqoe) align_longitudes(ens);
  return ens;
}

// -----------------------------------------------------------------------------
// Sample statistics

struct SampleStats {
  Vector mean;
  Matrix cov;
};

/// Mean and 1/N-normalized covariance of the rows of X.
inline SampleStats sample_mean_cov(const Matrix& X) {
  if (X.rows() < 2) fail(ErrorCode::InvalidArgument, "sample statistics need at least two samples");
  SampleStats s;
  s.mean = X.colwise().mean().transpose();
  const Matrix centered = X.rowwise() - s.mean.transpose();
  s.cov = centered.transpose() * centered / static_cast<double>(X.rows());
  return s;
}

/// Whitened samples: columns z_i with |z_i - z_j|^2 the squared Mahalanobis
/// distance. Channels are scaled to unit variance before the Cholesky
/// factorization; the distances are unchanged by that scaling.
inline Matrix whiten(const Matrix& X, const Vector& mean, const Matrix& cov) {
  const Eigen::Index n = cov.rows();
  Vector inv_sd(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (!(cov(k, k) > 0.0) || !std::isfinite(cov(k, k))) {
      fail(ErrorCode::DegenerateCovariance, "channel " + std::to_string(k) + " has zero or non-finite variance");
    }
    inv_sd[k] = 1.0 / std::sqrt(cov(k, k));
  }
  const Matrix corr = inv_sd.asDiagonal() * cov * inv_sd.asDiagonal();
  Eigen::LLT<Matrix> llt(corr);
  if (llt.info() != Eigen::Success) fail(ErrorCode::DegenerateCovariance, "covariance is not positive definite");
  const Matrix L = llt.matrixL();
  for (Eigen::Index k = 0; k < n; ++k) {
    if (!(L(k, k) * L(k, k) > 1e-14)) fail(ErrorCode::DegenerateCovariance, "covariance is numerically singular");
  }
  Matrix centered = (X.rowwise() - mean.transpose()).transpose();  // n x N
  centered = inv_sd.asDiagonal() * centered;
  return llt.matrixL().solve(centered);
}

struct MahalanobisDistances {
  Vector d_i2;   // sample to mean
  Matrix d_ij2;  // sample to sample
};

inline MahalanobisDistances mahalanobis(const Matrix& X, const Vector& mean, const Matrix& cov) {
  const Matrix Z = whiten(X, mean, cov);
  const Eigen::Index N = Z.cols();
  MahalanobisDistances d;
  d.d_i2 = Z.colwise().squaredNorm().transpose();
  d.d_ij2 = Matrix::Zero(N, N);
  for (Eigen::Index j = 0; j < N; ++j) {
    for (Eigen::Index i = j + 1; i < N; ++i) {
      const double v = (Z.col(i) - Z.col(j)).squaredNorm();
      d.d_ij2(i, j) = v;
      d.d_ij2(j, i) = v;
    }
  }
  return d;
}

// -----------------------------------------------------------------------------
// Henze-Zirkler

inline double hz_beta(double n_samples, double n_dim) {
  if (n_samples < 2 || n_dim < 1) fail(ErrorCode::InvalidArgument, "beta needs N >= 2 and n >= 1");
  return std::pow(n_samples * (2.0 * n_dim + 1.0) / 4.0, 1.0 / (n_dim + 4.0)) / std::sqrt(2.0);
}

struct HzStatistic {
  double hz = 0.0;
  double beta = 0.0;
};

/// N times the weighted L2 distance between the empirical and the Gaussian
/// characteristic functions. The pair sum runs row by row in a fixed order,
/// so the result does not depend on `workers`.
inline HzStatistic hz_statistic(const Matrix& X, std::size_t workers = 1) {
  const SampleStats st = sample_mean_cov(X);
  const Matrix Z = whiten(X, st.mean, st.cov);
  const Eigen::Index N = Z.cols();
  const Eigen::Index n = Z.rows();
  const double Nd = static_cast<double>(N);
  const double nd = static_cast<double>(n);
  const double beta = hz_beta(Nd, nd);
  const double b2 = beta * beta;
  const double gamma = 1.0 + b2;

  std::vector<double> row_sums(static_cast<std::size_t>(N), 0.0);
  const double* z = Z.data();
  constexpr Eigen::Index kRowBlock = 64;
  const Eigen::Index blocks = (N + kRowBlock - 1) / kRowBlock;
  parallel_for(static_cast<std::size_t>(blocks), workers, [&](std::size_t blk) {
    const Eigen::Index begin = static_cast<Eigen::Index>(blk) * kRowBlock;
    const Eigen::Index end = std::min(N, begin + kRowBlock);
    for (Eigen::Index i = begin; i < end; ++i) {
      const double* zi = z + i * n;
      double acc = 0.0;
      for (Eigen::Index j = i + 1; j < N; ++j) {
        const double* zj = z + j * n;
        double d2 = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double diff = zi[k] - zj[k];
          d2 += diff * diff;
        }
        acc += std::exp(-0.5 * b2 * d2);
      }
      row_sums[static_cast<std::size_t>(i)] = acc;
    }
  });
  double pair_sum = 0.0;
  for (double s : row_sums) pair_sum += s;
  pair_sum = Nd + 2.0 * pair_sum;  // diagonal terms are exp(0)

  double center_sum = 0.0;
  for (Eigen::Index i = 0; i < N; ++i) center_sum += std::exp(-b2 * Z.col(i).squaredNorm() / (2.0 * gamma));

  const double term1 = pair_sum / (Nd * Nd);
  const double term2 = 2.0 * std::pow(gamma, -nd / 2.0) * center_sum / Nd;
  const double term3 = std::pow(1.0 + 2.0 * b2, -nd / 2.0);
  return {Nd * (term1 - term2 + term3), beta};
}

struct LognormalParams {
  double log_mean = 0.0;
  double log_sd = 0.0;
};

/// Log-space parameters of the log-normal approximation to the null
/// distribution of the statistic, matched to its first two moments.
inline LognormalParams hz_null_lognormal(double n_samples, double n_dim, double beta) {
  (void)n_samples;
  const double n = n_dim;
  const double b2 = beta * beta;
  const double b4 = b2 * b2;
  const double b8 = b4 * b4;
  const double a = 1.0 + 2.0 * b2;
  const double w = (1.0 + b2) * (1.0 + 3.0 * b2);
  const double mean = 1.0 - std::pow(a, -n / 2.0) * (1.0 + n * b2 / a + n * (n + 2.0) * b4 / (2.0 * a * a));
  const double var = 2.0 * std::pow(1.0 + 4.0 * b2, -n / 2.0) +
                     2.0 * std::pow(a, -n) * (1.0 + 2.0 * n * b4 / (a * a) + 3.0 * n * (n + 2.0) * b8 / (4.0 * a * a * a * a)) -
                     4.0 * std::pow(w, -n / 2.0) * (1.0 + 3.0 * n * b4 / (2.0 * w) + n * (n + 2.0) * b8 / (2.0 * w * w));
  if (!(mean > 0.0) || !(var > 0.0)) fail(ErrorCode::InvalidMoments, "null moments of the statistic are not positive");
  LognormalParams p;
  const double s2 = std::log(1.0 + var / (mean * mean));
  p.log_sd = std::sqrt(s2);
  p.log_mean = std::log(mean) - s2 / 2.0;
  return p;
}

/// Upper-tail probability of the log-normal null.
inline double hz_pvalue(double hz, double log_mean, double log_sd) {
  if (!(log_sd > 0.0)) fail(ErrorCode::InvalidArgument, "log_sd must be positive");
  if (!(hz > 0.0)) fail(ErrorCode::InvalidArgument, "HZ statistic must be positive for a p-value");
  const double z = (std::log(hz) - log_mean) / log_sd;
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

inline constexpr double kDefaultAlpha = 0.05;

struct HzTestResult {
  double hz = 0.0;
  double beta = 0.0;
  double p_value = 0.0;
  bool reject = true;
  bool degenerate = false;
  std::string diagnostic;
};

/// Degenerate covariance yields a rejection with a diagnostic instead of an error.
inline HzTestResult hz_test(const Matrix& X, double alpha = kDefaultAlpha, std::size_t workers = 1) {
  HzTestResult r;
  const double N = static_cast<double>(X.rows());
  const double n = static_cast<double>(X.cols());
  r.beta = hz_beta(N, n);
  try {
    r.hz = hz_statistic(X, workers).hz;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateCovariance) throw;
    r.hz = std::numeric_limits<double>::quiet_NaN();
    r.p_value = 0.0;
    r.reject = true;
    r.degenerate = true;
    r.diagnostic = e.what();
    return r;
  }
  const LognormalParams ln = hz_null_lognormal(N, n, r.beta);
  r.p_value = r.hz > 0.0 ? hz_pvalue(r.hz, ln.log_mean, ln.log_sd) : 1.0;
  r.reject = r.p_value <= alpha;
  return r;
}

struct HzSeries {
  std::vector<double> epochs;
  std::vector<HzTestResult> results;
  double alpha = kDefaultAlpha;
  std::size_t n_dim = 6;
};

/// HZ test at each listed epoch index (all epochs when `indices` is empty).
/// `subsample` > 0 restricts the test to the first `subsample` samples.
inline HzSeries hz_series(const Ensemble& ens, double alpha = kDefaultAlpha, std::size_t workers = 1,
                          std::size_t subsample = 0, std::vector<std::size_t> indices = {}) {
  if (indices.empty()) {
    indices.resize(ens.epochs.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  }
  HzSeries s;
  s.alpha = alpha;
  for (std::size_t idx : indices) {
    const Matrix& m = ens.samples.at(idx);
    const Eigen::Index rows = subsample > 0 ? std::min<Eigen::Index>(m.rows(), static_cast<Eigen::Index>(subsample)) : m.rows();
    s.epochs.push_back(ens.epochs[idx]);
    s.results.push_back(hz_test(m.topRows(rows), alpha, workers));
  }
  return s;
}

/// Re-thresholds a series against a different significance level.
inline void apply_alpha(HzSeries& s, double alpha) {
  s.alpha = alpha;
  for (auto& r : s.results) r.reject = r.degenerate || r.p_value <= alpha;
}

// -----------------------------------------------------------------------------
// Eigenspace projection

/// Centered samples expressed on the covariance eigenvectors, largest
/// eigenvalue first; each eigenvector's largest-magnitude component is positive.
inline Matrix eigenspace_projection(const Matrix& X) {
  if (!X.allFinite()) fail(ErrorCode::InvalidArgument, "non-finite samples in eigenspace projection");
  const SampleStats st = sample_mean_cov(X);
  Eigen::SelfAdjointEigenSolver<Matrix> es(st.cov);
  if (es.info() != Eigen::Success) fail(ErrorCode::DegenerateCovariance, "eigen-decomposition failed");
  const Eigen::Index n = st.cov.rows();
  Matrix V(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    Vector v = es.eigenvectors().col(n - 1 - k);
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v[imax] < 0.0) v = -v;
    V.col(k) = v;
  }
  return (X.rowwise() - st.mean.transpose()) * V;
}

}  // namespace mgeqoe
