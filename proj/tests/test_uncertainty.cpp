#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <random>

#include "support.hpp"

using namespace mgeqoe;

namespace {

Matrix gaussian(std::size_t rows, std::size_t cols, std::uint64_t seed) { return standard_normal_matrix(rows, cols, seed); }

struct Reference {
  std::size_t n_samples, n_dim;
  double hz, beta, log_mean, log_sd, p_value;
};

std::map<int, Matrix> load_datasets(std::map<int, Reference>& refs) {
  const std::string dir = MGEQOE_TEST_DATA_DIR;
  std::ifstream rf(dir + "/hz_reference.csv");
  std::string line;
  std::getline(rf, line);
  while (std::getline(rf, line)) {
    const auto f = split(line, ',');
    refs[std::stoi(f[0])] = {std::stoul(f[1]), std::stoul(f[2]), std::stod(f[3]), std::stod(f[4]),
                             std::stod(f[5]),  std::stod(f[6]),  std::stod(f[7])};
  }
  std::map<int, std::vector<std::vector<double>>> rows;
  std::ifstream df(dir + "/hz_datasets.csv");
  std::getline(df, line);
  while (std::getline(df, line)) {
    const auto f = split(line, ',');
    std::vector<double> r;
    for (std::size_t k = 2; k < f.size(); ++k) r.push_back(std::stod(f[k]));
    rows[std::stoi(f[0])].push_back(r);
  }
  std::map<int, Matrix> out;
  for (const auto& [id, r] : rows) {
    const std::size_t n = refs.at(id).n_dim;
    Matrix X(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < r.size(); ++i) {
      for (std::size_t j = 0; j < n; ++j) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[i][j];
    }
    out[id] = X;
  }
  return out;
}

}  // namespace

TEST(Sampling, MomentsMatchSpecification) {
  const CanonicalUnits u = BodyConstants{}.units();
  const CartesianState mean{{0.1, 0.0, 0.0}, {0.0, 0.2, 0.0}};
  EnsembleSpec spec;
  spec.n_samples = 20000;
  spec.seed = 3;
  const auto s = sample_initial_ensemble(mean, spec, u);
  Matrix X(20000, 6);
  for (std::size_t i = 0; i < s.size(); ++i) X.row(static_cast<Eigen::Index>(i)) = s[i].to_vector().transpose();
  const SampleStats st = sample_mean_cov(X);
  const double sp = 1.0 / u.l_star, sv = 1e-5 / u.v_star;
  for (int k = 0; k < 6; ++k) {
    const double sigma = k < 3 ? sp : sv;
    // 5 standard errors on the mean and on the variance.
    EXPECT_NEAR(st.mean[k], mean.to_vector()[k], 5 * sigma / std::sqrt(20000.0));
    EXPECT_NEAR(st.cov(k, k) / (sigma * sigma), 1.0, 5 * std::sqrt(2.0 / 20000));
  }
}

TEST(Sampling, SampleStreamsDependOnlyOnSeedAndIndex) {
  const CanonicalUnits u = BodyConstants{}.units();
  EnsembleSpec small, large;
  small.n_samples = 50;
  large.n_samples = 500;
  const auto a = sample_initial_ensemble({}, small, u);
  const auto b = sample_initial_ensemble({}, large, u);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(a[i].to_vector(), b[i].to_vector());
  large.seed = 2;
  EXPECT_NE(sample_initial_ensemble({}, large, u)[0].to_vector(), b[0].to_vector());
}

TEST(Mahalanobis, SquaredDistancesSumToNTimesDimension) {
  const Matrix X = gaussian(300, 6, 1) * Matrix::Random(6, 6);
  const SampleStats st = sample_mean_cov(X);
  const MahalanobisDistances d = mahalanobis(X, st.mean, st.cov);
  EXPECT_NEAR(d.d_i2.sum(), 300.0 * 6.0, 1e-9);
}

TEST(Mahalanobis, IdentityCovarianceGivesEuclidean) {
  const Matrix X = gaussian(20, 3, 2);
  const Vector mean = Vector::Zero(3);
  const MahalanobisDistances d = mahalanobis(X, mean, Matrix::Identity(3, 3));
  for (int i = 0; i < 20; ++i) {
    EXPECT_NEAR(d.d_i2[i], X.row(i).squaredNorm(), 1e-13);
    for (int j = 0; j < 20; ++j) EXPECT_NEAR(d.d_ij2(i, j), (X.row(i) - X.row(j)).squaredNorm(), 1e-12);
  }
}

TEST(HenzeZirkler, TwoSampleClosedForm) {
  Matrix X(2, 1);
  X << 3.0, -1.5;
  // Standardized samples are +-1, pair distance 4.
  const double b = hz_beta(2, 1);
  const double b2 = b * b;
  const double expected =
      2 * ((2 + 2 * std::exp(-2 * b2)) / 4 - 2 / std::sqrt(1 + b2) * std::exp(-b2 / (2 * (1 + b2))) +
           1 / std::sqrt(1 + 2 * b2));
  EXPECT_NEAR(hz_statistic(X).hz, expected, 1e-14);
}

TEST(HenzeZirkler, BetaFormula) {
  EXPECT_NEAR(hz_beta(1000, 6), std::pow(1000 * 13 / 4.0, 0.1) / std::sqrt(2.0), 1e-15);
  EXPECT_THROW(hz_beta(1, 6), Error);
}

TEST(HenzeZirkler, AffineInvariance) {
  const Matrix X = gaussian(400, 6, 9).array().cube().matrix();
  Matrix A = Matrix::Random(6, 6) + 3 * Matrix::Identity(6, 6);
  const Vector shift = Vector::Random(6) * 1e3;
  const Matrix Y = (X * A.transpose()).rowwise() + shift.transpose();
  const double a = hz_statistic(X).hz;
  EXPECT_NEAR(hz_statistic(Y).hz / a, 1.0, 1e-8);
  // Badly scaled channels, as in canonical position/velocity mixes.
  Matrix Z = Y;
  Z.col(0) *= 1e-9;
  Z.col(5) *= 1e6;
  EXPECT_NEAR(hz_statistic(Z).hz / a, 1.0, 1e-8);
}

TEST(HenzeZirkler, MatchesIndependentReferenceOnFrozenDatasets) {
  std::map<int, Reference> refs;
  const auto data = load_datasets(refs);
  ASSERT_EQ(data.size(), 100u);
  for (const auto& [id, X] : data) {
    const Reference& r = refs.at(id);
    ASSERT_EQ(static_cast<std::size_t>(X.rows()), r.n_samples);
    const HzStatistic s = hz_statistic(X);
    const LognormalParams ln = hz_null_lognormal(static_cast<double>(r.n_samples), static_cast<double>(r.n_dim), s.beta);
    EXPECT_NEAR(s.hz, r.hz, 1e-10 * std::max(1.0, r.hz)) << "dataset " << id;
    EXPECT_NEAR(s.beta, r.beta, 1e-12) << "dataset " << id;
    EXPECT_NEAR(ln.log_mean, r.log_mean, 1e-12) << "dataset " << id;
    EXPECT_NEAR(ln.log_sd, r.log_sd, 1e-12) << "dataset " << id;
    EXPECT_NEAR(hz_pvalue(s.hz, ln.log_mean, ln.log_sd), r.p_value, 1e-10) << "dataset " << id;
  }
}

TEST(HenzeZirkler, NullRejectionRateNearAlpha) {
  int rejections = 0;
  const int trials = 300;
  for (int k = 0; k < trials; ++k) rejections += hz_test(gaussian(300, 4, 5000 + k)).reject ? 1 : 0;
  const double rate = static_cast<double>(rejections) / trials;
  EXPECT_GE(rate, 0.02);
  EXPECT_LE(rate, 0.09);
}

TEST(HenzeZirkler, DetectsCubedCoordinates) {
  int rejections = 0;
  for (int k = 0; k < 40; ++k) {
    Matrix X = gaussian(500, 2, 100 + k);
    X.col(0) = X.col(0).array().cube().matrix();
    rejections += hz_test(X).reject ? 1 : 0;
  }
  EXPECT_GE(rejections, 38);
}

TEST(HenzeZirkler, NullMomentsWellDefinedAcrossSizes) {
  for (double N : {10.0, 100.0, 1000.0, 1e4, 1e5}) {
    for (int n = 1; n <= 10; ++n) {
      const double b = hz_beta(N, n);
      const LognormalParams p = hz_null_lognormal(N, n, b);
      const double mean = std::exp(p.log_mean + p.log_sd * p.log_sd / 2);
      EXPECT_GT(mean, 0.0);
      EXPECT_LT(mean, 1.0);
      EXPECT_GT(p.log_sd, 0.0);
      EXPECT_NEAR(hz_pvalue(std::exp(p.log_mean), p.log_mean, p.log_sd), 0.5, 1e-12);
    }
  }
}

TEST(HenzeZirkler, DegenerateCovarianceRejectsWithDiagnostic) {
  Matrix X = gaussian(100, 3, 4);
  X.col(2) = X.col(0) + X.col(1);
  const HzTestResult r = hz_test(X);
  EXPECT_TRUE(r.degenerate);
  EXPECT_TRUE(r.reject);
  EXPECT_FALSE(r.diagnostic.empty());
  Matrix C = gaussian(50, 2, 5);
  C.col(1).setConstant(4.0);
  EXPECT_TRUE(hz_test(C).degenerate);
}

TEST(HenzeZirkler, WorkerCountDoesNotChangeBits) {
  const Matrix X = gaussian(1000, 6, 42);
  const double one = hz_statistic(X, 1).hz;
  for (std::size_t w : {2u, 4u, 16u}) EXPECT_EQ(hz_statistic(X, w).hz, one);
}

TEST(HzSeries, AlphaOverrideRethresholds) {
  Ensemble ens;
  ens.epochs = {0.0, 1.0};
  ens.samples = {gaussian(200, 3, 1), gaussian(200, 3, 2).array().exp().matrix()};
  HzSeries s = hz_series(ens);
  ASSERT_EQ(s.results.size(), 2u);
  EXPECT_TRUE(s.results[1].reject);
  const double p = s.results[0].p_value;
  apply_alpha(s, p + 1e-9);
  EXPECT_TRUE(s.results[0].reject);
  apply_alpha(s, p / 2);
  EXPECT_FALSE(s.results[0].reject);
  EXPECT_EQ(hz_series(ens, 0.05, 1, 0, {1}).epochs, std::vector<double>{1.0});
}

TEST(Eigenspace, ProjectionDiagonalizesCovariance) {
  const Matrix X = gaussian(500, 6, 8) * Matrix::Random(6, 6);
  const Matrix P = eigenspace_projection(X);
  const SampleStats st = sample_mean_cov(P);
  for (int i = 0; i < 6; ++i) {
    EXPECT_NEAR(st.mean[i], 0.0, 1e-12);
    if (i > 0) {
      EXPECT_GE(st.cov(i - 1, i - 1), st.cov(i, i));
    }
    for (int j = 0; j < 6; ++j) {
      if (i != j) {
        EXPECT_NEAR(st.cov(i, j), 0.0, 1e-10 * st.cov(0, 0));
      }
    }
  }
  EXPECT_NEAR(st.cov.trace(), sample_mean_cov(X).cov.trace(), 1e-10 * st.cov.trace());
  // Deterministic sign convention.
  EXPECT_EQ(eigenspace_projection(X), P);
}

TEST(Longitudes, CircularMeanAndAlignment) {
  Vector a(3);
  a << kPi - 0.1, -kPi + 0.1, kPi;
  EXPECT_NEAR(std::abs(circular_mean(a)), kPi, 1e-12);
  Ensemble ens;
  ens.kind = CoordinateKind::MGeqoe;
  ens.epochs = {0.0, 1.0};
  Matrix m0 = Matrix::Zero(3, 6), m1 = Matrix::Zero(3, 6);
  m0.col(5) = a;
  m1.col(5) << kPi + 0.5 - kTwoPi, kPi + 0.6, kPi + 0.7 - kTwoPi;
  ens.samples = {m0, m1};
  align_longitudes(ens);
  EXPECT_LT(ens.samples[0].col(5).maxCoeff() - ens.samples[0].col(5).minCoeff(), 0.3);
  EXPECT_LT(ens.samples[1].col(5).maxCoeff() - ens.samples[1].col(5).minCoeff(), 0.3);
  EXPECT_GT(ens.samples[1].col(5).minCoeff(), ens.samples[0].col(5).maxCoeff());
}

TEST(Ensemble, PropagationIndependentOfWorkers) {
  const BodyConstants c;
  const CanonicalUnits u = c.units();
  const DynamicsConfig base = test::cislunar_config(Body::Moon);
  const CartesianState s0 = nondimensionalize({{40000.0, 0.0, 0.0}, {0.0, 0.0, 0.1492831372989535}}, u);
  OdeSettings st;
  st.output_grid = uniform_grid(0.0, 0.1, 5);
  const Trajectory nominal = propagate(CoordinateKind::Cartesian, s0.to_vector(), 0.0, 0.1, base, st);
  const DynamicsConfig cfg = with_offset_from(base, nominal);
  EnsembleSpec spec;
  spec.n_samples = 24;
  const auto samples = sample_initial_ensemble(s0, spec, u);
  for (CoordinateKind kind : {CoordinateKind::Cartesian, CoordinateKind::MGeqoe}) {
    const Ensemble a = propagate_ensemble(samples, kind, cfg, st, 0.0, 0.1, 1);
    const Ensemble b = propagate_ensemble(samples, kind, cfg, st, 0.0, 0.1, 5);
    for (std::size_t k = 0; k < a.epochs.size(); ++k) EXPECT_EQ(a.samples[k], b.samples[k]);
  }
}

TEST(Ensemble, SampleFailureNamesTheSample) {
  const DynamicsConfig cfg = DynamicsConfig::keplerian(Body::Earth, 1.0);
  std::vector<CartesianState> samples{{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}}, {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}}};
  samples[1].v = {0.0, 0.0, 0.0};
  OdeSettings st;
  try {
    propagate_ensemble(samples, CoordinateKind::MGeqoe, cfg, st, 0.0, 1.0, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("sample 1"), std::string::npos) << e.what();
  }
}

TEST(Parallel, LowestFailingIndexWins) {
  for (std::size_t w : {1u, 3u, 8u}) {
    try {
      parallel_for(100, w, [](std::size_t i) {
        if (i == 17 || i == 60) throw std::runtime_error(std::to_string(i));
      });
      FAIL();
    } catch (const std::runtime_error& e) {
      EXPECT_STREQ(e.what(), "17");
    }
  }
}

TEST(Parallel, EnvironmentCapsWorkers) {
  setenv("MGEQOE_THREADS", "3", 1);
  EXPECT_EQ(resolve_workers(16), 3u);
  EXPECT_EQ(resolve_workers(2), 2u);
  setenv("MGEQOE_THREADS", "junk", 1);
  EXPECT_EQ(resolve_workers(16), 16u);
  unsetenv("MGEQOE_THREADS");
  EXPECT_GE(resolve_workers(0), 1u);
}
