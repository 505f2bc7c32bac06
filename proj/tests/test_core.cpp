#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace mgeqoe;

TEST(CanonicalUnits, DefaultsMatchEarthMoonSystem) {
  const CanonicalUnits u = BodyConstants{}.units();
  EXPECT_DOUBLE_EQ(u.l_star, 384400.0);
  EXPECT_DOUBLE_EQ(u.gm_sum, 398600.435507 + 4902.800118);
  // Independent: t* = sqrt(l*^3 / GM), about 4.34 days.
  EXPECT_NEAR(u.t_star, std::sqrt(std::pow(384400.0, 3) / 403503.235625), 1e-6);
  EXPECT_NEAR(u.t_star / 86400.0, 4.3425, 1e-3);
  EXPECT_NEAR(u.v_star * u.t_star, u.l_star, 1e-9);
}

TEST(CanonicalUnits, CanonicalMuOfPrimariesSumsToOne) {
  const BodyConstants c;
  EXPECT_NEAR(c.mu_canonical(Body::Earth) + c.mu_canonical(Body::Moon), 1.0, 1e-15);
}

TEST(CanonicalUnits, RejectsNonPositiveInputs) {
  EXPECT_THROW(make_canonical_units(0.0, 1.0, 1.0), Error);
  EXPECT_THROW(make_canonical_units(1.0, -1.0, 1.0), Error);
  BodyConstants c;
  c.mu_sun = 0.0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Bodies, ParseAndPrint) {
  for (Body b : {Body::Earth, Body::Moon, Body::Sun}) EXPECT_EQ(parse_body(to_string(b)), b);
  EXPECT_FALSE(parse_body("mars").has_value());
}

TEST(CartesianState, DimensionRoundTripIsExactToRounding) {
  const CanonicalUnits u = BodyConstants{}.units();
  const CartesianState s{{7000.0, -1200.0, 300.0}, {1.2, 7.4, -0.3}};
  const CartesianState back = dimensionalize(nondimensionalize(s, u), u);
  EXPECT_LT((back.r - s.r).norm(), 1e-11);
  EXPECT_LT((back.v - s.v).norm(), 1e-15);
}

TEST(OrbitalFrame, IsRightHandedOrthonormal) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  for (int k = 0; k < 200; ++k) {
    const CartesianState s{{n(rng), n(rng), n(rng)}, {n(rng), n(rng), n(rng)}};
    const OrbitalFrame f = orbital_frame_basis(s);
    EXPECT_NEAR(f.e_r.norm(), 1.0, 1e-14);
    EXPECT_NEAR(f.e_f.norm(), 1.0, 1e-14);
    EXPECT_NEAR(f.e_r.dot(f.e_f), 0.0, 1e-14);
    EXPECT_LT((f.e_r.cross(f.e_f) - f.e_h).norm(), 1e-14);
    EXPECT_GT(f.e_f.dot(s.v), 0.0);
  }
}

TEST(OrbitalFrame, RectilinearMotionIsDegenerate) {
  const CartesianState s{{1.0, 2.0, 3.0}, {2.0, 4.0, 6.0}};
  try {
    orbital_frame_basis(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateGeometry);
  }
}

TEST(RotatingFrame, MoonIsFixedOnXAxis) {
  const CartesianState earth{};
  const CartesianState moon{{0.6, 0.8, 0.0}, {-0.8, 0.6, 0.0}};
  const CartesianState m = inertial_to_rotating(moon, earth, moon, 0.0);
  EXPECT_LT((m.r - Vec3(1.0, 0.0, 0.0)).norm(), 1e-15);
  EXPECT_LT(m.v.norm(), 1e-15);
}

TEST(RotatingFrame, RoundTrip) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n;
  const CartesianState earth{{0.01, -0.02, 0.0}, {0.0, 0.0, 0.001}};
  const CartesianState moon{{0.9, 0.4, 0.05}, {-0.4, 0.9, 0.02}};
  for (int k = 0; k < 100; ++k) {
    const CartesianState s{{n(rng), n(rng), n(rng)}, {n(rng), n(rng), n(rng)}};
    const CartesianState back = rotating_to_inertial(inertial_to_rotating(s, earth, moon, 0.0), earth, moon, 0.0);
    EXPECT_LT((back.r - s.r).norm(), 1e-14);
    EXPECT_LT((back.v - s.v).norm(), 1e-14);
  }
}

TEST(RotatingFrame, CoincidentPrimariesFail) {
  const CartesianState earth{};
  EXPECT_THROW(inertial_to_rotating(earth, earth, earth, 0.0), Error);
}

TEST(Errors, InputErrorsMapToConfigClass) {
  EXPECT_TRUE(is_input_error(ErrorCode::Config));
  EXPECT_TRUE(is_input_error(ErrorCode::GridMismatch));
  EXPECT_FALSE(is_input_error(ErrorCode::StepFailure));
  EXPECT_FALSE(is_input_error(ErrorCode::HyperbolicBranch));
  const Error e(ErrorCode::StepFailure, "boom", 2.5);
  EXPECT_EQ(e.message(), "boom");
  EXPECT_DOUBLE_EQ(e.epoch(), 2.5);
}
