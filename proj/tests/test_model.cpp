#include <doctest.h>

#include <cmath>

#include "mjpde/experiment.hpp"
#include "mjpde/model.hpp"
#include "test_util.hpp"

using namespace mjpde;
using namespace mjpde::testutil;

TEST_CASE("mode_norm of the all-zero mode is zero") {
  Mode m;
  CHECK(mode_norm(m) == 0.0);
}

TEST_CASE("mode_norm of a single boundary block") {
  Mode m;
  m.q_bound = {3.0, 0.0, 0.0};
  CHECK(mode_norm(m) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("mode_norm of the reference mode matches the brute-force value") {
  const Mode m = reference_mode_no_sigma();
  // Independent evaluation: spectral norms block by block.
  const double lam = 0.0081;  // largest diagonal entry
  const double mu = 0.024;
  const double q2 = 12.29 * 12.29 + 3.0 * 3.0 + 8.45 * 8.45;
  const double r2 = 0.0011 * 0.0011 + 0.1601 * 0.1601 + 0.0034 * 0.0034;
  const double brute = std::sqrt(lam * lam + mu * mu + q2 + r2);
  CHECK(mode_norm(m) == doctest::Approx(brute).epsilon(1e-14));
  CHECK(mode_norm(m) == doctest::Approx(15.214233020103247).epsilon(1e-12));
}

TEST_CASE("mode_norm rejects non-finite sigma samples") {
  Mode m = reference_mode_no_sigma();
  m.sigma_mp = SpatialCoeff<Vec3>::sampled(
      {0.0, 0.5, 1.0},
      {Vec3{0, 0, 0}, Vec3{std::nan(""), 0, 0}, Vec3{0, 0, 0}});
  CHECK_THROWS_AS(mode_norm(m), NumericalError);
}

TEST_CASE("mode_distance basics") {
  const Mode m = reference_mode_no_sigma();
  CHECK(mode_distance(m, m) == 0.0);

  Mode other = m;
  other.mu_minus = 0.02;
  CHECK(mode_distance(m, other) == doctest::Approx(0.004).epsilon(1e-12));
  CHECK(mode_distance(m, other) == mode_distance(other, m));
}

TEST_CASE("mode_norm is absolutely homogeneous on the Q block") {
  Mode m;
  m.q_bound = {1.2, -0.7, 0.3};
  const double base = mode_norm(m);
  for (double c : {-2.5, 0.5, 10.0}) {
    Mode scaled;
    scaled.q_bound = scale(m.q_bound, c);
    CHECK(mode_norm(scaled) == doctest::Approx(std::abs(c) * base).epsilon(1e-13));
  }
}

TEST_CASE("mode_distance satisfies the triangle inequality") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    const Mode a = random_mode(rng);
    const Mode b = random_mode(rng);
    const Mode c = random_mode(rng);
    const double ac = mode_distance(a, c);
    const double ab = mode_distance(a, b);
    const double bc = mode_distance(b, c);
    CHECK(ac <= ab + bc + 1e-12);
  }
}

TEST_CASE("reference mode family distance reduces to the speed gap") {
  const Scenario sc = scenario_v();
  const std::array<double, 5> expected{0.004, 0.001, 0.0, 0.001, 0.006};
  for (size_t j = 0; j < sc.markov.n_modes(); ++j) {
    const double d = mode_distance(sc.markov.modes[j], sc.nominal);
    const double gap = std::abs(sc.markov.modes[j].mu_minus - sc.nominal.mu_minus);
    CHECK(d == doctest::Approx(gap).epsilon(1e-14));
    CHECK(d == doctest::Approx(expected[j]).epsilon(1e-12));
  }
}

TEST_CASE("grid validation and CFL invariant") {
  Grid g{100, 0.9};
  const double vmax = 0.03;
  CHECK(g.dt_for(vmax) * vmax * g.n_cells <= 1.0 + 1e-15);

  CHECK_THROWS_AS((Grid{100, 1.2}.validate()), ValidationError);
  CHECK_THROWS_AS((Grid{100, 0.0}.validate()), ValidationError);
  CHECK_THROWS_AS((Grid{1, 0.9}.validate()), ValidationError);
  CHECK_THROWS_AS(g.dt_for(0.0), ValidationError);
}

TEST_CASE("mode validation") {
  Mode m = reference_mode_no_sigma();
  CHECK_NOTHROW(m.validate());
  m.mu_minus = 0.0;
  CHECK_THROWS_AS(m.validate(), ValidationError);
  m = reference_mode_no_sigma();
  m.lambda_plus[1] = -0.1;
  CHECK_THROWS_AS(m.validate(), ValidationError);
}

TEST_CASE("field state finiteness and presets") {
  FieldState s = make_initial("sinusoidal", 16);
  CHECK(s.finite());
  CHECK(s.w[0][4] == doctest::Approx(std::sin(2.0 * std::numbers::pi * 0.25)));
  CHECK(s.w[3][4] == s.w[0][4]);

  s.w[2][3] = std::numeric_limits<double>::infinity();
  CHECK(!s.finite());

  CHECK_THROWS_AS(make_initial("nope", 16), ValidationError);
  const FieldState z = make_initial("zero", 8);
  CHECK(max_abs(z) == 0.0);
}

TEST_CASE("spatial coefficient evaluation") {
  const auto poly = SpatialCoeff<Vec3>::polynomial(
      {Vec3{1.0, 0.0, 2.0}, Vec3{0.5, 1.0, -1.0}});
  const Vec3 at_half = poly(0.5);
  CHECK(at_half[0] == doctest::Approx(1.25));
  CHECK(at_half[1] == doctest::Approx(0.5));
  CHECK(at_half[2] == doctest::Approx(1.5));

  const auto tab = SpatialCoeff<double>::sampled({0.0, 0.25, 1.0}, {1.0, 3.0, -1.0});
  CHECK(tab(0.0) == 1.0);
  CHECK(tab(0.25) == 3.0);
  CHECK(tab(0.125) == doctest::Approx(2.0));
  CHECK(tab(2.0) == -1.0);  // clamped

  CHECK_THROWS_AS(SpatialCoeff<double>::sampled({0.5, 0.25}, {1.0, 2.0}),
                  ValidationError);
}

TEST_CASE("markov spec validation") {
  const Mode m = reference_mode_no_sigma();
  CHECK_NOTHROW(MarkovSpec::constant_rates({m, m}, {{0.0, 1.0}, {2.0, 0.0}},
                                           {0.5, 0.5}));
  CHECK_THROWS_AS(
      MarkovSpec::constant_rates({m, m}, {{0.1, 1.0}, {2.0, 0.0}}, {0.5, 0.5}),
      ValidationError);
  CHECK_THROWS_AS(
      MarkovSpec::constant_rates({m, m}, {{0.0, -1.0}, {2.0, 0.0}}, {0.5, 0.5}),
      ValidationError);
  CHECK_THROWS_AS(
      MarkovSpec::constant_rates({m, m}, {{0.0, 1.0}, {2.0, 0.0}}, {0.6, 0.5}),
      ValidationError);

  const auto spec =
      MarkovSpec::constant_rates({m, m}, {{0.0, 1.0}, {2.0, 0.0}}, {0.5, 0.5});
  CHECK(spec.rate_cap() == 2.0);
  CHECK(spec.max_speed() == doctest::Approx(0.024));
}
