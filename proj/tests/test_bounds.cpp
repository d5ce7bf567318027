#include <doctest.h>

#include <cmath>
#include <numbers>

#include "blowuplab/bounds.hpp"
#include "blowuplab/errors.hpp"

using namespace blowuplab;

namespace {

constexpr double pi = std::numbers::pi;

// Reference values from an independent high-precision quadrature (mpmath, 30 digits).
constexpr double kC = 854.772612840651108;          // p=3, q=2, alpha=1 on (0,1)
constexpr double kThreshold = 11.9571276273852827;
constexpr double kM0 = 12.7323954473516269;          // 30 * 4/(3 pi)
constexpr double kTtilde = 0.0359111225566711970;
constexpr double kC3 = 124.025106721199281;          // 4 pi^3
constexpr double kC4 = 842.206242226291935;

RunRecord synthetic(double T, double exponent, double t0, double t1, std::size_t n, double scale = 1.0) {
  RunRecord rr;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(n - 1);
    rr.times.push_back(t);
    rr.sup_norm.push_back(scale * std::pow(T - t, exponent));
    rr.min_value.push_back(rr.sup_norm.back());
    rr.dt.push_back(i ? (t1 - t0) / static_cast<double>(n - 1) : 0.0);
  }
  rr.verdict.kind = Verdict::Kind::blew_up;
  return rr;
}

BoundsInput standard_input(const Grid& g, double alpha = 1.0) {
  return make_bounds_input(3, 2, alpha, eigenpair_analytic(g), ConvectionSpec::power(1, 1, 1), 1e7);
}

}  // namespace

TEST_CASE("mass functional") {
  const Grid g = build_grid(Interval{0, 1}, 201);
  const EigenPair ep = eigenpair_analytic(g);
  CHECK(mass_functional(Field::constant(g, 0.0), ep, 3) == 0.0);
  CHECK(mass_functional(Field::constant(g, 1.0), ep, 1) == doctest::Approx(2 / pi).epsilon(1e-4));
  CHECK(mass_functional(Field::constant(g, 1.0), ep, 3) == doctest::Approx(4 / (3 * pi)).epsilon(1e-4));
  CHECK_THROWS_AS(mass_functional(Field::constant(build_grid(Interval{0, 1}, 11), 1.0), ep, 1), Error);
}

TEST_CASE("eigenfunction constant and threshold") {
  const Grid g = build_grid(Interval{0, 1}, 201);
  const BoundsReport br = blowup_constant(standard_input(g));
  CHECK(br.C == doctest::Approx(kC).epsilon(1e-10));
  CHECK(br.threshold == doctest::Approx(kThreshold).epsilon(1e-10));
  CHECK(br.grad_phi_integral == doctest::Approx(4 * pi * pi / 3));
  // The Young split reproduces the second term exactly; the first carries an
  // extra lambda/(p-q) relative to the printed formula.
  CHECK(br.C4 == doctest::Approx(kC4).epsilon(1e-10));
  CHECK(br.C3 == doctest::Approx(kC3).epsilon(1e-10));
  CHECK(br.C3 == doctest::Approx((br.C - br.C4) * pi * pi).epsilon(1e-10));

  BoundsInput limit = standard_input(g);
  limit.alpha = 1e-12;  // the growth gate is irrelevant for the limit of the formula
  const BoundsReport tiny = blowup_constant(limit);
  CHECK(tiny.C == doctest::Approx(4 * pi).epsilon(1e-9));
}

TEST_CASE("C4 matches the printed second term for random exponents") {
  const Grid g = build_grid(Interval{0, 2}, 101);
  const EigenPair ep = eigenpair_analytic(g);
  for (double p : {2.5, 3.0, 4.0, 7.0})
    for (double q : {1.2, 1.9})
      for (double a : {0.3, 1.0, 2.5}) {
        BoundsInput bi;
        bi.p = p, bi.q = q, bi.alpha = a, bi.eigen = ep, bi.omega_measure = 2.0;
        const BoundsReport br = blowup_constant(bi);
        const double m = p / (p - q);
        const double second = std::pow(4 * q / (p - q), q / (p - q)) * std::pow(a, m) * br.grad_phi_integral;
        CHECK(br.C4 == doctest::Approx(second).epsilon(1e-10));
        const double first = br.C - second;
        CHECK(br.C3 == doctest::Approx(first * ep.lambda / (p - q)).epsilon(1e-10));
      }
}

TEST_CASE("exponent and growth gates") {
  const Grid g = build_grid(Interval{0, 1}, 51);
  CHECK_THROWS_AS(make_bounds_input(3, 3, 1, eigenpair_analytic(g), ConvectionSpec::zero(1), 1e6), Error);
  CHECK_THROWS_AS(make_bounds_input(3, 2, 0, eigenpair_analytic(g), ConvectionSpec::zero(1), 1e6), Error);
  // g = u^2 has G = u^3/3, which outgrows u^2 past u = 3.
  CHECK_THROWS_AS(make_bounds_input(3, 2, 1, eigenpair_analytic(g), ConvectionSpec::power(1, 1, 2), 1e6), Error);
  CHECK(check_primitive_growth(ConvectionSpec::power(1, 1, 2), 1, 2, 2.9).passed);
  const GrowthCheck gc = check_primitive_growth(ConvectionSpec::power(1, 1, 2), 1, 2, 10.0);
  CHECK_FALSE(gc.passed);
  CHECK(gc.worst_omega == doctest::Approx(10.0));
  CHECK(gc.worst_ratio == doctest::Approx(10.0 / 3.0));
}

TEST_CASE("admissibility condition and T-tilde") {
  const Grid g = build_grid(Interval{0, 1}, 201);
  const BoundsInput bi = standard_input(g);
  const BoundsReport br = blowup_constant(bi);
  const BoundsReport r30 = check_condition_and_bound(br, Field::constant(g, 30.0), bi.eigen, 3, bi.m(), 1.0);
  CHECK(r30.M0 == doctest::Approx(kM0).epsilon(1e-4));
  CHECK(r30.condition_met);
  REQUIRE(r30.T_tilde);
  CHECK(*r30.T_tilde == doctest::Approx(kTtilde).epsilon(1e-3));
  CHECK(*check_condition_and_bound(br, kM0, 3, 1.0).T_tilde == doctest::Approx(kTtilde).epsilon(1e-9));

  const BoundsReport small = check_condition_and_bound(br, Field::constant(g, 0.01), bi.eigen, 3, bi.m(), 1.0);
  CHECK_FALSE(small.condition_met);
  CHECK_FALSE(small.T_tilde);

  CHECK_FALSE(check_condition_and_bound(br, br.threshold, 3, 1.0).condition_met);
  const double above = std::nextafter(br.threshold, INFINITY);
  CHECK(check_condition_and_bound(br, above, 3, 1.0).condition_met);
}

TEST_CASE("blow-up time from synthetic power laws") {
  const RunRecord rr = synthetic(1.0, -1.0, 0.8, 0.99, 200);
  CHECK(estimate_blowup_time(rr, ReactionSpec::power(2)) == doctest::Approx(1.0).epsilon(1e-6));
  const RunRecord r5 = synthetic(0.5, -0.25, 0.3, 0.4999, 300, std::pow(4.0, -0.25));
  CHECK(estimate_blowup_time(r5, ReactionSpec::power(5)) == doctest::Approx(0.5).epsilon(1e-6));

  CHECK_THROWS_AS(estimate_blowup_time(synthetic(1.0, -1.0, 0.8, 0.99, 9), ReactionSpec::power(2)), Error);
  RunRecord global = rr;
  global.verdict.kind = Verdict::Kind::reached_horizon;
  try {
    estimate_blowup_time(global, ReactionSpec::power(2));
    FAIL("expected precondition error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::precondition);
  }
}

TEST_CASE("exponential reaction extrapolates through exp(-p sup)") {
  // z(t) = -log(1 - t) solves z' = e^z with T = 1.
  RunRecord rr;
  for (int i = 0; i < 100; ++i) {
    const double t = 1.0 - std::pow(10.0, -0.05 * i);
    rr.times.push_back(t);
    rr.sup_norm.push_back(-std::log(1.0 - t));
    rr.min_value.push_back(0.0);
    rr.dt.push_back(0.0);
  }
  rr.verdict.kind = Verdict::Kind::blew_up;
  CHECK(estimate_blowup_time(rr, ReactionSpec::exponential(1)) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("rate exponent fit") {
  const RunRecord rr = synthetic(1.0, -0.5, 0.5, 0.999, 200);
  const auto [slope, err] = fit_rate_exponent(rr, 1.0);
  CHECK(slope == doctest::Approx(-0.5).epsilon(1e-6));
  CHECK(err < 1e-6);

  RunRecord flat = rr;
  std::fill(flat.sup_norm.begin(), flat.sup_norm.end(), 3.0);
  try {
    fit_rate_exponent(flat, 1.0);
    FAIL("expected fit error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::fit);
  }
  CHECK_THROWS_AS(fit_rate_exponent(rr, 0.9), Error);
}

TEST_CASE("terminal window is the larger of 50 samples and the last decade") {
  const RunRecord rr = synthetic(1.0, -1.0, 0.0, 0.999, 1000);
  // Last decade: 1 - t <= 0.01, i.e. t >= 0.99: about 10 samples, so 50 wins.
  CHECK(rr.size() - terminal_window_start(rr, 1.0) == 50);
  // Geometric sampling: the decade holds more than 50 samples.
  RunRecord geo;
  for (int i = 0; i < 400; ++i) {
    geo.times.push_back(1.0 - std::pow(10.0, -0.01 * i));
    geo.sup_norm.push_back(1.0);
  }
  const std::size_t w = geo.times.size() - terminal_window_start(geo, 1.0);
  CHECK(w >= 100);  // 10^(-0.01 i) lands on the decade edge; rounding decides one sample
  CHECK(w <= 101);
}

TEST_CASE("lower rate bound") {
  const double p = 3.0, T = 1.0;
  RunRecord z = synthetic(T, -1.0 / (p - 1), 0.5, 0.999, 200, std::pow(p - 1, -1.0 / (p - 1)));
  CHECK(check_lower_rate(z, T, p));
  for (double& s : z.sup_norm) s *= 2.0;
  CHECK(check_lower_rate(z, T, p));
  for (double& s : z.sup_norm) s *= 0.25;
  CHECK_FALSE(check_lower_rate(z, T, p));
}
