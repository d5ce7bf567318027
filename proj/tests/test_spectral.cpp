#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "blowuplab/errors.hpp"
#include "blowuplab/spectral.hpp"

using namespace blowuplab;

namespace {
constexpr double pi = std::numbers::pi;
}

TEST_CASE("analytic eigenpairs") {
  const EigenPair a = eigenpair_analytic(build_grid(Interval{0, 1}, 101));
  CHECK(a.lambda == doctest::Approx(pi * pi));
  CHECK(a.phi[50] == doctest::Approx(1.0));
  CHECK(a.phi[0] == 0.0);
  CHECK(eigenpair_analytic(build_grid(Rectangle{0, 1, 0, 1}, 11)).lambda == doctest::Approx(2 * pi * pi));
  CHECK(eigenpair_analytic(build_grid(Interval{0, 2}, 11)).lambda == doctest::Approx(pi * pi / 4));
}

TEST_CASE("numeric eigenvalues against the closed form") {
  const EigenPair e1 = eigenpair_numeric(build_grid(Interval{0, 1}, 201), 1e-12);
  CHECK(std::abs(e1.lambda - pi * pi) / (pi * pi) < 1e-3);
  const EigenPair e2 = eigenpair_numeric(build_grid(Rectangle{0, 1, 0, 1}, 101), 1e-12);
  CHECK(std::abs(e2.lambda - 2 * pi * pi) / (2 * pi * pi) < 5e-3);
  CHECK(e2.phi.max() == doctest::Approx(1.0));
}

TEST_CASE("numeric eigenvalue converges at second order") {
  for (const Domain d : {Domain{Interval{0, 1}}, Domain{Rectangle{0, 1, 0, 2}}}) {
    const double exact = eigenpair_analytic(build_grid(d, 5)).lambda;
    const double e1 = std::abs(eigenpair_numeric(build_grid(d, 21), 1e-13).lambda - exact);
    const double e2 = std::abs(eigenpair_numeric(build_grid(d, 41), 1e-13).lambda - exact);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
  }
}

TEST_CASE("numeric eigenpair does not depend on the start vector") {
  const Grid g = build_grid(Interval{0, 1}, 81);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.1, 1.0);
  std::vector<double> v(g.size());
  for (double& x : v) x = U(rng);
  const EigenPair a = eigenpair_numeric(g, 1e-13, Field(g, v));
  const EigenPair b = eigenpair_numeric(g, 1e-13, eigenpair_analytic(g).phi);
  CHECK(a.lambda == doctest::Approx(b.lambda).epsilon(1e-10));
  for (std::size_t n = 0; n < g.size(); ++n) CHECK(a.phi[n] == doctest::Approx(b.phi[n]).scale(1.0).epsilon(1e-6));
}

TEST_CASE("eigenfunction is symmetric on symmetric domains") {
  const Grid g = build_grid(Rectangle{0, 1, 0, 1}, 31);
  const EigenPair e = eigenpair_numeric(g, 1e-13);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const std::size_t mirror = g.index(30 - g.ix(n), g.iy(n));
    const std::size_t transpose = g.index(g.iy(n), g.ix(n));
    CHECK(std::abs(e.phi[n] - e.phi[mirror]) <= 1e-10);
    CHECK(std::abs(e.phi[n] - e.phi[transpose]) <= 1e-10);
  }
}

TEST_CASE("gradient integrals") {
  const EigenPair a = eigenpair_analytic(build_grid(Interval{0, 1}, 201));
  CHECK(grad_phi_m_integral(a, 2.0) == doctest::Approx(pi * pi / 2));        // 4.934802
  CHECK(grad_phi_m_integral(a, 3.0) == doctest::Approx(4 * pi * pi / 3));    // 13.159473
  CHECK(grad_phi_m_integral(a, 1.0) == doctest::Approx(2.0));
  CHECK_THROWS_AS(grad_phi_m_integral(a, 0.5), Error);
  // Quadrature path agrees with the closed form at n = 201.
  for (double m : {1.0, 2.0, 3.0})
    CHECK(grad_phi_m_integral(a, m, true) == doctest::Approx(grad_phi_m_integral(a, m)).epsilon(5e-3));
}
