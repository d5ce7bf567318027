#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "blowuplab/errors.hpp"
#include "blowuplab/grid.hpp"

using namespace blowuplab;

namespace {

Field from_fn(const Grid& g, auto fn) {
  std::vector<double> v(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) v[n] = fn(g.coords(n));
  return Field(g, std::move(v));
}

}  // namespace

TEST_CASE("interval grid spacing and normals") {
  const Grid g = build_grid(Interval{0, 1}, 11);
  CHECK(g.dim() == 1);
  CHECK(g.size() == 11);
  CHECK(g.hx() == doctest::Approx(0.1));
  REQUIRE(g.boundary_nodes().size() == 2);
  CHECK(g.boundary_nodes()[0].normal[0] == -1.0);
  CHECK(g.boundary_nodes()[1].normal[0] == 1.0);
  CHECK(g.interior_nodes().size() == 9);
}

TEST_CASE("rectangle boundary count and corner normals") {
  const Grid g = build_grid(Rectangle{0, 1, 0, 1}, 5);
  CHECK(g.boundary_nodes().size() == 16);
  std::size_t corners = 0;
  for (const auto& b : g.boundary_nodes()) {
    CHECK(std::hypot(b.normal[0], b.normal[1]) == doctest::Approx(1.0).epsilon(1e-15));
    if (b.corner) {
      ++corners;
      CHECK(std::abs(b.normal[0]) == doctest::Approx(1.0 / std::sqrt(2.0)));
    }
  }
  CHECK(corners == 4);
  const auto& c = g.boundary_nodes()[g.boundary_slot(g.index(4, 4))];
  CHECK(c.normal[0] > 0.0);
  CHECK(c.normal[1] > 0.0);
}

TEST_CASE("too coarse grids are rejected") {
  try {
    build_grid(Interval{0, 1}, 2);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_resolution);
  }
  CHECK_THROWS_AS(build_grid(Interval{1, 0}, 11), Error);
}

TEST_CASE("normal derivative on affine, constant and quadratic fields") {
  const Grid g = build_grid(Interval{0, 1}, 11);
  const Field lin = from_fn(g, [](Vec2 x) { return x[0]; });
  CHECK(normal_derivative(lin, 10) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(normal_derivative(lin, 0) == doctest::Approx(-1.0).epsilon(1e-13));
  const Field five = Field::constant(g, 5.0);
  for (const auto& b : g.boundary_nodes()) CHECK(normal_derivative(five, b.index) == 0.0);
  // Three-point one-sided stencil is exact for quadratics too.
  const Field sq = from_fn(g, [](Vec2 x) { return x[0] * x[0]; });
  CHECK(normal_derivative(sq, 10) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(normal_derivative(lin, 5), Error);
}

TEST_CASE("normal derivative on a rectangle edge and corner") {
  const Grid g = build_grid(Rectangle{0, 2, 0, 1}, 9);
  const Field f = from_fn(g, [](Vec2 x) { return 3.0 * x[0] - 2.0 * x[1] + 1.0; });
  CHECK(normal_derivative(f, g.index(8, 4)) == doctest::Approx(3.0));   // right edge
  CHECK(normal_derivative(f, g.index(4, 0)) == doctest::Approx(2.0));   // bottom edge
  CHECK(normal_derivative(f, g.index(8, 8)) == doctest::Approx((3.0 - 2.0) / std::sqrt(2.0)));
}

TEST_CASE("normal derivative is linear in the field") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const Grid g = build_grid(Rectangle{0, 1, 0, 1}, 7);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(g.size()), b(g.size()), c(g.size());
    const double s = U(rng), t = U(rng);
    for (std::size_t n = 0; n < g.size(); ++n) {
      a[n] = U(rng);
      b[n] = U(rng);
      c[n] = s * a[n] + t * b[n];
    }
    for (const auto& bn : g.boundary_nodes()) {
      const double lhs = normal_derivative(g, c, bn.index);
      const double rhs = s * normal_derivative(g, a, bn.index) + t * normal_derivative(g, b, bn.index);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12).scale(1.0));
    }
  }
}

TEST_CASE("refinement n -> 2n-1 nests the nodes") {
  const Domain d = Rectangle{-1, 2, 0, 0.5};
  const Grid coarse = build_grid(d, 6), fine = build_grid(d, 11);
  std::set<std::pair<double, double>> fine_pts;
  for (std::size_t n = 0; n < fine.size(); ++n) fine_pts.insert({fine.x(n), fine.y(n)});
  for (std::size_t n = 0; n < coarse.size(); ++n) {
    const std::size_t fn = fine.index(2 * coarse.ix(n), 2 * coarse.iy(n));
    CHECK(fine.x(fn) == doctest::Approx(coarse.x(n)).epsilon(1e-15));
    CHECK(fine.y(fn) == doctest::Approx(coarse.y(n)).epsilon(1e-15));
  }
}

TEST_CASE("fields reject non-finite values and length mismatches") {
  const Grid g = build_grid(Interval{0, 1}, 5);
  CHECK_THROWS_AS(Field(g, {0, 1, NAN, 0, 0}), Error);
  CHECK_THROWS_AS(Field(g, {0, 1}), Error);
  try {
    Field(g, {0, INFINITY, 0, 0, 0});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_field);
  }
}

TEST_CASE("trapezoidal weights integrate affine data exactly") {
  const Grid g = build_grid(Rectangle{0, 2, 0, 3}, 9);
  const Field one = Field::constant(g, 1.0);
  CHECK(integrate(g, one.values()) == doctest::Approx(6.0));
  const Field lin = from_fn(g, [](Vec2 x) { return x[0] + x[1]; });
  CHECK(integrate(g, lin.values()) == doctest::Approx(6.0 * (1.0 + 1.5)));
}

TEST_CASE("boundary parameter runs counter-clockwise") {
  const Grid g = build_grid(Rectangle{0, 1, 0, 1}, 5);
  CHECK(g.boundary_parameter(g.index(0, 0)) == doctest::Approx(0.0));
  CHECK(g.boundary_parameter(g.index(4, 0)) == doctest::Approx(1.0));
  CHECK(g.boundary_parameter(g.index(4, 4)) == doctest::Approx(2.0));
  CHECK(g.boundary_parameter(g.index(0, 4)) == doctest::Approx(3.0));
}
