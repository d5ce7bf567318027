#include <doctest.h>

#include <cmath>
#include <random>

#include "blowuplab/errors.hpp"
#include "blowuplab/problem.hpp"

using namespace blowuplab;

namespace {

ProblemSpec base_problem() {
  ProblemSpec ps;
  ps.domain = Interval{0, 1};
  ps.reaction = ReactionSpec::power(2);
  ps.convection = ConvectionSpec::zero(1);
  ps.sigma = SigmaSpec::neumann();
  ps.initial = InitialDataSpec::constant(1);
  return ps;
}

}  // namespace

TEST_CASE("reaction values") {
  CHECK(eval_reaction(ReactionSpec::power(2), 3.0) == 9.0);
  CHECK(eval_reaction(ReactionSpec::exponential(1), 0.0) == 1.0);
  CHECK(eval_reaction(ReactionSpec::log_linear(), 1.0) == 0.0);
  CHECK(eval_reaction(ReactionSpec::log_linear(), 0.0) == 0.0);
  CHECK(eval_reaction(ReactionSpec::zero(), 4.0) == 0.0);
  CHECK_THROWS_AS(eval_reaction(ReactionSpec::log_linear(), -0.5), Error);
  CHECK_THROWS_AS(eval_reaction(ReactionSpec::power(2.5), -0.5), Error);
}

TEST_CASE("power reaction is strictly increasing for p > 1") {
  for (double p : {1.5, 2.0, 3.0, 5.0}) {
    double prev = eval_reaction(ReactionSpec::power(p), 1e-6);
    for (double u = 2e-6; u < 100.0; u *= 1.7) {
      const double cur = eval_reaction(ReactionSpec::power(p), u);
      CHECK(cur > prev);
      prev = cur;
    }
  }
}

TEST_CASE("convection and primitive values") {
  CHECK(eval_convection(ConvectionSpec::power(1, 1, 1), 2.0) == std::vector<double>{2.0});
  CHECK(eval_convection(ConvectionSpec::exponential(1, 2, 0.5), 0.0) == std::vector<double>{2.0});
  CHECK(eval_convection(ConvectionSpec::zero(2), 3.0) == std::vector<double>{0.0, 0.0});
  CHECK(eval_primitive(ConvectionSpec::power(1, 1, 1), 2.0)[0] == doctest::Approx(2.0));
  CHECK(eval_primitive(ConvectionSpec::power(1, 3, 2), 1.0)[0] == doctest::Approx(1.0));
  CHECK(eval_primitive(ConvectionSpec::zero(1), 7.0)[0] == 0.0);
  CHECK_THROWS_AS(eval_convection(ConvectionSpec::power(1, 1, 0.5), -1.0), Error);
}

TEST_CASE("primitive differentiates back to the convection") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.0, 10.0);
  const std::vector<ConvectionComponent> comps = {
      {ConvectionComponent::Kind::power, 1.3, 2.0},
      {ConvectionComponent::Kind::power, 0.7, 0.5},
      {ConvectionComponent::Kind::exponential, 2.0, 0.3},
      {ConvectionComponent::Kind::exponential, 1.0, 0.0},
  };
  for (const auto& c : comps)
    for (int k = 0; k < 50; ++k) {
      const double u = 0.01 + U(rng), h = 1e-5 * u;
      const double fd = (eval_primitive_component(c, u + h) - eval_primitive_component(c, u - h)) / (2 * h);
      CHECK(fd == doctest::Approx(eval_convection_component(c, u)).epsilon(1e-6));
    }
}

TEST_CASE("sigma table interpolates linearly") {
  const auto s = SigmaSpec::tabulated({{0.0, 1.0}, {2.0, 3.0}});
  CHECK(s.at(1.0) == doctest::Approx(2.0));
  CHECK(SigmaSpec::neumann().at(0.3) == 0.0);
}

TEST_CASE("validation flags") {
  auto ps = base_problem();
  SUBCASE("baseline passes") {
    const auto rep = validate_problem(ps);
    CHECK(rep.hard_ok());
    CHECK(rep.find("idata2")->passed);
  }
  SUBCASE("negative sigma fails sigma0") {
    ps.sigma = SigmaSpec::dynamical(-1);
    const auto rep = validate_problem(ps);
    CHECK_FALSE(rep.find("sigma0")->passed);
    CHECK_FALSE(rep.hard_ok());
  }
  SUBCASE("zero data fails idata") {
    ps.initial = InitialDataSpec::constant(0);
    CHECK_FALSE(validate_problem(ps).find("idata")->passed);
  }
  SUBCASE("zero data with f(0) > 0 is admitted") {
    ps.reaction = ReactionSpec::exponential(1);
    ps.initial = InitialDataSpec::constant(0);
    CHECK(validate_problem(ps).find("idata")->passed);
  }
  SUBCASE("negative data fails idata") {
    ps.initial = InitialDataSpec::constant(-1);
    CHECK_FALSE(validate_problem(ps).hard_ok());
  }
  SUBCASE("constant data satisfies idata2 for power reactions") {
    ps.initial = InitialDataSpec::constant(3.5);
    ps.convection = ConvectionSpec::power(1, 1, 1);
    CHECK(validate_problem(ps).find("idata2")->passed);
  }
  SUBCASE("sine data with zero reaction fails idata2") {
    ps.reaction = ReactionSpec::zero();
    ps.initial = InitialDataSpec::sine_mode(1);
    const auto rep = validate_problem(ps);
    CHECK_FALSE(rep.find("idata2")->passed);
    CHECK_FALSE(rep.find("reactionf")->passed);
    CHECK(rep.hard_ok());  // soft flags do not block
  }
  SUBCASE("tabulated data is not evaluated for idata2") {
    const Grid g = build_grid(ps.domain, 5);
    ps.initial = InitialDataSpec::tabulated({1, 1, 1, 1, 1});
    const auto rep = validate_problem(ps, &g);
    CHECK(rep.hard_ok());
    CHECK_FALSE(rep.find("idata2")->passed);
  }
}

TEST_CASE("validation is pure") {
  auto ps = base_problem();
  ps.initial = InitialDataSpec::gaussian_bump({0.4}, 2.0, 0.3);
  const auto a = validate_problem(ps), b = validate_problem(ps);
  REQUIRE(a.checks.size() == b.checks.size());
  for (std::size_t i = 0; i < a.checks.size(); ++i) {
    CHECK(a.checks[i].name == b.checks[i].name);
    CHECK(a.checks[i].passed == b.checks[i].passed);
    CHECK(a.checks[i].detail == b.checks[i].detail);
  }
}
