#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>

#include "blowuplab/grid.hpp"
#include "blowuplab/problem.hpp"
#include "blowuplab/solver.hpp"

namespace blowuplab {

// U(x,t) = K exp(alpha x_j + eta_rate t). eta is linear because sigma does not
// depend on time in the simulator.
struct UpperSolution {
  double K = 1.0;
  double alpha = 1.0;
  int axis = 0;  // j, zero-based
  double eta_rate = 1.0;
  double delta = 1.0;  // inf sigma / sup sigma

  double eta(double t) const { return eta_rate * t; }
  double value(const Vec2& x, double t) const;
};

// Sub-solution parameters for the transformed exponential problem.
struct SubSolutionSW {
  double p = 0.0, q = 0.0;
  double gamma = 0.0;
  double m_ss = 0.0;
  double A = 0.0;
  double eps = 0.0;
  double kappa = 0.0;
  double mu = 0.0;
  double C_g = 0.0;

  double W(double y) const { return 1.0 + A / 2.0 - y * y / (2.0 * A); }
  double support_radius() const;  // root of W
  double blowup_time() const { return 1.0 / eps; }
  // V at distance r from the centre, clamped to 0 outside the support.
  double value(double r, double t) const;
};

struct OdeSolution {
  ReactionSpec reaction;
  double z0 = 0.0;
  double T_z = std::numeric_limits<double>::infinity();

  bool blows_up() const { return T_z < std::numeric_limits<double>::infinity(); }
  // Spatially homogeneous solution z(t); throws domain error for t >= T_z.
  double z(double t) const;
};

// Throws inapplicable error when inf sigma = 0, the convection component j is
// below C_conv u^(p-1), or alpha g_j(w) >= f(w)/w fails on (0, omega_max].
UpperSolution build_upper_solution(const ProblemSpec& ps, int axis, double C_conv,
                                   const Grid& grid, double omega_max = 1e6);

// Throws inapplicable error for p <= 1 and domain error unless 0 <= q < p.
SubSolutionSW build_subsolution_sw(double p, double q, double C_g);

// Smallest C with |g(u)| <= C e^(qu) on [0, u_max].
double sample_convection_exp_bound(const ConvectionSpec& conv, double q, double u_max = 50.0);

// Throws domain error for z0 < 0.
OdeSolution ode_oracle(const ReactionSpec& r, double z0);

struct ResidualReport {
  double min_interior = std::numeric_limits<double>::infinity();
  double min_boundary = std::numeric_limits<double>::infinity();
  double max_value = -std::numeric_limits<double>::infinity();  // sub-solution residual
  double scale = 0.0;
  std::size_t worst_node = 0;
  double worst_time = 0.0;
  std::size_t evaluated = 0;
  bool ok = true;
};

// Interior residual dtU - lap U + g(U).grad U - f(U) and boundary residual
// sigma dtU + d_nu U, from closed-form derivatives. Throws inequality_violation
// (naming node and time) if either minimum is below -1e-10 * scale.
ResidualReport residual_upper(const UpperSolution& us, const ProblemSpec& ps, const Grid& grid,
                              std::span<const double> t_samples);

// R = dtV - lap V + mu |grad V|^2 - kappa V^((p+gamma)/gamma) at nodes where
// V > 0, with |x| measured from the domain centre. ok is false when
// max R > 1e-10 * scale; the caller decides what to do with a violation.
ResidualReport residual_sub_sw(const SubSolutionSW& ss, const Grid& grid,
                               std::span<const double> t_samples, double tol = 1e-10);

struct OrderingReport {
  double max_diff = -std::numeric_limits<double>::infinity();  // max over matched (a - b)
  double scale = 0.0;                                           // max sup-norm seen
  double worst_time = 0.0;
  std::size_t worst_node = 0;
  std::size_t matched = 0;
  bool a_le_b = false;
};

// Pointwise comparison over snapshots whose times agree within the local step.
// Throws domain error if the grids differ and precondition error if no
// snapshot times match.
OrderingReport compare_runs(const RunRecord& a, const RunRecord& b, double tol = 1e-4,
                            double t_max = std::numeric_limits<double>::infinity());

}  // namespace blowuplab
