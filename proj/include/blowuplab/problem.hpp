#pragma once

#include <string>
#include <utility>
#include <vector>

#include "blowuplab/grid.hpp"

namespace blowuplab {

struct ReactionSpec {
  enum class Kind { power, exponential, log_linear, zero };
  Kind kind = Kind::zero;
  double p = 0.0;

  static ReactionSpec power(double p) { return {Kind::power, p}; }
  static ReactionSpec exponential(double p) { return {Kind::exponential, p}; }
  static ReactionSpec log_linear() { return {Kind::log_linear, 0.0}; }
  static ReactionSpec zero() { return {Kind::zero, 0.0}; }
};

// One component g_i of the convection vector.
struct ConvectionComponent {
  enum class Kind { power, exponential, zero };
  Kind kind = Kind::zero;
  double alpha = 0.0;
  double q = 0.0;
};

struct ConvectionSpec {
  std::vector<ConvectionComponent> components;

  static ConvectionSpec zero(int dim);
  // alpha*u^q in every component.
  static ConvectionSpec power(int dim, double alpha, double q);
  static ConvectionSpec exponential(int dim, double alpha, double q);
  int dim() const { return static_cast<int>(components.size()); }
  bool is_zero() const;
};

struct SigmaSpec {
  enum class Kind { dynamical, neumann, dirichlet };
  Kind kind = Kind::neumann;
  double value = 0.0;
  // Optional (boundary parameter, sigma) samples, linearly interpolated.
  std::vector<std::pair<double, double>> table;

  static SigmaSpec dynamical(double sigma) { return {Kind::dynamical, sigma, {}}; }
  static SigmaSpec tabulated(std::vector<std::pair<double, double>> table);
  static SigmaSpec neumann() { return {Kind::neumann, 0.0, {}}; }
  static SigmaSpec dirichlet() { return {Kind::dirichlet, 0.0, {}}; }

  // Sigma at a boundary parameter value (0 for Neumann).
  double at(double s) const;
};

struct InitialDataSpec {
  enum class Kind { constant, gaussian_bump, sine_mode, tabulated };
  Kind kind = Kind::constant;
  double value = 0.0;            // constant level or bump/sine amplitude
  std::vector<double> center;    // gaussian_bump
  double width = 1.0;            // gaussian_bump: amplitude*exp(-|x-c|^2/width^2)
  std::vector<double> values;    // tabulated nodal values

  static InitialDataSpec constant(double c);
  static InitialDataSpec gaussian_bump(std::vector<double> center, double amplitude,
                                       double width);
  // amplitude * product of sin(pi (x - a)/(b - a)) over the axes.
  static InitialDataSpec sine_mode(double amplitude);
  static InitialDataSpec tabulated(std::vector<double> values);
};

struct ProblemSpec {
  Domain domain = Interval{};
  ReactionSpec reaction;
  ConvectionSpec convection;
  SigmaSpec sigma;
  InitialDataSpec initial;
};

double eval_reaction(const ReactionSpec& r, double u);
// f'(u), used by closed-form residuals.
double eval_reaction_derivative(const ReactionSpec& r, double u);

double eval_convection_component(const ConvectionComponent& c, double u);
double eval_primitive_component(const ConvectionComponent& c, double u);
std::vector<double> eval_convection(const ConvectionSpec& c, double u);
// Primitive G with G(0) = 0.
std::vector<double> eval_primitive(const ConvectionSpec& c, double u);

// Samples u0 on the grid. Throws domain error on a length mismatch for tabulated data.
Field sample_initial(const InitialDataSpec& init, const Grid& grid);
// Per-boundary-node sigma, in boundary_nodes() order.
std::vector<double> sample_sigma(const SigmaSpec& sigma, const Grid& grid);

struct HypothesisCheck {
  std::string name;
  bool passed = false;
  bool hard = false;  // hard failures block simulation
  std::string detail;
};

struct ValidationReport {
  std::vector<HypothesisCheck> checks;

  bool hard_ok() const;
  bool all_ok() const;
  const HypothesisCheck* find(const std::string& name) const;
};

// Checks the standing hypotheses. When grid is null a default resolution is used
// for the grid-based checks (idata, idata2).
ValidationReport validate_problem(const ProblemSpec& ps, const Grid* grid = nullptr);

}  // namespace blowuplab
