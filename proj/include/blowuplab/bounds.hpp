#pragma once

#include <optional>
#include <utility>

#include "blowuplab/grid.hpp"
#include "blowuplab/problem.hpp"
#include "blowuplab/solver.hpp"
#include "blowuplab/spectral.hpp"

namespace blowuplab {

// Eigenfunction-method inputs: growth G(w) <= alpha w^q of the convection
// primitive against the power reaction u^p.
struct BoundsInput {
  double p = 0.0;
  double q = 0.0;
  double alpha = 0.0;
  EigenPair eigen;
  double omega_measure = 0.0;

  double m() const { return p / (p - q); }
};

struct BoundsReport {
  double C = 0.0;
  double C1 = 0.0, C2 = 0.0, C3 = 0.0, C4 = 0.0;
  double eps1 = 0.0, eps2 = 0.0;
  double grad_phi_integral = 0.0;  // int |grad phi|^m
  double threshold = 0.0;
  double M0 = 0.0;
  bool condition_met = false;
  std::optional<double> T_tilde;
};

struct BlowupEstimate {
  double T_est = 0.0;
  std::pair<double, double> fit_window{0.0, 0.0};
  std::size_t fit_samples = 0;
  double exponent = 0.0;
  double exponent_stderr = 0.0;
  bool lower_bound_ok = false;
};

// Trapezoidal integral of u * phi^m. Throws domain error on a grid mismatch.
double mass_functional(const Field& u, const EigenPair& ep, double m);
MassProbe make_mass_probe(const EigenPair& ep, double m);

// Result of sampling G_i(w) <= alpha w^q on log-spaced w in (0, omega_max].
struct GrowthCheck {
  bool passed = false;
  double worst_ratio = 0.0;  // max_i,w G_i(w) / w^q
  double worst_omega = 0.0;
  std::size_t samples = 0;
};

GrowthCheck check_primitive_growth(const ConvectionSpec& conv, double alpha, double q,
                                   double omega_max, std::size_t samples = 1000);

// Validating constructor: q in (1, p), alpha > 0, and the growth gate must pass
// for conv on (0, omega_max]. Throws domain error otherwise.
BoundsInput make_bounds_input(double p, double q, double alpha, EigenPair eigen,
                              const ConvectionSpec& conv, double omega_max);

// C, the intermediate constants and the admissibility threshold.
// Throws domain error unless 1 < q < p and alpha > 0.
BoundsReport blowup_constant(const BoundsInput& bi);

// Completes the report from the initial mass M0 (strict comparison with the threshold).
BoundsReport check_condition_and_bound(BoundsReport br, double M0, double p, double omega_measure);
BoundsReport check_condition_and_bound(BoundsReport br, const Field& u0, const EigenPair& ep,
                                       double p, double m, double omega_measure);

// Blow-up time extrapolated from the terminal window: root of the least-squares
// line through (t, sup^(1-p)) for power reactions, (t, exp(-p sup)) for
// exponential ones. Throws precondition error unless the run blew up with at
// least 10 samples.
double estimate_blowup_time(const RunRecord& rr, const ReactionSpec& reaction);

// Indices [first, size) of the terminal window: last 50 samples or the last
// decade of T_est - t, whichever holds more samples.
std::size_t terminal_window_start(const RunRecord& rr, double T_est);

// Slope (and its standard error) of log sup vs log(T_est - t) over the terminal
// window. Throws fit error for degenerate windows.
std::pair<double, double> fit_rate_exponent(const RunRecord& rr, double T_est);

// sup(t) (T_est - t)^(1/(p-1)) >= (p-1)^(-1/(p-1)) (1 - tol) across the window.
bool check_lower_rate(const RunRecord& rr, double T_est, double p, double tol = 0.05);

// estimate_blowup_time + fit_rate_exponent + check_lower_rate (power reaction).
BlowupEstimate analyse_blowup(const RunRecord& rr, const ReactionSpec& reaction);

}  // namespace blowuplab
