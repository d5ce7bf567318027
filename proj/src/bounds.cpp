#include "blowuplab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "blowuplab/errors.hpp"

namespace blowuplab {

double mass_functional(const Field& u, const EigenPair& ep, double m) {
  if (!u.grid().same_layout(ep.phi.grid()))
    fail(ErrorKind::domain, "mass functional: field and eigenfunction grids differ");
  const auto probe = make_mass_probe(ep, m);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += probe.weights[i] * u[i];
  return s;
}

MassProbe make_mass_probe(const EigenPair& ep, double m) {
  const Grid& grid = ep.phi.grid();
  const auto w = grid.weights();
  MassProbe probe;
  probe.m = m;
  probe.weights.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    probe.weights[i] = w[i] * std::pow(std::max(ep.phi[i], 0.0), m);
  return probe;
}

GrowthCheck check_primitive_growth(const ConvectionSpec& conv, double alpha, double q,
                                   double omega_max, std::size_t samples) {
  if (!(omega_max > 0.0) || samples < 2)
    fail(ErrorKind::domain, "growth check needs omega_max > 0 and at least 2 samples");
  GrowthCheck gc;
  gc.samples = samples;
  gc.passed = true;
  // Log-spaced over 12 decades below omega_max.
  const double lo = std::log(omega_max) - 12.0 * std::log(10.0);
  const double hi = std::log(omega_max);
  for (std::size_t k = 0; k < samples; ++k) {
    const double w = std::exp(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(samples - 1));
    const double wq = std::pow(w, q);
    for (const auto& c : conv.components) {
      const double G = eval_primitive_component(c, w);
      const double ratio = G / wq;
      if (ratio > gc.worst_ratio) {
        gc.worst_ratio = ratio;
        gc.worst_omega = w;
      }
      if (G > alpha * wq * (1.0 + 1e-12)) gc.passed = false;
    }
  }
  return gc;
}

namespace {

void check_exponents(double p, double q, double alpha) {
  if (!(q > 1.0 && q < p)) {
    std::ostringstream os;
    os << "eigenfunction bound needs 1 < q < p (got p=" << p << ", q=" << q << ")";
    fail(ErrorKind::domain, os.str());
  }
  if (!(alpha > 0.0)) fail(ErrorKind::domain, "eigenfunction bound needs alpha > 0");
}

}  // namespace

BoundsInput make_bounds_input(double p, double q, double alpha, EigenPair eigen,
                              const ConvectionSpec& conv, double omega_max) {
  check_exponents(p, q, alpha);
  const GrowthCheck gc = check_primitive_growth(conv, alpha, q, omega_max);
  if (!gc.passed) {
    std::ostringstream os;
    os << "convection primitive violates G(w) <= " << alpha << " w^" << q << " at w="
       << gc.worst_omega << " (G/w^q = " << gc.worst_ratio << ")";
    fail(ErrorKind::domain, os.str());
  }
  BoundsInput bi;
  bi.p = p;
  bi.q = q;
  bi.alpha = alpha;
  bi.omega_measure = measure(eigen.phi.grid().domain());
  bi.eigen = std::move(eigen);
  return bi;
}

BoundsReport blowup_constant(const BoundsInput& bi) {
  check_exponents(bi.p, bi.q, bi.alpha);
  const double p = bi.p, q = bi.q, alpha = bi.alpha, lambda = bi.eigen.lambda;
  const double omega = bi.omega_measure;
  const double m = bi.m();
  BoundsReport br;
  br.grad_phi_integral = grad_phi_m_integral(bi.eigen, m);

  br.C = (p - 1.0) * omega * std::pow(4.0 * lambda / (p - q), 1.0 / (p - 1.0)) +
         std::pow(4.0 * q / (p - q), q / (p - q)) * std::pow(alpha, m) * br.grad_phi_integral;

  // Young-inequality split: C1 X^(1/p) <= X/4 + C3, C2 X^(q/p) <= X/4 + C4.
  br.C1 = m * lambda * std::pow(omega, (p - 1.0) / p);
  br.C2 = m * alpha * std::pow(br.grad_phi_integral, 1.0 / m);
  br.eps1 = std::pow(p, 1.0 / p) / (std::pow(4.0, 1.0 / p) * br.C1);
  br.eps2 = std::pow(p, q / p) / (std::pow(4.0 * q, q / p) * br.C2);
  br.C3 = (p - 1.0) / (p * std::pow(br.eps1, p / (p - 1.0)));
  br.C4 = 1.0 / (m * std::pow(br.eps2, m));

  br.threshold = std::pow(2.0 * std::pow(omega, p - 1.0) * br.C, 1.0 / p);
  return br;
}

BoundsReport check_condition_and_bound(BoundsReport br, double M0, double p, double omega_measure) {
  br.M0 = M0;
  br.condition_met = M0 > br.threshold;
  br.T_tilde.reset();
  if (br.condition_met) {
    const double denom = (p - 1.0) * (std::pow(omega_measure, 1.0 - p) * std::pow(M0, p) - 2.0 * br.C);
    if (denom > 0.0) br.T_tilde = 2.0 * M0 / denom;
  }
  return br;
}

BoundsReport check_condition_and_bound(BoundsReport br, const Field& u0, const EigenPair& ep,
                                       double p, double m, double omega_measure) {
  return check_condition_and_bound(std::move(br), mass_functional(u0, ep, m), p, omega_measure);
}

namespace {

constexpr std::size_t kMinSamples = 10;
constexpr std::size_t kWindow = 50;

struct Line {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double x_var = 0.0;
  double y_var = 0.0;
};

// Weighted least squares; empty weights mean unit weights.
Line least_squares(const std::vector<double>& x, const std::vector<double>& y,
                   const std::vector<double>& w = {}) {
  const double n = static_cast<double>(x.size());
  auto wt = [&](std::size_t i) { return w.empty() ? 1.0 : w[i]; };
  double xm = 0.0, ym = 0.0, ws = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xm += wt(i) * x[i];
    ym += wt(i) * y[i];
    ws += wt(i);
  }
  xm /= ws;
  ym /= ws;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += wt(i) * (x[i] - xm) * (x[i] - xm);
    sxy += wt(i) * (x[i] - xm) * (y[i] - ym);
    syy += wt(i) * (y[i] - ym) * (y[i] - ym);
  }
  // Spreads below rounding level of the data count as zero.
  double xs = 0.0, ys = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xs += wt(i) * x[i] * x[i];
    ys += wt(i) * y[i] * y[i];
  }
  Line l;
  l.x_var = sxx > 1e-24 * xs ? sxx : 0.0;
  l.y_var = syy > 1e-24 * ys ? syy : 0.0;
  if (l.x_var == 0.0) return l;
  l.slope = sxy / sxx;
  l.intercept = ym - l.slope * xm;
  if (x.size() > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - (l.intercept + l.slope * x[i]);
      rss += wt(i) * r * r;
    }
    l.slope_stderr = std::sqrt(rss / (n - 2.0) / sxx * (n / ws));
  }
  return l;
}

void require_blowup(const RunRecord& rr, const char* who) {
  if (rr.verdict.kind != Verdict::Kind::blew_up)
    fail(ErrorKind::precondition, std::string(who) + " needs a blown-up run");
  if (rr.size() < kMinSamples)
    fail(ErrorKind::precondition, std::string(who) + " needs at least 10 samples, got " +
                                      std::to_string(rr.size()));
}

double root_from_window(const RunRecord& rr, const ReactionSpec& reaction, std::size_t first) {
  std::vector<double> t, y, w;
  // Centre times on the last sample to keep the fit well conditioned near T.
  const double t0 = rr.times.back();
  for (std::size_t i = first; i < rr.size(); ++i) {
    t.push_back(rr.times[i] - t0);
    const double s = rr.sup_norm[i];
    y.push_back(reaction.kind == ReactionSpec::Kind::power ? std::pow(s, 1.0 - reaction.p)
                                                           : std::exp(-reaction.p * s));
    // Relative residuals: the samples closest to T fix the root.
    w.push_back(y.back() > 0.0 ? 1.0 / (y.back() * y.back()) : 0.0);
  }
  const Line l = least_squares(t, y, w);
  if (l.x_var == 0.0 || l.slope == 0.0)
    fail(ErrorKind::fit, "blow-up time fit is degenerate");
  return t0 - l.intercept / l.slope;
}

}  // namespace

std::size_t terminal_window_start(const RunRecord& rr, double T_est) {
  const std::size_t n = rr.size();
  std::size_t by_count = n > kWindow ? n - kWindow : 0;
  const double d_last = T_est - rr.times.back();
  std::size_t by_decade = n;
  if (d_last > 0.0) {
    while (by_decade > 0 && T_est - rr.times[by_decade - 1] <= 10.0 * d_last) --by_decade;
  }
  return std::min(by_count, by_decade);
}

double estimate_blowup_time(const RunRecord& rr, const ReactionSpec& reaction) {
  require_blowup(rr, "estimate_blowup_time");
  if (reaction.kind != ReactionSpec::Kind::power && reaction.kind != ReactionSpec::Kind::exponential)
    fail(ErrorKind::precondition, "blow-up time extrapolation needs a power or exponential reaction");
  const std::size_t n = rr.size();
  double T = root_from_window(rr, reaction, n > kWindow ? n - kWindow : 0);
  const std::size_t first = terminal_window_start(rr, T);
  if (first < (n > kWindow ? n - kWindow : 0)) T = root_from_window(rr, reaction, first);
  return T;
}

std::pair<double, double> fit_rate_exponent(const RunRecord& rr, double T_est) {
  require_blowup(rr, "fit_rate_exponent");
  if (!(T_est > rr.times.back()))
    fail(ErrorKind::precondition, "fit_rate_exponent needs T_est beyond the last sample");
  const std::size_t first = terminal_window_start(rr, T_est);
  std::vector<double> x, y;
  for (std::size_t i = first; i < rr.size(); ++i) {
    x.push_back(std::log(T_est - rr.times[i]));
    y.push_back(std::log(rr.sup_norm[i]));
  }
  if (x.size() < 3) fail(ErrorKind::fit, "rate fit window has fewer than 3 samples");
  const Line l = least_squares(x, y);
  if (l.x_var == 0.0 || l.y_var == 0.0)
    fail(ErrorKind::fit, "rate fit window has zero variance");
  return {l.slope, l.slope_stderr};
}

bool check_lower_rate(const RunRecord& rr, double T_est, double p, double tol) {
  require_blowup(rr, "check_lower_rate");
  const double bound = std::pow(p - 1.0, -1.0 / (p - 1.0)) * (1.0 - tol);
  for (std::size_t i = terminal_window_start(rr, T_est); i < rr.size(); ++i) {
    const double gap = T_est - rr.times[i];
    if (gap <= 0.0) return false;
    if (rr.sup_norm[i] * std::pow(gap, 1.0 / (p - 1.0)) < bound) return false;
  }
  return true;
}

BlowupEstimate analyse_blowup(const RunRecord& rr, const ReactionSpec& reaction) {
  BlowupEstimate est;
  est.T_est = estimate_blowup_time(rr, reaction);
  const std::size_t first = terminal_window_start(rr, est.T_est);
  est.fit_window = {rr.times[first], rr.times.back()};
  est.fit_samples = rr.size() - first;
  if (est.T_est > rr.times.back()) {
    std::tie(est.exponent, est.exponent_stderr) = fit_rate_exponent(rr, est.T_est);
    if (reaction.kind == ReactionSpec::Kind::power)
      est.lower_bound_ok = check_lower_rate(rr, est.T_est, reaction.p);
  }
  return est;
}

}  // namespace blowuplab
