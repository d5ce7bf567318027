#include "blowuplab/comparison.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "blowuplab/errors.hpp"

namespace blowuplab {

double UpperSolution::value(const Vec2& x, double t) const {
  return K * std::exp(alpha * x[axis] + eta(t));
}

double SubSolutionSW::support_radius() const { return std::sqrt(A * (A + 2.0)); }

double SubSolutionSW::value(double r, double t) const {
  const double s = 1.0 - eps * t;
  if (!(s > 0.0)) fail(ErrorKind::domain, "sub-solution evaluated past its blow-up time");
  const double w = W(r / std::pow(s, m_ss));
  return w > 0.0 ? std::pow(s, -1.0 / (p - 1.0)) * w : 0.0;
}

double OdeSolution::z(double t) const {
  if (t < 0.0) fail(ErrorKind::domain, "ode solution needs t >= 0");
  if (t >= T_z) fail(ErrorKind::domain, "ode solution requested at or past its blow-up time");
  switch (reaction.kind) {
    case ReactionSpec::Kind::power:
      if (z0 == 0.0) return 0.0;
      return std::pow(std::pow(z0, 1.0 - reaction.p) - (reaction.p - 1.0) * t,
                      -1.0 / (reaction.p - 1.0));
    case ReactionSpec::Kind::exponential:
      return -std::log(std::exp(-reaction.p * z0) - reaction.p * t) / reaction.p;
    case ReactionSpec::Kind::log_linear:
      // ln z = e^t ln z0
      if (z0 == 0.0) return 0.0;
      return std::exp(std::exp(t) * std::log(z0));
    case ReactionSpec::Kind::zero: return z0;
  }
  return z0;
}

OdeSolution ode_oracle(const ReactionSpec& r, double z0) {
  if (!(z0 >= 0.0)) fail(ErrorKind::domain, "ode oracle needs z0 >= 0");
  OdeSolution s;
  s.reaction = r;
  s.z0 = z0;
  switch (r.kind) {
    case ReactionSpec::Kind::power:
      if (z0 > 0.0) s.T_z = std::pow(z0, 1.0 - r.p) / (r.p - 1.0);
      break;
    case ReactionSpec::Kind::exponential: s.T_z = std::exp(-r.p * z0) / r.p; break;
    case ReactionSpec::Kind::log_linear:  // int dy/(y ln y) diverges
    case ReactionSpec::Kind::zero: break;
  }
  return s;
}

namespace {

std::vector<double> log_samples(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t k = 0; k < n; ++k)
    out[k] = std::exp(a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1));
  return out;
}

}  // namespace

UpperSolution build_upper_solution(const ProblemSpec& ps, int axis, double C_conv,
                                   const Grid& grid, double omega_max) {
  if (axis < 0 || axis >= grid.dim()) fail(ErrorKind::domain, "axis out of range");
  if (ps.convection.dim() != grid.dim())
    fail(ErrorKind::domain, "convection dimension does not match the grid");
  if (!(C_conv > 0.0)) fail(ErrorKind::inapplicable, "upper solution needs C_conv > 0");
  if (ps.sigma.kind != SigmaSpec::Kind::dynamical)
    fail(ErrorKind::inapplicable, "upper solution needs a dynamical boundary with inf sigma > 0");
  const auto sig = sample_sigma(ps.sigma, grid);
  const double lo = *std::min_element(sig.begin(), sig.end());
  const double hi = *std::max_element(sig.begin(), sig.end());
  if (!(lo > 0.0)) fail(ErrorKind::inapplicable, "upper solution needs inf sigma > 0");

  const Field u0 = sample_initial(ps.initial, grid);
  const auto& gj = ps.convection.components[axis];
  const double w_lo = u0.min() > 0.0 ? u0.min() : 1e-12 * omega_max;
  for (double w : log_samples(w_lo, omega_max, 1000)) {
    const double g = eval_convection_component(gj, w);
    if (ps.reaction.kind == ReactionSpec::Kind::power &&
        g < C_conv * std::pow(w, ps.reaction.p - 1.0) * (1.0 - 1e-12)) {
      std::ostringstream os;
      os << "g_j(" << w << ") = " << g << " is below C_conv u^(p-1)";
      fail(ErrorKind::inapplicable, os.str());
    }
    if (C_conv * g < eval_reaction(ps.reaction, w) / w * (1.0 - 1e-12)) {
      std::ostringstream os;
      os << "alpha g_j(w) >= f(w)/w fails at w = " << w;
      fail(ErrorKind::inapplicable, os.str());
    }
  }

  UpperSolution us;
  us.alpha = C_conv;
  us.axis = axis;
  us.delta = lo / hi;
  us.eta_rate = C_conv / (us.delta * hi) + C_conv * C_conv;
  double K = 0.0;
  for (std::size_t n = 0; n < grid.size(); ++n)
    K = std::max(K, u0[n] * std::exp(-us.alpha * grid.coords(n)[axis] - us.eta(0.0)));
  us.K = std::max(K, std::numeric_limits<double>::min());
  return us;
}

double sample_convection_exp_bound(const ConvectionSpec& conv, double q, double u_max) {
  double C = 0.0;
  const std::size_t n = 1001;
  for (std::size_t k = 0; k < n; ++k) {
    const double u = u_max * static_cast<double>(k) / static_cast<double>(n - 1);
    double g2 = 0.0;
    for (double g : eval_convection(conv, u)) g2 += g * g;
    C = std::max(C, std::sqrt(g2) / std::exp(q * u));
  }
  return C;
}

SubSolutionSW build_subsolution_sw(double p, double q, double C_g) {
  if (!(p > 1.0)) fail(ErrorKind::inapplicable, "self-similar sub-solution needs p > 1");
  if (!(q >= 0.0 && q < p)) fail(ErrorKind::domain, "self-similar sub-solution needs 0 <= q < p");
  SubSolutionSW ss;
  ss.p = p;
  ss.q = q;
  ss.C_g = C_g;
  ss.gamma = 0.5 * (std::max(q, 0.5) + p);
  ss.kappa = ss.gamma - 0.5;
  ss.mu = (2.0 + C_g * C_g) / 2.0;
  double m_bound = 0.5;
  if (q > 0.0) m_bound = std::min(m_bound, (p - q) / (q * (p - 1.0)));
  ss.m_ss = 0.5 * m_bound;
  ss.A = 2.0 / (ss.m_ss * (p - 1.0));
  ss.eps = 0.5 * (2.0 * ss.kappa * (p - 1.0) / (2.0 + ss.A));
  return ss;
}

ResidualReport residual_upper(const UpperSolution& us, const ProblemSpec& ps, const Grid& grid,
                              std::span<const double> t_samples) {
  const auto sig = sample_sigma(ps.sigma, grid);
  const double eta_dot = us.eta_rate;
  ResidualReport rep;
  double worst = std::numeric_limits<double>::infinity();
  bool worst_on_boundary = false;
  for (double t : t_samples) {
    for (std::size_t n = 0; n < grid.size(); ++n) {
      const Vec2 x = grid.coords(n);
      const double U = us.value(x, t);
      const double dtU = eta_dot * U;
      Vec2 grad{0.0, 0.0};
      grad[us.axis] = us.alpha * U;
      const double lapU = us.alpha * us.alpha * U;
      double conv = 0.0;
      for (int k = 0; k < grid.dim(); ++k)
        conv += eval_convection_component(ps.convection.components[k], U) * grad[k];
      const double f = eval_reaction(ps.reaction, U);
      const double r = dtU - lapU + conv - f;
      rep.scale = std::max({rep.scale, std::abs(dtU), std::abs(lapU), std::abs(conv), std::abs(f)});
      rep.min_interior = std::min(rep.min_interior, r);
      ++rep.evaluated;
      if (r < worst) {
        worst = r;
        rep.worst_node = n;
        rep.worst_time = t;
        worst_on_boundary = false;
      }
    }
    for (std::size_t s = 0; s < grid.boundary_nodes().size(); ++s) {
      const auto& b = grid.boundary_nodes()[s];
      const double U = us.value(grid.coords(b.index), t);
      const double term_t = sig[s] * eta_dot * U;
      const double term_n = us.alpha * b.normal[us.axis] * U;
      const double r = term_t + term_n;
      rep.scale = std::max({rep.scale, std::abs(term_t), std::abs(term_n)});
      rep.min_boundary = std::min(rep.min_boundary, r);
      if (r < worst) {
        worst = r;
        rep.worst_node = b.index;
        rep.worst_time = t;
        worst_on_boundary = true;
      }
    }
  }
  const double floor = -1e-10 * rep.scale;
  rep.ok = rep.min_interior >= floor && rep.min_boundary >= floor;
  if (!rep.ok) {
    std::ostringstream os;
    os << "upper-solution " << (worst_on_boundary ? "boundary" : "interior")
       << " residual " << worst << " at node " << rep.worst_node << ", t = " << rep.worst_time;
    fail(ErrorKind::inequality_violation, os.str());
  }
  return rep;
}

ResidualReport residual_sub_sw(const SubSolutionSW& ss, const Grid& grid,
                               std::span<const double> t_samples, double tol) {
  Vec2 centre{0.0, 0.0};
  if (const auto* iv = std::get_if<Interval>(&grid.domain())) {
    centre[0] = 0.5 * (iv->a + iv->b);
  } else {
    const auto& r = std::get<Rectangle>(grid.domain());
    centre = {0.5 * (r.a1 + r.b1), 0.5 * (r.a2 + r.b2)};
  }
  const double N = grid.dim();
  const double a = 1.0 / (ss.p - 1.0);
  const double P = (ss.p + ss.gamma) / ss.gamma;
  ResidualReport rep;
  for (double t : t_samples) {
    if (!(t >= 0.0 && t < ss.blowup_time()))
      fail(ErrorKind::precondition, "sub-solution residual needs 0 <= t < 1/eps");
    const double s = 1.0 - ss.eps * t;
    const double sa = std::pow(s, -a);
    const double sm = std::pow(s, ss.m_ss);
    for (std::size_t n = 0; n < grid.size(); ++n) {
      const Vec2 x = grid.coords(n);
      double r2 = 0.0;
      for (int k = 0; k < grid.dim(); ++k) r2 += (x[k] - centre[k]) * (x[k] - centre[k]);
      const double y = std::sqrt(r2) / sm;
      const double W = ss.W(y);
      if (!(W > 0.0)) continue;
      const double V = sa * W;
      // dy/dt = m eps y / s, W' = -y/A, W'' = -1/A.
      const double dtV = ss.eps * sa / s * (a * W - ss.m_ss * y * y / ss.A);
      const double lapV = -N * sa / (sm * sm) / ss.A;
      const double grad2 = sa * sa / (sm * sm) * y * y / (ss.A * ss.A);
      const double react = ss.kappa * std::pow(V, P);
      const double R = dtV - lapV + ss.mu * grad2 - react;
      rep.scale = std::max({rep.scale, std::abs(dtV), std::abs(lapV), ss.mu * grad2, react});
      ++rep.evaluated;
      if (R > rep.max_value) {
        rep.max_value = R;
        rep.worst_node = n;
        rep.worst_time = t;
      }
    }
  }
  rep.ok = rep.evaluated == 0 || rep.max_value <= tol * rep.scale;
  return rep;
}

OrderingReport compare_runs(const RunRecord& a, const RunRecord& b, double tol, double t_max) {
  OrderingReport rep;
  if (a.snapshots.empty() || b.snapshots.empty())
    fail(ErrorKind::precondition, "compare_runs needs snapshots in both runs");
  if (!a.snapshots.front().field.grid().same_layout(b.snapshots.front().field.grid()))
    fail(ErrorKind::domain, "compare_runs: runs live on different grids");

  auto local_dt = [&](double t) {
    auto it = std::lower_bound(a.times.begin(), a.times.end(), t);
    if (it == a.times.end()) return a.dt.empty() ? 0.0 : a.dt.back();
    return a.dt[static_cast<std::size_t>(it - a.times.begin())];
  };

  for (const auto& sa : a.snapshots) {
    if (sa.t > t_max) break;
    auto it = std::lower_bound(b.snapshots.begin(), b.snapshots.end(), sa.t,
                               [](const Snapshot& s, double t) { return s.t < t; });
    const Snapshot* best = nullptr;
    for (auto cand : {it, it == b.snapshots.begin() ? it : it - 1}) {
      if (cand == b.snapshots.end()) continue;
      if (!best || std::abs(cand->t - sa.t) < std::abs(best->t - sa.t)) best = &*cand;
    }
    if (!best || std::abs(best->t - sa.t) > std::max(local_dt(sa.t), 1e-12 * std::max(1.0, sa.t)))
      continue;
    ++rep.matched;
    const auto va = sa.field.values();
    const auto vb = best->field.values();
    for (std::size_t n = 0; n < va.size(); ++n) {
      rep.scale = std::max({rep.scale, std::abs(va[n]), std::abs(vb[n])});
      const double d = va[n] - vb[n];
      if (d > rep.max_diff) {
        rep.max_diff = d;
        rep.worst_node = n;
        rep.worst_time = sa.t;
      }
    }
  }
  if (rep.matched == 0) fail(ErrorKind::precondition, "compare_runs: no snapshot times match");
  rep.a_le_b = rep.max_diff <= tol * rep.scale;
  return rep;
}

}  // namespace blowuplab
