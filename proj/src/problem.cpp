#include "blowuplab/problem.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "blowuplab/errors.hpp"

namespace blowuplab {

namespace {

bool is_integer(double q) { return std::floor(q) == q; }

double checked_pow(double u, double q, const char* what) {
  if (u < 0.0 && !is_integer(q)) {
    std::ostringstream os;
    os << what << ": fractional power " << q << " of negative value " << u;
    fail(ErrorKind::domain, os.str());
  }
  return std::pow(u, q);
}

}  // namespace

ConvectionSpec ConvectionSpec::zero(int dim) {
  return {std::vector<ConvectionComponent>(static_cast<std::size_t>(dim))};
}

ConvectionSpec ConvectionSpec::power(int dim, double alpha, double q) {
  return {std::vector<ConvectionComponent>(
      static_cast<std::size_t>(dim), {ConvectionComponent::Kind::power, alpha, q})};
}

ConvectionSpec ConvectionSpec::exponential(int dim, double alpha, double q) {
  return {std::vector<ConvectionComponent>(
      static_cast<std::size_t>(dim), {ConvectionComponent::Kind::exponential, alpha, q})};
}

bool ConvectionSpec::is_zero() const {
  return std::all_of(components.begin(), components.end(), [](const auto& c) {
    return c.kind == ConvectionComponent::Kind::zero || c.alpha == 0.0;
  });
}

SigmaSpec SigmaSpec::tabulated(std::vector<std::pair<double, double>> table) {
  std::sort(table.begin(), table.end());
  SigmaSpec s{Kind::dynamical, 0.0, std::move(table)};
  if (!s.table.empty()) s.value = s.table.front().second;
  return s;
}

double SigmaSpec::at(double s) const {
  if (kind != Kind::dynamical) return 0.0;
  if (table.empty()) return value;
  if (s <= table.front().first) return table.front().second;
  if (s >= table.back().first) return table.back().second;
  auto hi = std::upper_bound(table.begin(), table.end(), s,
                             [](double v, const auto& e) { return v < e.first; });
  auto lo = hi - 1;
  const double w = (s - lo->first) / (hi->first - lo->first);
  return lo->second + w * (hi->second - lo->second);
}

InitialDataSpec InitialDataSpec::constant(double c) {
  InitialDataSpec s;
  s.kind = Kind::constant;
  s.value = c;
  return s;
}

InitialDataSpec InitialDataSpec::gaussian_bump(std::vector<double> center, double amplitude,
                                               double width) {
  InitialDataSpec s;
  s.kind = Kind::gaussian_bump;
  s.center = std::move(center);
  s.value = amplitude;
  s.width = width;
  return s;
}

InitialDataSpec InitialDataSpec::sine_mode(double amplitude) {
  InitialDataSpec s;
  s.kind = Kind::sine_mode;
  s.value = amplitude;
  return s;
}

InitialDataSpec InitialDataSpec::tabulated(std::vector<double> values) {
  InitialDataSpec s;
  s.kind = Kind::tabulated;
  s.values = std::move(values);
  return s;
}

double eval_reaction(const ReactionSpec& r, double u) {
  switch (r.kind) {
    case ReactionSpec::Kind::power: return checked_pow(u, r.p, "reaction");
    case ReactionSpec::Kind::exponential: return std::exp(r.p * u);
    case ReactionSpec::Kind::log_linear:
      if (u < 0.0) fail(ErrorKind::domain, "u*ln(u) is undefined for u < 0");
      return u == 0.0 ? 0.0 : u * std::log(u);
    case ReactionSpec::Kind::zero: return 0.0;
  }
  return 0.0;
}

double eval_reaction_derivative(const ReactionSpec& r, double u) {
  switch (r.kind) {
    case ReactionSpec::Kind::power: return r.p * checked_pow(u, r.p - 1.0, "reaction");
    case ReactionSpec::Kind::exponential: return r.p * std::exp(r.p * u);
    case ReactionSpec::Kind::log_linear:
      if (u <= 0.0) fail(ErrorKind::domain, "d/du u*ln(u) is undefined for u <= 0");
      return std::log(u) + 1.0;
    case ReactionSpec::Kind::zero: return 0.0;
  }
  return 0.0;
}

double eval_convection_component(const ConvectionComponent& c, double u) {
  switch (c.kind) {
    case ConvectionComponent::Kind::power:
      return c.alpha * checked_pow(u, c.q, "convection");
    case ConvectionComponent::Kind::exponential: return c.alpha * std::exp(c.q * u);
    case ConvectionComponent::Kind::zero: return 0.0;
  }
  return 0.0;
}

double eval_primitive_component(const ConvectionComponent& c, double u) {
  switch (c.kind) {
    case ConvectionComponent::Kind::power:
      return c.alpha * checked_pow(u, c.q + 1.0, "convection") / (c.q + 1.0);
    case ConvectionComponent::Kind::exponential:
      if (c.q == 0.0) return c.alpha * u;
      return c.alpha * std::expm1(c.q * u) / c.q;
    case ConvectionComponent::Kind::zero: return 0.0;
  }
  return 0.0;
}

std::vector<double> eval_convection(const ConvectionSpec& c, double u) {
  std::vector<double> out;
  out.reserve(c.components.size());
  for (const auto& comp : c.components) out.push_back(eval_convection_component(comp, u));
  return out;
}

std::vector<double> eval_primitive(const ConvectionSpec& c, double u) {
  std::vector<double> out;
  out.reserve(c.components.size());
  for (const auto& comp : c.components) out.push_back(eval_primitive_component(comp, u));
  return out;
}

namespace {

struct Smooth {
  double value = 0.0;
  Vec2 grad{0.0, 0.0};
  double laplacian = 0.0;
};

// Closed-form u0 with derivatives for the twice differentiable kinds.
Smooth eval_smooth(const InitialDataSpec& init, const Domain& domain, const Vec2& x) {
  const int dim = dimension(domain);
  Smooth s;
  switch (init.kind) {
    case InitialDataSpec::Kind::constant: s.value = init.value; break;
    case InitialDataSpec::Kind::gaussian_bump: {
      const double w2 = init.width * init.width;
      double r2 = 0.0;
      Vec2 d{0.0, 0.0};
      for (int k = 0; k < dim; ++k) {
        const double c = k < static_cast<int>(init.center.size()) ? init.center[k] : 0.0;
        d[k] = x[k] - c;
        r2 += d[k] * d[k];
      }
      s.value = init.value * std::exp(-r2 / w2);
      for (int k = 0; k < dim; ++k) s.grad[k] = -2.0 * d[k] / w2 * s.value;
      s.laplacian = s.value * (4.0 * r2 / (w2 * w2) - 2.0 * dim / w2);
      break;
    }
    case InitialDataSpec::Kind::sine_mode: {
      std::array<double, 2> lo{}, len{};
      if (const auto* iv = std::get_if<Interval>(&domain)) {
        lo[0] = iv->a;
        len[0] = iv->b - iv->a;
      } else {
        const auto& r = std::get<Rectangle>(domain);
        lo = {r.a1, r.a2};
        len = {r.b1 - r.a1, r.b2 - r.a2};
      }
      std::array<double, 2> sn{1.0, 1.0}, cs{0.0, 0.0}, k{0.0, 0.0};
      for (int a = 0; a < dim; ++a) {
        k[a] = std::numbers::pi / len[a];
        sn[a] = std::sin(k[a] * (x[a] - lo[a]));
        cs[a] = std::cos(k[a] * (x[a] - lo[a]));
      }
      s.value = init.value * sn[0] * sn[1];
      s.grad[0] = init.value * k[0] * cs[0] * sn[1];
      if (dim == 2) s.grad[1] = init.value * k[1] * sn[0] * cs[1];
      s.laplacian = -(k[0] * k[0] + k[1] * k[1]) * s.value;
      break;
    }
    case InitialDataSpec::Kind::tabulated: break;
  }
  return s;
}

}  // namespace

Field sample_initial(const InitialDataSpec& init, const Grid& grid) {
  if (init.kind == InitialDataSpec::Kind::tabulated) {
    if (init.values.size() != grid.size())
      fail(ErrorKind::domain, "tabulated initial data has " + std::to_string(init.values.size()) +
                                  " values for " + std::to_string(grid.size()) + " nodes");
    return Field(grid, init.values);
  }
  std::vector<double> v(grid.size());
  for (std::size_t n = 0; n < v.size(); ++n)
    v[n] = eval_smooth(init, grid.domain(), grid.coords(n)).value;
  // Snap the analytic zeros of the sine mode on the boundary.
  if (init.kind == InitialDataSpec::Kind::sine_mode)
    for (const auto& b : grid.boundary_nodes()) v[b.index] = 0.0;
  return Field(grid, std::move(v));
}

std::vector<double> sample_sigma(const SigmaSpec& sigma, const Grid& grid) {
  std::vector<double> out;
  out.reserve(grid.boundary_nodes().size());
  for (const auto& b : grid.boundary_nodes())
    out.push_back(sigma.at(grid.boundary_parameter(b.index)));
  return out;
}

bool ValidationReport::hard_ok() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const auto& c) { return c.passed || !c.hard; });
}

bool ValidationReport::all_ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const HypothesisCheck* ValidationReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

ValidationReport validate_problem(const ProblemSpec& ps, const Grid* grid_in) {
  ValidationReport rep;
  auto add = [&](std::string name, bool passed, bool hard, std::string detail) {
    rep.checks.push_back({std::move(name), passed, hard, std::move(detail)});
  };

  bool domain_ok = true;
  try {
    check_domain(ps.domain);
  } catch (const Error& e) {
    domain_ok = false;
    add("domain", false, true, e.what());
  }
  if (domain_ok) add("domain", true, true, "");
  const int dim = domain_ok ? dimension(ps.domain) : 0;

  {
    const auto& r = ps.reaction;
    bool ok = true;
    std::string detail;
    if (r.kind == ReactionSpec::Kind::power && !(r.p > 1.0)) {
      ok = false;
      detail = "power reaction needs p > 1";
    } else if (r.kind == ReactionSpec::Kind::exponential && !(r.p > 0.0)) {
      ok = false;
      detail = "exponential reaction needs p > 0";
    }
    add("reaction_params", ok, true, detail);
  }

  add("dimension", !domain_ok || ps.convection.dim() == dim, true,
      ps.convection.dim() == dim ? ""
                                 : "convection has " + std::to_string(ps.convection.dim()) +
                                       " components for a " + std::to_string(dim) +
                                       "-d domain");

  {
    bool ok = true;
    std::string detail;
    if (ps.sigma.kind == SigmaSpec::Kind::dynamical) {
      if (ps.sigma.table.empty()) {
        if (!(ps.sigma.value >= 0.0) || !std::isfinite(ps.sigma.value)) {
          ok = false;
          detail = "sigma must be finite and >= 0";
        }
      } else {
        for (const auto& [s, v] : ps.sigma.table)
          if (!std::isfinite(s) || !std::isfinite(v) || v < 0.0) {
            ok = false;
            detail = "tabulated sigma must be finite and >= 0";
          }
      }
    }
    add("sigma0", ok, true, detail);
  }

  {
    // f > 0 on (0, inf). Soft: zero reaction and u ln u on (0,1) violate it.
    const auto kind = ps.reaction.kind;
    bool ok = kind == ReactionSpec::Kind::power || kind == ReactionSpec::Kind::exponential;
    std::string detail;
    if (kind == ReactionSpec::Kind::zero) detail = "f is identically zero";
    if (kind == ReactionSpec::Kind::log_linear) {
      ok = true;
      detail = "u ln u is negative on (0,1)";
    }
    rep.checks.push_back({"reactionf", ok, false, detail});
  }

  if (!domain_ok) return rep;

  Grid local;
  if (grid_in == nullptr) {
    const std::array<std::size_t, 2> n{65, 65};
    local = build_grid(ps.domain, n);
  }
  const Grid& grid = grid_in ? *grid_in : local;

  Field u0;
  try {
    u0 = sample_initial(ps.initial, grid);
  } catch (const Error& e) {
    add("idata", false, true, e.what());
    return rep;
  }
  {
    const double lo = u0.min(), hi = u0.max();
    std::string detail;
    bool ok = true;
    if (lo < 0.0) {
      ok = false;
      detail = "u0 takes negative values";
    } else if (hi == 0.0) {
      // f(0) > 0 lifts zero data at once, so only exponential reactions get a pass.
      ok = ps.reaction.kind == ReactionSpec::Kind::exponential;
      detail = ok ? "u0 is identically zero; f(0) > 0 makes u positive for t > 0"
                  : "u0 is identically zero";
    }
    add("idata", ok, true, detail);

    if (ps.reaction.kind == ReactionSpec::Kind::log_linear && lo < 1.0)
      for (auto& c : rep.checks)
        if (c.name == "reactionf") {
          c.passed = false;
          c.detail = "u ln u < 0 on (0,1) and min u0 < 1";
        }
  }

  if (ps.initial.kind == InitialDataSpec::Kind::tabulated) {
    add("idata2", false, false, "not evaluated for tabulated data");
    return rep;
  }
  if (rep.find("reaction_params")->passed == false || rep.find("dimension")->passed == false)
    return rep;

  double worst = 0.0;
  std::size_t worst_node = 0;
  double scale = 0.0;
  for (std::size_t n : grid.interior_nodes()) {
    const Smooth s = eval_smooth(ps.initial, ps.domain, grid.coords(n));
    double conv = 0.0;
    for (int k = 0; k < dim; ++k)
      conv += eval_convection_component(ps.convection.components[k], s.value) * s.grad[k];
    const double f = eval_reaction(ps.reaction, s.value);
    const double val = s.laplacian - conv + f;
    scale = std::max({scale, std::abs(s.laplacian), std::abs(conv), std::abs(f)});
    if (val < worst) {
      worst = val;
      worst_node = n;
    }
  }
  const bool ok = worst >= -1e-12 * std::max(scale, 1.0);
  std::ostringstream os;
  if (!ok) os << "min " << worst << " at node " << worst_node;
  add("idata2", ok, false, os.str());
  return rep;
}

}  // namespace blowuplab
