#include "blowuplab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "blowuplab/errors.hpp"

namespace blowuplab {

const char* to_string(Verdict::Kind kind) {
  switch (kind) {
    case Verdict::Kind::blew_up: return "blew_up";
    case Verdict::Kind::reached_horizon: return "reached_horizon";
    case Verdict::Kind::stagnated: return "stagnated";
  }
  return "unknown";
}

void check_policy(const StepPolicy& p, double sup_u0) {
  auto bad = [](const std::string& what) { fail(ErrorKind::precondition, "step policy: " + what); };
  if (!(p.cfl_safety > 0.0 && p.cfl_safety <= 1.0)) bad("cfl_safety must lie in (0, 1]");
  if (!(p.dt_min > 0.0 && p.dt_min <= p.dt_max)) bad("need 0 < dt_min <= dt_max");
  if (!(p.t_horizon > 0.0)) bad("t_horizon must be positive");
  if (!(p.blowup_threshold > sup_u0)) bad("blowup_threshold must exceed sup u0");
  if (p.snapshot_stride == 0) bad("snapshot_stride must be positive");
  if (p.series_stride == 0) bad("series_stride must be positive");
  if (p.snapshot_every < 0.0) bad("snapshot_every must be >= 0");
}

SemiDiscrete::SemiDiscrete(const ProblemSpec& ps, const Grid& grid) : ps_(ps), grid_(grid) {
  if (ps.convection.dim() != grid.dim())
    fail(ErrorKind::domain, "convection dimension does not match the grid");
  mode_.assign(grid.size(), NodeMode::interior);
  sigma_ = sample_sigma(ps.sigma, grid);
  min_positive_sigma_ = std::numeric_limits<double>::infinity();
  const auto bnodes = grid.boundary_nodes();
  for (std::size_t s = 0; s < bnodes.size(); ++s) {
    NodeMode m = NodeMode::reflect;
    if (ps.sigma.kind == SigmaSpec::Kind::dirichlet) {
      m = NodeMode::pinned;
    } else if (ps.sigma.kind == SigmaSpec::Kind::dynamical && sigma_[s] > 0.0) {
      m = NodeMode::dynamical;
      min_positive_sigma_ = std::min(min_positive_sigma_, sigma_[s]);
    }
    mode_[bnodes[s].index] = m;
  }
  const std::size_t n = grid.size();
  k1_.resize(n);
  k2_.resize(n);
  k3_.resize(n);
  k4_.resize(n);
  tmp_.resize(n);
}

double SemiDiscrete::pde_rate(std::span<const double> u, std::size_t node) const {
  const double un = u[node];
  double lap = 0.0, conv = 0.0;
  const std::size_t idx[2] = {grid_.ix(node), grid_.iy(node)};
  const std::size_t len[2] = {grid_.nx(), grid_.ny()};
  for (int k = 0; k < grid_.dim(); ++k) {
    const std::size_t stride = k == 0 ? 1 : grid_.nx();
    const double h = grid_.h(k);
    const bool low = idx[k] == 0, high = idx[k] == len[k] - 1;
    // Ghost reflection across a boundary: the missing neighbour mirrors the inner one.
    const double right = high ? u[node - stride] : u[node + stride];
    const double left = low ? u[node + stride] : u[node - stride];
    lap += (right - 2.0 * un + left) / (h * h);
    if (low || high) continue;  // reflected normal gradient vanishes
    const double g = eval_convection_component(ps_.convection.components[k], un);
    if (g > 0.0)
      conv += g * (un - left) / h;
    else if (g < 0.0)
      conv += g * (right - un) / h;
  }
  return lap - conv + eval_reaction(ps_.reaction, un);
}

void SemiDiscrete::rate(std::span<const double> u, std::span<double> out) const {
  const std::size_t n = grid_.size();
  for (std::size_t node = 0; node < n; ++node) {
    switch (mode_[node]) {
      case NodeMode::interior:
      case NodeMode::reflect: out[node] = pde_rate(u, node); break;
      case NodeMode::pinned: out[node] = 0.0; break;
      case NodeMode::dynamical: {
        const double sigma = sigma_[grid_.boundary_slot(node)];
        out[node] = -normal_derivative(grid_, u, node) / sigma;
        break;
      }
    }
  }
}

void SemiDiscrete::constrain(std::span<double> u) const {
  for (std::size_t node = 0; node < u.size(); ++node)
    if (mode_[node] == NodeMode::pinned) u[node] = 0.0;
}

void SemiDiscrete::rk4_step(std::span<const double> u, double dt, std::span<double> out) const {
  const std::size_t n = u.size();
  rate(u, k1_);
  for (std::size_t i = 0; i < n; ++i) tmp_[i] = u[i] + 0.5 * dt * k1_[i];
  rate(tmp_, k2_);
  for (std::size_t i = 0; i < n; ++i) tmp_[i] = u[i] + 0.5 * dt * k2_[i];
  rate(tmp_, k3_);
  for (std::size_t i = 0; i < n; ++i) tmp_[i] = u[i] + dt * k3_[i];
  rate(tmp_, k4_);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = u[i] + dt / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
  constrain(out);
}

double SemiDiscrete::stable_dt(std::span<const double> u, double safety) const {
  const double h = grid_.dim() == 1 ? grid_.hx() : std::min(grid_.hx(), grid_.hy());
  double dt = safety * h * h / (2.0 * grid_.dim());

  double gmax = 0.0, fmax = 0.0, sup = 0.0;
  for (double v : u) {
    for (const auto& c : ps_.convection.components)
      gmax = std::max(gmax, std::abs(eval_convection_component(c, v)));
    fmax = std::max(fmax, eval_reaction(ps_.reaction, v));
    sup = std::max(sup, std::abs(v));
  }
  if (gmax > 0.0) dt = std::min(dt, safety * h / gmax);
  if (fmax > 0.0) dt = std::min(dt, 0.1 * (1.0 + sup) / fmax);
  // One-sided boundary law: rate ~ 3/(2 h sigma).
  if (std::isfinite(min_positive_sigma_)) dt = std::min(dt, safety * h * min_positive_sigma_);
  return dt;
}

namespace {

void require_finite(std::span<const double> v) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i]))
      fail(ErrorKind::invalid_field, "non-finite value at node " + std::to_string(i));
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

Rhs assemble_rhs(const ProblemSpec& ps, const Grid& grid, const Field& u) {
  if (!u.grid().same_layout(grid)) fail(ErrorKind::domain, "field is on a different grid");
  require_finite(u.values());
  SemiDiscrete sd(ps, grid);
  Rhs rhs;
  rhs.interior.assign(grid.size(), 0.0);
  for (std::size_t node : grid.interior_nodes()) rhs.interior[node] = sd.pde_rate(u.values(), node);
  for (const auto& b : grid.boundary_nodes())
    rhs.boundary_flux.push_back(normal_derivative(grid, u.values(), b.index));
  return rhs;
}

Field advance(const ProblemSpec& ps, const Grid& grid, const Field& u, double dt) {
  if (!(dt > 0.0)) fail(ErrorKind::precondition, "advance needs dt > 0");
  if (!u.grid().same_layout(grid)) fail(ErrorKind::domain, "field is on a different grid");
  SemiDiscrete sd(ps, grid);
  std::vector<double> start(u.values().begin(), u.values().end());
  sd.constrain(start);
  std::vector<double> out(start.size());
  sd.rk4_step(start, dt, out);
  return Field(grid, std::move(out));  // throws invalid_field on overflow
}

double total_mass(const Field& u) { return integrate(u.grid(), u.values()); }

namespace {

constexpr std::size_t kTailKeep = 50;
constexpr std::size_t kMonotoneSteps = 5;

struct Sample {
  double t, sup, min, mass, dt;
};

class Recorder {
 public:
  Recorder(const Grid& grid, const StepPolicy& policy, const std::optional<MassProbe>& probe)
      : grid_(grid), policy_(policy), probe_(probe) {}

  Sample measure(double t, std::span<const double> u, double dt) const {
    Sample s{t, -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
             0.0, dt};
    for (double v : u) {
      s.sup = std::max(s.sup, std::abs(v));
      s.min = std::min(s.min, v);
    }
    if (probe_) {
      double m = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) m += probe_->weights[i] * u[i];
      s.mass = m;
    }
    return s;
  }

  void record(std::size_t step, const Sample& s, std::span<const double> u, bool on_time_grid) {
    if (step % policy_.series_stride == 0) push_sample(s);
    tail_samples_.push_back(s);
    if (tail_samples_.size() > kTailKeep) tail_samples_.pop_front();

    if (step % policy_.snapshot_stride == 0 || on_time_grid)
      snaps_.push_back({s.t, Field(grid_, std::vector<double>(u.begin(), u.end()))});
    tail_fields_.push_back({s.t, std::vector<double>(u.begin(), u.end())});
    if (tail_fields_.size() > kTailKeep) tail_fields_.pop_front();
  }

  void finish(RunRecord& rec) {
    for (const auto& s : tail_samples_)
      if (rec_.times.empty() || s.t > rec_.times.back()) push_sample(s);
    for (auto& [t, v] : tail_fields_)
      if (snaps_.empty() || t > snaps_.back().t) snaps_.push_back({t, Field(grid_, std::move(v))});
    rec.times = std::move(rec_.times);
    rec.sup_norm = std::move(rec_.sup_norm);
    rec.min_value = std::move(rec_.min_value);
    rec.mass_series = std::move(rec_.mass_series);
    rec.dt = std::move(rec_.dt);
    rec.snapshots = std::move(snaps_);
  }

  // sup strictly increasing over the last n recorded steps.
  bool growing(std::size_t n) const {
    if (tail_samples_.size() < n + 1) return false;
    for (std::size_t k = tail_samples_.size() - n; k < tail_samples_.size(); ++k)
      if (!(tail_samples_[k].sup > tail_samples_[k - 1].sup)) return false;
    return true;
  }

 private:
  void push_sample(const Sample& s) {
    if (!rec_.times.empty() && s.t <= rec_.times.back()) return;
    rec_.times.push_back(s.t);
    rec_.sup_norm.push_back(s.sup);
    rec_.min_value.push_back(s.min);
    if (probe_) rec_.mass_series.push_back(s.mass);
    rec_.dt.push_back(s.dt);
  }

  const Grid& grid_;
  const StepPolicy& policy_;
  const std::optional<MassProbe>& probe_;
  RunRecord rec_;
  std::deque<Sample> tail_samples_;
  std::vector<Snapshot> snaps_;
  std::deque<std::pair<double, std::vector<double>>> tail_fields_;
};

}  // namespace

RunRecord run(const ProblemSpec& ps, const Grid& grid, const StepPolicy& policy,
              const std::optional<MassProbe>& probe) {
  const ValidationReport vr = validate_problem(ps, &grid);
  if (!vr.hard_ok()) {
    std::ostringstream os;
    os << "problem fails hypotheses:";
    for (const auto& c : vr.checks)
      if (c.hard && !c.passed) os << ' ' << c.name << " (" << c.detail << ")";
    fail(ErrorKind::precondition, os.str());
  }
  if (probe && probe->weights.size() != grid.size())
    fail(ErrorKind::domain, "mass probe does not match the grid");

  SemiDiscrete sd(ps, grid);
  const Field u0 = sample_initial(ps.initial, grid);
  std::vector<double> u(u0.values().begin(), u0.values().end());
  sd.constrain(u);
  double sup0 = 0.0;
  for (double v : u) sup0 = std::max(sup0, std::abs(v));
  check_policy(policy, sup0);

  RunRecord rec;
  Recorder recorder(grid, policy, probe);
  double t = 0.0;
  Sample last = recorder.measure(t, u, 0.0);
  recorder.record(0, last, u, policy.snapshot_every > 0.0);

  std::vector<double> next(u.size());
  std::size_t step = 0;
  std::size_t next_snap_index = 1;
  auto finish = [&](Verdict::Kind kind, std::string reason) {
    rec.verdict = {kind, last.t, last.sup, std::move(reason)};
    rec.steps = step;
    recorder.finish(rec);
    return std::move(rec);
  };

  while (true) {
    if (t >= policy.t_horizon) return finish(Verdict::Kind::reached_horizon, "");
    if (step >= policy.max_steps) return finish(Verdict::Kind::stagnated, "step limit reached");

    double dt = std::min(sd.stable_dt(u, policy.cfl_safety), policy.dt_max);
    const bool increasing = recorder.growing(1);
    if (dt < policy.dt_min || t + dt == t) {
      if (increasing) return finish(Verdict::Kind::blew_up, "time step fell below dt_min");
      return finish(Verdict::Kind::stagnated, "time step fell below dt_min without growth");
    }

    double t_next = t + dt;
    bool on_time_grid = false;
    if (t_next >= policy.t_horizon) {
      t_next = policy.t_horizon;
      dt = t_next - t;
    }
    if (policy.snapshot_every > 0.0) {
      const double ts = policy.snapshot_every * static_cast<double>(next_snap_index);
      if (t_next >= ts) {
        t_next = ts;
        dt = ts - t;
        on_time_grid = true;
        ++next_snap_index;
      }
    }

    sd.rk4_step(u, dt, next);
    if (!all_finite(next))
      return finish(Verdict::Kind::blew_up, "non-finite values; last finite state kept");
    u.swap(next);
    t = t_next;
    ++step;
    last = recorder.measure(t, u, dt);
    recorder.record(step, last, u, on_time_grid);

    if (last.sup > policy.blowup_threshold) {
      if (recorder.growing(kMonotoneSteps))
        return finish(Verdict::Kind::blew_up, "sup-norm exceeded blowup_threshold");
      return finish(Verdict::Kind::stagnated, "threshold crossed without monotone growth");
    }
  }
}

}  // namespace blowuplab
