// blowuplab: command-line driver for runs, sweeps and the closed-form checks.
#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "blowuplab/bounds.hpp"
#include "blowuplab/comparison.hpp"
#include "blowuplab/errors.hpp"
#include "blowuplab/experiment.hpp"
#include "blowuplab/spectral.hpp"

namespace fs = std::filesystem;
using namespace blowuplab;

namespace {

enum Exit { ok = 0, usage = 1, hypothesis = 2, violation = 3 };

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::precondition:
    case ErrorKind::inapplicable:
    case ErrorKind::domain:
      return hypothesis;
    case ErrorKind::inequality_violation:
      return violation;
    default:
      return usage;
  }
}

ExperimentPlan load(const std::string& file) {
  ExperimentPlan plan = load_config(file);
  if (const char* env = std::getenv("BLOWUPLAB_OUT"); env && *env) plan.output = env;
  return plan;
}

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

// Refuses to simulate when a hard hypothesis fails.
void require_hypotheses(const ExperimentPlan& plan) {
  const Grid grid = plan_grid(plan);
  const ValidationReport vr = validate_problem(plan.problem, &grid);
  for (const auto& c : vr.checks)
    if (!c.passed) std::cerr << (c.hard ? "hypothesis failed: " : "warning: ") << c.name << " " << c.detail << "\n";
  if (!vr.hard_ok()) fail(ErrorKind::precondition, "hard hypotheses fail");
}

double opt_num(const json& o, const char* k, double dflt) {
  return o.contains(k) && o[k].is_number() ? o[k].get<double>() : dflt;
}

int cmd_solve(const std::string& file) {
  ExperimentPlan plan = load(file);
  plan.kind = ExperimentPlan::Kind::solve;
  require_hypotheses(plan);
  const ResultIndex idx = run_experiment(plan);
  for (const auto& e : idx.entries) {
    print(to_json(e));
    if (e.status != "ok") return usage;
  }
  return ok;
}

int cmd_sweep(const std::string& file, std::optional<std::size_t> max_cells) {
  ExperimentPlan plan = load(file);
  if (plan.kind != ExperimentPlan::Kind::sweep)
    fail(ErrorKind::parse, "experiment.kind: sweep expected");
  RunOptions opts;
  opts.max_new_cells = max_cells;
  const ResultIndex idx = run_experiment(plan, opts);
  std::size_t errors = 0;
  for (const auto& e : idx.entries) {
    std::cout << e.id << " " << e.status << " " << e.verdict << " " << e.params.dump() << "\n";
    if (e.status != "ok") ++errors;
  }
  const std::size_t total = expand_cells(plan).size();
  std::cout << idx.entries.size() << "/" << total << " cells in index\n";
  if (!idx.entries.empty())
    for (const auto& f : emit_tables(read_index(plan.output), plan.output)) std::cout << f.string() << "\n";
  return errors ? usage : ok;
}

int cmd_eigen(const std::string& file, double tol) {
  const ExperimentPlan plan = load(file);
  const Grid grid = plan_grid(plan);
  const EigenPair num = eigenpair_numeric(grid, tol);
  const EigenPair ana = eigenpair_analytic(grid);
  print({{"lambda", num.lambda}, {"lambda_continuum", ana.lambda},
         {"relative_error", std::abs(num.lambda - ana.lambda) / ana.lambda},
         {"iterations", num.iterations}, {"residual", num.residual}});
  fs::create_directories(plan.output);
  std::ofstream out(plan.output / "phi.csv");
  out << "x,y,phi\n";
  for (std::size_t n = 0; n < grid.size(); ++n)
    out << format_double(grid.x(n)) << ',' << format_double(grid.y(n)) << ','
        << format_double(num.phi[n]) << '\n';
  return ok;
}

int cmd_verify_bounds(const std::string& file) {
  ExperimentPlan plan = load(file);
  const ProblemSpec& ps = plan.problem;
  if (ps.reaction.kind != ReactionSpec::Kind::power)
    fail(ErrorKind::inapplicable, "the eigenfunction bound needs a power reaction");
  const json& o = plan.verify_options;
  const Grid grid = plan_grid(plan);
  // Defaults follow G = alpha u^(qg+1)/(qg+1) for uniform power convection.
  const auto& c0 = ps.convection.components.front();
  const double q = opt_num(o, "q", c0.q + 1.0);
  const double alpha = opt_num(o, "alpha", c0.alpha / (c0.q + 1.0));
  const double omega_max = opt_num(o, "omega_max", 1e6);
  const bool numeric = o.value("eigen", std::string("analytic")) == "numeric";
  EigenPair ep = numeric ? eigenpair_numeric(grid, 1e-10) : eigenpair_analytic(grid);
  const BoundsInput bi = make_bounds_input(ps.reaction.p, q, alpha, ep, ps.convection, omega_max);
  BoundsReport br = blowup_constant(bi);
  br = check_condition_and_bound(br, sample_initial(ps.initial, grid), bi.eigen, bi.p, bi.m(),
                                 bi.omega_measure);
  json j{{"q", q}, {"alpha", alpha}, {"m", bi.m()}, {"lambda", bi.eigen.lambda},
         {"C", br.C}, {"C3", br.C3}, {"C4", br.C4}, {"threshold", br.threshold},
         {"M0", br.M0}, {"condition_met", br.condition_met}};
  j["T_tilde"] = br.T_tilde ? json(*br.T_tilde) : json();
  if (br.condition_met) {
    require_hypotheses(plan);
    const RunRecord rr = run(ps, grid, plan.policy);
    j["verdict"] = to_string(rr.verdict.kind);
    if (rr.verdict.kind == Verdict::Kind::blew_up) {
      const double T = estimate_blowup_time(rr, ps.reaction);
      j["T_est"] = T;
      if (br.T_tilde) j["T_est_le_T_tilde"] = T <= *br.T_tilde;
    }
  }
  print(j);
  if (br.condition_met && br.T_tilde && j.contains("T_est") && !j["T_est_le_T_tilde"].get<bool>())
    return violation;
  return ok;
}

int cmd_fit_rate(const std::string& dir) {
  const fs::path d(dir);
  const ExperimentPlan plan = load_config(d / "config.json");
  std::ifstream sin(d / "summary.json");
  if (!sin) fail(ErrorKind::io, "cannot read " + (d / "summary.json").string());
  const json summary = json::parse(sin);
  const SeriesTable st = read_series_csv(d / "series.csv");
  RunRecord rr;
  rr.times = st.t;
  rr.sup_norm = st.sup_norm;
  rr.min_value = st.min_value;
  rr.dt = st.dt;
  const std::string verdict = summary.at("verdict").at("kind").get<std::string>();
  rr.verdict.kind = verdict == "blew_up" ? Verdict::Kind::blew_up
                    : verdict == "stagnated" ? Verdict::Kind::stagnated
                                             : Verdict::Kind::reached_horizon;
  const BlowupEstimate est = analyse_blowup(rr, plan.problem.reaction);
  print({{"T_est", est.T_est}, {"fit_window", {est.fit_window.first, est.fit_window.second}},
         {"fit_samples", est.fit_samples}, {"exponent", est.exponent},
         {"exponent_stderr", est.exponent_stderr}, {"lower_bound_ok", est.lower_bound_ok}});
  return ok;
}

int cmd_check_super(const std::string& file) {
  ExperimentPlan plan = load(file);
  const ProblemSpec& ps = plan.problem;
  const json& o = plan.verify_options;
  const Grid grid = plan_grid(plan);
  const int axis = static_cast<int>(opt_num(o, "axis", 0));
  if (axis < 0 || axis >= grid.dim()) fail(ErrorKind::parse, "experiment.options.axis: out of range");
  const double C = opt_num(o, "C_conv", ps.convection.components[static_cast<std::size_t>(axis)].alpha);
  const UpperSolution us = build_upper_solution(ps, axis, C, grid);
  require_hypotheses(plan);
  StepPolicy pol = plan.policy;
  if (pol.snapshot_every <= 0.0) pol.snapshot_every = pol.t_horizon / 20.0;
  const RunRecord rr = run(ps, grid, pol);
  std::vector<double> times;
  double worst = -INFINITY;
  double worst_t = 0.0;
  for (const auto& s : rr.snapshots) {
    times.push_back(s.t);
    for (std::size_t n = 0; n < grid.size(); ++n) {
      const double U = us.value(grid.coords(n), s.t);
      const double rel = (s.field[n] - U) / U;
      if (rel > worst) {
        worst = rel;
        worst_t = s.t;
      }
    }
  }
  json j{{"K", us.K}, {"alpha", us.alpha}, {"axis", us.axis}, {"eta_rate", us.eta_rate},
         {"verdict", to_string(rr.verdict.kind)}, {"max_relative_excess", worst},
         {"worst_time", worst_t}};
  print(j);
  const ResidualReport rep = residual_upper(us, ps, grid, times);  // throws on violation
  print({{"min_interior", rep.min_interior}, {"min_boundary", rep.min_boundary},
         {"scale", rep.scale}, {"evaluated", rep.evaluated}});
  return worst > 1e-3 ? violation : ok;
}

int cmd_check_sub(const std::string& file) {
  ExperimentPlan plan = load(file);
  const ProblemSpec& ps = plan.problem;
  if (ps.reaction.kind != ReactionSpec::Kind::exponential)
    fail(ErrorKind::inapplicable, "the self-similar sub-solution needs an exponential reaction");
  const json& o = plan.verify_options;
  const auto& c0 = ps.convection.components.front();
  const double q = opt_num(o, "q", c0.kind == ConvectionComponent::Kind::exponential ? c0.q : 0.0);
  const double Cg = opt_num(o, "C_g", sample_convection_exp_bound(ps.convection, q));
  const SubSolutionSW ss = build_subsolution_sw(ps.reaction.p, q, Cg);
  const Grid grid = plan_grid(plan);
  const std::size_t nt = static_cast<std::size_t>(opt_num(o, "times", 20));
  std::vector<double> ts;
  for (std::size_t k = 0; k < nt; ++k)
    ts.push_back(0.9 / ss.eps * static_cast<double>(k) / static_cast<double>(nt > 1 ? nt - 1 : 1));
  const double tol = opt_num(o, "tol", 1e-8);
  const ResidualReport rep = residual_sub_sw(ss, grid, ts, tol);
  print({{"gamma", ss.gamma}, {"kappa", ss.kappa}, {"mu", ss.mu}, {"m", ss.m_ss}, {"A", ss.A},
         {"eps", ss.eps}, {"C_g", ss.C_g}, {"support_radius", ss.support_radius()},
         {"max_residual", rep.max_value}, {"scale", rep.scale},
         {"worst_x", grid.coords(rep.worst_node)}, {"worst_time", rep.worst_time},
         {"evaluated", rep.evaluated}, {"ok", rep.ok}});
  return rep.ok ? ok : violation;
}

int cmd_compare(const std::string& fa, const std::string& fb) {
  const ExperimentPlan a = load(fa), b = load(fb);
  require_hypotheses(a);
  require_hypotheses(b);
  const Grid ga = plan_grid(a), gb = plan_grid(b);
  const RunRecord ra = run(a.problem, ga, a.policy), rb = run(b.problem, gb, b.policy);
  const OrderingReport ab = compare_runs(ra, rb), ba = compare_runs(rb, ra);
  print({{"a_verdict", to_string(ra.verdict.kind)}, {"b_verdict", to_string(rb.verdict.kind)},
         {"matched", ab.matched}, {"a_le_b", ab.a_le_b}, {"b_le_a", ba.a_le_b},
         {"max_a_minus_b", ab.max_diff}, {"max_b_minus_a", ba.max_diff}, {"scale", ab.scale}});
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blow-up experiments for parabolic problems with dynamical boundary conditions"};
  app.require_subcommand(1);
  std::string config, config_b, run_dir;
  std::optional<std::size_t> max_cells;
  double tol = 1e-10;

  auto* solve = app.add_subcommand("solve", "Run a single simulation");
  solve->add_option("config", config, "JSON config")->required();
  auto* sweep = app.add_subcommand("sweep", "Run a resumable parameter sweep");
  sweep->add_option("config", config, "JSON config")->required();
  sweep->add_option("--max-cells", max_cells, "Stop after this many new cells");
  auto* eigen = app.add_subcommand("eigen", "First Dirichlet eigenpair of the grid Laplacian");
  eigen->add_option("config", config, "JSON config")->required();
  eigen->add_option("--tol", tol, "Relative Rayleigh-quotient tolerance");
  auto* vb = app.add_subcommand("verify-bounds", "Eigenfunction-method constant, threshold and bound");
  vb->add_option("config", config, "JSON config")->required();
  auto* fr = app.add_subcommand("fit-rate", "Blow-up time and rate from a stored run");
  fr->add_option("run-dir", run_dir, "Run directory")->required();
  auto* sup = app.add_subcommand("check-supersolution", "Exponential upper solution vs the run");
  sup->add_option("config", config, "JSON config")->required();
  auto* sub = app.add_subcommand("check-subsolution", "Residual of the self-similar sub-solution");
  sub->add_option("config", config, "JSON config")->required();
  auto* cmp = app.add_subcommand("compare", "Pointwise ordering of two runs");
  cmp->add_option("configA", config, "JSON config")->required();
  cmp->add_option("configB", config_b, "JSON config")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ok : usage;
  }

  try {
    if (*solve) return cmd_solve(config);
    if (*sweep) return cmd_sweep(config, max_cells);
    if (*eigen) return cmd_eigen(config, tol);
    if (*vb) return cmd_verify_bounds(config);
    if (*fr) return cmd_fit_rate(run_dir);
    if (*sup) return cmd_check_super(config);
    if (*sub) return cmd_check_sub(config);
    if (*cmp) return cmd_compare(config, config_b);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return usage;
  }
  return usage;
}
