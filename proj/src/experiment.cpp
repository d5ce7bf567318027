#include "blowuplab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "blowuplab/errors.hpp"
#include "blowuplab/spectral.hpp"

namespace fs = std::filesystem;

namespace blowuplab {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

// ---------------------------------------------------------------- parsing

[[noreturn]] void bad(const std::string& path, const std::string& why) {
  fail(ErrorKind::parse, path + ": " + why);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Object view that remembers its path and rejects keys nobody asked about.
class Obj {
 public:
  Obj(const json& j, std::string path, std::set<std::string> allowed)
      : j_(j), path_(std::move(path)) {
    if (!j.is_object()) bad(path_.empty() ? "<root>" : path_, "expected an object");
    for (const auto& [k, v] : j.items())
      if (!allowed.count(k)) bad(join(path_, k), "unknown key");
  }

  bool has(const std::string& k) const { return j_.contains(k); }
  const json& at(const std::string& k) const {
    if (!has(k)) bad(join(path_, k), "missing");
    return j_.at(k);
  }
  std::string path(const std::string& k) const { return join(path_, k); }

  double num(const std::string& k) const {
    const json& v = at(k);
    if (!v.is_number()) bad(path(k), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) bad(path(k), "must be finite");
    return d;
  }
  double num(const std::string& k, double dflt) const { return has(k) ? num(k) : dflt; }

  std::size_t count(const std::string& k, std::size_t dflt) const {
    if (!has(k)) return dflt;
    const json& v = at(k);
    if (!v.is_number_integer() || v.get<long long>() < 0) bad(path(k), "expected a non-negative integer");
    return v.get<std::size_t>();
  }

  std::string str(const std::string& k) const {
    const json& v = at(k);
    if (!v.is_string()) bad(path(k), "expected a string");
    return v.get<std::string>();
  }
  std::string str(const std::string& k, const std::string& dflt) const {
    return has(k) ? str(k) : dflt;
  }

  std::vector<double> nums(const std::string& k) const {
    const json& v = at(k);
    if (!v.is_array()) bad(path(k), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number() || !std::isfinite(v[i].get<double>()))
        bad(path(k) + "[" + std::to_string(i) + "]", "expected a finite number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

 private:
  const json& j_;
  std::string path_;
};

Domain parse_domain(const json& j) {
  const std::string kind = j.is_object() && j.contains("kind") && j["kind"].is_string()
                               ? j["kind"].get<std::string>() : "";
  if (kind == "interval") {
    Obj o(j, "domain", {"kind", "a", "b"});
    Interval iv{o.num("a", 0.0), o.num("b", 1.0)};
    if (!(iv.b > iv.a)) bad("domain.b", "must exceed domain.a");
    return iv;
  }
  if (kind == "rectangle") {
    Obj o(j, "domain", {"kind", "a1", "b1", "a2", "b2"});
    Rectangle r{o.num("a1", 0.0), o.num("b1", 1.0), o.num("a2", 0.0), o.num("b2", 1.0)};
    if (!(r.b1 > r.a1)) bad("domain.b1", "must exceed domain.a1");
    if (!(r.b2 > r.a2)) bad("domain.b2", "must exceed domain.a2");
    return r;
  }
  bad("domain.kind", "expected \"interval\" or \"rectangle\"");
}

std::vector<std::size_t> parse_grid(const json& j, int dim) {
  Obj o(j, "grid", {"n"});
  const json& n = o.at("n");
  std::vector<std::size_t> out;
  auto one = [&](const json& v, const std::string& path) {
    if (!v.is_number_integer() || v.get<long long>() < 3) bad(path, "needs an integer >= 3");
    out.push_back(v.get<std::size_t>());
  };
  if (n.is_array()) {
    if (n.size() != static_cast<std::size_t>(dim)) bad("grid.n", "needs one entry per axis");
    for (std::size_t i = 0; i < n.size(); ++i) one(n[i], "grid.n[" + std::to_string(i) + "]");
  } else {
    one(n, "grid.n");
    if (dim == 2) out.push_back(out.front());
  }
  return out;
}

ReactionSpec parse_reaction(const json& j) {
  Obj o(j, "reaction", {"kind", "p"});
  const std::string kind = o.str("kind");
  if (kind == "power" || kind == "exponential") {
    const double p = o.num("p");
    if (!(p > 0.0)) bad("reaction.p", "must be positive");
    return kind == "power" ? ReactionSpec::power(p) : ReactionSpec::exponential(p);
  }
  if (kind == "log_linear") return ReactionSpec::log_linear();
  if (kind == "zero") return ReactionSpec::zero();
  bad("reaction.kind", "expected power, exponential, log_linear or zero");
}

ConvectionComponent parse_component(const Obj& o, const std::string& path) {
  const std::string kind = o.str("kind");
  ConvectionComponent c;
  if (kind == "zero") return c;
  if (kind != "power" && kind != "exponential")
    bad(join(path, "kind"), "expected power, exponential or zero");
  c.kind = kind == "power" ? ConvectionComponent::Kind::power : ConvectionComponent::Kind::exponential;
  c.alpha = o.num("alpha", 1.0);
  c.q = o.num("q");
  if (c.kind == ConvectionComponent::Kind::power && c.q < 0.0) bad(join(path, "q"), "must be >= 0");
  return c;
}

ConvectionSpec parse_convection(const json& j, int dim) {
  if (j.is_object() && j.contains("components")) {
    Obj o(j, "convection", {"components"});
    const json& arr = o.at("components");
    if (!arr.is_array() || arr.size() != static_cast<std::size_t>(dim))
      bad("convection.components", "needs one entry per axis");
    ConvectionSpec spec;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = "convection.components[" + std::to_string(i) + "]";
      spec.components.push_back(parse_component(Obj(arr[i], path, {"kind", "alpha", "q"}), path));
    }
    return spec;
  }
  Obj o(j, "convection", {"kind", "alpha", "q"});
  ConvectionSpec spec;
  spec.components.assign(static_cast<std::size_t>(dim), parse_component(o, "convection"));
  return spec;
}

SigmaSpec parse_sigma(const json& j) {
  Obj o(j, "sigma", {"kind", "value", "table"});
  const std::string kind = o.str("kind");
  if (kind == "neumann") return SigmaSpec::neumann();
  if (kind == "dirichlet") return SigmaSpec::dirichlet();
  if (kind != "dynamical") bad("sigma.kind", "expected dynamical, neumann or dirichlet");
  if (o.has("table")) {
    const json& t = o.at("table");
    if (!t.is_array() || t.empty()) bad("sigma.table", "expected a non-empty array of [s, sigma] pairs");
    std::vector<std::pair<double, double>> table;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const std::string path = "sigma.table[" + std::to_string(i) + "]";
      if (!t[i].is_array() || t[i].size() != 2 || !t[i][0].is_number() || !t[i][1].is_number())
        bad(path, "expected [s, sigma]");
      const double s = t[i][0].get<double>(), v = t[i][1].get<double>();
      if (!std::isfinite(s) || !std::isfinite(v) || v < 0.0) bad(path, "sigma must be finite and >= 0");
      table.emplace_back(s, v);
    }
    return SigmaSpec::tabulated(std::move(table));
  }
  const double v = o.num("value");
  if (v < 0.0) bad("sigma.value", "must be >= 0");
  return SigmaSpec::dynamical(v);
}

InitialDataSpec parse_initial(const json& j, int dim) {
  const std::string kind = j.is_object() && j.contains("kind") && j["kind"].is_string()
                               ? j["kind"].get<std::string>() : "";
  if (kind == "constant") {
    Obj o(j, "initial", {"kind", "value"});
    return InitialDataSpec::constant(o.num("value"));
  }
  if (kind == "gaussian_bump") {
    Obj o(j, "initial", {"kind", "center", "amplitude", "width"});
    auto c = o.nums("center");
    if (c.size() != static_cast<std::size_t>(dim)) bad("initial.center", "needs one entry per axis");
    const double w = o.num("width");
    if (!(w > 0.0)) bad("initial.width", "must be positive");
    return InitialDataSpec::gaussian_bump(std::move(c), o.num("amplitude"), w);
  }
  if (kind == "sine_mode") {
    Obj o(j, "initial", {"kind", "amplitude"});
    return InitialDataSpec::sine_mode(o.num("amplitude"));
  }
  if (kind == "tabulated") {
    Obj o(j, "initial", {"kind", "values"});
    return InitialDataSpec::tabulated(o.nums("values"));
  }
  bad("initial.kind", "expected constant, gaussian_bump, sine_mode or tabulated");
}

StepPolicy parse_policy(const json& j, std::size_t& workers) {
  Obj o(j, "policy", {"cfl_safety", "dt_min", "dt_max", "blowup_threshold", "t_horizon",
                      "snapshot_stride", "snapshot_every", "series_stride", "max_steps", "workers"});
  StepPolicy p;
  p.cfl_safety = o.num("cfl_safety", p.cfl_safety);
  p.dt_min = o.num("dt_min", p.dt_min);
  p.dt_max = o.num("dt_max", p.dt_max);
  p.blowup_threshold = o.num("blowup_threshold", p.blowup_threshold);
  p.t_horizon = o.num("t_horizon", p.t_horizon);
  p.snapshot_stride = o.count("snapshot_stride", p.snapshot_stride);
  p.snapshot_every = o.num("snapshot_every", p.snapshot_every);
  p.series_stride = o.count("series_stride", p.series_stride);
  p.max_steps = o.count("max_steps", p.max_steps);
  workers = o.count("workers", 0);
  if (!(p.cfl_safety > 0.0 && p.cfl_safety <= 1.0)) bad("policy.cfl_safety", "must lie in (0, 1]");
  if (!(p.dt_min > 0.0)) bad("policy.dt_min", "must be positive");
  if (!(p.dt_max >= p.dt_min)) bad("policy.dt_max", "must be >= policy.dt_min");
  if (!(p.blowup_threshold > 0.0)) bad("policy.blowup_threshold", "must be positive");
  if (!(p.t_horizon > 0.0)) bad("policy.t_horizon", "must be positive");
  if (p.snapshot_every < 0.0) bad("policy.snapshot_every", "must be >= 0");
  if (p.snapshot_stride == 0) bad("policy.snapshot_stride", "must be >= 1");
  if (p.series_stride == 0) bad("policy.series_stride", "must be >= 1");
  return p;
}

void parse_experiment(const json& j, ExperimentPlan& plan) {
  Obj o(j, "experiment", {"kind", "output", "mass", "sweep", "variants", "verify", "options"});
  const std::string kind = o.str("kind", "solve");
  plan.output = o.str("output", "out");
  if (o.has("mass")) {
    if (!o.at("mass").is_boolean()) bad("experiment.mass", "expected a boolean");
    plan.mass = o.at("mass").get<bool>();
  }
  if (o.has("options")) {
    if (!o.at("options").is_object()) bad("experiment.options", "expected an object");
    plan.verify_options = o.at("options");
  }
  if (kind == "solve") {
    plan.kind = ExperimentPlan::Kind::solve;
  } else if (kind == "sweep") {
    plan.kind = ExperimentPlan::Kind::sweep;
    Obj s(o.at("sweep"), "experiment.sweep", {"p", "q", "alpha", "sigma"});
    auto axis = [&](const char* k, std::vector<double>& out) {
      if (!s.has(k)) return;
      out = s.nums(k);
      if (out.empty()) bad(s.path(k), "sweep axis must not be empty");
    };
    axis("p", plan.axes.p);
    axis("q", plan.axes.q);
    axis("alpha", plan.axes.alpha);
    axis("sigma", plan.axes.sigma);
    for (double v : plan.axes.sigma)
      if (v < 0.0) bad("experiment.sweep.sigma", "values must be >= 0");
    if (plan.axes.p.empty() && plan.axes.q.empty() && plan.axes.alpha.empty() && plan.axes.sigma.empty())
      bad("experiment.sweep", "needs at least one axis");
  } else if (kind == "compare") {
    plan.kind = ExperimentPlan::Kind::compare;
    const json& v = o.at("variants");
    if (!v.is_array() || v.empty()) bad("experiment.variants", "expected a non-empty array of objects");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_object()) bad("experiment.variants[" + std::to_string(i) + "]", "expected an object");
      plan.variants.push_back(v[i]);
    }
  } else if (kind == "verify") {
    plan.kind = ExperimentPlan::Kind::verify;
    const std::string w = o.str("verify", "rates");
    if (w == "bounds") plan.verify = ExperimentPlan::Verify::bounds;
    else if (w == "rates") plan.verify = ExperimentPlan::Verify::rates;
    else if (w == "supersolution") plan.verify = ExperimentPlan::Verify::supersolution;
    else if (w == "subsolution") plan.verify = ExperimentPlan::Verify::subsolution;
    else bad("experiment.verify", "expected bounds, rates, supersolution or subsolution");
  } else {
    bad("experiment.kind", "expected solve, sweep, compare or verify");
  }
}

// Problem part of a config (everything except policy/experiment).
ProblemSpec parse_problem(const json& doc, std::vector<std::size_t>& resolution) {
  ProblemSpec ps;
  ps.domain = parse_domain(doc.contains("domain") ? doc["domain"] : json());
  const int dim = dimension(ps.domain);
  resolution = doc.contains("grid") ? parse_grid(doc["grid"], dim)
                                    : std::vector<std::size_t>(static_cast<std::size_t>(dim), 101);
  if (!doc.contains("reaction")) bad("reaction", "missing");
  ps.reaction = parse_reaction(doc["reaction"]);
  ps.convection = doc.contains("convection") ? parse_convection(doc["convection"], dim)
                                             : ConvectionSpec::zero(dim);
  if (!doc.contains("sigma")) bad("sigma", "missing");
  ps.sigma = parse_sigma(doc["sigma"]);
  if (!doc.contains("initial")) bad("initial", "missing");
  ps.initial = parse_initial(doc["initial"], dim);
  return ps;
}

}  // namespace

ExperimentPlan parse_config(const json& doc) {
  Obj top(doc, "", {"domain", "grid", "reaction", "convection", "sigma", "initial", "policy",
                    "experiment"});
  ExperimentPlan plan;
  plan.problem = parse_problem(doc, plan.resolution);
  plan.policy = parse_policy(doc.contains("policy") ? doc["policy"] : json::object(), plan.workers);
  parse_experiment(doc.contains("experiment") ? doc["experiment"] : json::object(), plan);
  plan.config = doc;
  if (plan.config.contains("experiment")) plan.config["experiment"].erase("output");
  for (std::size_t i = 0; i < plan.variants.size(); ++i) {
    json merged = plan.config;
    merged.merge_patch(plan.variants[i]);
    try {
      std::vector<std::size_t> res;
      (void)parse_problem(merged, res);
    } catch (const Error& e) {
      bad("experiment.variants[" + std::to_string(i) + "]", e.what());
    }
  }
  return plan;
}

ExperimentPlan parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::parse, std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

ExperimentPlan load_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in) fail(ErrorKind::io, "cannot read " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::uint64_t config_digest(const json& config) {
  // FNV-1a over the compact dump; json objects iterate in key order.
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string digest_hex(std::uint64_t d) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(d));
  return buf;
}

Grid plan_grid(const ExperimentPlan& plan) { return build_grid(plan.problem.domain, plan.resolution); }

// ---------------------------------------------------------------- index

json to_json(const IndexEntry& e) {
  json j{{"id", e.id}, {"digest", e.digest}, {"status", e.status}, {"verdict", e.verdict},
         {"params", e.params}, {"files", e.files}};
  if (!e.message.empty()) j["message"] = e.message;
  j["T_est"] = e.T_est ? json(*e.T_est) : json();
  j["T_tilde"] = e.T_tilde ? json(*e.T_tilde) : json();
  j["exponent"] = e.exponent ? json(*e.exponent) : json();
  return j;
}

IndexEntry entry_from_json(const json& j) {
  IndexEntry e;
  e.id = j.at("id").get<std::string>();
  e.digest = j.at("digest").get<std::string>();
  e.status = j.at("status").get<std::string>();
  e.verdict = j.value("verdict", "");
  e.message = j.value("message", "");
  e.params = j.value("params", json::object());
  auto opt = [&](const char* k) -> std::optional<double> {
    if (j.contains(k) && j[k].is_number()) return j[k].get<double>();
    return std::nullopt;
  };
  e.T_est = opt("T_est");
  e.T_tilde = opt("T_tilde");
  e.exponent = opt("exponent");
  e.files = j.value("files", std::vector<std::string>{});
  return e;
}

ResultIndex read_index(const fs::path& dir) {
  ResultIndex idx;
  const fs::path file = dir / "index.json";
  if (!fs::exists(file)) return idx;
  std::ifstream in(file);
  json j;
  try {
    j = json::parse(in);
    for (const auto& e : j.at("entries")) idx.entries.push_back(entry_from_json(e));
  } catch (const std::exception& e) {
    fail(ErrorKind::io, "corrupt index " + file.string() + ": " + e.what());
  }
  return idx;
}

namespace {

void write_file(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  out << text;
  out.close();
  if (!out) fail(ErrorKind::io, "cannot write " + file.string());
}

// Serialised index writer: entries keyed by id, rewritten atomically.
class IndexWriter {
 public:
  explicit IndexWriter(fs::path dir) : dir_(std::move(dir)) {
    for (auto& e : read_index(dir_).entries) entries_[e.id] = std::move(e);
  }

  std::optional<IndexEntry> find(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(id);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void put(IndexEntry e) {
    std::lock_guard lock(mu_);
    entries_[e.id] = std::move(e);
    json arr = json::array();
    for (const auto& [id, entry] : entries_) arr.push_back(to_json(entry));
    const fs::path tmp = dir_ / "index.json.tmp";
    write_file(tmp, json{{"entries", arr}}.dump(2) + "\n");
    fs::rename(tmp, dir_ / "index.json");
  }

 private:
  fs::path dir_;
  mutable std::mutex mu_;
  std::map<std::string, IndexEntry> entries_;
};

double component_q(const ProblemSpec& ps) {
  return ps.convection.components.empty() ? 0.0 : ps.convection.components.front().q;
}
double component_alpha(const ProblemSpec& ps) {
  return ps.convection.components.empty() ? 0.0 : ps.convection.components.front().alpha;
}

json cell_params(const ProblemSpec& ps) {
  const bool zero_conv = ps.convection.is_zero();
  return json{{"p", ps.reaction.p},
              {"q", zero_conv ? 0.0 : component_q(ps)},
              {"alpha", zero_conv ? 0.0 : component_alpha(ps)},
              {"sigma", ps.sigma.kind == SigmaSpec::Kind::dynamical ? ps.sigma.value : 0.0},
              {"boundary", ps.sigma.kind == SigmaSpec::Kind::dynamical ? "dynamical"
                           : ps.sigma.kind == SigmaSpec::Kind::neumann ? "neumann" : "dirichlet"}};
}

json solve_config(const json& config) {
  json c = config;
  json exp = json{{"kind", "solve"}};
  if (config.contains("experiment") && config["experiment"].contains("mass"))
    exp["mass"] = config["experiment"]["mass"];
  c["experiment"] = exp;
  if (c.contains("policy")) c["policy"].erase("workers");
  return c;
}

json report_json(const BoundsReport& br) {
  json j{{"C", br.C}, {"C1", br.C1}, {"C2", br.C2}, {"C3", br.C3}, {"C4", br.C4},
         {"eps1", br.eps1}, {"eps2", br.eps2}, {"grad_phi_integral", br.grad_phi_integral},
         {"threshold", br.threshold}, {"M0", br.M0}, {"condition_met", br.condition_met}};
  j["T_tilde"] = br.T_tilde ? json(*br.T_tilde) : json();
  return j;
}

struct CellOutcome {
  IndexEntry entry;
  std::optional<RunRecord> record;
};

CellOutcome run_cell(const Cell& cell, const std::vector<std::size_t>& resolution,
                     const StepPolicy& policy, bool mass, const fs::path& out_dir,
                     bool keep_record) {
  CellOutcome oc;
  IndexEntry& e = oc.entry;
  const json cfg = solve_config(cell.config);
  e.digest = digest_hex(config_digest(cfg));
  e.id = "run-" + e.digest;
  e.params = cell.params;
  const fs::path rel = fs::path("runs") / e.id;
  const fs::path final_dir = out_dir / rel;
  const fs::path tmp_dir = out_dir / "runs" / (e.id + ".partial");
  try {
    const ProblemSpec& ps = cell.problem;
    const Grid grid = build_grid(ps.domain, resolution);
    const ValidationReport vr = validate_problem(ps, &grid);
    json summary{{"id", e.id}, {"digest", e.digest}};
    json checks = json::array();
    for (const auto& c : vr.checks)
      checks.push_back({{"name", c.name}, {"passed", c.passed}, {"hard", c.hard}, {"detail", c.detail}});
    summary["validation"] = checks;

    const Field u0 = sample_initial(ps.initial, grid);
    const auto bounds = auto_bounds(ps, grid, u0, 1e6);
    if (bounds) {
      summary["bounds"] = report_json(*bounds);
      e.T_tilde = bounds->T_tilde;
    }
    std::optional<MassProbe> probe;
    if (mass && vr.hard_ok()) {
      const double m = ps.reaction.kind == ReactionSpec::Kind::power && bounds
                           ? ps.reaction.p / (ps.reaction.p - (component_q(ps) + 1.0))
                           : 1.0;
      probe = make_mass_probe(eigenpair_analytic(grid), m);
      summary["mass_m"] = m;
    }

    RunRecord rr = run(ps, grid, policy, probe);
    e.verdict = to_string(rr.verdict.kind);
    summary["verdict"] = {{"kind", e.verdict}, {"t_last", rr.verdict.t_last},
                          {"sup_last", rr.verdict.sup_last}, {"reason", rr.verdict.reason}};
    summary["steps"] = rr.steps;
    summary["samples"] = rr.size();
    if (rr.verdict.kind == Verdict::Kind::blew_up &&
        (ps.reaction.kind == ReactionSpec::Kind::power ||
         ps.reaction.kind == ReactionSpec::Kind::exponential)) {
      try {
        const BlowupEstimate est = analyse_blowup(rr, ps.reaction);
        e.T_est = est.T_est;
        summary["T_est"] = est.T_est;
        summary["fit_window"] = {est.fit_window.first, est.fit_window.second};
        summary["fit_samples"] = est.fit_samples;
        if (est.T_est > rr.times.back()) {
          e.exponent = est.exponent;
          summary["exponent"] = est.exponent;
          summary["exponent_stderr"] = est.exponent_stderr;
          summary["lower_bound_ok"] = est.lower_bound_ok;
        }
        // T_est is a proxy; report how far it moves on the nested grid with 2h.
        std::vector<std::size_t> fine{grid.nx()}, coarse;
        if (grid.dim() == 2) fine.push_back(grid.ny());
        for (std::size_t n : fine) coarse.push_back((n + 1) / 2);
        const bool nests = std::ranges::all_of(fine, [](std::size_t n) { return n % 2 == 1 && n >= 5; });
        if (nests) {
          const Grid cg = build_grid(ps.domain, coarse);
          const RunRecord cr = run(ps, cg, policy);
          json ref{{"coarse_n", coarse}, {"verdict", to_string(cr.verdict.kind)}};
          if (cr.verdict.kind == Verdict::Kind::blew_up) {
            try {
              const double Tc = estimate_blowup_time(cr, ps.reaction);
              ref["T_est_coarse"] = Tc;
              ref["delta"] = std::abs(est.T_est - Tc);
            } catch (const Error& err) {
              ref["fit_error"] = err.what();
            }
          }
          summary["refinement"] = ref;
        }
      } catch (const Error& err) {
        summary["fit_error"] = err.what();
      }
    }

    fs::remove_all(tmp_dir);
    fs::create_directories(tmp_dir);
    write_file(tmp_dir / "series.csv", series_csv(rr));
    write_file(tmp_dir / "summary.json", summary.dump(2) + "\n");
    write_file(tmp_dir / "config.json", cfg.dump(2) + "\n");
    fs::remove_all(final_dir);
    fs::rename(tmp_dir, final_dir);
    e.status = "ok";
    e.files = {(rel / "series.csv").generic_string(), (rel / "summary.json").generic_string(),
               (rel / "config.json").generic_string()};
    if (keep_record) oc.record = std::move(rr);
  } catch (const std::exception& ex) {
    std::error_code ec;
    fs::remove_all(tmp_dir, ec);
    e.status = "error";
    e.message = ex.what();
  }
  return oc;
}

bool cell_complete(const IndexEntry& e, const fs::path& dir) {
  return e.status == "ok" && fs::exists(dir / "runs" / e.id / "summary.json") &&
         fs::exists(dir / "runs" / e.id / "series.csv");
}

}  // namespace

std::optional<BoundsReport> auto_bounds(const ProblemSpec& ps, const Grid& grid, const Field& u0,
                                        double omega_max) {
  if (ps.reaction.kind != ReactionSpec::Kind::power || ps.convection.is_zero()) return std::nullopt;
  const auto& first = ps.convection.components.front();
  for (const auto& c : ps.convection.components)
    if (c.kind != ConvectionComponent::Kind::power || c.q != first.q || c.alpha != first.alpha)
      return std::nullopt;
  const double p = ps.reaction.p, q = first.q + 1.0, alpha = first.alpha / q;
  if (!(q > 1.0 && q < p && alpha > 0.0)) return std::nullopt;
  try {
    BoundsInput bi = make_bounds_input(p, q, alpha, eigenpair_analytic(grid), ps.convection, omega_max);
    BoundsReport br = blowup_constant(bi);
    return check_condition_and_bound(br, u0, bi.eigen, p, bi.m(), bi.omega_measure);
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::vector<Cell> expand_cells(const ExperimentPlan& plan) {
  std::vector<Cell> cells;
  auto make = [&](const json& config) {
    Cell c;
    c.config = config;
    std::vector<std::size_t> res;
    c.problem = parse_problem(config, res);
    c.params = cell_params(c.problem);
    cells.push_back(std::move(c));
  };
  switch (plan.kind) {
    case ExperimentPlan::Kind::solve:
    case ExperimentPlan::Kind::verify:
      make(plan.config);
      break;
    case ExperimentPlan::Kind::compare:
      make(plan.config);
      for (const auto& v : plan.variants) {
        json merged = plan.config;
        merged.merge_patch(v);
        make(merged);
      }
      break;
    case ExperimentPlan::Kind::sweep: {
      auto axis = [](const std::vector<double>& v) {
        return v.empty() ? std::vector<std::optional<double>>{std::nullopt}
                         : std::vector<std::optional<double>>(v.begin(), v.end());
      };
      for (auto p : axis(plan.axes.p))
        for (auto q : axis(plan.axes.q))
          for (auto a : axis(plan.axes.alpha))
            for (auto s : axis(plan.axes.sigma)) {
              json c = plan.config;
              if (p) {
                if (plan.problem.reaction.kind != ReactionSpec::Kind::power &&
                    plan.problem.reaction.kind != ReactionSpec::Kind::exponential)
                  bad("experiment.sweep.p", "needs a power or exponential reaction");
                c["reaction"]["p"] = *p;
              }
              if (q || a) {
                // Uniform convection; a zero template becomes alpha u^q.
                const auto& t = plan.problem.convection.components.front();
                json comp;
                comp["kind"] = t.kind == ConvectionComponent::Kind::exponential ? "exponential" : "power";
                comp["alpha"] = a ? *a : (t.kind == ConvectionComponent::Kind::zero ? 1.0 : t.alpha);
                comp["q"] = q ? *q : t.q;
                c["convection"] = comp;
              }
              if (s) c["sigma"] = json{{"kind", "dynamical"}, {"value", *s}};
              make(c);
            }
      break;
    }
  }
  return cells;
}

ResultIndex run_experiment(const ExperimentPlan& plan, const RunOptions& opts) {
  const fs::path dir = plan.output;
  try {
    fs::create_directories(dir / "runs");
  } catch (const fs::filesystem_error& e) {
    fail(ErrorKind::io, std::string("cannot create output directory: ") + e.what());
  }
  const std::vector<Cell> cells = expand_cells(plan);
  IndexWriter writer(dir);
  const bool is_compare = plan.kind == ExperimentPlan::Kind::compare;

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const std::string id = "run-" + digest_hex(config_digest(solve_config(cells[i].config)));
    const auto existing = writer.find(id);
    if (is_compare || !existing || !cell_complete(*existing, dir)) pending.push_back(i);
  }

  std::vector<std::optional<RunRecord>> records(cells.size());
  std::atomic<std::size_t> next{0};
  const std::size_t limit = opts.max_new_cells.value_or(pending.size());
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= pending.size() || k >= limit) return;
      const std::size_t i = pending[k];
      CellOutcome oc = run_cell(cells[i], plan.resolution, plan.policy, plan.mass, dir, is_compare);
      records[i] = std::move(oc.record);
      writer.put(std::move(oc.entry));
    }
  };
  std::size_t workers = plan.workers ? plan.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max<std::size_t>(1, std::min(pending.size(), limit)));
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  if (is_compare) {
    json arr = json::array();
    const std::string base = "run-" + digest_hex(config_digest(solve_config(cells[0].config)));
    for (std::size_t i = 1; i < cells.size(); ++i) {
      json row{{"a", base},
               {"b", "run-" + digest_hex(config_digest(solve_config(cells[i].config))),
               }};
      if (records[0] && records[i]) {
        try {
          const OrderingReport o = compare_runs(*records[0], *records[i]);
          row["a_le_b"] = o.a_le_b;
          row["max_diff"] = o.max_diff;
          row["scale"] = o.scale;
          row["matched"] = o.matched;
          const OrderingReport r = compare_runs(*records[i], *records[0]);
          row["b_le_a"] = r.a_le_b;
        } catch (const Error& e) {
          row["error"] = e.what();
        }
      } else {
        row["error"] = "run failed";
      }
      arr.push_back(row);
    }
    write_file(dir / "compare.json", arr.dump(2) + "\n");
  }

  // Report the plan's own cells, in plan order.
  ResultIndex idx;
  for (const auto& c : cells) {
    const std::string id = "run-" + digest_hex(config_digest(solve_config(c.config)));
    if (auto e = writer.find(id)) idx.entries.push_back(*e);
  }
  return idx;
}

std::string series_csv(const RunRecord& rr) {
  std::string s = "t,sup_norm,min_value,mass,dt\n";
  for (std::size_t i = 0; i < rr.size(); ++i) {
    s += format_double(rr.times[i]);
    s += ',';
    s += format_double(rr.sup_norm[i]);
    s += ',';
    s += format_double(rr.min_value[i]);
    s += ',';
    if (rr.has_mass()) s += format_double(rr.mass_series[i]);
    s += ',';
    s += format_double(rr.dt[i]);
    s += '\n';
  }
  return s;
}

SeriesTable read_series_csv(const fs::path& file) {
  std::ifstream in(file);
  if (!in) fail(ErrorKind::io, "cannot read " + file.string());
  SeriesTable t;
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,sup_norm,min_value,mass,dt", 0) != 0)
    fail(ErrorKind::parse, file.string() + ": unexpected header");
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    if (cols.size() < 4) fail(ErrorKind::parse, file.string() + ": bad row " + std::to_string(row));
    auto num = [&](const std::string& s) {
      double v = 0.0;
      const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
      if (r.ec != std::errc()) fail(ErrorKind::parse, file.string() + ": bad number on row " + std::to_string(row));
      return v;
    };
    t.t.push_back(num(cols[0]));
    t.sup_norm.push_back(num(cols[1]));
    t.min_value.push_back(num(cols[2]));
    t.dt.push_back(cols.size() > 4 ? num(cols[4]) : 0.0);
  }
  return t;
}

std::vector<fs::path> emit_tables(const ResultIndex& index, const fs::path& dir) {
  if (index.entries.empty()) fail(ErrorKind::precondition, "emit_tables needs a non-empty index");
  std::vector<IndexEntry> rows = index.entries;
  auto key = [](const IndexEntry& e) {
    auto g = [&](const char* k) { return e.params.contains(k) ? e.params[k].get<double>() : 0.0; };
    return std::make_tuple(g("p"), g("q"), g("alpha"), g("sigma"), e.id);
  };
  std::stable_sort(rows.begin(), rows.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });

  const fs::path tables = dir / "tables";
  fs::create_directories(tables);
  std::vector<fs::path> written;
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  std::string csv = "id,p,q,alpha,sigma,class,T_est,T_tilde,exponent\n";
  for (const auto& e : rows) {
    const auto [p, q, a, s, id] = key(e);
    std::string cls = e.status != "ok" ? "error"
                      : e.verdict == "blew_up" ? "blow-up"
                      : e.verdict == "reached_horizon" ? "global" : e.verdict;
    csv += id + ',' + format_double(p) + ',' + format_double(q) + ',' + format_double(a) + ',' +
           format_double(s) + ',' + cls + ',' + opt(e.T_est) + ',' + opt(e.T_tilde) + ',' +
           opt(e.exponent) + '\n';
    if (e.status == "ok" && e.verdict == "blew_up") {
      const SeriesTable st = read_series_csv(dir / "runs" / e.id / "series.csv");
      std::string dat = "# t sup_norm";
      if (e.T_est) dat += " T_est-t";
      dat += '\n';
      for (std::size_t i = 0; i < st.t.size(); ++i) {
        dat += format_double(st.t[i]) + ' ' + format_double(st.sup_norm[i]);
        if (e.T_est) dat += ' ' + format_double(*e.T_est - st.t[i]);
        dat += '\n';
      }
      const fs::path f = tables / (e.id + ".dat");
      write_file(f, dat);
      written.push_back(f);
    }
  }
  const fs::path f = tables / "classification.csv";
  write_file(f, csv);
  written.insert(written.begin(), f);
  return written;
}

}  // namespace blowuplab
