#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "blowuplab/errors.hpp"
#include "blowuplab/experiment.hpp"

using namespace blowuplab;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("blowuplab-test-" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

json minimal() {
  return json::parse(R"({
    "domain": {"kind": "interval", "a": 0, "b": 1},
    "reaction": {"kind": "power", "p": 2},
    "sigma": {"kind": "neumann"},
    "initial": {"kind": "constant", "value": 1}
  })");
}

std::string parse_error(const json& doc) {
  try {
    parse_config(doc);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::parse);
    return e.what();
  }
  return "";
}

std::string slurp(const fs::path& f) {
  std::ifstream in(f, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json sweep_config(const fs::path& out) {
  json c = minimal();
  c["grid"] = {{"n", 41}};
  c["convection"] = {{"kind", "power"}, {"alpha", 1}, {"q", 1}};
  c["sigma"] = {{"kind", "dynamical"}, {"value", 1}};
  c["initial"] = {{"kind", "constant"}, {"value", 2}};
  c["policy"] = {{"t_horizon", 2}, {"workers", 2}};
  c["experiment"] = {{"kind", "sweep"}, {"output", out.string()}, {"sweep", {{"p", {2, 3}}, {"q", {1}}}}};
  return c;
}

}  // namespace

TEST_CASE("minimal config parses with defaults") {
  const ExperimentPlan plan = parse_config(minimal());
  CHECK(plan.kind == ExperimentPlan::Kind::solve);
  CHECK(plan.resolution == std::vector<std::size_t>{101});
  CHECK(plan.problem.reaction.p == 2.0);
  CHECK(plan.problem.sigma.kind == SigmaSpec::Kind::neumann);
  CHECK(plan.problem.convection.is_zero());
}

TEST_CASE("schema violations cite the key path") {
  json c = minimal();
  c["sigma"] = {{"kind", "dynamical"}, {"value", -1}};
  CHECK(parse_error(c).find("sigma.value") == 0);

  c = minimal();
  c["sigma"]["colour"] = "red";
  CHECK(parse_error(c).find("sigma.colour") == 0);

  c = minimal();
  c["extra"] = 1;
  CHECK(parse_error(c).find("extra") == 0);

  c = minimal();
  c["experiment"] = {{"kind", "sweep"}, {"sweep", {{"p", json::array()}}}};
  CHECK(parse_error(c).find("experiment.sweep.p") == 0);

  c = minimal();
  c["grid"] = {{"n", 2}};
  CHECK(parse_error(c).find("grid.n") == 0);

  c = minimal();
  c["policy"] = {{"dt_max", "big"}};
  CHECK(parse_error(c).find("policy.dt_max") == 0);

  CHECK_THROWS_AS(parse_config_text("{not json"), Error);
}

TEST_CASE("digests ignore key order and the output path") {
  const json a = json::parse(R"({"b": 1, "a": {"y": 2, "x": 3}})");
  const json b = json::parse(R"({"a": {"x": 3, "y": 2}, "b": 1})");
  CHECK(config_digest(a) == config_digest(b));
  CHECK(config_digest(a) != config_digest(json::parse(R"({"b": 2, "a": {"x": 3, "y": 2}})")));

  json c1 = minimal(), c2 = minimal();
  c1["experiment"] = {{"output", "/tmp/x"}};
  c2["experiment"] = {{"output", "/elsewhere"}};
  CHECK(config_digest(parse_config(c1).config) == config_digest(parse_config(c2).config));
}

TEST_CASE("solve plan for the ODE limit") {
  TempDir tmp;
  json c = minimal();
  c["policy"] = {{"t_horizon", 2}};
  c["experiment"] = {{"kind", "solve"}, {"output", tmp.path.string()}};
  const ResultIndex idx = run_experiment(parse_config(c));
  REQUIRE(idx.entries.size() == 1);
  const IndexEntry& e = idx.entries[0];
  CHECK(e.status == "ok");
  CHECK(e.verdict == "blew_up");
  REQUIRE(e.T_est);
  CHECK(*e.T_est == doctest::Approx(1.0).epsilon(0.02));
  for (const auto& f : e.files) CHECK(fs::exists(tmp.path / f));
  CHECK(read_index(tmp.path).entries.size() == 1);

  const SeriesTable st = read_series_csv(tmp.path / "runs" / e.id / "series.csv");
  CHECK(st.t.front() == 0.0);
  CHECK(st.sup_norm.front() == 1.0);

  SUBCASE("re-running is bit-identical") {
    const std::string before = slurp(tmp.path / "runs" / e.id / "series.csv");
    fs::remove_all(tmp.path / "runs");
    fs::remove(tmp.path / "index.json");
    run_experiment(parse_config(c));
    CHECK(slurp(tmp.path / "runs" / e.id / "series.csv") == before);
  }
}

TEST_CASE("sweep classification and resumption") {
  TempDir tmp;
  const ExperimentPlan plan = parse_config(sweep_config(tmp.path));
  CHECK(expand_cells(plan).size() == 2);

  RunOptions one;
  one.max_new_cells = 1;
  CHECK(run_experiment(plan, one).entries.size() == 1);
  const ResultIndex idx = run_experiment(plan);
  REQUIRE(idx.entries.size() == 2);
  // g = u is exactly u^(p-1) for p = 2: the global-existence regime.
  CHECK(idx.entries[0].params["p"] == 2.0);
  CHECK(idx.entries[0].verdict == "reached_horizon");
  CHECK(idx.entries[1].params["p"] == 3.0);
  CHECK(idx.entries[1].verdict == "blew_up");

  const auto files = emit_tables(read_index(tmp.path), tmp.path);
  const std::string table = slurp(tmp.path / "tables" / "classification.csv");
  CHECK(table.find(",global,") != std::string::npos);
  CHECK(table.find(",blow-up,") != std::string::npos);
  CHECK(table.find(",global,") < table.find(",blow-up,"));  // sorted by p
  CHECK(files.size() == 2);                                   // table + one .dat
}

TEST_CASE("failing cells are recorded without stopping the sweep") {
  TempDir tmp;
  json c = sweep_config(tmp.path);
  c["experiment"]["sweep"] = {{"p", {0.5, 3}}};
  const ResultIndex idx = run_experiment(parse_config(c));
  REQUIRE(idx.entries.size() == 2);
  CHECK(idx.entries[0].status == "error");
  CHECK_FALSE(idx.entries[0].message.empty());
  CHECK(idx.entries[1].status == "ok");
}

TEST_CASE("tables") {
  TempDir tmp;
  CHECK_THROWS_AS(emit_tables(ResultIndex{}, tmp.path), Error);
  IndexEntry e;
  e.id = "run-a";
  e.status = "ok";
  e.verdict = "reached_horizon";
  e.params = {{"p", 2.0}, {"q", 1.0}, {"alpha", 1.0}, {"sigma", 1.0}};
  ResultIndex idx{{e}};
  emit_tables(idx, tmp.path);
  const std::string t = slurp(tmp.path / "tables" / "classification.csv");
  CHECK(t == "id,p,q,alpha,sigma,class,T_est,T_tilde,exponent\nrun-a,2,1,1,1,global,,,\n");
}

TEST_CASE("shortest round-trip number formatting") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1e-300) == "1e-300");
  CHECK(format_double(2.0) == "2");
}
