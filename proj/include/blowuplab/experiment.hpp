#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "blowuplab/bounds.hpp"
#include "blowuplab/comparison.hpp"
#include "blowuplab/problem.hpp"
#include "blowuplab/solver.hpp"

namespace blowuplab {

using json = nlohmann::json;

struct SweepAxes {
  std::vector<double> p, q, alpha, sigma;  // empty axis: keep the template value
};

struct ExperimentPlan {
  enum class Kind { solve, compare, sweep, verify };
  enum class Verify { bounds, rates, supersolution, subsolution };

  Kind kind = Kind::solve;
  Verify verify = Verify::rates;
  ProblemSpec problem;
  std::vector<std::size_t> resolution;
  StepPolicy policy;
  std::size_t workers = 0;  // 0: hardware concurrency
  bool mass = false;        // attach the eigenfunction mass probe
  SweepAxes axes;
  std::vector<json> variants;  // compare: merge patches over the template
  json verify_options = json::object();
  std::filesystem::path output;
  json config;  // the validated document, output path removed
};

// Throws parse error naming the offending key path (e.g. "sigma.value").
ExperimentPlan parse_config(const json& doc);
ExperimentPlan parse_config_text(const std::string& text);
ExperimentPlan load_config(const std::filesystem::path& file);

// Stable 64-bit digest of a canonical JSON value (keys are sorted by json).
std::uint64_t config_digest(const json& config);
std::string digest_hex(std::uint64_t d);

struct IndexEntry {
  std::string id;
  std::string digest;
  std::string status;  // "ok" or "error"
  std::string verdict;
  std::string message;
  json params = json::object();  // p, q, alpha, sigma
  std::optional<double> T_est, T_tilde, exponent;
  std::vector<std::string> files;  // relative to the output directory
};

struct ResultIndex {
  std::vector<IndexEntry> entries;
};

json to_json(const IndexEntry& e);
IndexEntry entry_from_json(const json& j);
ResultIndex read_index(const std::filesystem::path& dir);  // empty if absent

struct RunOptions {
  // Stop after this many newly completed cells (simulates an interrupted sweep).
  std::optional<std::size_t> max_new_cells;
};

// Per-cell problems of a sweep in deterministic order, with their parameters.
struct Cell {
  ProblemSpec problem;
  json config;
  json params;
};
std::vector<Cell> expand_cells(const ExperimentPlan& plan);

// Runs solve/sweep/compare plans, writing runs/<id>/{series.csv,summary.json,
// config.json} and index.json under plan.output. Completed cells with a
// matching digest are skipped.
ResultIndex run_experiment(const ExperimentPlan& plan, const RunOptions& opts = {});

// Series CSV: t,sup_norm,min_value,mass,dt.
std::string series_csv(const RunRecord& rr);
struct SeriesTable {
  std::vector<double> t, sup_norm, min_value, dt;
};
SeriesTable read_series_csv(const std::filesystem::path& file);

// Writes tables/classification.csv and one tables/<id>.dat per blow-up run.
// Throws precondition error for an empty index.
std::vector<std::filesystem::path> emit_tables(const ResultIndex& index,
                                               const std::filesystem::path& dir);

// Shortest round-trip decimal representation.
std::string format_double(double v);

// Grid for a plan (resolution applied to the plan's domain).
Grid plan_grid(const ExperimentPlan& plan);

// Bounds report for a power reaction with uniform power convection alpha u^qg:
// G = alpha u^(qg+1)/(qg+1), so q = qg + 1 and alpha_G = alpha/(qg+1).
// nullopt when the theorem's regime does not apply.
std::optional<BoundsReport> auto_bounds(const ProblemSpec& ps, const Grid& grid, const Field& u0,
                                        double omega_max);

}  // namespace blowuplab
