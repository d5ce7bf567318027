#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "blowuplab/grid.hpp"
#include "blowuplab/problem.hpp"

namespace blowuplab {

struct StepPolicy {
  double cfl_safety = 0.4;
  double dt_min = 1e-15;
  double dt_max = 1e-2;
  double blowup_threshold = 1e6;
  double t_horizon = 1.0;
  std::size_t snapshot_stride = 1000;
  // When > 0, steps are clipped so snapshots land exactly on multiples of this
  // time; runs with equal snapshot_every can then be compared pointwise.
  double snapshot_every = 0.0;
  // Record every k-th step in the scalar series (the final steps are always kept).
  std::size_t series_stride = 1;
  std::size_t max_steps = 50'000'000;
};

// Throws precondition error when the policy is inconsistent.
void check_policy(const StepPolicy& policy, double sup_u0);

// Weights w_i such that M = sum_i w_i u_i (quadrature weight times phi^m).
struct MassProbe {
  std::vector<double> weights;
  double m = 1.0;
};

struct Snapshot {
  double t = 0.0;
  Field field;
};

struct Verdict {
  enum class Kind { blew_up, reached_horizon, stagnated };
  Kind kind = Kind::reached_horizon;
  double t_last = 0.0;
  double sup_last = 0.0;
  std::string reason;
};

const char* to_string(Verdict::Kind kind);

struct RunRecord {
  std::vector<double> times;
  std::vector<double> sup_norm;
  std::vector<double> min_value;
  std::vector<double> mass_series;  // empty when no probe was attached
  std::vector<double> dt;           // step that led to each sample (0 for t = 0)
  std::vector<Snapshot> snapshots;
  Verdict verdict;
  std::size_t steps = 0;

  std::size_t size() const { return times.size(); }
  bool has_mass() const { return !mass_series.empty(); }
};

// Result of the spatial operator at one instant.
struct Rhs {
  std::vector<double> interior;       // du/dt at interior nodes, 0 on the boundary
  std::vector<double> boundary_flux;  // normal derivative per boundary node
};

// Method-of-lines right-hand side for a fixed problem and grid.
class SemiDiscrete {
 public:
  SemiDiscrete(const ProblemSpec& ps, const Grid& grid);

  const Grid& grid() const { return grid_; }
  const ProblemSpec& problem() const { return ps_; }

  // du/dt at every node, including the boundary law.
  void rate(std::span<const double> u, std::span<double> out) const;
  // PDE operator (Laplacian - upwind convection + reaction) at one node.
  double pde_rate(std::span<const double> u, std::size_t node) const;

  // Applies boundary constraints in place (Dirichlet nodes set to 0).
  void constrain(std::span<double> u) const;
  // One classical RK4 step.
  void rk4_step(std::span<const double> u, double dt, std::span<double> out) const;

  // Largest stable/accurate step for the current state.
  double stable_dt(std::span<const double> u, double safety) const;

  const std::vector<double>& sigma() const { return sigma_; }

 private:
  enum class NodeMode : unsigned char { interior, dynamical, reflect, pinned };

  ProblemSpec ps_;
  Grid grid_;
  std::vector<NodeMode> mode_;
  std::vector<double> sigma_;  // per boundary slot
  double min_positive_sigma_ = 0.0;
  mutable std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

// Throws invalid_field on non-finite input.
Rhs assemble_rhs(const ProblemSpec& ps, const Grid& grid, const Field& u);

// Throws precondition error for dt <= 0 and invalid_field if the step overflows.
Field advance(const ProblemSpec& ps, const Grid& grid, const Field& u, double dt);

// Adaptive explicit integration until blow-up, horizon or stagnation.
// Throws precondition error if the hard hypotheses fail.
RunRecord run(const ProblemSpec& ps, const Grid& grid, const StepPolicy& policy,
              const std::optional<MassProbe>& probe = std::nullopt);

// Trapezoidal sum of u over the grid (conserved by the Neumann heat flow).
double total_mass(const Field& u);

}  // namespace blowuplab
