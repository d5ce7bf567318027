#pragma once

#include <cstddef>
#include <optional>

#include "blowuplab/grid.hpp"

namespace blowuplab {

// First Dirichlet eigenpair of -Laplacian, phi scaled so that max phi = 1.
struct EigenPair {
  enum class Source { analytic, numeric };
  double lambda = 0.0;
  Field phi;
  Source source = Source::analytic;
  std::size_t iterations = 0;  // numeric only
  double residual = 0.0;       // max |L phi + lambda phi| on interior nodes (numeric only)
};

EigenPair eigenpair_analytic(const Grid& grid);

// Inverse power iteration on the 5-point (3-point in 1D) Dirichlet Laplacian.
// Stops when the Rayleigh quotient changes by less than tol (relative) and the
// residual is below 1e-6 * lambda. Throws convergence error otherwise.
EigenPair eigenpair_numeric(const Grid& grid, double tol,
                            const std::optional<Field>& start = std::nullopt,
                            std::size_t max_iterations = 500);

// Integral of |grad phi|^m. Central differences inside, second-order one-sided
// at boundary nodes, trapezoidal weights. For an analytic interval eigenpair
// the closed form is used unless force_quadrature is set.
// Throws domain error for m < 1.
double grad_phi_m_integral(const EigenPair& ep, double m, bool force_quadrature = false);

}  // namespace blowuplab
