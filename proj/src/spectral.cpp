#include "blowuplab/spectral.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "blowuplab/errors.hpp"

namespace blowuplab {

namespace {

struct AxisInfo {
  double lo[2] = {0.0, 0.0};
  double len[2] = {1.0, 1.0};
};

AxisInfo axes(const Domain& d) {
  AxisInfo a;
  if (const auto* iv = std::get_if<Interval>(&d)) {
    a.lo[0] = iv->a;
    a.len[0] = iv->b - iv->a;
  } else {
    const auto& r = std::get<Rectangle>(d);
    a.lo[0] = r.a1;
    a.lo[1] = r.a2;
    a.len[0] = r.b1 - r.a1;
    a.len[1] = r.b2 - r.a2;
  }
  return a;
}

Field max_normalise(const Grid& grid, std::vector<double> v) {
  double peak = 0.0;
  for (double x : v)
    if (std::abs(x) > std::abs(peak)) peak = x;
  if (peak == 0.0) fail(ErrorKind::convergence, "eigenvector collapsed to zero");
  for (double& x : v) x /= peak;
  for (const auto& b : grid.boundary_nodes()) v[b.index] = 0.0;
  return Field(grid, std::move(v));
}

}  // namespace

EigenPair eigenpair_analytic(const Grid& grid) {
  const AxisInfo a = axes(grid.domain());
  EigenPair ep;
  ep.source = EigenPair::Source::analytic;
  ep.lambda = 0.0;
  for (int k = 0; k < grid.dim(); ++k) {
    const double w = std::numbers::pi / a.len[k];
    ep.lambda += w * w;
  }
  std::vector<double> v(grid.size());
  for (std::size_t n = 0; n < v.size(); ++n) {
    const Vec2 x = grid.coords(n);
    double s = 1.0;
    for (int k = 0; k < grid.dim(); ++k) s *= std::sin(std::numbers::pi * (x[k] - a.lo[k]) / a.len[k]);
    v[n] = s;
  }
  // Grid may miss the exact peak; sup over nodes is what the bounds see.
  ep.phi = max_normalise(grid, std::move(v));
  return ep;
}

EigenPair eigenpair_numeric(const Grid& grid, double tol, const std::optional<Field>& start,
                            std::size_t max_iterations) {
  if (!(tol > 0.0)) fail(ErrorKind::precondition, "eigenpair_numeric needs tol > 0");
  const auto interior = grid.interior_nodes();
  const std::size_t n = interior.size();
  std::vector<std::ptrdiff_t> unknown(grid.size(), -1);
  for (std::size_t k = 0; k < n; ++k) unknown[interior[k]] = static_cast<std::ptrdiff_t>(k);

  using SpMat = Eigen::SparseMatrix<double>;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(n * (1 + 2 * grid.dim()));
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t node = interior[k];
    double diag = 0.0;
    for (int axis = 0; axis < grid.dim(); ++axis) {
      const std::size_t stride = axis == 0 ? 1 : grid.nx();
      const double c = 1.0 / (grid.h(axis) * grid.h(axis));
      diag += 2.0 * c;
      for (std::size_t nb : {node - stride, node + stride})
        if (unknown[nb] >= 0) trip.emplace_back(static_cast<int>(k), static_cast<int>(unknown[nb]), -c);
    }
    trip.emplace_back(static_cast<int>(k), static_cast<int>(k), diag);
  }
  SpMat A(static_cast<int>(n), static_cast<int>(n));
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<SpMat> solver(A);
  if (solver.info() != Eigen::Success) fail(ErrorKind::convergence, "Laplacian factorisation failed");

  Eigen::VectorXd x(static_cast<Eigen::Index>(n));
  if (start) {
    if (!start->grid().same_layout(grid)) fail(ErrorKind::domain, "start vector on a different grid");
    for (std::size_t k = 0; k < n; ++k) x[static_cast<Eigen::Index>(k)] = (*start)[interior[k]];
  } else {
    x.setOnes();
  }
  if (x.norm() == 0.0) fail(ErrorKind::precondition, "start vector vanishes on the interior");
  x.normalize();

  double lambda = x.dot(A * x);
  double residual = std::numeric_limits<double>::infinity();
  std::size_t it = 0;
  for (; it < max_iterations; ++it) {
    Eigen::VectorXd y = solver.solve(x);
    y.normalize();
    const Eigen::VectorXd Ay = A * y;
    const double next = y.dot(Ay);
    // Residual measured with phi scaled to max 1.
    const double peak = y.cwiseAbs().maxCoeff();
    residual = (Ay - next * y).cwiseAbs().maxCoeff() / peak;
    const double change = std::abs(next - lambda) / next;
    x = std::move(y);
    lambda = next;
    if (change < tol && residual <= 1e-6 * lambda) {
      ++it;
      break;
    }
  }
  if (!(residual <= 1e-6 * lambda)) {
    std::ostringstream os;
    os << "inverse iteration did not converge after " << it << " iterations (residual "
       << residual << ")";
    fail(ErrorKind::convergence, os.str());
  }

  std::vector<double> v(grid.size(), 0.0);
  for (std::size_t k = 0; k < n; ++k) v[interior[k]] = x[static_cast<Eigen::Index>(k)];
  EigenPair ep;
  ep.source = EigenPair::Source::numeric;
  ep.lambda = lambda;
  ep.phi = max_normalise(grid, std::move(v));
  ep.iterations = it;
  ep.residual = residual;
  return ep;
}

double grad_phi_m_integral(const EigenPair& ep, double m, bool force_quadrature) {
  if (!(m >= 1.0)) fail(ErrorKind::domain, "grad_phi_m_integral needs m >= 1");
  const Grid& grid = ep.phi.grid();
  if (!force_quadrature && ep.source == EigenPair::Source::analytic && grid.dim() == 1) {
    // int_0^L |(pi/L) cos(pi x/L)|^m dx = (pi/L)^(m-1) * B(1/2, (m+1)/2)
    const double L = measure(grid.domain());
    const double beta = std::sqrt(std::numbers::pi) * std::tgamma(0.5 * (m + 1.0)) /
                        std::tgamma(0.5 * m + 1.0);
    return std::pow(std::numbers::pi / L, m - 1.0) * beta;
  }
  const auto phi = ep.phi.values();
  std::vector<double> integrand(grid.size());
  const std::size_t len[2] = {grid.nx(), grid.ny()};
  for (std::size_t node = 0; node < grid.size(); ++node) {
    const std::size_t idx[2] = {grid.ix(node), grid.iy(node)};
    double g2 = 0.0;
    for (int k = 0; k < grid.dim(); ++k) {
      const std::size_t s = k == 0 ? 1 : grid.nx();
      const double h = grid.h(k);
      double d;
      if (idx[k] == 0)
        d = (-3.0 * phi[node] + 4.0 * phi[node + s] - phi[node + 2 * s]) / (2.0 * h);
      else if (idx[k] == len[k] - 1)
        d = (3.0 * phi[node] - 4.0 * phi[node - s] + phi[node - 2 * s]) / (2.0 * h);
      else
        d = (phi[node + s] - phi[node - s]) / (2.0 * h);
      g2 += d * d;
    }
    integrand[node] = std::pow(g2, 0.5 * m);
  }
  return integrate(grid, integrand);
}

}  // namespace blowuplab
