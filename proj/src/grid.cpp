#include "blowuplab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "blowuplab/errors.hpp"

namespace blowuplab {

int dimension(const Domain& d) { return std::holds_alternative<Interval>(d) ? 1 : 2; }

double measure(const Domain& d) {
  if (const auto* iv = std::get_if<Interval>(&d)) return iv->b - iv->a;
  const auto& r = std::get<Rectangle>(d);
  return (r.b1 - r.a1) * (r.b2 - r.a2);
}

void check_domain(const Domain& d) {
  auto ok = [](double a, double b) { return std::isfinite(a) && std::isfinite(b) && b > a; };
  if (const auto* iv = std::get_if<Interval>(&d)) {
    if (!ok(iv->a, iv->b)) fail(ErrorKind::domain, "interval requires b > a");
    return;
  }
  const auto& r = std::get<Rectangle>(d);
  if (!ok(r.a1, r.b1) || !ok(r.a2, r.b2))
    fail(ErrorKind::domain, "rectangle requires b1 > a1 and b2 > a2");
}

struct Grid::Layout {
  Domain domain;
  int dim = 1;
  std::size_t nx = 0, ny = 1;
  double ax = 0, ay = 0, hx = 0, hy = 0;
  std::vector<BoundaryNode> boundary;
  std::vector<std::size_t> slot;
  std::vector<std::size_t> interior;
  std::vector<double> weights;
};

const Grid::Layout& Grid::layout() const {
  if (!layout_) fail(ErrorKind::precondition, "grid is not initialised");
  return *layout_;
}

const Domain& Grid::domain() const { return layout().domain; }
int Grid::dim() const { return layout().dim; }
std::size_t Grid::nx() const { return layout().nx; }
std::size_t Grid::ny() const { return layout().ny; }
double Grid::hx() const { return layout().hx; }
double Grid::hy() const { return layout().hy; }
double Grid::h(int axis) const { return axis == 0 ? hx() : hy(); }
std::size_t Grid::size() const { return layout().nx * layout().ny; }

double Grid::x(std::size_t node) const {
  const auto& l = layout();
  return l.ax + static_cast<double>(node % l.nx) * l.hx;
}

double Grid::y(std::size_t node) const {
  const auto& l = layout();
  if (l.dim == 1) return 0.0;
  return l.ay + static_cast<double>(node / l.nx) * l.hy;
}

Vec2 Grid::coords(std::size_t node) const { return {x(node), y(node)}; }

bool Grid::is_boundary(std::size_t node) const { return layout().slot[node] != npos; }
std::size_t Grid::boundary_slot(std::size_t node) const { return layout().slot[node]; }
std::span<const BoundaryNode> Grid::boundary_nodes() const { return layout().boundary; }
std::span<const std::size_t> Grid::interior_nodes() const { return layout().interior; }
std::span<const double> Grid::weights() const { return layout().weights; }

double Grid::boundary_parameter(std::size_t node) const {
  const auto& l = layout();
  if (l.dim == 1) return ix(node) == 0 ? 0.0 : 1.0;
  const auto& r = std::get<Rectangle>(l.domain);
  const double L1 = r.b1 - r.a1, L2 = r.b2 - r.a2;
  const std::size_t i = ix(node), j = iy(node);
  const double xs = x(node), ys = y(node);
  if (j == 0) return xs - r.a1;
  if (i == l.nx - 1) return L1 + (ys - r.a2);
  if (j == l.ny - 1) return L1 + L2 + (r.b1 - xs);
  return 2 * L1 + L2 + (r.b2 - ys);
}

bool Grid::same_layout(const Grid& other) const {
  if (layout_ == other.layout_) return true;
  if (!layout_ || !other.layout_) return false;
  const auto& a = *layout_;
  const auto& b = *other.layout_;
  return a.dim == b.dim && a.nx == b.nx && a.ny == b.ny && a.ax == b.ax && a.ay == b.ay &&
         a.hx == b.hx && a.hy == b.hy;
}

Grid build_grid(const Domain& domain, std::span<const std::size_t> n_per_axis) {
  check_domain(domain);
  const int dim = dimension(domain);
  if (n_per_axis.empty()) fail(ErrorKind::invalid_resolution, "no resolution given");
  const std::size_t nx = n_per_axis[0];
  const std::size_t ny = dim == 1 ? 1 : (n_per_axis.size() > 1 ? n_per_axis[1] : nx);
  if (nx < 3 || (dim == 2 && ny < 3))
    fail(ErrorKind::invalid_resolution,
         "need at least 3 nodes per axis, got " + std::to_string(nx) +
             (dim == 2 ? "x" + std::to_string(ny) : std::string{}));

  auto l = std::make_shared<Grid::Layout>();
  l->domain = domain;
  l->dim = dim;
  l->nx = nx;
  l->ny = ny;
  if (const auto* iv = std::get_if<Interval>(&domain)) {
    l->ax = iv->a;
    l->hx = (iv->b - iv->a) / static_cast<double>(nx - 1);
  } else {
    const auto& r = std::get<Rectangle>(domain);
    l->ax = r.a1;
    l->ay = r.a2;
    l->hx = (r.b1 - r.a1) / static_cast<double>(nx - 1);
    l->hy = (r.b2 - r.a2) / static_cast<double>(ny - 1);
  }

  const std::size_t count = nx * ny;
  l->slot.assign(count, Grid::npos);
  l->weights.assign(count, 0.0);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (std::size_t node = 0; node < count; ++node) {
    const std::size_t i = node % nx, j = node / nx;
    double w = l->hx * (i == 0 || i == nx - 1 ? 0.5 : 1.0);
    if (dim == 2) w *= l->hy * (j == 0 || j == ny - 1 ? 0.5 : 1.0);
    l->weights[node] = w;

    Vec2 n{0.0, 0.0};
    if (i == 0) n[0] = -1.0;
    if (i == nx - 1) n[0] = 1.0;
    if (dim == 2) {
      if (j == 0) n[1] = -1.0;
      if (j == ny - 1) n[1] = 1.0;
    }
    if (n[0] == 0.0 && n[1] == 0.0) {
      l->interior.push_back(node);
      continue;
    }
    const bool corner = n[0] != 0.0 && n[1] != 0.0;
    if (corner) {
      n[0] *= inv_sqrt2;
      n[1] *= inv_sqrt2;
    }
    l->slot[node] = l->boundary.size();
    l->boundary.push_back({node, n, corner});
  }

  Grid g;
  g.layout_ = std::move(l);
  return g;
}

Grid build_grid(const Domain& domain, std::size_t n) {
  const std::array<std::size_t, 1> ns{n};
  return build_grid(domain, ns);
}

Field::Field(Grid grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    fail(ErrorKind::domain, "field length " + std::to_string(values_.size()) +
                                " does not match node count " + std::to_string(grid_.size()));
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (!std::isfinite(values_[i]))
      fail(ErrorKind::invalid_field, "non-finite value at node " + std::to_string(i));
}

Field Field::constant(Grid grid, double value) {
  const std::size_t n = grid.size();
  return Field(std::move(grid), std::vector<double>(n, value));
}

double Field::max() const { return *std::max_element(values_.begin(), values_.end()); }
double Field::min() const { return *std::min_element(values_.begin(), values_.end()); }

double normal_derivative(const Grid& grid, std::span<const double> u, std::size_t node) {
  const std::size_t slot = grid.boundary_slot(node);
  if (slot == Grid::npos)
    fail(ErrorKind::domain, "node " + std::to_string(node) + " is not a boundary node");
  const BoundaryNode& b = grid.boundary_nodes()[slot];
  const std::size_t i = grid.ix(node), j = grid.iy(node);
  double result = 0.0;
  for (int axis = 0; axis < grid.dim(); ++axis) {
    const double nu = b.normal[axis];
    if (nu == 0.0) continue;
    // Step towards the interior along this axis.
    const std::size_t stride = axis == 0 ? 1 : grid.nx();
    const bool at_high = axis == 0 ? i == grid.nx() - 1 : j == grid.ny() - 1;
    const std::size_t n1 = at_high ? node - stride : node + stride;
    const std::size_t n2 = at_high ? node - 2 * stride : node + 2 * stride;
    // Derivative along the outward axis direction.
    const double d = (3.0 * u[node] - 4.0 * u[n1] + u[n2]) / (2.0 * grid.h(axis));
    result += std::abs(nu) * d;
  }
  return result;
}

double normal_derivative(const Field& field, std::size_t node) {
  return normal_derivative(field.grid(), field.values(), node);
}

double integrate(const Grid& grid, std::span<const double> values) {
  const auto w = grid.weights();
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * values[i];
  return s;
}

}  // namespace blowuplab
