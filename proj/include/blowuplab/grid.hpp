#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <variant>
#include <vector>

namespace blowuplab {

struct Interval {
  double a = 0.0;
  double b = 1.0;
};

struct Rectangle {
  double a1 = 0.0;
  double b1 = 1.0;
  double a2 = 0.0;
  double b2 = 1.0;
};

// Omega: an interval or an axis-aligned rectangle.
using Domain = std::variant<Interval, Rectangle>;

int dimension(const Domain& d);
double measure(const Domain& d);
// Throws domain error unless b > a on every axis.
void check_domain(const Domain& d);

using Vec2 = std::array<double, 2>;

struct BoundaryNode {
  std::size_t index = 0;
  Vec2 normal{0.0, 0.0};  // outward unit normal; unused components are 0
  bool corner = false;
};

// Uniform node-centred grid. Copies share the same immutable layout.
class Grid {
 public:
  Grid() = default;

  const Domain& domain() const;
  int dim() const;
  std::size_t nx() const;
  std::size_t ny() const;  // 1 for intervals
  double hx() const;
  double hy() const;
  double h(int axis) const;
  std::size_t size() const;

  std::size_t index(std::size_t i, std::size_t j = 0) const { return i + nx() * j; }
  std::size_t ix(std::size_t node) const { return node % nx(); }
  std::size_t iy(std::size_t node) const { return node / nx(); }

  // Coordinates are a + i*h, computed the same way everywhere.
  double x(std::size_t node) const;
  double y(std::size_t node) const;
  Vec2 coords(std::size_t node) const;

  bool is_boundary(std::size_t node) const;
  // Position of node in boundary_nodes(), or npos for interior nodes.
  std::size_t boundary_slot(std::size_t node) const;
  std::span<const BoundaryNode> boundary_nodes() const;
  std::span<const std::size_t> interior_nodes() const;

  // Boundary parameter: 0/1 for the two ends of an interval, arclength
  // counter-clockwise from (a1, a2) on a rectangle.
  double boundary_parameter(std::size_t node) const;

  // Trapezoidal quadrature weights (include the cell volume h^dim).
  std::span<const double> weights() const;

  bool same_layout(const Grid& other) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  struct Layout;
  std::shared_ptr<const Layout> layout_;

  friend Grid build_grid(const Domain&, std::span<const std::size_t>);
  const Layout& layout() const;
};

// n_per_axis holds one entry per axis (a single entry is reused for both
// axes of a rectangle). Throws invalid_resolution when any n < 3.
Grid build_grid(const Domain& domain, std::span<const std::size_t> n_per_axis);
Grid build_grid(const Domain& domain, std::size_t n);

// Nodal values on a grid; always finite.
class Field {
 public:
  Field() = default;
  Field(Grid grid, std::vector<double> values);
  static Field constant(Grid grid, double value);

  const Grid& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }

  double max() const;
  double min() const;

 private:
  Grid grid_;
  std::vector<double> values_;
};

// Second-order one-sided approximation of the outward normal derivative.
// Exact for affine fields. Throws domain error for interior nodes.
double normal_derivative(const Field& field, std::size_t node);
double normal_derivative(const Grid& grid, std::span<const double> values,
                         std::size_t node);

// Trapezoidal integral of nodal values.
double integrate(const Grid& grid, std::span<const double> values);

}  // namespace blowuplab
