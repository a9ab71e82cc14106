#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "krw/exhaustion.hpp"
#include "krw/killing.hpp"
#include "krw/lattice.hpp"

namespace krw {

// Dense row-major indexing of a Box; the first coordinate varies fastest.
class BoxIndex {
 public:
  BoxIndex() = default;
  explicit BoxIndex(const Box& box);

  int dim() const { return box_.d; }
  const Box& box() const { return box_; }
  std::size_t size() const { return size_; }
  std::int64_t stride(int axis) const { return stride_[axis]; }
  bool in_box(const Point& x) const { return box_.contains(x); }
  std::size_t index(const Point& x) const {
    std::int64_t i = 0;
    for (int a = 0; a < box_.d; ++a) i += (x.c[a] - box_.lo[a]) * stride_[a];
    return static_cast<std::size_t>(i);
  }
  Point point(std::size_t i) const;

 private:
  Box box_{};
  std::array<std::int64_t, kMaxDim> stride_{};
  std::size_t size_ = 0;
};

// The discrete problem u(x) = coef(x) * sum_{y~x} u(y) + source(x) for x in the
// domain, u fixed on every other cell of the box. The box carries one layer of
// padding so every domain cell has all 2d neighbours inside it.
struct LinearSystem {
  BoxIndex index;
  std::vector<double> u;
  std::vector<double> coef;
  std::vector<double> source;  // empty when there is no source term
  std::vector<std::uint8_t> domain;

  std::size_t domain_size() const;
  bool in_domain(const Point& x) const { return index.in_box(x) && domain[index.index(x)] != 0; }
  // Value at x, taking the boundary value for cells outside the box.
  double value(const Point& x, double outside = 1.0) const {
    return index.in_box(x) ? u[index.index(x)] : outside;
  }
};

using DomainPredicate = std::function<bool(const Point&)>;
using PointFunction = std::function<double(const Point&)>;

// Domain = {x in box : member(x)}; coef = (1-k)/(2d); boundary cells get
// boundary(x) (constant 1 when empty).
LinearSystem build_system(const Box& box, const DomainPredicate& member, const KillingField& k,
                          const PointFunction& boundary = {});

// Sites of the Euclidean ball {|x|^2 <= r^2}.
bool in_ball(const Point& x, double r);
// Outer boundary of {|x|^2 <= r^2}: sites outside with a neighbour inside.
std::vector<Point> ball_outer_boundary(int d, double r);
// Inner boundary: sites inside with a neighbour outside.
std::vector<Point> ball_inner_boundary(int d, double r);
std::vector<Point> ball_points(int d, double r);

}  // namespace krw
