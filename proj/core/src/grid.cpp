#include "krw/grid.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace krw {

BoxIndex::BoxIndex(const Box& box) : box_(box) {
  check_dimension(box.d);
  std::int64_t s = 1;
  for (int a = 0; a < box.d; ++a) {
    if (box.hi[a] < box.lo[a]) throw std::invalid_argument("empty box");
    stride_[a] = s;
    std::int64_t ext = box.hi[a] - box.lo[a] + 1;
    if (ext > (std::numeric_limits<std::int64_t>::max() / 4) / s)
      throw std::length_error("box too large");
    s *= ext;
  }
  size_ = static_cast<std::size_t>(s);
}

Point BoxIndex::point(std::size_t i) const {
  Point p(box_.d);
  auto r = static_cast<std::int64_t>(i);
  for (int a = box_.d - 1; a >= 0; --a) {
    p.c[a] = box_.lo[a] + r / stride_[a];
    r %= stride_[a];
  }
  return p;
}

std::size_t LinearSystem::domain_size() const {
  std::size_t n = 0;
  for (auto m : domain) n += m;
  return n;
}

LinearSystem build_system(const Box& box, const DomainPredicate& member, const KillingField& k,
                          const PointFunction& boundary) {
  LinearSystem sys;
  sys.index = BoxIndex(box.padded(1));
  const std::size_t n = sys.index.size();
  if (n > std::numeric_limits<std::uint32_t>::max())
    throw std::length_error("computational box exceeds 2^32 cells");
  const int d = box.d;
  sys.u.assign(n, 0.0);
  sys.coef.assign(n, 0.0);
  sys.domain.assign(n, 0);
  const double inv2d = 1.0 / (2.0 * d);
  // Walk the box with an odometer instead of decoding every index.
  const Box& b = sys.index.box();
  Point p(d);
  for (int a = 0; a < d; ++a) p.c[a] = b.lo[a];
  for (std::size_t i = 0; i < n; ++i) {
    bool interior_cell = box.contains(p) && member(p);
    if (interior_cell) {
      sys.domain[i] = 1;
      sys.coef[i] = (1.0 - k(p)) * inv2d;
    } else {
      sys.u[i] = boundary ? boundary(p) : 1.0;
    }
    for (int a = 0; a < d; ++a) {
      if (++p.c[a] <= b.hi[a]) break;
      p.c[a] = b.lo[a];
    }
  }
  return sys;
}

bool in_ball(const Point& x, double r) {
  return r >= 0 && static_cast<double>(x.norm2()) <= r * r;
}

std::vector<Point> ball_points(int d, double r) {
  std::vector<Point> out;
  auto h = static_cast<std::int64_t>(std::floor(r));
  BoxIndex idx(Box::cube(d, h));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    Point p = idx.point(i);
    if (in_ball(p, r)) out.push_back(p);
  }
  return out;
}

std::vector<Point> ball_outer_boundary(int d, double r) {
  std::vector<Point> out;
  auto h = static_cast<std::int64_t>(std::floor(r)) + 1;
  BoxIndex idx(Box::cube(d, h));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    Point p = idx.point(i);
    if (in_ball(p, r)) continue;
    for (const auto& q : neighbors(p))
      if (in_ball(q, r)) {
        out.push_back(p);
        break;
      }
  }
  return out;
}

std::vector<Point> ball_inner_boundary(int d, double r) {
  std::vector<Point> out;
  for (const auto& p : ball_points(d, r)) {
    for (const auto& q : neighbors(p))
      if (!in_ball(q, r)) {
        out.push_back(p);
        break;
      }
  }
  return out;
}

}  // namespace krw
