#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace krw {

inline constexpr int kMaxDim = 5;

// A site of Z^d, 1 <= d <= 5. Unused trailing coordinates are kept at zero
// so that comparison and hashing can look at the whole array.
struct Point {
  std::array<std::int64_t, kMaxDim> c{};
  int d = 0;

  Point() = default;
  explicit Point(int dim);
  Point(std::initializer_list<std::int64_t> coords);

  std::int64_t operator[](int i) const { return c[static_cast<std::size_t>(i)]; }
  std::int64_t& operator[](int i) { return c[static_cast<std::size_t>(i)]; }

  std::int64_t norm2() const {
    std::int64_t s = 0;
    for (int i = 0; i < d; ++i) s += c[i] * c[i];
    return s;
  }
  double norm() const { return std::sqrt(static_cast<double>(norm2())); }
  std::int64_t norm_inf() const;
  bool is_origin() const;

  Point operator+(const Point& o) const;
  Point operator-(const Point& o) const;
  Point operator-() const;

  friend bool operator==(const Point&, const Point&) = default;
  friend auto operator<=>(const Point&, const Point&) = default;

  std::string str() const;  // "x1,x2,..."
};

struct PointHash {
  std::size_t operator()(const Point& p) const noexcept;
};

void check_dimension(int d);

// The 2d nearest neighbours of x, ordered (+e1, -e1, +e2, -e2, ...).
std::vector<Point> neighbors(const Point& x);

Point unit_vector(int d, int axis, int sign);

// Parses "x1,x2,..." (whitespace tolerated). Throws std::invalid_argument.
Point parse_point(const std::string& text);

}  // namespace krw
