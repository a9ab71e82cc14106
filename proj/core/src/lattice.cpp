#include "krw/lattice.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

namespace krw {

void check_dimension(int d) {
  if (d < 1 || d > kMaxDim)
    throw std::invalid_argument("dimension must be in 1..5, got " + std::to_string(d));
}

Point::Point(int dim) : d(dim) { check_dimension(dim); }

Point::Point(std::initializer_list<std::int64_t> coords) : d(static_cast<int>(coords.size())) {
  check_dimension(d);
  int i = 0;
  for (auto v : coords) c[i++] = v;
}

std::int64_t Point::norm_inf() const {
  std::int64_t m = 0;
  for (int i = 0; i < d; ++i) m = std::max<std::int64_t>(m, std::llabs(c[i]));
  return m;
}

bool Point::is_origin() const {
  for (int i = 0; i < d; ++i)
    if (c[i] != 0) return false;
  return true;
}

Point Point::operator+(const Point& o) const {
  Point r = *this;
  for (int i = 0; i < d; ++i) r.c[i] += o.c[i];
  return r;
}

Point Point::operator-(const Point& o) const {
  Point r = *this;
  for (int i = 0; i < d; ++i) r.c[i] -= o.c[i];
  return r;
}

Point Point::operator-() const {
  Point r = *this;
  for (int i = 0; i < d; ++i) r.c[i] = -r.c[i];
  return r;
}

std::string Point::str() const {
  std::string s;
  for (int i = 0; i < d; ++i) {
    if (i) s += ',';
    s += std::to_string(c[i]);
  }
  return s;
}

std::size_t PointHash::operator()(const Point& p) const noexcept {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ static_cast<std::uint64_t>(p.d);
  for (int i = 0; i < p.d; ++i) {
    h ^= static_cast<std::uint64_t>(p.c[i]) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return static_cast<std::size_t>(h);
}

std::vector<Point> neighbors(const Point& x) {
  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(2 * x.d));
  for (int i = 0; i < x.d; ++i) {
    Point p = x;
    p.c[i] += 1;
    out.push_back(p);
    p.c[i] -= 2;
    out.push_back(p);
  }
  return out;
}

Point unit_vector(int d, int axis, int sign) {
  Point p(d);
  if (axis < 0 || axis >= d) throw std::invalid_argument("axis out of range");
  p.c[axis] = sign >= 0 ? 1 : -1;
  return p;
}

Point parse_point(const std::string& text) {
  std::vector<std::int64_t> v;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t pos = 0;
    long long x = 0;
    try {
      x = std::stoll(tok, &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad coordinate '" + tok + "' in point '" + text + "'");
    }
    while (pos < tok.size() && std::isspace(static_cast<unsigned char>(tok[pos]))) ++pos;
    if (pos != tok.size())
      throw std::invalid_argument("bad coordinate '" + tok + "' in point '" + text + "'");
    v.push_back(x);
  }
  if (v.empty()) throw std::invalid_argument("empty point");
  Point p(static_cast<int>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) p.c[i] = v[i];
  return p;
}

}  // namespace krw
