#include "krw/exhaustion.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "krw/hash.hpp"

namespace krw {

Box Box::cube(int d, std::int64_t h) {
  check_dimension(d);
  Box b;
  b.d = d;
  for (int i = 0; i < d; ++i) {
    b.lo[i] = -h;
    b.hi[i] = h;
  }
  return b;
}

bool Box::contains(const Point& x) const {
  for (int i = 0; i < d; ++i)
    if (x.c[i] < lo[i] || x.c[i] > hi[i]) return false;
  return true;
}

Box Box::padded(std::int64_t by) const {
  Box b = *this;
  for (int i = 0; i < d; ++i) {
    b.lo[i] -= by;
    b.hi[i] += by;
  }
  return b;
}

namespace {

bool in_ball(const Point& x, double radius) {
  if (radius < 0) return false;
  return static_cast<double>(x.norm2()) <= radius * radius;
}

}  // namespace

Exhaustion::Exhaustion(Variant v) : v_(std::move(v)) {
  if (auto h = std::get_if<exhaustion::BallPlusHalfSpace>(&v_)) {
    if (h->axis < 0 || h->axis >= kMaxDim) throw std::invalid_argument("half-space axis out of range");
    if (h->sign != 1 && h->sign != -1) throw std::invalid_argument("half-space sign must be +1 or -1");
    if (!(h->schedule.factor >= 1.0) || h->schedule.offset < 0.0)
      throw std::invalid_argument("truncation schedule must satisfy schedule(R) >= R");
  } else if (auto s = std::get_if<exhaustion::Segment1D>(&v_)) {
    if (s->b_minus < 1 || s->b_plus < 1) throw std::invalid_argument("segment factors must be >= 1");
  } else if (auto e = std::get_if<exhaustion::ExplicitList>(&v_)) {
    if (e->sets.empty()) throw std::invalid_argument("explicit exhaustion needs at least one set");
    int d = 0;
    for (const auto& set : e->sets) {
      lookup_.emplace_back(set.begin(), set.end());
      for (const auto& p : set) {
        if (d == 0) d = p.d;
        if (p.d != d) throw std::invalid_argument("explicit exhaustion mixes dimensions");
      }
    }
    for (std::size_t i = 0; i + 1 < lookup_.size(); ++i)
      for (const auto& p : lookup_[i])
        if (!lookup_[i + 1].count(p))
          throw std::invalid_argument("explicit exhaustion sets must be nested");
  }
}

Exhaustion Exhaustion::ball_plus_half_space(int axis, int sign, TruncationSchedule s) {
  return Exhaustion(exhaustion::BallPlusHalfSpace{axis, sign, s});
}
Exhaustion Exhaustion::segment(std::int64_t bm, std::int64_t bp) {
  return Exhaustion(exhaustion::Segment1D{bm, bp});
}
Exhaustion Exhaustion::explicit_list(std::vector<std::vector<Point>> sets) {
  return Exhaustion(exhaustion::ExplicitList{std::move(sets)});
}

void Exhaustion::check_dimension_compatible(int d) const {
  check_dimension(d);
  if (std::holds_alternative<exhaustion::Segment1D>(v_) && d != 1)
    throw std::invalid_argument("segment exhaustion requires d = 1");
  if (auto h = std::get_if<exhaustion::BallPlusHalfSpace>(&v_); h && h->axis >= d)
    throw std::invalid_argument("half-space axis exceeds dimension");
}

bool Exhaustion::contains(const Point& x, std::int64_t R) const {
  if (R < 0) return false;
  return std::visit(
      [&](const auto& e) -> bool {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, exhaustion::Ball>) {
          return in_ball(x, static_cast<double>(R));
        } else if constexpr (std::is_same_v<T, exhaustion::BallPlusHalfSpace>) {
          if (in_ball(x, static_cast<double>(R))) return true;
          return e.sign * x.c[e.axis] >= 0 && in_ball(x, e.schedule(R));
        } else if constexpr (std::is_same_v<T, exhaustion::Segment1D>) {
          return x.c[0] >= -e.b_minus * R && x.c[0] <= e.b_plus * R;
        } else {
          if (static_cast<std::size_t>(R) >= lookup_.size())
            throw std::out_of_range("explicit exhaustion has no set with index " + std::to_string(R));
          return lookup_[static_cast<std::size_t>(R)].count(x) > 0;
        }
      },
      v_);
}

Box Exhaustion::bounding_box(int d, std::int64_t R) const {
  check_dimension_compatible(d);
  return std::visit(
      [&](const auto& e) -> Box {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, exhaustion::Ball>) {
          return Box::cube(d, R);
        } else if constexpr (std::is_same_v<T, exhaustion::BallPlusHalfSpace>) {
          auto big = static_cast<std::int64_t>(std::floor(e.schedule(R)));
          Box b = Box::cube(d, std::max(big, R));
          if (e.sign > 0)
            b.lo[e.axis] = -R;
          else
            b.hi[e.axis] = R;
          return b;
        } else if constexpr (std::is_same_v<T, exhaustion::Segment1D>) {
          Box b;
          b.d = 1;
          b.lo[0] = -e.b_minus * R;
          b.hi[0] = e.b_plus * R;
          return b;
        } else {
          if (static_cast<std::size_t>(R) >= e.sets.size())
            throw std::out_of_range("explicit exhaustion has no set with index " + std::to_string(R));
          const auto& set = e.sets[static_cast<std::size_t>(R)];
          if (set.empty()) throw std::invalid_argument("explicit exhaustion set is empty");
          Box b;
          b.d = d;
          for (int i = 0; i < d; ++i) {
            b.lo[i] = set[0].c[i];
            b.hi[i] = set[0].c[i];
          }
          for (const auto& p : set)
            for (int i = 0; i < d; ++i) {
              b.lo[i] = std::min(b.lo[i], p.c[i]);
              b.hi[i] = std::max(b.hi[i], p.c[i]);
            }
          return b;
        }
      },
      v_);
}

std::int64_t Exhaustion::max_index() const {
  if (auto e = std::get_if<exhaustion::ExplicitList>(&v_))
    return static_cast<std::int64_t>(e->sets.size()) - 1;
  return -1;
}

std::string Exhaustion::describe() const {
  return std::visit(
      [](const auto& e) -> std::string {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, exhaustion::Ball>) {
          return "ball";
        } else if constexpr (std::is_same_v<T, exhaustion::BallPlusHalfSpace>) {
          std::string s = "halfspace:" + std::to_string(e.axis) + ":" + (e.sign > 0 ? "+1" : "-1") +
                          ":" + format_double(e.schedule.factor);
          if (e.schedule.offset != 0.0) s += "+" + format_double(e.schedule.offset);
          return s;
        } else if constexpr (std::is_same_v<T, exhaustion::Segment1D>) {
          return "segment:" + std::to_string(e.b_minus) + "," + std::to_string(e.b_plus);
        } else {
          std::string body;
          for (const auto& set : e.sets) {
            auto sorted = set;
            std::sort(sorted.begin(), sorted.end());
            for (const auto& p : sorted) body += p.str() + ";";
            body += "|";
          }
          return "explicit:" + std::to_string(e.sets.size()) + ":" + hex64(fnv1a(body));
        }
      },
      v_);
}

Exhaustion Exhaustion::parse(const std::string& spec) {
  std::vector<std::string> parts;
  {
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ':')) parts.push_back(tok);
  }
  auto bad = [&]() {
    return std::invalid_argument("unrecognised exhaustion spec '" + spec +
                                 "' (expected ball, halfspace:AXIS:SIGN[:FACTOR] or segment:BM,BP)");
  };
  if (parts.empty()) throw bad();
  try {
    if (parts[0] == "ball" && parts.size() == 1) return ball();
    if (parts[0] == "halfspace" && (parts.size() == 3 || parts.size() == 4)) {
      TruncationSchedule s;
      if (parts.size() == 4) s.factor = std::stod(parts[3]);
      return ball_plus_half_space(std::stoi(parts[1]), std::stoi(parts[2]), s);
    }
    if (parts[0] == "segment" && parts.size() == 2) {
      Point p = parse_point(parts[1]);
      if (p.d != 2) throw bad();
      return segment(p[0], p[1]);
    }
  } catch (const std::invalid_argument& e) {
    if (std::string(e.what()).rfind("unrecognised", 0) == 0) throw;
    throw std::invalid_argument("bad exhaustion spec '" + spec + "': " + e.what());
  }
  throw bad();
}

}  // namespace krw
