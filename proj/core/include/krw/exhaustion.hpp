#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include "krw/lattice.hpp"

namespace krw {

// Axis-aligned box of lattice sites, bounds inclusive.
struct Box {
  int d = 0;
  std::array<std::int64_t, kMaxDim> lo{};
  std::array<std::int64_t, kMaxDim> hi{};

  static Box cube(int d, std::int64_t half_width);
  bool contains(const Point& x) const;
  Box padded(std::int64_t by) const;
};

// Truncation radius of an unbounded exhaustion: R -> factor * R + offset.
struct TruncationSchedule {
  double factor = 8.0;
  double offset = 0.0;
  double operator()(std::int64_t R) const { return factor * static_cast<double>(R) + offset; }
};

namespace exhaustion {

struct Ball {};

// (B(R) ∪ {sign * x_axis >= 0}) ∩ B(schedule(R)).
struct BallPlusHalfSpace {
  int axis = 0;
  int sign = 1;
  TruncationSchedule schedule{};
};

// [-b_minus R, b_plus R] in d = 1.
struct Segment1D {
  std::int64_t b_minus = 1;
  std::int64_t b_plus = 1;
};

// Lambda_R = sets[R] for R < sets.size(); the sets must be nested.
struct ExplicitList {
  std::vector<std::vector<Point>> sets;
};

}  // namespace exhaustion

class Exhaustion {
 public:
  using Variant = std::variant<exhaustion::Ball, exhaustion::BallPlusHalfSpace,
                               exhaustion::Segment1D, exhaustion::ExplicitList>;

  Exhaustion() : Exhaustion(exhaustion::Ball{}) {}
  explicit Exhaustion(Variant v);

  static Exhaustion ball() { return Exhaustion(exhaustion::Ball{}); }
  static Exhaustion ball_plus_half_space(int axis, int sign, TruncationSchedule s = {});
  static Exhaustion segment(std::int64_t b_minus, std::int64_t b_plus);
  static Exhaustion explicit_list(std::vector<std::vector<Point>> sets);

  // "ball", "halfspace:AXIS:SIGN[:FACTOR]", "segment:BM,BP".
  static Exhaustion parse(const std::string& spec);

  bool contains(const Point& x, std::int64_t R) const;
  // Smallest box containing Lambda_R in dimension d.
  Box bounding_box(int d, std::int64_t R) const;
  // Largest R accepted by contains(); -1 when unbounded.
  std::int64_t max_index() const;
  void check_dimension_compatible(int d) const;

  const Variant& variant() const { return v_; }
  std::string describe() const;

 private:
  Variant v_;
  std::vector<std::unordered_set<Point, PointHash>> lookup_;
};

}  // namespace krw
