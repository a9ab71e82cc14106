#include <deque>
#include <set>

#include "doctest.h"
#include "krw/grid.hpp"
#include "krw/trapping.hpp"

using namespace krw;

TEST_SUITE("trapping") {
  TEST_CASE("escape set membership") {
    auto k = KillingField::indicator({Point{0, 0}}, 1.0);
    CHECK(in_escape_set(k, Point{1, 0}, 10));
    CHECK_FALSE(in_escape_set(k, Point{0, 0}, 10));
    CHECK(in_escape_set(KillingField::zero(), Point{0, 0, 0}, 5));
    CHECK_THROWS(in_escape_set(k, Point{5, 5}, 3));
  }

  TEST_CASE("a wall of k = 1 encloses the origin") {
    auto wall = ball_outer_boundary(2, 1.9);
    std::unordered_map<Point, double, PointHash> table;
    for (const auto& p : wall) table[p] = 1.0;
    auto k = KillingField::tabulated(table, 0.0);
    // Independent flood fill of the k < 1 component of the origin.
    std::set<Point> comp{Point{0, 0}};
    std::deque<Point> q{Point{0, 0}};
    bool unbounded = false;
    while (!q.empty()) {
      Point p = q.front();
      q.pop_front();
      if (p.norm2() >= 100) {
        unbounded = true;
        break;
      }
      for (const auto& y : neighbors(p))
        if (k(y) < 1.0 && comp.insert(y).second) q.push_back(y);
    }
    CHECK_FALSE(unbounded);
    for (const auto& p : comp) CHECK_FALSE(in_escape_set(k, p, 10));
    CHECK(in_escape_set(k, Point{3, 0}, 10));
    CHECK_FALSE(in_escape_set(k, wall.front(), 10));
  }

  TEST_CASE("trapping classification") {
    CHECK(trapping_classifier(KillingField::power_law(3.0), 3).verdict == Trapping::NotTrapped);
    CHECK(trapping_classifier(KillingField::log_corrected(1.0), 4).verdict == Trapping::Trapped);
    CHECK(trapping_classifier(KillingField::indicator({Point{0, 0}}, 1.0), 2).verdict == Trapping::Trapped);
    CHECK(trapping_classifier(KillingField::power_law(0.5), 1).verdict == Trapping::Trapped);
    CHECK(trapping_classifier(KillingField::power_law(1.5), 3).verdict == Trapping::Trapped);
    CHECK(trapping_classifier(KillingField::power_law(2.0), 5).verdict == Trapping::Trapped);
    CHECK(trapping_classifier(KillingField::indicator({Point{1, 0, 0}}, 1.0), 3).verdict == Trapping::NotTrapped);
    CHECK(trapping_classifier(KillingField::zero(), 2).verdict == Trapping::NotTrapped);
    CHECK_THROWS(trapping_classifier(KillingField::zero(), 6));
  }

  TEST_CASE("exact shells match direct enumeration") {
    // Partial sum at M = 8 in d = 3 for k = min(1, |x|^-3), by brute force.
    auto k = KillingField::power_law(3.0);
    double direct = 0.0;
    for (int a = -8; a <= 8; ++a)
      for (int b = -8; b <= 8; ++b)
        for (int c = -8; c <= 8; ++c) {
          Point p{a, b, c};
          if (p.is_origin() || p.norm2() > 64) continue;
          direct += k(p) / p.norm();
        }
    auto rep = trapping_classifier(k, 3);
    REQUIRE(rep.radii.size() > 2);
    CHECK(rep.radii[1] == 8.0);
    CHECK(rep.partial_sums[1] == doctest::Approx(direct).epsilon(1e-12));
  }
}
