#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "krw/harmonic.hpp"
#include "krw/ratio.hpp"
#include "krw/snake.hpp"
#include "krw/solve.hpp"

using namespace krw;

namespace {

std::vector<std::size_t> subtree_sizes(const LabeledTree& t) {
  std::vector<std::size_t> size(t.size(), 1);
  for (std::size_t v = t.size(); v-- > 1;) size[static_cast<std::size_t>(t.parent[v])] += size[v];
  return size;
}

double binomial_se(double p, double n) { return std::sqrt(p * (1.0 - p) / n); }

OffspringLaw binary() { return OffspringLaw({0.5, 0.0, 0.5}); }

}  // namespace

TEST_SUITE("snake") {
  TEST_CASE("offspring laws are validated") {
    CHECK_THROWS(OffspringLaw({0.0, 1.0}));
    CHECK_THROWS(OffspringLaw({0.5, 0.5}));
    CHECK_THROWS(OffspringLaw({0.5, 0.0, 0.6}));
    CHECK_THROWS(OffspringLaw({-0.1, 1.2, -0.1}));
    CHECK_THROWS(OffspringLaw::parse("poisson"));
    CHECK_THROWS(OffspringLaw::parse("pmf:0.5,x"));
    auto geo = OffspringLaw::parse("geometric");
    CHECK(geo.is_geometric());
    CHECK(geo.pmf(0) == 0.5);
    CHECK(geo.pmf(3) == 1.0 / 16);
    CHECK(geo.variance() == 2.0);
    CHECK(geo.generating(0.5) == doctest::Approx(2.0 / 3));
    auto b = OffspringLaw::parse("pmf:0.5,0,0.5");
    CHECK(b.max_support() == 2);
    CHECK(b.variance() == doctest::Approx(1.0));
    CHECK(OffspringLaw::parse(b.describe()).describe() == b.describe());
    CHECK(OffspringLaw::parse("single").is_single_node());
  }

  TEST_CASE("small Galton-Watson trees have the enumerated probabilities") {
    RandomStream rng(11, 0);
    const double n = 1e5;
    int single = 0;
    for (int i = 0; i < n; ++i) single += sample_gw_tree(OffspringLaw::geometric_half(), 1000, rng).size() == 1;
    CHECK(std::abs(single / n - 0.5) <= 3 * binomial_se(0.5, n));

    int one = 0, three = 0;
    for (int i = 0; i < n; ++i) {
      auto t = sample_gw_tree(binary(), 1000, rng);
      one += t.size() == 1;
      three += t.size() == 3;
    }
    CHECK(std::abs(one / n - 0.5) <= 3 * binomial_se(0.5, n));
    CHECK(std::abs(three / n - 0.125) <= 3 * binomial_se(0.125, n));

    auto capped = sample_gw_tree(OffspringLaw({0.25, 0.5, 0.25}), 1, rng);
    CHECK(capped.size() <= 1);
  }

  TEST_CASE("multitype root offspring follows the size-biased law minus one") {
    RandomStream rng(12, 0);
    const double n = 1e5;
    std::vector<double> count(6, 0.0);
    for (int i = 0; i < n; ++i) {
      // Breadth-first order completes the root's children long before the cap.
      auto t = sample_multitype_tree(OffspringLaw::geometric_half(), 1000, rng);
      auto kids = t.children();
      const std::size_t k = kids[0].size();
      if (k < count.size()) count[k] += 1;
    }
    CHECK(std::abs(count[1] / n - 0.25) <= 3 * binomial_se(0.25, n));
    for (int k = 0; k < 6; ++k) {
      const double p = (k + 1) * std::ldexp(1.0, -(k + 2));
      CHECK(std::abs(count[k] / n - p) <= 3 * binomial_se(p, n));
    }
    for (int i = 0; i < 1000; ++i) CHECK(sample_multitype_tree(binary(), 1000, rng).children()[0].size() == 1);
  }

  TEST_CASE("subtrees below the multitype root are plain trees") {
    RandomStream rng(13, 0);
    const std::size_t cap = 1000000, m = 20000;
    const double clip = 1000;
    std::vector<double> below, plain;
    while (below.size() < m) {
      auto t = sample_multitype_tree(OffspringLaw::geometric_half(), cap, rng);
      if (t.cap_exceeded) continue;
      auto kids = t.children();
      if (kids[0].empty()) continue;
      below.push_back(std::min<double>(clip, subtree_sizes(t)[kids[0][0]]));
    }
    while (plain.size() < m) {
      auto t = sample_gw_tree(OffspringLaw::geometric_half(), cap, rng);
      plain.push_back(t.cap_exceeded ? clip : std::min<double>(clip, t.size()));
    }
    CHECK(ks_statistic(below, plain) < ks_critical(m, m));
  }

  TEST_CASE("index_walk labels edges with unit steps") {
    RandomStream rng(14, 0);
    LabeledTree single;
    single.parent = {-1};
    CHECK(index_walk(single, Point{3, -1}, rng).label[0] == Point{3, -1});

    LabeledTree star;
    star.parent.assign(9, 0);
    star.parent[0] = -1;
    const Point start{2, 5};
    std::array<double, 4> counts{};
    const int trees = 12500;
    for (int i = 0; i < trees; ++i) {
      auto t = index_walk(star, start, rng);
      for (std::size_t v = 1; v < t.size(); ++v) {
        Point s = t.label[v] - start;
        counts[s[0] == 1 ? 0 : s[0] == -1 ? 1 : s[1] == 1 ? 2 : 3] += 1;
      }
    }
    const double n = trees * 8.0, e = n / 4;
    double chi2 = 0.0;
    for (double c : counts) chi2 += (c - e) * (c - e) / e;
    CHECK(chi2 < 16.27);  // chi-square, 3 degrees of freedom, 0.999 quantile

    for (int i = 0; i < 200; ++i) {
      auto t = index_walk(sample_gw_tree(OffspringLaw::geometric_half(), 10000, rng), Point{0, 0, 0}, rng);
      for (std::size_t v = 1; v < t.size(); ++v) {
        Point s = t.label[v] - t.label[static_cast<std::size_t>(t.parent[v])];
        CHECK(std::abs(s[0]) + std::abs(s[1]) + std::abs(s[2]) == 1);
      }
    }
  }

  TEST_CASE("pruned hit sampler agrees with full trees") {
    RandomStream rng(15, 0);
    const std::size_t cap = 100000;
    const int n = 20000;
    HitSampler sampler(OffspringLaw::geometric_half());
    for (Point x : {Point{1, 0}, Point{2, 1}}) {
      int full_hits = 0, full_capped = 0, pruned_hits = 0;
      for (int i = 0; i < n; ++i) {
        auto t = sample_multitype_tree(OffspringLaw::geometric_half(), cap, rng);
        if (t.cap_exceeded) {
          ++full_capped;
          continue;
        }
        full_hits += index_walk(std::move(t), x, rng).contains_label(Point{0, 0});
      }
      for (int i = 0; i < n; ++i) {
        auto r = sampler.multitype(x, 10'000'000, rng);
        REQUIRE_FALSE(r.capped);
        pruned_hits += r.hit;
      }
      const double p = static_cast<double>(pruned_hits) / n;
      const double lo = static_cast<double>(full_hits) / n, hi = static_cast<double>(full_hits + full_capped) / n;
      const double se = std::sqrt(2.0) * binomial_se(p, n);
      CHECK(p >= lo - 3 * se);
      CHECK(p <= hi + 3 * se);
    }
    // Height law of Geometric(1/2): P[height >= h] = 1 / (h + 1).
    CHECK(sampler.height_below(3) == doctest::Approx(0.75).epsilon(1e-12));
    HitSampler bin(binary());
    double q = 1.0;
    for (int h = 1; h <= 10; ++h) q = 1.0 - (0.5 + 0.5 * (1 - q) * (1 - q));
    CHECK(bin.height_below(10) == doctest::Approx(1.0 - q).epsilon(1e-12));
  }

  TEST_CASE("one-dimensional binary law matches the fixed-point oracle") {
    // h(x) = P_x[plain tree reaches 0] solves h(x) = (1 - (1 - m)^2) / 2 with
    // m = (h(x-1) + h(x+1)) / 2; the multitype root has exactly one child, so
    // k(1) = (1 + h(2)) / 2. Boundary values 0 and 1 at N + 1 bracket the truth.
    const int N = 200;
    auto solve = [&](double boundary) {
      std::vector<double> h(N + 2, 0.0);
      h[0] = 1.0;
      h[N + 1] = boundary;
      std::vector<double> next = h;
      for (int it = 0; it < 200000; ++it) {
        double change = 0.0;
        for (int x = 1; x <= N; ++x) {
          const double m = 0.5 * (h[x - 1] + h[x + 1]);
          next[x] = 0.5 * (1.0 - (1.0 - m) * (1.0 - m));
          change = std::max(change, std::abs(next[x] - h[x]));
        }
        h.swap(next);
        if (change < 1e-15) break;
      }
      return 0.5 * (1.0 + h[2]);
    };
    const double lo = solve(0.0), hi = solve(1.0);
    CHECK(lo <= hi);
    CHECK(hi - lo < 1e-3);
    RandomStream rng(16, 0);
    auto e = estimate_k(Point{1}, binary(), 1000000, rng);
    CHECK(e.mean >= lo - 3 * e.stderr_);
    CHECK(e.mean <= hi + 3 * e.stderr_);
  }

  TEST_CASE("estimate_k basics") {
    RandomStream rng(17, 0);
    auto mu = OffspringLaw::geometric_half();
    auto origin = estimate_k(Point{0, 0, 0}, mu, 100, rng);
    CHECK(origin.mean == 1.0);
    CHECK(origin.stderr_ == 0.0);
    auto k2 = estimate_k(Point{2, 0, 0}, mu, 40000, rng);
    auto k4 = estimate_k(Point{4, 0, 0}, mu, 40000, rng);
    auto k8 = estimate_k(Point{8, 0, 0}, mu, 40000, rng);
    CHECK(k4.mean <= k2.mean + 2 * combined_stderr(k2, k4));
    CHECK(k8.mean <= k4.mean + 2 * combined_stderr(k4, k8));
    CHECK(k8.mean > 0.0);
  }

  TEST_CASE("k-hat table layout and lookups") {
    auto t = k_table_layout(4, 12, 3);
    std::uint64_t sites = 0;
    for (const auto& e : t.entries) sites += e.sites;
    std::uint64_t brute = 0;
    for (int a = -12; a <= 12; ++a)
      for (int b = -12; b <= 12; ++b)
        for (int c = -12; c <= 12; ++c)
          for (int d = -12; d <= 12; ++d) brute += a * a + b * b + c * c + d * d <= 144;
    CHECK(sites == brute);
    for (auto& e : t.entries) e.k = 1.0 / (1.0 + e.radius);
    CHECK(t(Point{1, -2, 0, 0}) == doctest::Approx(1.0 / (1.0 + std::sqrt(5.0))));
    CHECK(t.index(Point{1, -2, 0, 0}) == t.index(Point{0, 0, 2, 1}));
    CHECK(t(Point{10, 0, 0, 0}) == doctest::Approx(1.0 / 11.0));
    CHECK(t(Point{100, 0, 0, 0}) == doctest::Approx(1.0 / 13.0));
    auto f = t.field();
    CHECK(f(Point{3, 1, 0, 0}) == doctest::Approx(1.0 / (1.0 + std::sqrt(10.0))));
    CHECK(f(Point{0, 2, 0, -1}) == doctest::Approx(1.0 / (1.0 + std::sqrt(5.0))));
  }

  TEST_CASE("single-vertex bushes reduce the snake to a walk killed at 0") {
    RandomStream rng(18, 0);
    auto k = KillingField::indicator({Point{0, 0}}, 1.0);
    auto u = solve_escape(k, Exhaustion::ball(), 2, 8);
    auto rep = snake_escape_probability(Point{1, 0}, OffspringLaw::single_node(), Exhaustion::ball(), 8, 100000, rng);
    CHECK(rep.inconclusive == 0);
    CHECK(std::abs(rep.estimate.mean - u(Point{1, 0})) <= 3 * rep.estimate.stderr_);
  }

  TEST_CASE("snake escape is immediate outside the domain and monotone in R") {
    RandomStream rng(19, 0);
    auto mu = OffspringLaw::geometric_half();
    const Point x{2, 0, 0, 0};
    auto out = snake_escape_probability(x, mu, Exhaustion::ball(), 1, 1000, rng);
    CHECK(out.estimate.mean == 1.0);
    auto r8 = snake_escape_probability(x, mu, Exhaustion::ball(), 4, 20000, rng);
    auto r16 = snake_escape_probability(x, mu, Exhaustion::ball(), 8, 20000, rng);
    CHECK(r16.estimate.mean <= r8.estimate.mean + 2 * combined_stderr(r8.estimate, r16.estimate));
    CHECK(r8.estimate.mean < 1.0);
    CHECK_THROWS(snake_escape_probability(Point{0, 0, 0, 0}, mu, Exhaustion::ball(), 8, 10, rng));
  }

  TEST_CASE("snake and table-killed walk agree on a small domain") {
    RandomStream rng(20, 0);
    auto mu = OffspringLaw::geometric_half();
    const Point x{2, 0, 0};
    const auto ex = Exhaustion::ball();
    auto table = build_k_table_for_walk(mu, x, ex, 6, 400000, rng);
    auto krw = krw_escape_with_table(x, table, ex, 6, 100000, rng);
    auto snake = snake_escape_probability(x, mu, ex, 6, 100000, rng);
    const double se = std::hypot(krw.combined_stderr(), snake.estimate.stderr_);
    CHECK(std::abs(krw.walk.mean - snake.estimate.mean) <= 3 * se);
  }

  TEST_CASE("conditioned snake") {
    RandomStream rng(21, 0);
    PotentialKernelTable table(64);
    auto a = [&](const Point& x) {
      if (std::max(std::abs(x[0]), std::abs(x[1])) <= 64) return table(x);
      const double r = std::hypot(static_cast<double>(x[0]), static_cast<double>(x[1]));
      return 2.0 / std::numbers::pi * (std::log(r) + 0.5772156649015329 + 1.5 * std::log(2.0));
    };
    auto k = KillingField::indicator({Point{0, 0}}, 1.0);
    ConditionedSnakeOptions opt;
    opt.node_cap = 1000;
    const std::size_t n = 100000;
    auto t = sample_conditioned_snake(Point{1, 0}, OffspringLaw::geometric_half(), k, a, n, rng, opt);
    REQUIRE(t.spine.size() == n + 1);
    for (std::size_t v = 0; v < t.size(); ++v) CHECK_FALSE(t.label[v].is_origin());
    for (std::size_t v = 1; v < t.size(); ++v) {
      Point s = t.label[v] - t.label[static_cast<std::size_t>(t.parent[v])];
      REQUIRE(std::abs(s[0]) + std::abs(s[1]) == 1);
    }

    auto kernel = build_conditioned_kernel(k, a);
    std::array<double, 4> observed{}, expected{}, variance{};
    for (std::size_t i = 0; i + 1 < t.spine.size(); ++i) {
      const Point& s = t.label[t.spine[i]];
      const Point& next = t.label[t.spine[i + 1]];
      auto row = kernel.row(s);
      for (std::size_t j = 0; j < 4; ++j) {
        const double p = row.p[j] / row.mass;
        expected[j] += p;
        variance[j] += p * (1 - p);
        observed[j] += row.to[j] == next;
      }
    }
    for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(observed[j] - expected[j]) <= 3 * std::sqrt(variance[j]));

    std::ostringstream os;
    auto small = sample_conditioned_snake(Point{2, 0}, OffspringLaw::geometric_half(), k, a, 5, rng, opt);
    write_edge_list(os, small);
    std::size_t lines = 0;
    std::string line;
    std::istringstream is(os.str());
    while (std::getline(is, line)) lines += !line.empty() && line[0] != '#';
    CHECK(lines == small.size());
    CHECK_THROWS(sample_conditioned_snake(Point{0, 0}, OffspringLaw::geometric_half(), k, a, 5, rng, opt));
  }
}
