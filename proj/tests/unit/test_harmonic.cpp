#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <numbers>

#include "doctest.h"
#include "krw/grid.hpp"
#include "krw/harmonic.hpp"
#include "krw/solve.hpp"

using namespace krw;

namespace {

std::vector<Point> square(std::int64_t lo, std::int64_t hi) {
  std::vector<Point> out;
  for (auto a = lo; a <= hi; ++a)
    for (auto b = lo; b <= hi; ++b) out.push_back(Point{a, b});
  return out;
}

// Dense killed-walk matrices: Q restricted to D and from D to its exterior.
struct Dense {
  Eigen::MatrixXd QDD, QDE;
  std::vector<Point> exterior;
};

Dense dense_walk(const KillingField& k, const std::vector<Point>& D) {
  std::map<Point, int> in, out;
  for (std::size_t i = 0; i < D.size(); ++i) in[D[i]] = static_cast<int>(i);
  Dense m;
  for (const auto& x : D)
    for (const auto& y : neighbors(x))
      if (!in.count(y) && !out.count(y)) {
        out[y] = static_cast<int>(m.exterior.size());
        m.exterior.push_back(y);
      }
  const auto n = static_cast<Eigen::Index>(D.size());
  m.QDD = Eigen::MatrixXd::Zero(n, n);
  m.QDE = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(m.exterior.size()));
  for (const auto& x : D) {
    double q = (1.0 - k(x)) / 4.0;
    for (const auto& y : neighbors(x)) {
      if (in.count(y))
        m.QDD(in[x], in[y]) += q;
      else
        m.QDE(in[x], out[y]) += q;
    }
  }
  return m;
}

// Potential kernel from a(0) = 0, a(1,0) = 1, the diagonal values
// a(n,n) = (4/pi) sum_{j<=n} 1/(2j-1) and harmonicity off the origin.
std::map<std::pair<int, int>, double> kernel_recursion(int nmax) {
  std::map<std::pair<int, int>, double> a;
  auto get = [&](int i, int j) { return a.at({std::abs(std::max(std::abs(i), std::abs(j))), std::min(std::abs(i), std::abs(j))}); };
  a[{0, 0}] = 0.0;
  a[{1, 0}] = 1.0;
  double diag = 0.0;
  for (int n = 1; n <= nmax + 1; ++n) {
    diag += 4.0 / std::numbers::pi / (2.0 * n - 1.0);
    a[{n, n}] = diag;
  }
  for (int n = 1; n <= nmax; ++n) {
    for (int m = 0; m < n; ++m)
      a[{n + 1, m}] = 4.0 * get(n, m) - get(n - 1, m) - get(n, m + 1) - get(n, m - 1);
    a[{n + 1, n}] = 2.0 * get(n, n) - get(n, n - 1);
  }
  return a;
}

double watson_green_3d() {
  // g(0,0) = int_0^inf e^-t I0(t/3)^3 dt; Simpson up to T, asymptotic tail beyond.
  const double T = 600.0;
  const int n = 600000;
  const double h = T / n;
  auto f = [](double t) {
    double z = t / 3.0;
    double e = std::exp(-z) * std::cyl_bessel_i(0.0, z);
    return e * e * e;
  };
  double s = f(0.0) + f(T);
  for (int i = 1; i < n; ++i) s += f(i * h) * (i % 2 ? 4.0 : 2.0);
  s *= h / 3.0;
  // e^-z I0(z) ~ (2 pi z)^-1/2 (1 + 1/(8z)); the cube integrated over t = 3z > T.
  double z = T / 3.0;
  double lead = 3.0 * std::pow(2.0 * std::numbers::pi, -1.5) * 2.0 / std::sqrt(z);
  double next = 3.0 * std::pow(2.0 * std::numbers::pi, -1.5) * (3.0 / 8.0) * (2.0 / 3.0) * std::pow(z, -1.5);
  return s + lead + next;
}

}  // namespace

TEST_SUITE("harmonic") {
  TEST_CASE("exit measure of a single site") {
    auto k = KillingField::indicator({Point{0, 0}}, 0.3);
    auto H = exit_measure(k, {Point{0, 0}}, Point{0, 0}, 1e-14);
    CHECK(H.weights.size() == 4);
    for (const auto& [w, h] : H.weights) CHECK(h == doctest::Approx(0.175));
    CHECK(H.death_mass == doctest::Approx(0.3));
    CHECK(H.leaked_mass == 0.0);
  }

  TEST_CASE("unkilled exit measure of B(2) is a rotation-invariant probability") {
    auto H = exit_measure(KillingField::zero(), ball_points(2, 2.0), Point{0, 0}, 1e-14);
    double total = 0.0;
    for (const auto& [w, h] : H.weights) {
      total += h;
      CHECK(h >= 0.0);
      CHECK(H.weights.at(Point{-w[1], w[0]}) == doctest::Approx(h).epsilon(1e-12));
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(H.total() - 1.0) <= 1e-10);
  }

  TEST_CASE("exit measure against dense linear algebra and truncated path sums") {
    auto k = KillingField::power_law(2.0);
    // Square centred at the origin: k(0) = 1, so the walk dies on its first step.
    auto H0 = exit_measure(k, square(-2, 2), Point{0, 0}, 1e-15);
    CHECK(H0.death_mass == 1.0);
    for (const auto& [w, h] : H0.weights) CHECK(h == 0.0);

    // Square {1..5}^2 with centre (3,3).
    auto D = square(1, 5);
    auto H = exit_measure(k, D, Point{3, 3}, 1e-15);
    auto m = dense_walk(k, D);
    const auto n = m.QDD.rows();
    Eigen::MatrixXd exact = (Eigen::MatrixXd::Identity(n, n) - m.QDD).partialPivLu().solve(m.QDE);
    // Paths of length <= 40 and the geometric bound on longer ones.
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n), paths = Eigen::MatrixXd::Zero(n, m.QDE.cols());
    for (int len = 0; len < 40; ++len) {
      paths += power * m.QDE;
      power = power * m.QDD;
    }
    double q = m.QDD.rowwise().sum().maxCoeff();
    double tail = std::pow(q, 40) / (1.0 - q);
    const int start = 12;  // index of (3,3) in D
    REQUIRE(D[start] == Point{3, 3});
    double total = 0.0;
    for (std::size_t e = 0; e < m.exterior.size(); ++e) {
      double h = H.weights.at(m.exterior[e]);
      total += h;
      CHECK(std::abs(h - exact(start, static_cast<Eigen::Index>(e))) <= 1e-12);
      CHECK(h >= paths(start, static_cast<Eigen::Index>(e)) - 1e-15);
      CHECK(h - paths(start, static_cast<Eigen::Index>(e)) <= tail);
    }
    CHECK(std::abs(H.total() - 1.0) <= 1e-10);
    CHECK(total < 1.0);
    CHECK_THROWS(exit_measure(k, D, Point{0, 0}, 1e-12));
    CHECK_THROWS(exit_measure(k, D, Point{3, 3}, 0.0));
  }

  TEST_CASE("decomposition through two spheres in d = 3") {
    auto z = decomposition_check(KillingField::zero(), Exhaustion::ball(), 3, 12, 2, 5);
    CHECK(z.max_discrepancy <= 1e-10);
    auto r = decomposition_check(KillingField::power_law(2.5), Exhaustion::ball(), 3, 24, 4, 10);
    CHECK(r.max_discrepancy <= 1e-8);
    CHECK(r.test_points.size() == ball_points(3, 4).size());
    CHECK_THROWS(decomposition_check(KillingField::zero(), Exhaustion::ball(), 3, 10, 4, 5));
    CHECK_THROWS(decomposition_check(KillingField::zero(), Exhaustion::ball(), 3, 10, 2, 10));
    CHECK_THROWS(decomposition_check(KillingField::zero(), Exhaustion::ball(), 2, 10, 2, 5));
  }

  TEST_CASE("four-radius decomposition in d = 2") {
    auto k = KillingField::indicator({Point{0, 0}}, 1.0);
    auto r = decomposition_check_2d(k, Exhaustion::ball(), 40, {2, 5, 10, 20});
    CHECK(r.max_discrepancy <= 1e-8);
    auto p = decomposition_check_2d(KillingField::power_law(1.6), Exhaustion::ball_plus_half_space(0, -1, {2.0, 0.0}),
                                    24, {2, 4, 8, 16});
    CHECK(p.max_discrepancy <= 1e-8);
    CHECK_THROWS(decomposition_check_2d(k, Exhaustion::ball(), 40, {2, 3, 10, 20}));
  }

  TEST_CASE("potential kernel values") {
    CHECK(potential_kernel(Point{0, 0}) == 0.0);
    CHECK(std::abs(potential_kernel(Point{1, 0}) - 1.0) <= 1e-9);
    CHECK(std::abs(potential_kernel(Point{0, -1}) - 1.0) <= 1e-9);
    CHECK(std::abs(potential_kernel(Point{1, 1}) - 4.0 / std::numbers::pi) <= 1e-9);
    CHECK(std::abs(potential_kernel(Point{2, 0}) - (4.0 - 8.0 / std::numbers::pi)) <= 1e-9);
    auto rec = kernel_recursion(5);
    for (int i = 0; i <= 4; ++i)
      for (int j = 0; j <= i; ++j) CHECK(std::abs(potential_kernel(Point{i, j}) - rec.at({i, j})) <= 1e-9);
    CHECK(potential_kernel(Point{3, -2}) == potential_kernel(Point{-2, 3}));
    CHECK_THROWS(potential_kernel(Point{1, 0, 0}));
  }

  TEST_CASE("potential kernel table agrees with direct quadrature") {
    PotentialKernelTable t(12, 1 << 12);
    for (Point p : {Point{1, 0}, Point{1, 1}, Point{5, 3}, Point{12, 7}, Point{-9, 12}})
      CHECK(std::abs(t(p) - potential_kernel(p)) <= 1e-10);
    CHECK_THROWS(t(Point{13, 0}));
  }

  TEST_CASE("additive constant of the potential kernel") {
    auto fit = potential_kernel_constant({Point{50, 0}, Point{60, 80}, Point{200, 0}});
    CHECK(fit.spread <= 0.01);
    const double euler_gamma = 0.57721566490153286;
    CHECK(fit.constant == doctest::Approx((2.0 * euler_gamma + 3.0 * std::log(2.0)) / std::numbers::pi).epsilon(1e-5));
  }

  TEST_CASE("hitting probabilities") {
    CHECK(hitting_before_zero(Point{3, 4}, Point{3, 4}) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(hitting_before_zero(Point{1, 0}, Point{-1, 0}) == doctest::Approx(4.0 / std::numbers::pi - 1.0).epsilon(1e-9));
    CHECK(hitting_before_zero(Point{5, 5}, Point{1, 0}, true) == doctest::Approx(0.5));
    CHECK_THROWS(hitting_before_zero(Point{0, 0}, Point{1, 0}));
    CHECK_THROWS(hitting_before_zero(Point{1, 0}, Point{0, 0}));

    PotentialKernelTable a(100);
    RandomStream rng(5, 0);
    auto draw = [&] {
      while (true) {
        Point p{static_cast<std::int64_t>(rng.below(101)) - 50, static_cast<std::int64_t>(rng.below(101)) - 50};
        if (!p.is_origin() && p.norm() <= 50) return p;
      }
    };
    for (int i = 0; i < 1000; ++i) {
      Point x = draw(), y = draw();
      double h = (a(x) + a(y) - a(x - y)) / (2.0 * a(y));
      CHECK(h >= -1e-12);
      CHECK(h <= 1.0 + 1e-12);
    }
  }

  TEST_CASE("square exit distribution matches a Dirichlet solve") {
    for (int m : {0, 1, 3, 6}) {
      auto p = square_exit_distribution(m);
      double s = 0.0;
      for (double v : p) s += v;
      CHECK(s == doctest::Approx(0.25).epsilon(1e-12));
      // P_0[exit at (m+1, j-m)] solves Laplace's equation with a point boundary value.
      for (int j = 0; j <= 2 * m; ++j) {
        Point target{m + 1, j - m};
        auto sys = solve_dirichlet(
            Box::cube(2, m), [](const Point&) { return true; }, KillingField::zero(),
            [&](const Point& q) { return q == target ? 1.0 : 0.0; }, {});
        CHECK(p[static_cast<std::size_t>(j)] == doctest::Approx(sys.value(Point{0, 0}, 0.0)).epsilon(1e-10));
      }
    }
  }

  TEST_CASE("hitting Monte Carlo agrees with the closed form") {
    RandomStream rng(2024, 1);
    HittingMcOptions opt;
    opt.samples = 100000;
    auto e = hitting_before_zero_mc(Point{1, 0}, Point{-1, 0}, rng, opt);
    CHECK(std::abs(e.mean - (4.0 / std::numbers::pi - 1.0)) <= 3.0 * e.stderr());
    auto f = hitting_before_zero_mc(Point{7, -3}, Point{-4, 9}, rng, opt);
    CHECK(std::abs(f.mean - hitting_before_zero(Point{7, -3}, Point{-4, 9})) <= 3.0 * f.stderr());
  }

  TEST_CASE("three-dimensional Green function") {
    auto g0 = green_function(Point{0, 0, 0}, 32);
    CHECK(g0.value == doctest::Approx(watson_green_3d()).epsilon(2e-3));
    CHECK(g0.raw < g0.value);
    auto pair = green_function(std::vector<Point>{Point{3, -1, 2}, Point{-3, 1, -2}}, 16);
    CHECK(pair[0].value == pair[1].value);
    CHECK_THROWS(green_function(Point{1, 0}, 16));
    CHECK_THROWS(green_function(Point{9, 0, 0}, 16));
  }

  TEST_CASE("Green function decays like |x|^(2-d)") {
    std::vector<Point> xs{Point{8, 0, 0}, Point{0, 11, 0}, Point{0, 0, 16}};
    auto gs = green_function(xs, 64);
    double lo = INFINITY, hi = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double s = gs[i].value * xs[i].norm();
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    CHECK(hi / lo <= 1.10);
    CHECK(lo == doctest::Approx(3.0 / (2.0 * std::numbers::pi)).epsilon(0.05));
  }

  TEST_CASE("exit-time tail") {
    RandomStream rng(9, 0);
    CHECK(srw_exit_tail(2, 10, 0, rng).mean == 1.0);
    CHECK(srw_exit_tail_1d_exact(3, 1) == 1.0);
    CHECK(srw_exit_tail_1d_exact(1, 3) == doctest::Approx(0.5));  // 0 -> +-1 -> 0
    auto e = srw_exit_tail(1, 10, 200, rng);
    CHECK(std::abs(e.mean - srw_exit_tail_1d_exact(10, 200)) <= 3.0 * e.stderr());
    auto p8 = srw_exit_tail(2, 10, 800, rng);
    auto p16 = srw_exit_tail(2, 10, 1600, rng);
    REQUIRE(p8.mean > 0.0);
    REQUIRE(p16.mean > 0.0);
    CHECK(std::log(p16.mean) < std::log(p8.mean));
    double ratio = std::log(p16.mean) / std::log(p8.mean);
    CHECK(ratio > 1.6);
    CHECK(ratio < 2.4);
  }
}
