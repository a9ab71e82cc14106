#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "krw/grid.hpp"
#include "krw/harmonic.hpp"
#include "krw/solve.hpp"

namespace krw {

namespace {

// c(w) * sum over neighbours y of w outside B(r) of f(y), for w in B(r): the
// weight of leaving B(r) for good from w.
PointFunction last_exit_source(const KillingField& k, const LinearSystem& f, double r) {
  return [&k, &f, r](const Point& w) {
    if (!in_ball(w, r)) return 0.0;
    double s = 0.0;
    for (const auto& y : neighbors(w))
      if (!in_ball(y, r)) s += f.value(y, 0.0);
    return (1.0 - k(w)) / (2.0 * w.d) * s;
  };
}

void check_ball_inside(const Exhaustion& ex, int d, std::int64_t R, double r) {
  for (const auto& p : ball_points(d, r + 1))
    if (!ex.contains(p, R))
      throw std::invalid_argument("B(" + std::to_string(r) + ") and its outer boundary must lie in Lambda_R; " +
                                  p.str() + " does not");
}

double recompose(const KillingField& k, const std::vector<Point>& inner, const Point& x, const LinearSystem& phi) {
  ExitMeasure H = exit_measure(k, inner, x, 1e-16);
  double s = 0.0;
  for (const auto& [v, h] : H.weights) s += h * phi.value(v, 0.0);
  return s;
}

void finish(DecompositionReport& rep) {
  rep.max_discrepancy = 0.0;
  for (std::size_t i = 0; i < rep.direct.size(); ++i)
    rep.max_discrepancy = std::max(rep.max_discrepancy, std::abs(rep.direct[i] - rep.recomposed[i]));
}

}  // namespace

DecompositionReport decomposition_check(const KillingField& k, const Exhaustion& ex, int d, std::int64_t R,
                                        double r1, double r2, const RelaxOptions& opt) {
  if (d < 3) throw std::invalid_argument("this form of the decomposition needs d >= 3");
  if (!(r1 >= 0 && r2 > r1 + 1)) throw std::invalid_argument("radii must satisfy 0 <= r1 and r2 > r1 + 1");
  check_ball_inside(ex, d, R, r2);

  SurvivalSolution u = solve_escape(k, ex, d, R, opt);
  Box box = ex.bounding_box(d, R);
  auto member = [&](const Point& p) { return ex.contains(p, R); };

  // f(y) = P_y[leave Lambda_R alive before entering B(r2)].
  LinearSystem f = solve_dirichlet(
      box, [&](const Point& p) { return member(p) && !in_ball(p, r2); }, k,
      [&](const Point& p) { return in_ball(p, r2) ? 0.0 : 1.0; }, {}, opt);
  // phi(v) = sum_w G_{Lambda_R}(v, w) e(w).
  LinearSystem phi = solve_dirichlet(box, member, k, {}, last_exit_source(k, f, r2), opt);

  DecompositionReport rep;
  std::vector<Point> inner = ball_points(d, r1);
  for (const auto& x : inner) {
    rep.test_points.push_back(x);
    rep.direct.push_back(u(x));
    rep.recomposed.push_back(recompose(k, inner, x, phi));
  }
  finish(rep);
  return rep;
}

DecompositionReport decomposition_check_2d(const KillingField& k, const Exhaustion& ex, std::int64_t R,
                                           std::array<double, 4> radii, const RelaxOptions& opt) {
  auto [r0, r1, r2, r3] = radii;
  if (!(r0 >= 0 && r1 > r0 + 1 && r2 > r1 + 1 && r3 > r2))
    throw std::invalid_argument("radii must satisfy 0 <= r0, r1 > r0 + 1, r2 > r1 + 1, r3 > r2");
  check_ball_inside(ex, 2, R, r3);

  SurvivalSolution u = solve_escape(k, ex, 2, R, opt);
  Box box = Box::cube(2, static_cast<std::int64_t>(std::ceil(r3)));

  // f2(y) = E_y[u_R at the exit of B(r3); exit B(r3) alive before entering B(r2)].
  LinearSystem f2 = solve_dirichlet(
      box, [&](const Point& p) { return in_ball(p, r3) && !in_ball(p, r2); }, k,
      [&](const Point& p) { return in_ball(p, r2) ? 0.0 : u(p); }, {}, opt);
  // phi(v) = E_v[u_R at the exit of B(r3); exit B(r3) alive before entering B(r0)].
  LinearSystem phi = solve_dirichlet(
      box, [&](const Point& p) { return in_ball(p, r3) && !in_ball(p, r0); }, k, {},
      last_exit_source(k, f2, r2), opt);
  // f1(y) = E_y[phi at the exit of B(r1); exit B(r1) alive before entering B(r0)].
  LinearSystem f1 = solve_dirichlet(
      box, [&](const Point& p) { return in_ball(p, r1) && !in_ball(p, r0); }, k,
      [&](const Point& p) { return in_ball(p, r0) ? 0.0 : phi.value(p, 0.0); }, {}, opt);
  // psi(x) = sum_{w in B(r0)} G_{B(r3)}(x, w) e1(w).
  LinearSystem psi = solve_dirichlet(
      box, [&](const Point& p) { return in_ball(p, r3); }, k, {}, last_exit_source(k, f1, r0), opt);

  DecompositionReport rep;
  for (const auto& x : ball_points(2, r0)) {
    rep.test_points.push_back(x);
    rep.direct.push_back(u(x));
    rep.recomposed.push_back(psi.value(x, 0.0));
  }
  finish(rep);
  return rep;
}

}  // namespace krw
