#include "krw/ratio.hpp"

#include <algorithm>
#include <cmath>

#include "krw/hash.hpp"

namespace krw {

UnderflowError::UnderflowError(const Point& p, double value)
    : std::runtime_error("escape probability at " + p.str() + " is " + format_double(value) +
                         ", below the underflow floor 1e-290; the ratio is not representable"),
      point_(p),
      value_(value) {}

double checked_ratio(const SurvivalSolution& u, const Point& x, const Point& x0) {
  double den = u(x0);
  if (den < kUnderflowFloor) throw UnderflowError(x0, den);
  return u(x) / den;
}

namespace {

SurvivalSolution run(const EscapeSolver& solver, const KillingField& k, const Exhaustion& ex, int d, std::int64_t R,
                     const RelaxOptions& opt) {
  return solver ? solver(k, ex, d, R, opt) : solve_escape(k, ex, d, R, opt);
}

void check_increasing(const std::vector<std::int64_t>& R_list) {
  if (R_list.empty()) throw std::invalid_argument("empty R list");
  for (std::size_t i = 1; i < R_list.size(); ++i)
    if (R_list[i] <= R_list[i - 1]) throw std::invalid_argument("R list must be strictly increasing");
}

}  // namespace

RatioCurve ratio_curve(const KillingField& k, const Exhaustion& ex, const Point& x, const Point& x0,
                       const std::vector<std::int64_t>& R_list, const RelaxOptions& opt, const EscapeSolver& solver) {
  if (x.d != x0.d) throw std::invalid_argument("x and x0 differ in dimension");
  check_increasing(R_list);
  RatioCurve c;
  c.x = x;
  c.x0 = x0;
  c.exhaustion = ex.describe();
  c.killing = k.describe();
  for (auto R : R_list) {
    SurvivalSolution u = run(solver, k, ex, x.d, R, opt);
    RatioPoint p;
    p.R = R;
    p.u_x = u(x);
    p.u_x0 = u(x0);
    p.ratio = x == x0 ? 1.0 : checked_ratio(u, x, x0);
    p.sweeps = u.report.sweeps;
    p.from_cache = u.from_cache;
    c.points.push_back(p);
  }
  update_gaps(c);
  return c;
}

void update_gaps(RatioCurve& c) {
  c.cauchy_gap = 0.0;
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    auto& p = c.points[i];
    p.gap = 0.0;
    if (i > 0 && p.ratio > 0 && c.points[i - 1].ratio > 0)
      p.gap = std::abs(std::log(p.ratio) - std::log(c.points[i - 1].ratio));
  }
  for (std::size_t i = std::max<std::size_t>(1, c.points.size() / 2); i < c.points.size(); ++i)
    c.cauchy_gap = std::max(c.cauchy_gap, c.points[i].gap);
}

CounterexampleReport counterexample_experiment(double alpha, std::int64_t r, const std::vector<std::int64_t>& R_list,
                                               TruncationSchedule schedule, const RelaxOptions& opt,
                                               const EscapeSolver& solver) {
  if (!(alpha >= 0.0 && alpha < 2.0)) throw std::invalid_argument("alpha must lie in [0,2)");
  if (r < 2) throw std::invalid_argument("r must be >= 2");
  check_increasing(R_list);
  for (auto R : R_list)
    if (schedule(R) < static_cast<double>(R)) throw std::invalid_argument("truncation radius must be >= R");
  CounterexampleReport rep;
  rep.alpha = alpha;
  rep.r = r;
  rep.schedule = schedule;
  const KillingField k = KillingField::power_law(alpha);
  const Point left{-r, 0}, right{r, 0};
  const Exhaustion plus = Exhaustion::ball_plus_half_space(0, -1, schedule);
  const Exhaustion minus = Exhaustion::ball_plus_half_space(0, +1, schedule);
  for (auto R : R_list) {
    SurvivalSolution up = run(solver, k, plus, 2, R, opt);
    SurvivalSolution um = run(solver, k, minus, 2, R, opt);
    CounterexampleRow row;
    row.R = R;
    row.u_plus_left = up(left);
    row.u_plus_right = up(right);
    row.u_minus_left = um(left);
    row.u_minus_right = um(right);
    if (std::max({row.u_plus_left, row.u_plus_right, row.u_minus_left, row.u_minus_right}) == 0.0)
      throw DegenerateExperiment("all escape probabilities vanish (k = 1 everywhere for alpha = " +
                                 format_double(alpha) + "); no ratio exists");
    row.rho_plus = checked_ratio(up, left, right);
    row.rho_minus = checked_ratio(um, left, right);
    row.symmetry_residual = std::abs(row.rho_plus * row.rho_minus - 1.0);
    row.gap = row.rho_minus / row.rho_plus;
    row.sweeps_plus = up.report.sweeps;
    row.sweeps_minus = um.report.sweeps;
    rep.rows.push_back(row);
  }
  return rep;
}

ConditionedKernel::ConditionedKernel(KillingField k, WeightFunction a, bool normalize)
    : k_(std::move(k)), a_(std::move(a)), normalize_(normalize) {
  if (!a_) throw std::invalid_argument("conditioned kernel needs a weight function");
}

ConditionedKernel::Row ConditionedKernel::row(const Point& x) const {
  double ax = a_(x);
  if (!(ax > 0.0)) throw std::invalid_argument("weight must be positive at " + x.str() + ", got " + format_double(ax));
  Row r;
  r.to = neighbors(x);
  const double base = (1.0 - k_(x)) / (2.0 * x.d);
  for (const auto& y : r.to) {
    double ay = a_(y);
    if (ay < 0.0) throw std::invalid_argument("negative weight at " + y.str());
    r.p.push_back(base * ay / ax);
    r.mass += r.p.back();
  }
  if (normalize_ && r.mass > 0.0)
    for (double& p : r.p) p /= r.mass;
  return r;
}

ConditionedKernel build_conditioned_kernel(const KillingField& k, WeightFunction a, bool normalize) {
  return ConditionedKernel(k, std::move(a), normalize);
}

WeightFunction ratio_weight(const SurvivalSolution& u, const Point& x0) {
  double den = u(x0);
  if (den < kUnderflowFloor) throw UnderflowError(x0, den);
  return [&u, den](const Point& y) { return u(y) / den; };
}

std::vector<double> conditional_step_law(const SurvivalSolution& u, const KillingField& k, const Point& x) {
  double ux = u(x);
  if (ux < kUnderflowFloor) throw UnderflowError(x, ux);
  std::vector<double> out;
  const double base = (1.0 - k(x)) / (2.0 * x.d);
  for (const auto& y : neighbors(x)) out.push_back(base * u(y) / ux);
  return out;
}

std::vector<Point> sample_conditioned_path(const ConditionedKernel& kernel, const Point& x0, std::int64_t steps,
                                           RandomStream& rng) {
  if (steps < 0) throw std::invalid_argument("steps must be >= 0");
  std::vector<Point> path{x0};
  path.reserve(static_cast<std::size_t>(steps) + 1);
  Point x = x0;
  for (std::int64_t s = 0; s < steps; ++s) {
    auto r = kernel.row(x);
    if (!(r.mass >= 1e-12))
      throw std::runtime_error("conditioned kernel row at " + x.str() + " has mass " + format_double(r.mass) +
                               " below 1e-12");
    double total = 0.0;
    for (double p : r.p) total += p;
    double t = rng.uniform() * total, acc = 0.0;
    std::size_t j = 0;
    for (; j + 1 < r.p.size(); ++j) {
      acc += r.p[j];
      if (t < acc && r.p[j] > 0.0) break;
    }
    while (r.p[j] == 0.0) --j;  // never step onto a zero-weight site
    x = r.to[j];
    path.push_back(x);
  }
  return path;
}

}  // namespace krw
