#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "krw/exhaustion.hpp"
#include "krw/killing.hpp"
#include "krw/lattice.hpp"
#include "krw/random.hpp"
#include "krw/relax.hpp"
#include "krw/solve.hpp"

namespace krw {

// A ratio whose denominator fell below the representable floor.
class UnderflowError : public std::runtime_error {
 public:
  UnderflowError(const Point& p, double value);
  const Point& point() const { return point_; }
  double value() const { return value_; }

 private:
  Point point_;
  double value_;
};

// Every escape probability vanished: no ratio can be formed.
class DegenerateExperiment : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RatioPoint {
  std::int64_t R = 0;
  double ratio = 0.0;  // u_R(x) / u_R(x0)
  double u_x = 0.0;
  double u_x0 = 0.0;
  double gap = 0.0;    // |ln ratio_R - ln ratio_{previous R}|, 0 for the first R
  std::int64_t sweeps = 0;
  bool from_cache = false;
};

struct RatioCurve {
  Point x, x0;
  std::string exhaustion;
  std::string killing;
  std::vector<RatioPoint> points;
  double cauchy_gap = 0.0;  // largest gap over the upper half of the R list

  // Last ratio, with the Cauchy gap as its error bar.
  double limit() const { return points.empty() ? 0.0 : points.back().ratio; }
};

// Solves once per R. The solver hook lets callers substitute a cached solve.
using EscapeSolver = std::function<SurvivalSolution(const KillingField&, const Exhaustion&, int, std::int64_t,
                                                    const RelaxOptions&)>;

double checked_ratio(const SurvivalSolution& u, const Point& x, const Point& x0);

RatioCurve ratio_curve(const KillingField& k, const Exhaustion& ex, const Point& x, const Point& x0,
                       const std::vector<std::int64_t>& R_list, const RelaxOptions& opt = {},
                       const EscapeSolver& solver = {});
// Recomputes gap and cauchy_gap after points were filled in or merged.
void update_gaps(RatioCurve& c);

struct CounterexampleRow {
  std::int64_t R = 0;
  double rho_plus = 0.0;   // u^+((-r,0)) / u^+((r,0)) on B(R) ∪ {x1 <= 0}, truncated
  double rho_minus = 0.0;  // u^-((-r,0)) / u^-((r,0)) on B(R) ∪ {x1 >= 0}, truncated
  double symmetry_residual = 0.0;  // |rho_plus rho_minus - 1|
  double gap = 0.0;                // rho_minus / rho_plus
  double u_plus_left = 0.0, u_plus_right = 0.0, u_minus_left = 0.0, u_minus_right = 0.0;
  std::int64_t sweeps_plus = 0, sweeps_minus = 0;
};

struct CounterexampleReport {
  double alpha = 0.0;
  std::int64_t r = 0;
  TruncationSchedule schedule;
  std::vector<CounterexampleRow> rows;
};

// k = min(1, |x|^-alpha) in d = 2 against two mirrored half-plane exhaustions.
CounterexampleReport counterexample_experiment(double alpha, std::int64_t r, const std::vector<std::int64_t>& R_list,
                                               TruncationSchedule schedule = {}, const RelaxOptions& opt = {},
                                               const EscapeSolver& solver = {});

using WeightFunction = std::function<double(const Point&)>;

// Doob transform of the killed walk: P(x, y) = (1 - k(x)) / (2d) * a(y) / a(x).
class ConditionedKernel {
 public:
  ConditionedKernel(KillingField k, WeightFunction a, bool normalize = false);

  struct Row {
    std::vector<Point> to;
    std::vector<double> p;
    double mass = 0.0;  // sum before any normalisation
  };
  Row row(const Point& x) const;
  double row_sum(const Point& x) const { return row(x).mass; }
  bool normalized() const { return normalize_; }
  const KillingField& killing() const { return k_; }
  double weight(const Point& x) const { return a_(x); }

 private:
  KillingField k_;
  WeightFunction a_;
  bool normalize_;
};

ConditionedKernel build_conditioned_kernel(const KillingField& k, WeightFunction a, bool normalize = false);

// x -> u_R(x) / u_R(x0) from one solve (outside the domain u_R = 1).
WeightFunction ratio_weight(const SurvivalSolution& u, const Point& x0);

// P[S_1 = y | leave Lambda_R alive] = Q^k(x, y) u_R(y) / u_R(x), neighbours in
// the order of neighbors(x).
std::vector<double> conditional_step_law(const SurvivalSolution& u, const KillingField& k, const Point& x);

// Path of the Doob walk; each step is drawn from the row normalised by its mass.
std::vector<Point> sample_conditioned_path(const ConditionedKernel& kernel, const Point& x0, std::int64_t steps,
                                           RandomStream& rng);

}  // namespace krw
