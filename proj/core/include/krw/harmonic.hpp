#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "krw/exhaustion.hpp"
#include "krw/killing.hpp"
#include "krw/lattice.hpp"
#include "krw/random.hpp"
#include "krw/relax.hpp"
#include "krw/stats.hpp"

namespace krw {

// Killed exit distribution of a finite set D from v: weights[w] is the
// probability that the walk leaves D for the first time at w, alive.
struct ExitMeasure {
  Point start;
  std::vector<Point> domain;
  std::map<Point, double> weights;
  double death_mass = 0.0;
  double leaked_mass = 0.0;  // mass still inside D when propagation stopped
  std::int64_t steps = 0;

  double total() const;
};

// Pushes the sub-probability mass of the walk forward step by step until the
// mass remaining in D is below tol.
ExitMeasure exit_measure(const KillingField& k, const std::vector<Point>& D, const Point& v, double tol);

struct DecompositionReport {
  std::vector<Point> test_points;
  std::vector<double> direct;      // solve_escape values
  std::vector<double> recomposed;  // values rebuilt from the factorisation
  double max_discrepancy = 0.0;
};

// d >= 3: for x in B(r1),
//   u_R(x) = sum_{v in dB(r1)} H_{B(r1)}(x, v) sum_{w in B(r2)} G_{Lambda_R}(v, w) e(w),
// where e(w) is the probability of stepping out of B(r2) from w and then leaving
// Lambda_R alive without returning to B(r2). Requires B(r2 + 1) inside Lambda_R.
DecompositionReport decomposition_check(const KillingField& k, const Exhaustion& ex, int d, std::int64_t R,
                                        double r1, double r2, const RelaxOptions& opt = {});

// d = 2 chain through four radii r0 < r1 < r2 < r3: first exit from B(r3)
// weighted by u_R, last exit from B(r2) before that, first exit from B(r1),
// and last exit from B(r0). Test points are the sites of B(r0).
DecompositionReport decomposition_check_2d(const KillingField& k, const Exhaustion& ex, std::int64_t R,
                                           std::array<double, 4> radii, const RelaxOptions& opt = {});

// Potential kernel of the planar walk by the tensor trapezoid rule on the
// lattice Fourier integral; nodes_per_axis must be even.
double potential_kernel(const Point& x, int nodes_per_axis = 1 << 14);

// a(x) for all |x|_inf <= max_coord from one trapezoid grid, sharing the
// transverse sums between points. Values agree with potential_kernel().
class PotentialKernelTable {
 public:
  explicit PotentialKernelTable(int max_coord, int nodes_per_axis = 1 << 12);
  double operator()(const Point& x) const;
  int max_coord() const { return m_; }

 private:
  int m_;
  std::vector<double> v_;  // v_[i * (m_ + 1) + j] = a(i, j)
};

// Additive constant of a(x) - (2/pi) ln|x| fitted over the given points.
struct KernelConstantFit {
  double constant = 0.0;
  double spread = 0.0;  // max - min over the points
  std::vector<double> values;
};
KernelConstantFit potential_kernel_constant(const std::vector<Point>& points);

// P_x[tau(y) < tau(0)] = (a(x) + a(y) - a(x - y)) / (2 a(y)); with
// from_origin the companion P_0[tau(y) < tau+(0)] = 1 / (2 a(y)) is returned.
double hitting_before_zero(const Point& x, const Point& y, bool from_origin = false);

struct HittingMcOptions {
  std::uint64_t samples = 1'000'000;
  // Paths reaching |z| >= far_radius score 1/2, the limit of the hitting
  // probability from infinitely far away; the bias is O(|x||y| / far_radius^2).
  double far_radius = 2048.0;
};
// Monte Carlo of P_x[tau(y) < tau(0)] in Z^2 with exact jumps to the exit point
// of the largest square around the walker that avoids 0 and y.
Estimate hitting_before_zero_mc(const Point& x, const Point& y, RandomStream& rng,
                                const HittingMcOptions& opt = {});

// Exit distribution of the planar walk started at the centre of the square
// {|z|_inf <= m}, along one side: entry j is the probability of exiting at
// (m + 1, j - m), j = 0..2m. The four sides are identical by symmetry.
std::vector<double> square_exit_distribution(int m);

struct GreenResult {
  double value = 0.0;        // boundary-corrected estimate of g(0, x)
  double raw = 0.0;          // value on B(box)
  double raw_half = 0.0;     // value on B(box / 2)
  double sensitivity = 0.0;  // |value - raw|
};
// g(0, x) for the simple walk in d >= 3 from a unit-source solve on B(box)
// and B(box / 2); the two are combined assuming an error ~ box^(2-d).
GreenResult green_function(const Point& x, int box, const RelaxOptions& opt = {});
// Several x from the same pair of solves.
std::vector<GreenResult> green_function(const std::vector<Point>& xs, int box, const RelaxOptions& opt = {});

struct ExitTailOptions {
  std::uint64_t samples = 100'000;
  int replicates = 20;  // independent splitting runs used for the standard error
};
// P_0[tau(r) >= n] for the simple walk in Z^d, tau(r) the exit time of B(r):
// fixed-effort splitting over stages of about r^2 / 2 steps.
Estimate srw_exit_tail(int d, double r, std::int64_t n, RandomStream& rng, const ExitTailOptions& opt = {});
// Exact value in d = 1 by dynamic programming.
double srw_exit_tail_1d_exact(double r, std::int64_t n);

}  // namespace krw
