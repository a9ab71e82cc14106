#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "krw/grid.hpp"
#include "krw/harmonic.hpp"
#include "krw/solve.hpp"

namespace krw {

namespace {

LinearSystem unit_source_solve(int d, int radius, const RelaxOptions& opt) {
  const double r = radius;
  return solve_dirichlet(
      Box::cube(d, radius), [r](const Point& p) { return in_ball(p, r); }, KillingField::zero(), {},
      [](const Point& p) { return p.is_origin() ? 1.0 : 0.0; }, opt);
}

}  // namespace

std::vector<GreenResult> green_function(const std::vector<Point>& xs, int box, const RelaxOptions& opt) {
  if (xs.empty()) return {};
  const int d = xs.front().d;
  if (d < 3) throw std::invalid_argument("the Green function of the simple walk needs d >= 3");
  if (box < 4) throw std::invalid_argument("box radius must be >= 4");
  const int half = box / 2;
  for (const auto& x : xs) {
    if (x.d != d) throw std::invalid_argument("points differ in dimension");
    if (!(x.norm() < half))
      throw std::invalid_argument("x = " + x.str() + " must lie inside B(box / 2) for the boundary correction");
  }
  LinearSystem big = unit_source_solve(d, box, opt);
  LinearSystem small = unit_source_solve(d, half, opt);
  // g - g_B ~ C B^(2-d) for |x| << B, so g = g_B + (g_B - g_{B/2}) / (2^(d-2) - 1).
  const double factor = 1.0 / (std::pow(static_cast<double>(box) / half, d - 2) - 1.0);
  std::vector<GreenResult> out;
  for (const auto& x : xs) {
    GreenResult g;
    g.raw = big.value(x, 0.0);
    g.raw_half = small.value(x, 0.0);
    g.value = g.raw + (g.raw - g.raw_half) * factor;
    g.sensitivity = std::abs(g.value - g.raw);
    out.push_back(g);
  }
  return out;
}

GreenResult green_function(const Point& x, int box, const RelaxOptions& opt) {
  return green_function(std::vector<Point>{x}, box, opt).front();
}

double srw_exit_tail_1d_exact(double r, std::int64_t n) {
  if (!(r >= 0)) throw std::invalid_argument("radius must be >= 0");
  if (n <= 0) return 1.0;
  const auto m = static_cast<std::int64_t>(std::floor(r));
  std::vector<double> p(static_cast<std::size_t>(2 * m + 3), 0.0), q(p.size(), 0.0);
  p[static_cast<std::size_t>(m + 1)] = 1.0;  // index i holds site i - m - 1; ends are absorbing
  for (std::int64_t t = 1; t < n; ++t) {
    std::fill(q.begin(), q.end(), 0.0);
    for (std::size_t i = 1; i + 1 < p.size(); ++i) {
      q[i - 1] += 0.5 * p[i];
      q[i + 1] += 0.5 * p[i];
    }
    q.front() = q.back() = 0.0;
    p.swap(q);
  }
  double s = 0.0;
  for (double v : p) s += v;
  return s;
}

Estimate srw_exit_tail(int d, double r, std::int64_t n, RandomStream& rng, const ExitTailOptions& opt) {
  check_dimension(d);
  if (!(r >= 1)) throw std::invalid_argument("radius must be >= 1");
  if (opt.replicates < 2 || opt.samples < static_cast<std::uint64_t>(opt.replicates))
    throw std::invalid_argument("need at least two replicates and one particle per replicate");
  Estimate e;
  e.seed = rng.seed();
  e.stream = rng.stream_id();
  e.n = opt.samples;
  // tau >= n means S_0, ..., S_{n-1} all lie in B(r).
  const std::int64_t steps = n - 1;
  if (steps <= 0) {
    e.mean = 1.0;
    return e;
  }
  const double r2 = r * r;
  const auto stage = std::max<std::int64_t>(1, static_cast<std::int64_t>(r2 / 2));
  const auto per = opt.samples / static_cast<std::uint64_t>(opt.replicates);
  RunningStats reps;
  std::vector<std::array<std::int64_t, kMaxDim>> cur, next;
  for (int rep = 0; rep < opt.replicates; ++rep) {
    cur.assign(per, std::array<std::int64_t, kMaxDim>{});
    double product = 1.0;
    for (std::int64_t done = 0; done < steps && product > 0.0;) {
      const std::int64_t len = std::min(stage, steps - done);
      next.clear();
      for (auto pos : cur) {
        bool inside = true;
        for (std::int64_t t = 0; t < len && inside; ++t) {
          std::uint64_t b = rng.below(static_cast<std::uint64_t>(2 * d));
          pos[b / 2] += (b & 1) ? -1 : 1;
          double s = 0.0;
          for (int a = 0; a < d; ++a) s += static_cast<double>(pos[a] * pos[a]);
          inside = s <= r2;
        }
        if (inside) next.push_back(pos);
      }
      done += len;
      product *= static_cast<double>(next.size()) / static_cast<double>(per);
      if (next.empty()) break;
      // Fixed effort: resample the survivors back to the full population.
      cur.resize(per);
      for (auto& c : cur) c = next[rng.below(next.size())];
    }
    reps.add(product);
  }
  e.mean = reps.mean();
  e.stderr_ = reps.stderr();
  e.note = "fixed-effort splitting, " + std::to_string(opt.replicates) + " replicates";
  return e;
}

}  // namespace krw
