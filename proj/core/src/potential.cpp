#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "krw/harmonic.hpp"

namespace krw {

double potential_kernel(const Point& x, int nodes_per_axis) {
  if (x.d != 2) throw std::invalid_argument("the potential kernel is only defined for d = 2");
  if (nodes_per_axis < 4 || nodes_per_axis % 2) throw std::invalid_argument("nodes per axis must be even and >= 4");
  if (x.is_origin()) return 0.0;
  // Averaging over the four sign patterns of theta turns 1 - cos<x,theta> into
  // 1 - cos(x1 t1) cos(x2 t2), so the trapezoid sum runs over [0,pi]^2 with
  // end weights 1 and interior weights 2. At theta = 0 the integrand has no
  // limit; its directional average 2<x,theta>^2/|theta|^2 -> |x|^2 is used.
  const int half = nodes_per_axis / 2;
  const double h = 2.0 * std::numbers::pi / nodes_per_axis;
  // Sorted so that the eight lattice symmetries give bit-identical values.
  const std::int64_t a0 = std::llabs(x[0]), a1 = std::llabs(x[1]);
  const auto [lo, hi] = std::minmax(a0, a1);
  const double x1 = static_cast<double>(lo), x2 = static_cast<double>(hi);
  std::vector<double> c(half + 1), a(half + 1), b(half + 1);
  for (int i = 0; i <= half; ++i) {
    double t = i * h;
    c[i] = std::cos(t);
    a[i] = std::cos(x1 * t);
    b[i] = std::cos(x2 * t);
  }
  double total = 0.0;
  for (int i = 0; i <= half; ++i) {
    double row = 0.0;
    const double ci = c[i], ai = a[i];
    for (int j = (i == 0 ? 1 : 0); j <= half; ++j) {
      double w = (j == 0 || j == half) ? 1.0 : 2.0;
      row += w * (1.0 - ai * b[j]) / (1.0 - 0.5 * (ci + c[j]));
    }
    if (i == 0) row += x1 * x1 + x2 * x2;
    total += ((i == 0 || i == half) ? 1.0 : 2.0) * row;
  }
  return total / (static_cast<double>(nodes_per_axis) * nodes_per_axis);
}

PotentialKernelTable::PotentialKernelTable(int max_coord, int nodes_per_axis) : m_(max_coord) {
  if (max_coord < 0) throw std::invalid_argument("table size must be >= 0");
  if (nodes_per_axis < 4 || nodes_per_axis % 2) throw std::invalid_argument("nodes per axis must be even and >= 4");
  // a(x) = N^-2 [S0 - sum_ij w_i w_j cos(x1 t_i) cos(x2 t_j) / D_ij + |x|^2], the
  // sums skipping the node t = 0, whose contribution is the |x|^2 term.
  const int half = nodes_per_axis / 2;
  const auto H = static_cast<std::size_t>(half + 1);
  const auto M = static_cast<std::size_t>(m_ + 1);
  const double h = 2.0 * std::numbers::pi / nodes_per_axis;
  std::vector<double> c(H), w(H);
  for (std::size_t i = 0; i < H; ++i) {
    c[i] = std::cos(static_cast<double>(i) * h);
    w[i] = (i == 0 || i + 1 == H) ? 1.0 : 2.0;
  }
  std::vector<double> cosx(M * H);  // cos(x t_i)
  for (std::size_t x = 0; x < M; ++x)
    for (std::size_t i = 0; i < H; ++i) cosx[x * H + i] = std::cos(static_cast<double>(x) * static_cast<double>(i) * h);
  // F[i][x2] = sum_j w_j cos(x2 t_j) / D_ij.
  std::vector<double> F(H * M, 0.0), inv(H);
  double S0 = 0.0;
  for (std::size_t i = 0; i < H; ++i) {
    for (std::size_t j = 0; j < H; ++j) inv[j] = (i == 0 && j == 0) ? 0.0 : w[j] / (1.0 - 0.5 * (c[i] + c[j]));
    for (std::size_t j = 0; j < H; ++j) S0 += w[i] * inv[j];
    for (std::size_t x2 = 0; x2 < M; ++x2) {
      const double* cx = &cosx[x2 * H];
      double s = 0.0;
      for (std::size_t j = 0; j < H; ++j) s += cx[j] * inv[j];
      F[i * M + x2] = s;
    }
  }
  const double norm = 1.0 / (static_cast<double>(nodes_per_axis) * nodes_per_axis);
  v_.assign(M * M, 0.0);
  for (std::size_t x1 = 0; x1 < M; ++x1)
    for (std::size_t x2 = 0; x2 <= x1; ++x2) {
      double t = 0.0;
      for (std::size_t i = 0; i < H; ++i) t += w[i] * cosx[x1 * H + i] * F[i * M + x2];
      double a = (x1 == 0 && x2 == 0) ? 0.0 : norm * (S0 - t + static_cast<double>(x1 * x1 + x2 * x2));
      v_[x1 * M + x2] = v_[x2 * M + x1] = a;
    }
}

double PotentialKernelTable::operator()(const Point& x) const {
  if (x.d != 2) throw std::invalid_argument("the potential kernel is only defined for d = 2");
  const std::int64_t a0 = std::llabs(x[0]), a1 = std::llabs(x[1]);
  const auto [i, j] = std::minmax(a0, a1);
  if (j > m_ || j > m_) throw std::out_of_range("point " + x.str() + " outside the potential kernel table");
  return v_[static_cast<std::size_t>(i) * static_cast<std::size_t>(m_ + 1) + static_cast<std::size_t>(j)];
}

KernelConstantFit potential_kernel_constant(const std::vector<Point>& points) {
  if (points.empty()) throw std::invalid_argument("no points to fit");
  KernelConstantFit fit;
  double lo = INFINITY, hi = -INFINITY, sum = 0.0;
  for (const auto& p : points) {
    double v = potential_kernel(p) - 2.0 / std::numbers::pi * std::log(p.norm());
    fit.values.push_back(v);
    sum += v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  fit.constant = sum / static_cast<double>(points.size());
  fit.spread = hi - lo;
  return fit;
}

double hitting_before_zero(const Point& x, const Point& y, bool from_origin) {
  if (x.d != 2 || y.d != 2) throw std::invalid_argument("hitting_before_zero is defined in d = 2");
  if (y.is_origin()) throw std::invalid_argument("target y must differ from the origin");
  double ay = potential_kernel(y);
  if (from_origin) return 1.0 / (2.0 * ay);
  if (x.is_origin()) throw std::invalid_argument("start x must differ from the origin");
  return (potential_kernel(x) + ay - potential_kernel(x - y)) / (2.0 * ay);
}

std::vector<double> square_exit_distribution(int m) {
  if (m < 0) throw std::invalid_argument("square half-width must be >= 0");
  // Rows 0..n of a strip, start at the centre (n/2, n/2), exit through row n.
  // Sine series in the transverse direction, cosh lambda_k = 2 - cos(k pi / n).
  const int n = 2 * m + 2;
  std::vector<double> out(static_cast<std::size_t>(2 * m + 1), 0.0);
  for (int k = 1; k < n; k += 2) {
    double lam = std::acosh(2.0 - std::cos(k * std::numbers::pi / n));
    double damp = 1.0 / (2.0 * std::cosh(lam * n / 2.0));
    if (damp == 0.0) break;
    double sign = (k / 2) % 2 ? -1.0 : 1.0;  // sin(k pi / 2)
    for (int J = 1; J < n; ++J)
      out[static_cast<std::size_t>(J - 1)] += (2.0 / n) * std::sin(k * std::numbers::pi * J / n) * sign * damp;
  }
  for (auto& v : out) v = std::max(v, 0.0);
  return out;
}

namespace {

struct JumpTable {
  int m;
  std::vector<double> cdf;  // normalised over one side
};

const std::vector<JumpTable>& jump_tables() {
  static const std::vector<JumpTable> tables = [] {
    std::vector<JumpTable> t;
    for (int m : {1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64, 96, 128, 192, 256, 384, 512}) {
      auto p = square_exit_distribution(m);
      JumpTable jt{m, {}};
      double s = 0.0;
      for (double v : p) jt.cdf.push_back(s += v);
      for (double& v : jt.cdf) v /= s;
      t.push_back(std::move(jt));
    }
    return t;
  }();
  return tables;
}

}  // namespace

Estimate hitting_before_zero_mc(const Point& x, const Point& y, RandomStream& rng, const HittingMcOptions& opt) {
  if (x.d != 2 || y.d != 2) throw std::invalid_argument("hitting Monte Carlo is defined in d = 2");
  if (x.is_origin() || y.is_origin()) throw std::invalid_argument("x and y must differ from the origin");
  const auto& tables = jump_tables();
  const double far2 = opt.far_radius * opt.far_radius;
  static constexpr std::array<std::array<int, 2>, 4> kDirs{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
  RunningStats stats;
  for (std::uint64_t s = 0; s < opt.samples; ++s) {
    std::int64_t z0 = x[0], z1 = x[1];
    double score;
    while (true) {
      if (z0 == y[0] && z1 == y[1]) {
        score = 1.0;
        break;
      }
      if (z0 == 0 && z1 == 0) {
        score = 0.0;
        break;
      }
      if (static_cast<double>(z0 * z0 + z1 * z1) >= far2) {
        score = 0.5;
        break;
      }
      std::int64_t dist = std::min(std::max(std::llabs(z0), std::llabs(z1)),
                                   std::max(std::llabs(z0 - y[0]), std::llabs(z1 - y[1])));
      if (dist <= 1) {
        const auto& dir = kDirs[rng.bits() & 3];
        z0 += dir[0];
        z1 += dir[1];
        continue;
      }
      // Largest tabulated square {|w - z|_inf <= m} with m <= dist - 1: its
      // interior avoids both targets, which can only be met on exit.
      auto it = std::upper_bound(tables.begin(), tables.end(), dist - 1,
                                 [](std::int64_t v, const JumpTable& t) { return v < t.m; });
      const JumpTable& t = *(it - 1);
      std::uint64_t side = rng.bits() & 3;
      auto j = static_cast<std::int64_t>(std::upper_bound(t.cdf.begin(), t.cdf.end(), rng.uniform()) - t.cdf.begin());
      j = std::min<std::int64_t>(j, 2 * t.m);
      std::int64_t along = t.m + 1, across = j - t.m;
      switch (side) {
        case 0: z0 += along; z1 += across; break;
        case 1: z0 -= along; z1 -= across; break;
        case 2: z1 += along; z0 -= across; break;
        default: z1 -= along; z0 += across; break;
      }
    }
    stats.add(score);
  }
  Estimate e = stats.estimate(rng.seed(), rng.stream_id());
  e.note = "paths reaching |z| >= " + std::to_string(opt.far_radius) + " scored 1/2";
  return e;
}

}  // namespace krw
