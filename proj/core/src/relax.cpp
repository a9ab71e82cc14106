#include "krw/relax.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <numbers>
#include <vector>

#include "krw/hash.hpp"

namespace krw {

namespace {

using Index = std::uint32_t;

template <int D, bool Src>
double sweep_cells(double* __restrict u, const double* __restrict c, const double* __restrict s,
                   const Index* idx, std::size_t n, const std::array<std::int64_t, kMaxDim>& st,
                   double omega) {
  // Neighbour pairs are added first so that the sum is invariant under x -> -x.
  double dmax = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::int64_t i = idx[k];
    double sum = u[i + st[0]] + u[i - st[0]];
    if constexpr (D > 1) sum += u[i + st[1]] + u[i - st[1]];
    if constexpr (D > 2) sum += u[i + st[2]] + u[i - st[2]];
    if constexpr (D > 3) sum += u[i + st[3]] + u[i - st[3]];
    if constexpr (D > 4) sum += u[i + st[4]] + u[i - st[4]];
    double target = c[i] * sum;
    if constexpr (Src) target += s[i];
    double du = omega * (target - u[i]);
    u[i] += du;
    dmax = std::max(dmax, std::abs(du));
  }
  return dmax;
}

using SweepFn = double (*)(double*, const double*, const double*, const Index*, std::size_t,
                           const std::array<std::int64_t, kMaxDim>&, double);

SweepFn pick_sweep(int d, bool src) {
  switch (d) {
    case 1: return src ? sweep_cells<1, true> : sweep_cells<1, false>;
    case 2: return src ? sweep_cells<2, true> : sweep_cells<2, false>;
    case 3: return src ? sweep_cells<3, true> : sweep_cells<3, false>;
    case 4: return src ? sweep_cells<4, true> : sweep_cells<4, false>;
    default: return src ? sweep_cells<5, true> : sweep_cells<5, false>;
  }
}

double neighbour_sum_at(const double* w, std::size_t i, const std::array<std::int64_t, kMaxDim>& st,
                        int d) {
  double sum = 0.0;
  for (int a = 0; a < d; ++a) sum += w[i + static_cast<std::size_t>(st[a])] + w[i - static_cast<std::size_t>(st[a])];
  return sum;
}

double neighbour_sum(const LinearSystem& sys, std::size_t i) {
  double sum = 0.0;
  for (int a = 0; a < sys.index.dim(); ++a) {
    auto st = static_cast<std::size_t>(sys.index.stride(a));
    sum += sys.u[i + st] + sys.u[i - st];
  }
  return sum;
}

// Spectral radius bound of the Jacobi iteration on any subset of the box
// when coef <= 1/(2d): the Dirichlet Laplacian of the whole box.
double jacobi_bound(const BoxIndex& idx) {
  const Box& b = idx.box();
  double s = 0.0;
  for (int a = 0; a < b.d; ++a) {
    double n = static_cast<double>(b.hi[a] - b.lo[a] - 1);  // interior extent
    s += std::cos(std::numbers::pi / (n + 1.0));
  }
  return s / b.d;
}

}  // namespace

Residual residual(const LinearSystem& sys) {
  Residual r;
  const bool src = !sys.source.empty();
  for (std::size_t i = 0; i < sys.u.size(); ++i) {
    if (!sys.domain[i]) continue;
    double t = sys.coef[i] * neighbour_sum(sys, i) + (src ? sys.source[i] : 0.0);
    double res = std::abs(t - sys.u[i]);
    r.max_abs = std::max(r.max_abs, res);
    r.max_rel = std::max(r.max_rel, res / std::max(std::abs(sys.u[i]), kUnderflowFloor));
  }
  return r;
}

RelaxReport relax(LinearSystem& sys, const RelaxOptions& opt) {
  if (!(opt.tol > 0)) throw std::invalid_argument("solver tolerance must be positive");
  if (opt.omega != 0.0 && !(opt.omega >= 1.0 && opt.omega < 2.0))
    throw std::invalid_argument("over-relaxation factor must lie in [1,2)");
  const std::size_t n = sys.u.size();
  const int d = sys.index.dim();
  const bool src = !sys.source.empty();
  if (sys.domain_size() == 0) throw std::invalid_argument("empty computational domain");

  RelaxReport rep;

  // Cells with zero coefficient are fixed at their source value.
  std::vector<std::uint8_t> active(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!sys.domain[i]) continue;
    if (sys.coef[i] == 0.0)
      sys.u[i] = src ? sys.source[i] : 0.0;
    else
      active[i] = 1;
  }
  // Cells that cannot see a nonzero boundary value or source through active
  // cells are identically zero; fixing them keeps the relative test meaningful.
  {
    std::vector<std::uint8_t> reached(n, 0);
    std::deque<std::size_t> queue;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      bool seed = src && sys.source[i] != 0.0;
      for (int a = 0; a < d && !seed; ++a) {
        auto st = static_cast<std::size_t>(sys.index.stride(a));
        for (std::size_t j : {i + st, i - st})
          if (!active[j] && sys.u[j] != 0.0) seed = true;
      }
      if (seed) {
        reached[i] = 1;
        queue.push_back(i);
      }
    }
    while (!queue.empty()) {
      std::size_t i = queue.front();
      queue.pop_front();
      for (int a = 0; a < d; ++a) {
        auto st = static_cast<std::size_t>(sys.index.stride(a));
        for (std::size_t j : {i + st, i - st})
          if (active[j] && !reached[j]) {
            reached[j] = 1;
            queue.push_back(j);
          }
      }
    }
    for (std::size_t i = 0; i < n; ++i)
      if (active[i] && !reached[i]) {
        active[i] = 0;
        sys.u[i] = 0.0;
        ++rep.structural_zeros;
      }
  }

  // Sweep lists.
  std::vector<Index> lists[2];
  {
    const Box& b = sys.index.box();
    Point p(d);
    for (int a = 0; a < d; ++a) p.c[a] = b.lo[a];
    for (std::size_t i = 0; i < n; ++i) {
      if (active[i]) {
        if (opt.order == SweepOrder::RedBlack) {
          std::int64_t par = 0;
          for (int a = 0; a < d; ++a) par += p.c[a];
          lists[static_cast<std::size_t>(par & 1)].push_back(static_cast<Index>(i));
        } else {
          lists[0].push_back(static_cast<Index>(i));
        }
      }
      for (int a = 0; a < d; ++a) {
        if (++p.c[a] <= b.hi[a]) break;
        p.c[a] = b.lo[a];
      }
    }
  }

  std::array<std::int64_t, kMaxDim> st{};
  for (int a = 0; a < d; ++a) st[a] = sys.index.stride(a);
  SweepFn sweep_plain = pick_sweep(d, false);
  SweepFn sweep_src = pick_sweep(d, true);

  const bool adaptive = opt.omega == 0.0;
  double omega = adaptive ? 1.0 : opt.omega;
  const double rho_cap = std::min(jacobi_bound(sys.index), 1.0 - 1e-15);
  const double omega_cap = 2.0 / (1.0 + std::sqrt(1.0 - rho_cap * rho_cap));
  constexpr std::int64_t kWindow = 12;
  constexpr int kMaxRefinements = 16;

  // Pointwise residual of w = coef * sum w + s over the active cells, measured
  // against |u| (relative) or 1 (absolute).
  auto measure = [&](const double* w, const double* s) {
    double worst = 0.0;
    for (const auto& l : lists)
      for (Index i : l) {
        double t = sys.coef[i] * neighbour_sum_at(w, i, st, d) + (s ? s[i] : 0.0);
        double res = std::abs(t - w[i]);
        if (opt.relative) res /= std::max(std::abs(sys.u[i]), kUnderflowFloor);
        worst = std::max(worst, res);
      }
    return worst;
  };

  enum class Outcome { Converged, Stalled, OutOfSweeps };
  std::int64_t sweeps = 0;

  // Iterates w until its residual meets the tolerance or stops improving.
  auto iterate = [&](double* w, const double* s) {
    SweepFn sweep = s ? sweep_src : sweep_plain;
    std::vector<double> history;  // max |dw| per sweep since the last change of omega
    std::int64_t start = sweeps;
    std::int64_t next_check = sweeps + 8;
    double best = INFINITY;
    int checks_without_progress = 0;
    std::int64_t last_progress = sweeps;
    while (sweeps < opt.max_sweeps) {
      double dmax = 0.0;
      for (auto& l : lists)
        if (!l.empty()) dmax = std::max(dmax, sweep(w, sys.coef.data(), s, l.data(), l.size(), st, omega));
      ++sweeps;
      history.push_back(dmax);

      if (adaptive && static_cast<std::int64_t>(history.size()) >= 2 * kWindow + 1) {
        std::size_t m = history.size() - 1;
        double a = history[m], b = history[m - kWindow], c = history[m - 2 * kWindow];
        if (a > 0 && b > 0 && c > 0) {
          double lam1 = std::pow(b / c, 1.0 / kWindow);
          double lam2 = std::pow(a / b, 1.0 / kWindow);
          bool settled = lam2 < 1.0 && std::abs(lam2 - lam1) <= 2e-3 * lam2;
          bool slow = omega == 1.0 || lam2 > std::pow(omega - 1.0, 0.75);
          if (settled && slow) {
            double rho2 = (lam2 + omega - 1.0) * (lam2 + omega - 1.0) / (lam2 * omega * omega);
            rho2 = std::min(rho2, rho_cap * rho_cap);
            double om = std::min(2.0 / (1.0 + std::sqrt(1.0 - rho2)), omega_cap);
            if (om > omega * (1.0 + 1e-6)) {
              omega = om;
              history.clear();
            }
          }
        }
      }

      if (dmax == 0.0 || sweeps >= next_check) {
        // One plain Gauss-Seidel pass before measuring: with omega close to 2 the
        // over-relaxed iterate carries rounding noise of order eps / (2 - omega).
        if (omega > 1.0 && dmax != 0.0)
          for (auto& l : lists)
            if (!l.empty()) sweep(w, sys.coef.data(), s, l.data(), l.size(), st, 1.0);
        double q = measure(w, s);
        if (q <= opt.tol) return Outcome::Converged;
        if (dmax == 0.0) return Outcome::Stalled;
        if (q < 0.5 * best) {
          best = q;
          last_progress = sweeps;
          checks_without_progress = 0;
        } else {
          // Patience of several halving times of the asymptotic SOR rate omega - 1.
          double halving = omega > 1.0 ? std::log(2.0) / -std::log(omega - 1.0) : 64.0;
          auto patience = static_cast<std::int64_t>(std::max(256.0, 6.0 * halving));
          if (++checks_without_progress >= 8 && sweeps - last_progress >= patience)
            return Outcome::Stalled;
        }
        next_check = sweeps + std::clamp<std::int64_t>((sweeps - start) / 16, 8, 256);
      }
    }
    return Outcome::OutOfSweeps;
  };

  bool any_active = !lists[0].empty() || !lists[1].empty();
  if (any_active) {
    const double* src_ptr = src ? sys.source.data() : nullptr;
    Outcome out = iterate(sys.u.data(), src_ptr);
    std::vector<double> e, r;
    while (out == Outcome::Stalled && rep.refinements < kMaxRefinements) {
      // Correction e solves e = coef * sum e + r with zero boundary values,
      // where r is the current residual; u + e then satisfies the system.
      ++rep.refinements;
      e.assign(n, 0.0);
      r.assign(n, 0.0);
      for (const auto& l : lists)
        for (Index i : l)
          r[i] = sys.coef[i] * neighbour_sum_at(sys.u.data(), i, st, d) + (src ? sys.source[i] : 0.0) -
                 sys.u[i];
      Outcome inner = iterate(e.data(), r.data());
      for (const auto& l : lists)
        for (Index i : l) sys.u[i] += e[i];
      if (measure(sys.u.data(), src_ptr) <= opt.tol) break;
      out = inner == Outcome::OutOfSweeps ? inner : Outcome::Stalled;
    }
  }

  auto criterion_met = [&](const Residual& res) {
    return opt.relative ? res.max_rel <= opt.tol : res.max_abs <= opt.tol;
  };
  Residual r = residual(sys);
  rep.sweeps = sweeps;
  rep.omega = omega;
  rep.max_abs_residual = r.max_abs;
  rep.max_rel_residual = r.max_rel;
  rep.converged = criterion_met(r);
  double minpos = INFINITY;
  for (std::size_t i = 0; i < n; ++i) {
    if (!sys.domain[i]) continue;
    double v = sys.u[i];
    if (v > 0) {
      minpos = std::min(minpos, v);
      if (v < kUnderflowFloor) ++rep.tiny_values;
    }
  }
  rep.min_positive = std::isfinite(minpos) ? minpos : 0.0;
  if (!rep.converged) {
    throw SolverError("relaxation did not converge after " + std::to_string(sweeps) +
                          " sweeps; last " + (opt.relative ? "relative" : "absolute") +
                          " residual " + format_double(opt.relative ? r.max_rel : r.max_abs) +
                          " (omega " + format_double(omega) + ")",
                      opt.relative ? r.max_rel : r.max_abs);
  }
  return rep;
}

}  // namespace krw
