#include "krw/trapping.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <stdexcept>

#include "krw/exhaustion.hpp"
#include "krw/grid.hpp"
#include "krw/stats.hpp"

namespace krw {

bool in_escape_set(const KillingField& k, const Point& x, std::int64_t search_radius) {
  if (search_radius < 0 || static_cast<double>(search_radius) < x.norm())
    throw std::invalid_argument("search radius must be at least |x|");
  if (!(k(x) < 1.0)) return false;
  const double r2 = static_cast<double>(search_radius) * static_cast<double>(search_radius);
  auto reached = [&](const Point& p) { return static_cast<double>(p.norm2()) >= r2; };
  if (reached(x)) return true;
  BoxIndex idx(Box::cube(x.d, search_radius));
  std::vector<std::uint8_t> seen(idx.size(), 0);
  std::deque<Point> queue{x};
  seen[idx.index(x)] = 1;
  while (!queue.empty()) {
    Point p = queue.front();
    queue.pop_front();
    for (const auto& q : neighbors(p)) {
      if (!(k(q) < 1.0)) continue;
      if (reached(q)) return true;
      std::size_t i = idx.index(q);  // |q| < search_radius, so q lies in the box
      if (seen[i]) continue;
      seen[i] = 1;
      queue.push_back(q);
    }
  }
  return false;
}

std::string to_string(Trapping t) {
  switch (t) {
    case Trapping::Trapped: return "Trapped";
    case Trapping::NotTrapped: return "NotTrapped";
    default: return "Inconclusive";
  }
}

namespace {

// Number of sites of Z^d with |x|^2 = n, for n <= nmax.
std::vector<double> shell_counts(int d, std::int64_t nmax) {
  std::vector<double> one(static_cast<std::size_t>(nmax + 1), 0.0);
  for (std::int64_t m = 0; m * m <= nmax; ++m) one[static_cast<std::size_t>(m * m)] = m == 0 ? 1.0 : 2.0;
  std::vector<double> acc = one;
  for (int dim = 2; dim <= d; ++dim) {
    std::vector<double> next(acc.size(), 0.0);
    for (std::int64_t m = 0; m * m <= nmax; ++m) {
      double w = one[static_cast<std::size_t>(m * m)];
      for (std::int64_t n = m * m; n <= nmax; ++n)
        next[static_cast<std::size_t>(n)] += w * acc[static_cast<std::size_t>(n - m * m)];
    }
    acc = std::move(next);
  }
  return acc;
}

// Radial rule used for the bulk of the sum; non-radial parts are corrected site by site.
double radial_part(const KillingField& k, double r) {
  if (k.is_radial()) return k.radial_value(r);
  if (auto t = std::get_if<killing::Tabulated>(&k.variant())) {
    if (std::holds_alternative<double>(t->fallback)) return std::get<double>(t->fallback);
    return std::get<RadialProfile>(t->fallback)(r);
  }
  return 0.0;  // indicator sets
}

}  // namespace

TrappingReport trapping_classifier(const KillingField& k, int d, const TrappingOptions& opt) {
  check_dimension(d);
  if (!(opt.exact_radius >= 2)) throw std::invalid_argument("exact radius must be >= 2");
  TrappingReport rep;
  if (k.is_zero()) {
    rep.verdict = Trapping::NotTrapped;
    rep.reason = "killing field is identically zero";
    return rep;
  }
  if (d <= 2) {
    rep.verdict = Trapping::Trapped;
    rep.reason = "simple random walk is recurrent in d <= 2";
    return rep;
  }

  // Site-by-site corrections for the non-radial part.
  std::vector<std::pair<double, double>> corrections;  // (|x|, weighted value)
  auto weight = [d](double r) { return std::pow(r, 2.0 - d); };
  if (auto ind = std::get_if<killing::IndicatorSet>(&k.variant())) {
    for (const auto& p : ind->points)
      if (!p.is_origin()) corrections.emplace_back(p.norm(), weight(p.norm()) * ind->rate);
  } else if (auto t = std::get_if<killing::Tabulated>(&k.variant())) {
    for (const auto& [p, v] : t->values)
      if (!p.is_origin()) corrections.emplace_back(p.norm(), weight(p.norm()) * (v - radial_part(k, p.norm())));
  }
  auto correction_upto = [&](double M) {
    double s = 0.0;
    for (const auto& [r, w] : corrections)
      if (r <= M) s += w;
    return s;
  };

  const auto M0 = opt.exact_radius;
  const std::int64_t nmax = M0 * M0;
  std::vector<double> counts = shell_counts(d, nmax);
  std::vector<double> cumulative(counts.size(), 0.0);
  for (std::int64_t n = 1; n <= nmax; ++n) {
    double r = std::sqrt(static_cast<double>(n));
    cumulative[static_cast<std::size_t>(n)] =
        cumulative[static_cast<std::size_t>(n - 1)] + counts[static_cast<std::size_t>(n)] * weight(r) * radial_part(k, r);
  }

  const double omega_d = 2.0 * std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0);
  // omega_d * integral of r k(r) dr over [a, b], Simpson's rule in s = ln r.
  auto shell_integral = [&](double a, double b) {
    const int m = 128;
    double la = std::log(a), h = (std::log(b) - la) / m, s = 0.0;
    for (int i = 0; i <= m; ++i) {
      double r = std::exp(la + i * h);
      double f = r * r * radial_part(k, r);
      s += f * (i == 0 || i == m ? 1.0 : (i % 2 ? 4.0 : 2.0));
    }
    return omega_d * s * h / 3.0;
  };

  // Geometric grid: 4, 8, ..., M0 exactly, then doublings up to the cutoff.
  double S_tail = cumulative.back();
  for (double M = 4; M <= std::min<double>(static_cast<double>(M0), opt.cutoff); M *= 2) {
    auto n = static_cast<std::size_t>(M * M);
    rep.radii.push_back(M);
    rep.partial_sums.push_back(cumulative[n] + correction_upto(M));
  }
  for (double M = 2.0 * static_cast<double>(M0); M <= opt.cutoff; M *= 2) {
    S_tail += shell_integral(M / 2, M);
    rep.radii.push_back(M);
    rep.partial_sums.push_back(S_tail + correction_upto(M));
  }
  if (rep.radii.size() < 4) throw std::invalid_argument("cutoff too small for a growth fit");

  // Fit the increments over the upper half of the grid.
  std::vector<double> lx, ly;
  bool all_zero = true;
  for (std::size_t j = rep.radii.size() / 2; j + 1 < rep.radii.size(); ++j) {
    double inc = rep.partial_sums[j + 1] - rep.partial_sums[j];
    if (inc > 0) {
      all_zero = false;
      lx.push_back(std::log(rep.radii[j + 1]));
      ly.push_back(std::log(inc));
    }
  }
  if (all_zero) {
    rep.verdict = Trapping::NotTrapped;
    rep.reason = "partial sums are constant on the tail (finitely supported killing)";
    return rep;
  }
  if (lx.size() < 3) {
    rep.reason = "too few positive increments to fit";
    return rep;
  }
  rep.tail_slope = fit_line(lx, ly).slope;
  if (rep.tail_slope >= opt.divergent_slope) {
    rep.verdict = Trapping::Trapped;
    rep.reason = "shell increments do not decay: the sum diverges";
  } else if (rep.tail_slope <= opt.convergent_slope) {
    rep.verdict = Trapping::NotTrapped;
    rep.reason = "shell increments decay polynomially: the sum converges";
  } else {
    rep.reason = "tail slope between the thresholds";
  }
  return rep;
}

}  // namespace krw
