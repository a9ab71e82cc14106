#include "krw/stats.hpp"

#include <algorithm>
#include <stdexcept>

namespace krw {

void RunningStats::merge(const RunningStats& o) {
  if (o.n_ == 0) return;
  if (n_ == 0) {
    *this = o;
    return;
  }
  std::uint64_t n = n_ + o.n_;
  double delta = o.mean_ - mean_;
  mean_ += delta * static_cast<double>(o.n_) / static_cast<double>(n);
  m2_ += o.m2_ + delta * delta * static_cast<double>(n_) * static_cast<double>(o.n_) / static_cast<double>(n);
  n_ = n;
}

Estimate RunningStats::estimate(std::uint64_t seed, std::uint64_t stream) const {
  Estimate e;
  e.mean = mean_;
  e.stderr_ = stderr();
  e.n = n_;
  e.seed = seed;
  e.stream = stream;
  return e;
}

double combined_stderr(const Estimate& a, const Estimate& b) {
  return std::sqrt(a.stderr_ * a.stderr_ + b.stderr_ * b.stderr_);
}

double z_score(const Estimate& a, const Estimate& b) {
  double diff = std::abs(a.mean - b.mean);
  double se = combined_stderr(a, b);
  if (se == 0.0) return diff == 0.0 ? 0.0 : INFINITY;
  return diff / se;
}

Estimate product(const std::vector<Estimate>& factors) {
  if (factors.empty()) throw std::invalid_argument("product of no estimates");
  Estimate out;
  out.mean = 1.0;
  out.n = factors.front().n;
  out.seed = factors.front().seed;
  out.stream = factors.front().stream;
  for (const auto& f : factors) {
    out.mean *= f.mean;
    out.n = std::min(out.n, f.n);
  }
  // Var(prod) ~ prod^2 * sum (se_i / m_i)^2; written to stay finite when a factor is 0.
  double se2 = 0.0;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    double others = 1.0;
    for (std::size_t j = 0; j < factors.size(); ++j)
      if (j != i) others *= factors[j].mean;
    se2 += others * others * factors[i].stderr_ * factors[i].stderr_;
  }
  out.stderr_ = std::sqrt(se2);
  return out;
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("KS statistic needs two non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  double dmax = 0.0;
  while (i < a.size() && j < b.size()) {
    double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    dmax = std::max(dmax, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return dmax;
}

double ks_critical(std::size_t n, std::size_t m, double level) {
  double c = std::sqrt(-0.5 * std::log(level / 2.0));
  double nn = static_cast<double>(n), mm = static_cast<double>(m);
  return c * std::sqrt((nn + mm) / (nn * mm));
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line needs >= 2 points");
  double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  double mx = sx / n, my = sy / n;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LinearFit f;
  f.slope = sxx > 0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  f.correlation = (sxx > 0 && syy > 0) ? sxy / std::sqrt(sxx * syy) : 1.0;
  return f;
}

}  // namespace krw
