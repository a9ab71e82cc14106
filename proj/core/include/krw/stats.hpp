#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace krw {

struct Estimate {
  double mean = 0.0;
  double stderr_ = 0.0;  // sample standard deviation / sqrt(n)
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  // Bracketing interval when some samples could not be resolved (caps).
  std::optional<double> lower;
  std::optional<double> upper;
  std::string note;

  double stderr() const { return stderr_; }
};

// Welford accumulator.
class RunningStats {
 public:
  void add(double x) {
    ++n_;
    double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }
  void merge(const RunningStats& o);
  std::uint64_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double stderr() const { return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }
  Estimate estimate(std::uint64_t seed = 0, std::uint64_t stream = 0) const;

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// |a - b| / sqrt(se_a^2 + se_b^2), with the convention 0/0 = 0.
double z_score(const Estimate& a, const Estimate& b);
double combined_stderr(const Estimate& a, const Estimate& b);

// Product of independent estimates with first-order error propagation.
Estimate product(const std::vector<Estimate>& factors);

// Two-sample Kolmogorov-Smirnov statistic and its asymptotic critical value.
double ks_statistic(std::vector<double> a, std::vector<double> b);
double ks_critical(std::size_t n, std::size_t m, double level = 0.05);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double correlation = 0.0;
};
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace krw
