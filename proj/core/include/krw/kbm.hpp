#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "krw/random.hpp"
#include "krw/stats.hpp"

namespace krw {

// Killed planar Brownian motion with killing rate k(x) = 1 ^ |x|^-alpha.
struct KbmConfig {
  enum class Killing { PowerLaw, Zero, Constant };
  Killing killing = Killing::PowerLaw;
  double alpha = 1.0;   // PowerLaw exponent in (0, 2)
  double lambda = 0.0;  // Constant rate
  double dt = 1e-2;     // largest step; steps shrink to 1e-2 |x|^2 near the origin
  double max_time = 1e7;
  bool bridge = false;  // Brownian-bridge test for target crossings between grid times

  static KbmConfig power_law(double alpha, double dt);
  static KbmConfig zero(double dt);
  static KbmConfig constant(double lambda, double dt);

  double beta() const { return (2.0 - alpha) / 4.0; }
  double rate(double x, double y) const;
  void validate() const;
  // dt <= 1e-2 * inner_radius^2.
  void check_resolution(double inner_radius) const;
  std::string describe() const;
};

using Vec2 = std::array<double, 2>;

// Target region described by its Euclidean distance function (<= 0 inside).
struct Target {
  std::function<double(const Vec2&)> distance;
  std::string name;

  static Target outside_ball(double R);
  // Directional exhaustions: plus contains B(R) and {x_1 <= 0}, so its complement
  // is {|x| > R, x_1 > 0}; minus is the mirror image.
  static Target outside_plus(double R);
  static Target outside_minus(double R);
};

struct KbmPath {
  enum class Status { Escaped, Died, TimedOut };
  Status status = Status::TimedOut;
  Vec2 position{};
  double time = 0.0;
  double hazard = 0.0;   // integral of k along the path up to the stop
  double xi = 0.0;       // exponential death threshold
  double winding = 0.0;  // unwrapped change of arg
  double clock = 0.0;    // integral of ds / |B_s|^2
  std::uint64_t steps = 0;
};

// Runs from start until the target is entered, the path dies (when
// stop_at_death) or max_time elapses. With stop_at_death false the hazard keeps
// accumulating past xi and status reports Escaped/Died from hazard < xi at the
// stop, which is the same event.
KbmPath simulate_until(const KbmConfig& cfg, const Vec2& start, const Target& target, RandomStream& rng,
                       bool stop_at_death = true);

// P_start[target entered before death] by direct simulation.
Estimate escape_probability(const KbmConfig& cfg, const Vec2& start, const Target& target, std::uint64_t samples,
                            RandomStream& rng);

// Two estimators of P[tau(target) <= tau(Delta)] on one set of paths: the
// indicator of survival and the weight exp(-hazard).
struct FeynmanKacReport {
  Estimate indicator;
  Estimate weight;
  std::uint64_t timed_out = 0;
};
FeynmanKacReport feynman_kac_check(const KbmConfig& cfg, const Vec2& start, const Target& target,
                                   std::uint64_t samples, RandomStream& rng);

// P[survive to time t]; with constant killing lambda this is exp(-lambda t).
Estimate survival_to_time(const KbmConfig& cfg, const Vec2& start, double t, std::uint64_t samples,
                          RandomStream& rng);

// P_(r,0)[tau(factor r) < tau(Delta)]. Radii from chain_from upward are estimated
// as a product over chain_steps sub-annuli, which is exact for a radial killing
// rate by the strong Markov property and rotation invariance.
struct AnnulusOptions {
  double chain_from = 32.0;
  int chain_steps = 4;
};
Estimate annulus_survival(const KbmConfig& cfg, double r, double factor, std::uint64_t samples, RandomStream& rng,
                          const AnnulusOptions& opt = {});

// P_(r,0)[tau(2^n r) < tau(Delta)] directly and as the product of n doublings.
struct ChainReport {
  Estimate direct;
  Estimate chained;
  std::vector<Estimate> factors;
};
ChainReport chained_survival(const KbmConfig& cfg, double r, int n, std::uint64_t samples, RandomStream& rng);

// Winding of surviving paths from (r,0) to radius 2r.
struct AngularReport {
  double threshold = 0.0;   // r^(-beta/2)
  Estimate exceedance;      // P[|winding| >= threshold | survive]
  Estimate mean_winding;    // E[winding | survive]
  std::uint64_t survivors = 0;
  bool inconclusive = false;  // fewer than 100 survivors
  std::vector<double> windings;
};
AngularReport angular_concentration(const KbmConfig& cfg, double r, std::uint64_t samples, RandomStream& rng);

// Skew-product comparison: windings of surviving paths against sqrt(clock) * Z
// from an independent run, with Z an independent standard normal.
struct SkewProductReport {
  std::vector<double> direct;
  std::vector<double> skew;
  double ks = 0.0;
  double critical = 0.0;
};
SkewProductReport skew_product_check(const KbmConfig& cfg, double r, std::uint64_t samples, RandomStream& rng);

// P_(r,0)[target of side `plus` or `minus` at radius 2^n r entered before death],
// estimated by fixed-effort splitting: particles advance between levels of the
// distance to the target carrying weights exp(-hazard), are resampled at every
// level, and the product of mean weights is averaged over independent replicates.
struct SplittingOptions {
  std::uint64_t particles = 2000;
  std::uint64_t replicates = 20;
  double level_spacing = 2.0;
};
struct SplittingEstimate {
  Estimate estimate;
  std::vector<double> replicate_values;
  std::size_t levels = 0;
};
// accept, when set, filters the entry point at the final level.
SplittingEstimate splitting_escape(const KbmConfig& cfg, const Vec2& start, const Target& target,
                                   RandomStream& rng, const SplittingOptions& opt = {},
                                   const std::function<bool(const Vec2&)>& accept = {});

enum class Side { Plus, Minus };
SplittingEstimate directional_escape(const KbmConfig& cfg, const Vec2& start, double r, int n, Side side,
                                     RandomStream& rng, const SplittingOptions& opt = {});

// P_(r,0)[exit B(R) before death with |arg B_exit| <= max_angle], by splitting.
SplittingEstimate ball_exit_in_sector(const KbmConfig& cfg, double r, double R, double max_angle, RandomStream& rng,
                                      const SplittingOptions& opt = {});

// P[tau(B(x, r)^c) <= t] for planar BM (no killing).
Estimate exit_before(double r, double t, double dt, std::uint64_t samples, RandomStream& rng);
// P_0[sup_{[0,t]} W >= x] for 1D BM, with the exact bridge correction between grid times.
Estimate running_max_exceeds(double x, double t, double dt, std::uint64_t samples, RandomStream& rng);

// Annulus survival at dt, dt/2 and dt/4 with the fitted bias slope c in p(dt) = p0 + c dt.
struct DtHalvingReport {
  std::array<double, 3> dts{};
  std::array<Estimate, 3> estimates{};
  double slope = 0.0;
  double intercept = 0.0;
  bool consistent = false;  // |p(dt) - p(dt/2)| <= 3 combined stderr + |c| dt / 2
};
DtHalvingReport dt_halving_check(const KbmConfig& cfg, double r, std::uint64_t samples, RandomStream& rng);

std::string to_string(KbmPath::Status s);
std::string to_string(Side s);

}  // namespace krw
