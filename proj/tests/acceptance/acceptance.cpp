// Acceptance checks: `krw_acceptance N` runs criterion N (1..11) and prints one
// PASS or FAIL line for it, preceded by indented detail lines.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "krw/harmonic.hpp"
#include "krw/kbm.hpp"
#include "krw/ratio.hpp"
#include "krw/snake.hpp"
#include "krw/solve.hpp"
#include "krw/trapping.hpp"

using namespace krw;

namespace {

constexpr double kPi = std::numbers::pi;

struct Verdict {
  bool ok = true;
  std::string summary;
  double budget = 0.0;  // seconds, 0 when the criterion has no runtime bound
};

template <class... A>
void detail(const char* fmt, A... args) {
  std::printf("  ");
  std::printf(fmt, args...);
  std::printf("\n");
  std::fflush(stdout);
}

double interior_residual(const SurvivalSolution& s, const KillingField& k) {
  double worst = 0.0;
  for (const auto& x : s.domain_points()) {
    double sum = 0.0;
    for (const auto& y : neighbors(x)) sum += s(y);
    worst = std::max(worst, std::abs(s(x) - (1.0 - k(x)) / (2.0 * x.d) * sum));
  }
  return worst;
}

// ---------------------------------------------------------------- 1

Verdict gamblers_ruin() {
  Verdict v{true, "", 1.0};
  const auto k = KillingField::indicator({Point{0}}, 0.5);
  const double target = 7.0 / 12.0;
  double previous = INFINITY, last = 0.0;
  for (std::int64_t R : {10, 25, 50, 100, 200}) {
    auto u = solve_escape(k, Exhaustion::segment(2, 1), 1, R);
    const double right = conditional_step_law(u, k, Point{0})[0];
    const double err = std::abs(right - target);
    detail("R = %lld  P[first step right] = %.10f  |p - 7/12| = %.3e", static_cast<long long>(R), right, err);
    if (!(err < previous)) v.ok = false;
    previous = err;
    last = err;
  }
  v.ok = v.ok && last <= 5e-3;
  char buf[160];
  std::snprintf(buf, sizeof buf, "|p - 7/12| = %.3e at R = 200 (<= 5e-3), decreasing in R", last);
  v.summary = buf;
  return v;
}

// ---------------------------------------------------------------- 2

// a(0) = 0, a(1,0) = 1, a(n,n) = (4/pi) sum_{j<=n} 1/(2j-1), and harmonicity off 0.
std::map<std::pair<int, int>, double> kernel_recursion(int nmax) {
  std::map<std::pair<int, int>, double> a;
  auto get = [&](int i, int j) {
    i = std::abs(i);
    j = std::abs(j);
    return a.at({std::max(i, j), std::min(i, j)});
  };
  a[{0, 0}] = 0.0;
  a[{1, 0}] = 1.0;
  double diag = 0.0;
  for (int n = 1; n <= nmax + 1; ++n) {
    diag += 4.0 / kPi / (2.0 * n - 1.0);
    a[{n, n}] = diag;
  }
  for (int n = 1; n <= nmax; ++n) {
    for (int m = 0; m < n; ++m) a[{n + 1, m}] = 4.0 * get(n, m) - get(n - 1, m) - get(n, m + 1) - get(n, m - 1);
    a[{n + 1, n}] = 2.0 * get(n, n) - get(n, n - 1);
  }
  return a;
}

Verdict potential_kernel_values() {
  Verdict v{true, "", 60.0};
  const auto rec = kernel_recursion(3);
  double worst = 0.0;
  for (auto [p, exact] : {std::pair{Point{1, 0}, 1.0}, {Point{0, 1}, 1.0}, {Point{1, 1}, 4.0 / kPi},
                          {Point{2, 0}, 4.0 - 8.0 / kPi}}) {
    const double a = potential_kernel(p);
    const double oracle = rec.at({static_cast<int>(std::max(p[0], p[1])), static_cast<int>(std::min(p[0], p[1]))});
    const double err = std::max(std::abs(a - exact), std::abs(a - oracle));
    detail("a(%s) = %.15f  closed form %.15f  recursion %.15f", p.str().c_str(), a, exact, oracle);
    worst = std::max(worst, err);
  }
  const std::vector<Point> far{Point{50, 0}, Point{0, 75}, Point{60, 80}, Point{90, 120}, Point{150, 0}, Point{120, 160},
                               Point{200, 0}};
  const auto fit = potential_kernel_constant(far);
  double dev = 0.0;
  for (std::size_t i = 0; i < far.size(); ++i) {
    detail("|x| = %6.1f  a(x) - (2/pi) ln|x| = %.8f", far[i].norm(), fit.values[i]);
    dev = std::max(dev, std::abs(fit.values[i] - fit.constant));
  }
  detail("fitted constant %.8f, reference (2 gamma + 3 ln 2) / pi = %.8f", fit.constant,
         (2.0 * std::numbers::egamma + 3.0 * std::numbers::ln2) / kPi);
  v.ok = worst <= 1e-8 && dev <= 0.01;
  char buf[200];
  std::snprintf(buf, sizeof buf, "max error of a(e), a(1,1), a(2,0) = %.2e (<= 1e-8); constant stable to %.2e (<= 0.01)",
                worst, dev);
  v.summary = buf;
  return v;
}

// ---------------------------------------------------------------- 3

Verdict exhaustion_independence() {
  Verdict v{true, "", 600.0};
  const auto k = KillingField::indicator({Point{0, 0}}, 1.0);
  const double target = 4.0 - 8.0 / kPi;
  const std::int64_t R = 512;
  auto ball = ratio_curve(k, Exhaustion::ball(), Point{2, 0}, Point{1, 0}, {R});
  auto half = ratio_curve(k, Exhaustion::ball_plus_half_space(0, 1, {2.0, 0.0}), Point{2, 0}, Point{1, 0}, {R});
  const double rb = ball.limit(), rh = half.limit();
  const double eb = std::abs(rb / target - 1.0), eh = std::abs(rh / target - 1.0);
  const double gap = std::abs(rb / rh - 1.0);
  detail("Ball:              ratio %.10f  (%.3e from 4 - 8/pi)", rb, eb);
  detail("BallPlusHalfSpace: ratio %.10f  (%.3e from 4 - 8/pi)", rh, eh);
  v.ok = eb <= 0.02 && eh <= 0.02 && gap <= 0.01;
  char buf[200];
  std::snprintf(buf, sizeof buf, "relative errors %.2e and %.2e (<= 2%%), mutual gap %.2e (<= 1%%) at R = 512", eb, eh,
                gap);
  v.summary = buf;
  return v;
}

// ---------------------------------------------------------------- 4

Verdict counterexample() {
  Verdict v{true, "", 1800.0};
  auto rep = counterexample_experiment(1.6, 16, {32, 64, 128});
  double residual = 0.0;
  for (const auto& row : rep.rows) {
    detail("R = %4lld  rho+ = %.10e  rho- = %.10e  |rho+ rho- - 1| = %.2e  rho-/rho+ = %.4f",
           static_cast<long long>(row.R), row.rho_plus, row.rho_minus, row.symmetry_residual, row.gap);
    residual = std::max(residual, row.symmetry_residual);
  }
  const double gap = rep.rows.back().gap;
  v.ok = residual <= 1e-9 && gap >= 4.0;
  char buf[200];
  std::snprintf(buf, sizeof buf, "max |rho+ rho- - 1| = %.2e (<= 1e-9), rho-/rho+ = %.3f at R = 128 (>= 4)", residual, gap);
  v.summary = buf;
  return v;
}

// ---------------------------------------------------------------- 5

Verdict solver_correctness() {
  Verdict v{true, "", 0.0};
  struct Case {
    std::string name;
    KillingField k;
    Exhaustion ex;
    int d;
    std::int64_t R;
  };
  const std::vector<Case> cases{
      {"d=1 gambler's ruin", KillingField::indicator({Point{0}}, 0.5), Exhaustion::segment(2, 1), 1, 200},
      {"d=2 1_0 ball", KillingField::indicator({Point{0, 0}}, 1.0), Exhaustion::ball(), 2, 64},
      {"d=2 power 1.6 ball", KillingField::power_law(1.6), Exhaustion::ball(), 2, 24},
      {"d=2 power 1.2 ball", KillingField::power_law(1.2), Exhaustion::ball(), 2, 24},
      {"d=2 power 1.6 ball R=12", KillingField::power_law(1.6), Exhaustion::ball(), 2, 12},
      {"d=2 power 1.6 half-plane", KillingField::power_law(1.6), Exhaustion::ball_plus_half_space(0, -1, {2.0, 0.0}), 2,
       24},
      {"d=2 power 1.6 half-plane R=12", KillingField::power_law(1.6),
       Exhaustion::ball_plus_half_space(0, -1, {2.0, 0.0}), 2, 12},
      {"d=3 power 2.5 ball", KillingField::power_law(2.5), Exhaustion::ball(), 3, 12},
      {"d=4 logcorr 1 ball", KillingField::log_corrected(1.0), Exhaustion::ball(), 4, 8},
  };
  std::vector<SurvivalSolution> sols;
  double worst = 0.0;
  for (const auto& c : cases) {
    sols.push_back(solve_escape(c.k, c.ex, c.d, c.R));
    const double r = interior_residual(sols.back(), c.k);
    detail("%-30s R = %3lld  sweeps %7lld  interior residual %.2e", c.name.c_str(), static_cast<long long>(c.R),
           static_cast<long long>(sols.back().report.sweeps), r);
    worst = std::max(worst, r);
  }
  // Stronger killing (power 1.2 >= power 1.6 pointwise) and nested domains.
  std::size_t violations = 0;
  for (const auto& x : sols[2].domain_points()) violations += sols[3](x) > sols[2](x);
  for (const auto& x : sols[4].domain_points()) violations += sols[2](x) > sols[4](x);
  for (const auto& x : sols[6].domain_points()) violations += sols[5](x) > sols[6](x);
  detail("monotonicity violations (killing, nested balls, nested half-planes): %zu", violations);

  auto d3 = decomposition_check(KillingField::power_law(2.5), Exhaustion::ball(), 3, 24, 4, 10);
  auto d2 = decomposition_check_2d(KillingField::indicator({Point{0, 0}}, 1.0), Exhaustion::ball(), 40, {2, 5, 10, 20});
  auto d2h = decomposition_check_2d(KillingField::power_law(1.6), Exhaustion::ball_plus_half_space(0, -1, {2.0, 0.0}),
                                    24, {2, 4, 8, 16});
  detail("decomposition d=3: %.2e   d=2 ball: %.2e   d=2 half-plane: %.2e", d3.max_discrepancy, d2.max_discrepancy,
         d2h.max_discrepancy);
  const double dec = std::max({d3.max_discrepancy, d2.max_discrepancy, d2h.max_discrepancy});
  v.ok = worst <= 1e-12 && violations == 0 && dec <= 1e-8;
  char buf[200];
  std::snprintf(buf, sizeof buf, "residual %.2e (<= 1e-12), %zu monotonicity violations, decomposition %.2e (<= 1e-8)",
                worst, violations, dec);
  v.summary = buf;
  return v;
}

// ---------------------------------------------------------------- 6

Verdict hitting_formula() {
  Verdict v{true, "", 300.0};
  RandomStream pick(6, 0);
  auto draw = [&] {
    for (;;) {
      Point p{static_cast<std::int64_t>(pick.below(41)) - 20, static_cast<std::int64_t>(pick.below(41)) - 20};
      if (!p.is_origin() && p.norm() <= 20.0) return p;
    }
  };
  HittingMcOptions opt;
  opt.samples = 1'000'000;
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    Point x = draw(), y = draw();
    while (y == x) y = draw();
    RandomStream rng(6, 1 + static_cast<std::uint64_t>(i));
    const double exact = hitting_before_zero(x, y);
    const auto mc = hitting_before_zero_mc(x, y, rng, opt);
    const double z = std::abs(mc.mean - exact) / mc.stderr_;
    detail("x = (%s)  y = (%s)  closed form %.6f  MC %.6f +- %.1e  z = %.2f", x.str().c_str(), y.str().c_str(), exact,
           mc.mean, mc.stderr_, z);
    worst = std::max(worst, z);
  }
  v.ok = worst <= 3.0;
  char buf[160];
  std::snprintf(buf, sizeof buf, "largest z over 10 pairs = %.2f (<= 3)", worst);
  v.summary = buf;
  return v;
}

// ---------------------------------------------------------------- 7

Verdict snake_identity() {
  Verdict v{true, "", 1200.0};
  const auto mu = OffspringLaw::geometric_half();
  const Point x{4, 0, 0, 0};
  const auto ex = Exhaustion::ball();
  const std::int64_t R = 32;
  RandomStream snake_rng(7, 0), table_rng(7, 1), walk_rng(7, 2);
  auto snake = snake_escape_probability(x, mu, ex, R, 100'000, snake_rng);
  detail("direct snake: %.6f +- %.1e  (%llu hit before 0, %llu hit 0 first, %llu inconclusive)", snake.estimate.mean,
         snake.estimate.stderr_, static_cast<unsigned long long>(snake.hit_before_0),
         static_cast<unsigned long long>(snake.hit_0_first), static_cast<unsigned long long>(snake.inconclusive));
  auto table = build_k_table_for_walk(mu, x, ex, R, 12'000'000, table_rng);
  auto krw = krw_escape_with_table(x, table, ex, R, 100'000, walk_rng);
  detail("KRW with k table: %.6f +- %.1e (walk) +- %.1e (table)", krw.walk.mean, krw.walk.stderr_, krw.table_stderr);
  const double se = std::hypot(snake.estimate.stderr_, krw.combined_stderr());
  const double z = std::abs(snake.estimate.mean - krw.walk.mean) / se;
  v.ok = z <= 3.0;
  char buf[160];
  std::snprintf(buf, sizeof buf, "|snake - KRW| = %.2e = %.2f combined stderr (<= 3)",
                std::abs(snake.estimate.mean - krw.walk.mean), z);
  v.summary = buf;
  return v;
}

// ---------------------------------------------------------------- 8

Verdict k_band() {
  Verdict v{true, "", 0.0};
  const auto mu = OffspringLaw::geometric_half();
  std::vector<double> scaled;
  for (std::int64_t r : {8, 16, 32}) {
    RandomStream rng(8, static_cast<std::uint64_t>(r));
    auto e = estimate_k(Point{r, 0, 0, 0}, mu, 1'000'000, rng);
    const double s = static_cast<double>(r * r) * std::log(static_cast<double>(r));
    scaled.push_back(e.mean * s);
    detail("|x| = %2lld  k = %.6e +- %.1e  k |x|^2 ln|x| = %.4f", static_cast<long long>(r), e.mean, e.stderr_,
           scaled.back());
  }
  const auto [lo, hi] = std::minmax_element(scaled.begin(), scaled.end());
  const double ratio = *hi / *lo;
  v.ok = *lo > 0 && ratio <= 3.0;
  char buf[160];
  std::snprintf(buf, sizeof buf, "max/min of k |x|^2 ln|x| = %.3f (<= 3)", ratio);
  v.summary = buf;
  return v;
}

// ---------------------------------------------------------------- 9

Verdict kbm_feynman_kac() {
  Verdict v{true, "", 0.0};
  const auto cfg = KbmConfig::power_law(1.0, 0.16);
  RandomStream r1(9, 0), r2(9, 1), r3(9, 2);
  auto fk = feynman_kac_check(cfg, {4, 0}, Target::outside_ball(8), 100'000, r1);
  const double z1 = z_score(fk.indicator, fk.weight);
  detail("survival indicator %.5f +- %.1e, exp(-hazard) weight %.5f +- %.1e, z = %.2f, timed out %llu",
         fk.indicator.mean, fk.indicator.stderr_, fk.weight.mean, fk.weight.stderr_, z1,
         static_cast<unsigned long long>(fk.timed_out));
  const double lambda = 0.5, t = 2.0;
  auto ce = survival_to_time(KbmConfig::constant(lambda, 0.01), {3, 0}, t, 100'000, r2);
  const double z2 = std::abs(ce.mean - std::exp(-lambda * t)) / ce.stderr_;
  detail("constant killing: P[alive at t = 2] = %.5f +- %.1e against exp(-1) = %.5f, z = %.2f", ce.mean, ce.stderr_,
         std::exp(-lambda * t), z2);
  // Missed crossings between grid times delay every stage's exit, and the
  // product compounds that delay, so the chain runs with the bridge test.
  auto bridged = cfg;
  bridged.bridge = true;
  auto ch = chained_survival(bridged, 4, 2, 400'000, r3);
  const double z3 = z_score(ch.direct, ch.chained);
  detail("annulus 4 -> 16: direct %.4e +- %.1e, chained %.4e +- %.1e, z = %.2f", ch.direct.mean, ch.direct.stderr_,
         ch.chained.mean, ch.chained.stderr_, z3);
  v.ok = z1 <= 3.0 && z2 <= 3.0 && z3 <= 3.0 && fk.timed_out == 0;
  char buf[160];
  std::snprintf(buf, sizeof buf, "z = %.2f (Feynman-Kac), %.2f (exponential law), %.2f (chain), all <= 3", z1, z2, z3);
  v.summary = buf;
  return v;
}

// ---------------------------------------------------------------- 10

Verdict kbm_directional() {
  Verdict v{true, "", 1800.0};
  auto cfg = KbmConfig::power_law(1.0, 0.64);
  cfg.bridge = true;
  SplittingOptions opt;
  opt.particles = 4000;
  opt.replicates = 40;
  RandomStream rp(10, 0), rm(10, 1), rr(10, 2);
  auto plus = directional_escape(cfg, {8, 0}, 8, 3, Side::Plus, rp, opt);
  auto minus = directional_escape(cfg, {8, 0}, 8, 3, Side::Minus, rm, opt);
  auto mirror = directional_escape(cfg, {-8, 0}, 8, 3, Side::Plus, rr, opt);
  detail("plus side from (8,0):  %.4e +- %.1e", plus.estimate.mean, plus.estimate.stderr_);
  detail("minus side from (8,0): %.4e +- %.1e", minus.estimate.mean, minus.estimate.stderr_);
  detail("plus side from (-8,0): %.4e +- %.1e", mirror.estimate.mean, mirror.estimate.stderr_);
  const double ratio = plus.estimate.mean / minus.estimate.mean;
  const double z = z_score(minus.estimate, mirror.estimate);
  v.ok = ratio >= 10.0 && z <= 3.0;
  char buf[160];
  std::snprintf(buf, sizeof buf, "plus/minus = %.2f (>= 10), mirror z = %.2f (<= 3)", ratio, z);
  v.summary = buf;
  return v;
}

// ---------------------------------------------------------------- 11

Verdict trapping() {
  Verdict v{true, "", 0.0};
  struct Case {
    std::string name;
    KillingField k;
    int d;
    Trapping expected;
  };
  const std::vector<Case> cases{
      {"d=3 power 3", KillingField::power_law(3.0), 3, Trapping::NotTrapped},
      {"d=4 logcorr 1", KillingField::log_corrected(1.0), 4, Trapping::Trapped},
      {"d=2 1_0", KillingField::indicator({Point{0, 0}}, 1.0), 2, Trapping::Trapped},
      {"d=2 (1/2) 1_(5,-3)", KillingField::indicator({Point{5, -3}}, 0.5), 2, Trapping::Trapped},
      {"d=2 power 3", KillingField::power_law(3.0), 2, Trapping::Trapped},
      {"d=2 logcorr 1", KillingField::log_corrected(1.0), 2, Trapping::Trapped},
  };
  int wrong = 0;
  for (const auto& c : cases) {
    auto rep = trapping_classifier(c.k, c.d);
    detail("%-22s %-12s (%s)", c.name.c_str(), to_string(rep.verdict).c_str(), rep.reason.c_str());
    wrong += rep.verdict != c.expected;
  }
  v.ok = wrong == 0;
  v.summary = std::to_string(cases.size() - static_cast<std::size_t>(wrong)) + " of " + std::to_string(cases.size()) +
              " classifications as expected";
  return v;
}

const std::vector<std::pair<std::string, std::function<Verdict()>>>& criteria() {
  static const std::vector<std::pair<std::string, std::function<Verdict()>>> c{
      {"gambler's ruin first step", gamblers_ruin},
      {"potential kernel", potential_kernel_values},
      {"exhaustion independence", exhaustion_independence},
      {"mirrored half-plane counterexample", counterexample},
      {"solver correctness", solver_correctness},
      {"hitting formula", hitting_formula},
      {"snake and killed walk", snake_identity},
      {"k band in d = 4", k_band},
      {"killed Brownian motion identities", kbm_feynman_kac},
      {"killed Brownian motion directional asymmetry", kbm_directional},
      {"trapping classifier", trapping},
  };
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> which;
  if (argc < 2 || std::string(argv[1]) == "all") {
    for (int i = 1; i <= static_cast<int>(criteria().size()); ++i) which.push_back(i);
  } else {
    for (int a = 1; a < argc; ++a) which.push_back(std::atoi(argv[a]));
  }
  int failures = 0;
  for (int n : which) {
    if (n < 1 || n > static_cast<int>(criteria().size())) {
      std::fprintf(stderr, "usage: krw_acceptance [all | 1..%zu ...]\n", criteria().size());
      return 2;
    }
    const auto& [name, fn] = criteria()[static_cast<std::size_t>(n - 1)];
    std::printf("criterion %d: %s\n", n, name.c_str());
    std::fflush(stdout);
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v.ok = false;
      v.summary = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string timing = std::to_string(secs).substr(0, std::to_string(secs).find('.') + 3) + " s";
    if (v.budget > 0) {
      timing += " (limit " + std::to_string(static_cast<long long>(v.budget)) + " s)";
      if (secs > v.budget) v.ok = false;
    }
    std::printf("%s %d %s: %s; %s\n", v.ok ? "PASS" : "FAIL", n, name.c_str(), v.summary.c_str(), timing.c_str());
    std::fflush(stdout);
    failures += !v.ok;
  }
  return failures == 0 ? 0 : 1;
}
