#include <cmath>
#include <numbers>

#include "doctest.h"
#include "krw/kbm.hpp"

using namespace krw;

TEST_SUITE("kbm") {
  TEST_CASE("configuration") {
    CHECK_THROWS(KbmConfig::power_law(0.0, 0.1));
    CHECK_THROWS(KbmConfig::power_law(2.0, 0.1));
    CHECK_THROWS(KbmConfig::power_law(1.0, 0.0));
    CHECK_THROWS(KbmConfig::constant(-1.0, 0.1));
    for (double a : {0.3, 1.0, 1.6, 1.9}) {
      auto c = KbmConfig::power_law(a, 0.1);
      CHECK(2.0 - a - 2.0 * c.beta() == doctest::Approx(2.0 * c.beta()).epsilon(1e-15));
    }
    auto c = KbmConfig::power_law(1.0, 0.16);
    CHECK(c.rate(0.5, 0.5) == 1.0);
    CHECK(c.rate(3.0, 4.0) == doctest::Approx(0.2));
    CHECK_NOTHROW(c.check_resolution(4.0));
    CHECK_THROWS(c.check_resolution(2.0));
  }

  TEST_CASE("target distances") {
    auto ball = Target::outside_ball(10);
    CHECK(ball.distance({3, 4}) == doctest::Approx(5.0));
    auto plus = Target::outside_plus(10);
    CHECK(plus.distance({4, 0}) == doctest::Approx(6.0));
    CHECK(plus.distance({11, 0}) <= 0.0);
    CHECK(plus.distance({-11, 0}) == doctest::Approx(std::hypot(11.0, 10.0)));
    CHECK(plus.distance({-3, 12}) == doctest::Approx(3.0));
    auto minus = Target::outside_minus(10);
    CHECK(minus.distance({-4, 1}) == doctest::Approx(plus.distance({4, 1})));
    CHECK(minus.distance({-11, 0}) <= 0.0);
  }

  TEST_CASE("zero killing never dies and accumulates clock and winding") {
    RandomStream rng(31, 0);
    auto cfg = KbmConfig::zero(0.01);
    for (int i = 0; i < 2000; ++i) {
      auto p = simulate_until(cfg, {1, 0}, Target::outside_ball(4), rng);
      REQUIRE(p.status == KbmPath::Status::Escaped);
      CHECK(p.hazard == 0.0);
      CHECK(p.clock > 0.0);
      CHECK(std::hypot(p.position[0], p.position[1]) >= 4.0);
      CHECK(std::abs(std::remainder(p.winding - std::atan2(p.position[1], p.position[0]), 2 * std::numbers::pi)) <=
            1e-9);
    }
    // Starts next to the origin resolve the dive and come back out.
    auto p = simulate_until(cfg, {1e-6, 0}, Target::outside_ball(1), rng);
    CHECK(p.status == KbmPath::Status::Escaped);
    CHECK(std::isfinite(p.winding));
    cfg.max_time = 1.0;
    CHECK(simulate_until(cfg, {1, 0}, Target::outside_ball(1000), rng).status == KbmPath::Status::TimedOut);
  }

  TEST_CASE("constant killing gives an exponential clock") {
    RandomStream rng(32, 0);
    const double lambda = 0.5, t = 2.0;
    auto e = survival_to_time(KbmConfig::constant(lambda, 0.01), {3, 0}, t, 100000, rng);
    CHECK(std::abs(e.mean - std::exp(-lambda * t)) <= 3 * e.stderr_);
  }

  TEST_CASE("Feynman-Kac weight and survival indicator agree") {
    RandomStream rng(33, 0);
    auto rep = feynman_kac_check(KbmConfig::power_law(1.0, 0.16), {4, 0}, Target::outside_ball(8), 100000, rng);
    CHECK(rep.timed_out == 0);
    CHECK(z_score(rep.indicator, rep.weight) <= 3.0);
    CHECK(rep.weight.stderr_ < rep.indicator.stderr_);
  }

  TEST_CASE("annulus survival scales with r^(2 beta)") {
    RandomStream rng(34, 0);
    auto cfg = KbmConfig::power_law(1.0, 0.16);
    std::vector<double> x, y;
    for (double r : {4.0, 8.0, 16.0, 32.0}) {
      auto e = annulus_survival(cfg, r, 2.0, 20000, rng);
      REQUIRE(e.mean > 0.0);
      x.push_back(std::pow(r, 2 * cfg.beta()));
      y.push_back(-std::log(e.mean));
    }
    auto fit = fit_line(x, y);
    CHECK(fit.correlation >= 0.98);
    CHECK(fit.slope > 0.0);

    auto weak = annulus_survival(KbmConfig::power_law(1.9, 0.16), 16, 2.0, 20000, rng);
    auto strong = annulus_survival(KbmConfig::power_law(1.2, 0.16), 16, 2.0, 20000, rng);
    CHECK(weak.mean > strong.mean);
    CHECK_THROWS(annulus_survival(cfg, 2.0, 2.0, 100, rng));
  }

  TEST_CASE("chained annulus product matches the direct estimate") {
    RandomStream rng(35, 0);
    auto rep = chained_survival(KbmConfig::power_law(1.0, 0.16), 4, 2, 100000, rng);
    REQUIRE(rep.factors.size() == 2);
    CHECK(rep.chained.mean == doctest::Approx(rep.factors[0].mean * rep.factors[1].mean));
    CHECK(z_score(rep.direct, rep.chained) <= 3.0);
  }

  TEST_CASE("angular concentration") {
    RandomStream rng(36, 0);
    auto cfg = KbmConfig::power_law(1.0, 0.16);
    auto r8 = angular_concentration(cfg, 8, 40000, rng);
    auto r32 = angular_concentration(cfg, 32, 200000, rng);
    REQUIRE_FALSE(r8.inconclusive);
    REQUIRE_FALSE(r32.inconclusive);
    CHECK(r8.threshold == doctest::Approx(std::pow(8.0, -0.125)));
    CHECK(std::abs(r8.mean_winding.mean) <= 3 * r8.mean_winding.stderr_);
    CHECK(std::abs(r32.mean_winding.mean) <= 3 * r32.mean_winding.stderr_);
    CHECK(r32.exceedance.mean <= r8.exceedance.mean + 2 * combined_stderr(r8.exceedance, r32.exceedance));
    auto few = angular_concentration(cfg, 16, 50, rng);
    CHECK(few.inconclusive);
  }

  TEST_CASE("skew-product angular law") {
    RandomStream rng(37, 0);
    auto rep = skew_product_check(KbmConfig::power_law(1.0, 0.16), 8, 20000, rng);
    CHECK(rep.direct.size() >= 100);
    CHECK(rep.skew.size() >= 100);
    CHECK(rep.ks < rep.critical);
  }

  TEST_CASE("directional escape") {
    RandomStream rng(38, 0);
    auto cfg = KbmConfig::power_law(1.0, 0.16);
    cfg.bridge = true;
    SplittingOptions opt;
    opt.particles = 1000;
    opt.replicates = 20;
    auto plus = directional_escape(cfg, {4, 0}, 4, 2, Side::Plus, rng, opt);
    auto minus = directional_escape(cfg, {4, 0}, 4, 2, Side::Minus, rng, opt);
    auto mirror = directional_escape(cfg, {-4, 0}, 4, 2, Side::Plus, rng, opt);
    auto sector = ball_exit_in_sector(cfg, 4, 16, std::numbers::pi / 4, rng, opt);
    CHECK(plus.levels > 0);
    CHECK(plus.estimate.mean > minus.estimate.mean);
    CHECK(z_score(minus.estimate, mirror.estimate) <= 3.0);
    CHECK(plus.estimate.mean >= sector.estimate.mean - combined_stderr(plus.estimate, sector.estimate));

    // Splitting agrees with direct simulation where the event is not rare.
    auto direct = escape_probability(cfg, {4, 0}, Target::outside_plus(8), 100000, rng);
    auto split = splitting_escape(cfg, {4, 0}, Target::outside_plus(8), rng, opt);
    CHECK(z_score(direct, split.estimate) <= 3.0);
  }

  TEST_CASE("time-step halving") {
    RandomStream rng(39, 0);
    auto rep = dt_halving_check(KbmConfig::power_law(1.0, 0.16), 4, 50000, rng);
    CHECK(rep.dts[1] == rep.dts[0] / 2);
    CHECK(rep.consistent);
  }

  TEST_CASE("exit-time large deviation bound") {
    RandomStream rng(40, 0);
    for (auto [r, t] : {std::pair{1.0, 1.0}, {2.0, 1.0}, {4.0, 1.0}, {2.0, 0.25}, {4.0, 4.0}}) {
      auto e = exit_before(r, t, 1e-3, 20000, rng);
      CHECK(e.mean <= 4 * std::exp(-r * r / (8 * t)) + 3 * e.stderr_);
    }
  }

  TEST_CASE("reflection principle for the running maximum") {
    RandomStream rng(41, 0);
    for (auto [x, t] : {std::pair{1.0, 1.0}, {0.5, 2.0}, {2.0, 1.0}}) {
      auto e = running_max_exceeds(x, t, 1e-2, 100000, rng);
      CHECK(std::abs(e.mean - std::erfc(x / std::sqrt(2 * t))) <= 3 * e.stderr_);
    }
  }
}
