#include "krw/kbm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "krw/parallel.hpp"

namespace krw {

namespace {

constexpr std::uint64_t kBlock = 1024;
// Paths run without a death threshold carry weight exp(-hazard) up to this
// hazard; beyond it they carry exp(-kRoulette) and are stopped at kRoulette + eta
// with eta ~ Exp(1), which keeps the weight unbiased and the run time bounded.
constexpr double kRoulette = 3.0;
// Below kDiveFloor the return to kDiveReturn is sampled through the skew product:
// log|B| is a Brownian motion in the clock, so the clock to climb a = log(ratio) is
// a^2 / Z^2 and the winding gained is sqrt(clock) * Z'. The elapsed time, of order
// kDiveReturn^2, is taken at its mean (kDiveReturn^2 - |x|^2) / 2.
constexpr double kDiveFloor = 1e-3;
constexpr double kDiveReturn = 2e-3;

}  // namespace

KbmConfig KbmConfig::power_law(double alpha, double dt) {
  KbmConfig c;
  c.alpha = alpha;
  c.dt = dt;
  c.validate();
  return c;
}

KbmConfig KbmConfig::zero(double dt) {
  KbmConfig c;
  c.killing = Killing::Zero;
  c.dt = dt;
  c.validate();
  return c;
}

KbmConfig KbmConfig::constant(double lambda, double dt) {
  KbmConfig c;
  c.killing = Killing::Constant;
  c.lambda = lambda;
  c.dt = dt;
  c.validate();
  return c;
}

double KbmConfig::rate(double x, double y) const {
  switch (killing) {
    case Killing::Zero:
      return 0.0;
    case Killing::Constant:
      return lambda;
    case Killing::PowerLaw:
      break;
  }
  const double r2 = x * x + y * y;
  if (r2 <= 1.0) return 1.0;
  if (alpha == 1.0) return 1.0 / std::sqrt(r2);
  return std::pow(r2, -0.5 * alpha);
}

void KbmConfig::validate() const {
  if (killing == Killing::PowerLaw && !(alpha > 0.0 && alpha < 2.0))
    throw std::invalid_argument("KBM killing exponent alpha must lie in (0, 2)");
  if (killing == Killing::Constant && !(lambda >= 0.0))
    throw std::invalid_argument("constant killing rate must be non-negative");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("KBM time step must be positive");
  if (!(max_time > 0.0)) throw std::invalid_argument("KBM max_time must be positive");
}

void KbmConfig::check_resolution(double inner_radius) const {
  if (dt > 1e-2 * inner_radius * inner_radius * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "KBM time step " << dt << " exceeds 1e-2 * r^2 = " << 1e-2 * inner_radius * inner_radius
       << " for inner radius " << inner_radius;
    throw std::invalid_argument(os.str());
  }
}

std::string KbmConfig::describe() const {
  std::ostringstream os;
  switch (killing) {
    case Killing::Zero:
      os << "zero";
      break;
    case Killing::Constant:
      os << "constant:" << lambda;
      break;
    case Killing::PowerLaw:
      os << "power:" << alpha;
      break;
  }
  os << " dt=" << dt << (bridge ? " bridge" : "");
  return os.str();
}

Target Target::outside_ball(double R) {
  return {[R](const Vec2& x) { return R - std::hypot(x[0], x[1]); }, "outside_ball"};
}

namespace {

// Distance to {|y| >= R, y_1 >= 0}, non-positive inside.
double distance_right(double x1, double x2, double R) {
  if (x1 >= 0.0) return R - std::hypot(x1, x2);
  const double a2 = std::fabs(x2);
  if (a2 >= R) return -x1;
  return std::hypot(x1, R - a2);
}

}  // namespace

Target Target::outside_plus(double R) {
  return {[R](const Vec2& x) { return distance_right(x[0], x[1], R); }, "outside_plus"};
}

Target Target::outside_minus(double R) {
  return {[R](const Vec2& x) { return distance_right(-x[0], x[1], R); }, "outside_minus"};
}

namespace {

struct AdvanceOptions {
  bool stop_at_death = true;
  double level = 0.0;  // also stop on the first grid time with distance <= level
  double roulette = kRoulette;
  double max_time = 0.0;
};

// Core Euler loop. Escaped means the target was entered (on the grid or, with
// the bridge test, between grid times); reaching the level alone reports
// Escaped with done == false.
struct Advance {
  KbmPath path;
  bool done = false;    // target itself entered
  double weight = 0.0;  // unbiased for exp(-hazard) at the stop, 0 after the roulette
};

Advance advance(const KbmConfig& cfg, const Vec2& start, const Target& target, RandomStream& rng,
                const AdvanceOptions& opt) {
  Advance out;
  KbmPath& p = out.path;
  p.position = start;
  p.xi = rng.exponential();
  double d = target.distance(start);
  out.weight = 1.0;
  if (d <= 0.0) {
    p.status = KbmPath::Status::Escaped;
    out.done = true;
    return out;
  }
  if (d <= opt.level) {
    p.status = KbmPath::Status::Escaped;
    return out;
  }
  double x = start[0], y = start[1];
  double r2 = x * x + y * y;
  double k = cfg.rate(x, y);
  const double cap_time = opt.max_time > 0.0 ? opt.max_time : cfg.max_time;
  const double roulette_stop = opt.roulette + rng.exponential();
  const double hazard_stop = opt.stop_at_death ? std::numeric_limits<double>::infinity()
                                               : std::max(p.xi, roulette_stop);
  while (true) {
    if (r2 < kDiveFloor * kDiveFloor) {
      const double rr = std::sqrt(r2);
      const double a = std::log(kDiveReturn / std::max(rr, 1e-300));
      const double z = rng.normal();
      const double c = a * a / (z * z);
      const double dtheta = std::sqrt(c) * rng.normal();
      const double theta = std::atan2(y, x) + dtheta;
      const double dt_mean = 0.5 * (kDiveReturn * kDiveReturn - r2);
      p.hazard += dt_mean * k;
      p.time += dt_mean;
      p.clock += c;
      p.winding += dtheta;
      x = kDiveReturn * std::cos(theta);
      y = kDiveReturn * std::sin(theta);
      r2 = kDiveReturn * kDiveReturn;
      k = cfg.rate(x, y);
      d = target.distance({x, y});
      p.position = {x, y};
      continue;
    }
    double h = std::min(cfg.dt, 1e-2 * r2);
    if (p.time + h > cap_time) h = cap_time - p.time;
    if (h <= 0.0) {
      p.status = KbmPath::Status::TimedOut;
      break;
    }
    const double s = std::sqrt(h);
    const double nx = x + s * rng.normal(), ny = y + s * rng.normal();
    const double nr2 = nx * nx + ny * ny;
    const double nk = cfg.rate(nx, ny);
    p.hazard += 0.5 * h * (k + nk);
    p.clock += 0.5 * h * (1.0 / r2 + 1.0 / nr2);
    const double dtheta = std::atan2(x * ny - y * nx, x * nx + y * ny);
    if (!(std::fabs(dtheta) < 0.5 * std::numbers::pi))
      throw std::runtime_error("KBM step turned by more than pi/2 around the origin; time step too coarse");
    p.winding += dtheta;
    p.time += h;
    ++p.steps;
    const double nd = target.distance({nx, ny});
    x = nx;
    y = ny;
    r2 = nr2;
    k = nk;
    p.position = {x, y};
    bool entered = nd <= 0.0;
    if (!entered && cfg.bridge) entered = rng.uniform() < std::exp(-2.0 * d * nd / h);
    d = nd;
    if (entered) {
      out.done = true;
      p.status = p.hazard < p.xi ? KbmPath::Status::Escaped : KbmPath::Status::Died;
      break;
    }
    if (opt.stop_at_death && p.hazard >= p.xi) {
      p.status = KbmPath::Status::Died;
      break;
    }
    if (p.hazard >= hazard_stop) {
      p.status = KbmPath::Status::Died;
      break;
    }
    if (d <= opt.level) {
      p.status = p.hazard < p.xi ? KbmPath::Status::Escaped : KbmPath::Status::Died;
      break;
    }
  }
  if (p.status == KbmPath::Status::TimedOut || p.hazard >= roulette_stop)
    out.weight = 0.0;
  else
    out.weight = std::exp(-std::min(p.hazard, opt.roulette));
  return out;
}

// Runs fn(stream, stats) over blocks of paths and merges the per-block stats in order.
template <class Fn>
std::vector<RunningStats> run_blocks(std::uint64_t samples, std::size_t outputs, RandomStream& rng, Fn fn) {
  if (samples == 0) throw std::invalid_argument("Monte Carlo run needs at least one sample");
  const std::uint64_t blocks = (samples + kBlock - 1) / kBlock;
  const std::uint64_t salt = rng.draw_salt();
  std::vector<std::vector<RunningStats>> per(blocks, std::vector<RunningStats>(outputs));
  parallel_for(blocks, [&](std::size_t b) {
    RandomStream s = rng.substream(salt, b);
    const std::uint64_t n = std::min(kBlock, samples - b * kBlock);
    for (std::uint64_t i = 0; i < n; ++i) fn(s, per[b]);
  });
  std::vector<RunningStats> total(outputs);
  for (auto& blk : per)
    for (std::size_t j = 0; j < outputs; ++j) total[j].merge(blk[j]);
  return total;
}

Vec2 on_axis(double r) { return {r, 0.0}; }

}  // namespace

KbmPath simulate_until(const KbmConfig& cfg, const Vec2& start, const Target& target, RandomStream& rng,
                       bool stop_at_death) {
  cfg.validate();
  AdvanceOptions opt;
  opt.stop_at_death = stop_at_death;
  return advance(cfg, start, target, rng, opt).path;
}

Estimate escape_probability(const KbmConfig& cfg, const Vec2& start, const Target& target, std::uint64_t samples,
                            RandomStream& rng) {
  cfg.validate();
  auto st = run_blocks(samples, 1, rng, [&](RandomStream& s, std::vector<RunningStats>& acc) {
    auto a = advance(cfg, start, target, s, {});
    acc[0].add(a.path.status == KbmPath::Status::Escaped ? 1.0 : 0.0);
  });
  return st[0].estimate(rng.seed(), rng.stream_id());
}

FeynmanKacReport feynman_kac_check(const KbmConfig& cfg, const Vec2& start, const Target& target,
                                   std::uint64_t samples, RandomStream& rng) {
  cfg.validate();
  AdvanceOptions opt;
  opt.stop_at_death = false;
  auto st = run_blocks(samples, 3, rng, [&](RandomStream& s, std::vector<RunningStats>& acc) {
    auto a = advance(cfg, start, target, s, opt);
    const bool entered = a.done;
    acc[0].add(entered && a.path.hazard < a.path.xi ? 1.0 : 0.0);
    acc[1].add(entered ? a.weight : 0.0);
    acc[2].add(a.path.status == KbmPath::Status::TimedOut ? 1.0 : 0.0);
  });
  FeynmanKacReport rep;
  rep.indicator = st[0].estimate(rng.seed(), rng.stream_id());
  rep.weight = st[1].estimate(rng.seed(), rng.stream_id());
  rep.timed_out = static_cast<std::uint64_t>(std::llround(st[2].mean() * static_cast<double>(samples)));
  return rep;
}

Estimate survival_to_time(const KbmConfig& cfg, const Vec2& start, double t, std::uint64_t samples,
                          RandomStream& rng) {
  cfg.validate();
  if (!(t > 0.0)) throw std::invalid_argument("survival time must be positive");
  const Target never{[](const Vec2&) { return std::numeric_limits<double>::infinity(); }, "never"};
  AdvanceOptions opt;
  opt.max_time = t;
  auto st = run_blocks(samples, 1, rng, [&](RandomStream& s, std::vector<RunningStats>& acc) {
    auto a = advance(cfg, start, never, s, opt);
    acc[0].add(a.path.status == KbmPath::Status::TimedOut ? 1.0 : 0.0);
  });
  return st[0].estimate(rng.seed(), rng.stream_id());
}

Estimate annulus_survival(const KbmConfig& cfg, double r, double factor, std::uint64_t samples, RandomStream& rng,
                          const AnnulusOptions& opt) {
  if (!(r > 0.0) || !(factor > 1.0)) throw std::invalid_argument("annulus needs r > 0 and factor > 1");
  cfg.check_resolution(r);
  if (r < opt.chain_from || opt.chain_steps <= 1)
    return escape_probability(cfg, on_axis(r), Target::outside_ball(factor * r), samples, rng);
  std::vector<Estimate> parts;
  const double step = std::pow(factor, 1.0 / opt.chain_steps);
  double a = r;
  for (int i = 0; i < opt.chain_steps; ++i) {
    const double b = i + 1 == opt.chain_steps ? factor * r : a * step;
    parts.push_back(escape_probability(cfg, on_axis(a), Target::outside_ball(b), samples, rng));
    a = b;
  }
  Estimate e = product(parts);
  e.note = "product of " + std::to_string(opt.chain_steps) + " sub-annuli";
  return e;
}

ChainReport chained_survival(const KbmConfig& cfg, double r, int n, std::uint64_t samples, RandomStream& rng) {
  if (n < 1) throw std::invalid_argument("chained survival needs n >= 1");
  cfg.check_resolution(r);
  ChainReport rep;
  rep.direct = escape_probability(cfg, on_axis(r), Target::outside_ball(std::ldexp(r, n)), samples, rng);
  for (int i = 0; i < n; ++i) {
    const double a = std::ldexp(r, i);
    rep.factors.push_back(escape_probability(cfg, on_axis(a), Target::outside_ball(2.0 * a), samples, rng));
  }
  rep.chained = product(rep.factors);
  return rep;
}

namespace {

// Windings (and clocks) of the paths from (r,0) that survive to radius 2r.
void surviving_windings(const KbmConfig& cfg, double r, std::uint64_t samples, RandomStream& rng,
                        std::vector<double>& winding, std::vector<double>& clock) {
  cfg.check_resolution(r);
  if (samples == 0) throw std::invalid_argument("Monte Carlo run needs at least one sample");
  const Target target = Target::outside_ball(2.0 * r);
  const std::uint64_t blocks = (samples + kBlock - 1) / kBlock;
  const std::uint64_t salt = rng.draw_salt();
  std::vector<std::vector<double>> w(blocks), c(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    RandomStream s = rng.substream(salt, b);
    const std::uint64_t n = std::min(kBlock, samples - b * kBlock);
    for (std::uint64_t i = 0; i < n; ++i) {
      auto a = advance(cfg, on_axis(r), target, s, {});
      if (a.path.status != KbmPath::Status::Escaped) continue;
      w[b].push_back(a.path.winding);
      c[b].push_back(a.path.clock);
    }
  });
  for (std::uint64_t b = 0; b < blocks; ++b) {
    winding.insert(winding.end(), w[b].begin(), w[b].end());
    clock.insert(clock.end(), c[b].begin(), c[b].end());
  }
}

}  // namespace

AngularReport angular_concentration(const KbmConfig& cfg, double r, std::uint64_t samples, RandomStream& rng) {
  AngularReport rep;
  rep.threshold = std::pow(r, -cfg.beta() / 2.0);
  std::vector<double> clock;
  surviving_windings(cfg, r, samples, rng, rep.windings, clock);
  rep.survivors = rep.windings.size();
  rep.inconclusive = rep.survivors < 100;
  RunningStats exceed, mean;
  for (double w : rep.windings) {
    exceed.add(std::fabs(w) >= rep.threshold ? 1.0 : 0.0);
    mean.add(w);
  }
  rep.exceedance = exceed.estimate(rng.seed(), rng.stream_id());
  rep.mean_winding = mean.estimate(rng.seed(), rng.stream_id());
  if (rep.inconclusive) rep.exceedance.note = "inconclusive: fewer than 100 survivors";
  return rep;
}

SkewProductReport skew_product_check(const KbmConfig& cfg, double r, std::uint64_t samples, RandomStream& rng) {
  SkewProductReport rep;
  std::vector<double> unused, clock;
  surviving_windings(cfg, r, samples, rng, rep.direct, unused);
  std::vector<double> other;
  surviving_windings(cfg, r, samples, rng, other, clock);
  rep.skew.reserve(clock.size());
  for (double c : clock) rep.skew.push_back(std::sqrt(c) * rng.normal());
  if (rep.direct.empty() || rep.skew.empty()) throw std::runtime_error("skew-product check: no surviving paths");
  rep.ks = ks_statistic(rep.direct, rep.skew);
  rep.critical = ks_critical(rep.direct.size(), rep.skew.size());
  return rep;
}

SplittingEstimate splitting_escape(const KbmConfig& cfg, const Vec2& start, const Target& target,
                                   RandomStream& rng, const SplittingOptions& opt,
                                   const std::function<bool(const Vec2&)>& accept) {
  cfg.validate();
  if (opt.particles == 0 || opt.replicates < 2) throw std::invalid_argument("splitting needs particles and >= 2 replicates");
  if (!(opt.level_spacing > 0.0)) throw std::invalid_argument("splitting level spacing must be positive");
  const double d0 = target.distance(start);
  SplittingEstimate out;
  if (d0 <= 0.0) {
    const double v = !accept || accept(start) ? 1.0 : 0.0;
    out.estimate.mean = v;
    out.estimate.n = opt.replicates;
    out.replicate_values.assign(opt.replicates, v);
    return out;
  }
  const std::size_t L = static_cast<std::size_t>(std::ceil(d0 / opt.level_spacing));
  out.levels = L;
  const std::uint64_t salt = rng.draw_salt();
  out.replicate_values.assign(opt.replicates, 0.0);
  parallel_for(opt.replicates, [&](std::size_t rep) {
    RandomStream s = rng.substream(salt, rep);
    const std::size_t N = opt.particles;
    std::vector<Vec2> pos(N, start), next(N);
    std::vector<char> done(N, 0), next_done(N);
    std::vector<double> w(N), cdf(N);
    double log_z = 0.0;
    AdvanceOptions ao;
    ao.stop_at_death = false;
    for (std::size_t j = 1; j <= L; ++j) {
      ao.level = j == L ? 0.0 : d0 * (1.0 - static_cast<double>(j) / static_cast<double>(L));
      double sum = 0.0;
      for (std::size_t i = 0; i < N; ++i) {
        if (done[i]) {
          w[i] = 1.0;
        } else {
          auto a = advance(cfg, pos[i], target, s, ao);
          const bool reached = a.done || target.distance(a.path.position) <= ao.level;
          w[i] = reached ? a.weight : 0.0;
          pos[i] = a.path.position;
          done[i] = a.done ? 1 : 0;
        }
        if (j == L && accept && !accept(pos[i])) w[i] = 0.0;
        sum += w[i];
        cdf[i] = sum;
      }
      if (sum <= 0.0) {
        log_z = -std::numeric_limits<double>::infinity();
        break;
      }
      log_z += std::log(sum / static_cast<double>(N));
      // Systematic resampling in proportion to the weights.
      const double u0 = s.uniform();
      std::size_t k = 0;
      for (std::size_t i = 0; i < N; ++i) {
        const double u = (u0 + static_cast<double>(i)) / static_cast<double>(N) * sum;
        while (k + 1 < N && cdf[k] <= u) ++k;
        next[i] = pos[k];
        next_done[i] = done[k];
      }
      pos.swap(next);
      done.swap(next_done);
    }
    out.replicate_values[rep] = std::exp(log_z);
  });
  RunningStats st;
  for (double v : out.replicate_values) st.add(v);
  out.estimate = st.estimate(rng.seed(), rng.stream_id());
  out.estimate.note = std::to_string(L) + " levels, " + std::to_string(opt.particles) + " particles";
  return out;
}

SplittingEstimate directional_escape(const KbmConfig& cfg, const Vec2& start, double r, int n, Side side,
                                     RandomStream& rng, const SplittingOptions& opt) {
  if (n < 1) throw std::invalid_argument("directional escape needs n >= 1");
  cfg.check_resolution(r);
  const double R = std::ldexp(r, n);
  return splitting_escape(cfg, start, side == Side::Plus ? Target::outside_plus(R) : Target::outside_minus(R), rng,
                          opt);
}

SplittingEstimate ball_exit_in_sector(const KbmConfig& cfg, double r, double R, double max_angle, RandomStream& rng,
                                      const SplittingOptions& opt) {
  cfg.check_resolution(r);
  return splitting_escape(cfg, on_axis(r), Target::outside_ball(R), rng, opt, [max_angle](const Vec2& x) {
    return std::fabs(std::atan2(x[1], x[0])) <= max_angle;
  });
}

Estimate exit_before(double r, double t, double dt, std::uint64_t samples, RandomStream& rng) {
  if (!(r > 0.0) || !(t > 0.0) || !(dt > 0.0)) throw std::invalid_argument("exit_before needs r, t, dt > 0");
  auto st = run_blocks(samples, 1, rng, [&](RandomStream& s, std::vector<RunningStats>& acc) {
    double x = 0.0, y = 0.0, time = 0.0, d = r;
    bool out = false;
    while (time < t && !out) {
      const double h = std::min(dt, t - time);
      const double sh = std::sqrt(h);
      x += sh * s.normal();
      y += sh * s.normal();
      time += h;
      const double nd = r - std::hypot(x, y);
      out = nd <= 0.0 || s.uniform() < std::exp(-2.0 * d * nd / h);
      d = nd;
    }
    acc[0].add(out ? 1.0 : 0.0);
  });
  return st[0].estimate(rng.seed(), rng.stream_id());
}

Estimate running_max_exceeds(double x, double t, double dt, std::uint64_t samples, RandomStream& rng) {
  if (!(x > 0.0) || !(t > 0.0) || !(dt > 0.0)) throw std::invalid_argument("running_max_exceeds needs x, t, dt > 0");
  auto st = run_blocks(samples, 1, rng, [&](RandomStream& s, std::vector<RunningStats>& acc) {
    double w = 0.0, time = 0.0;
    bool hit = false;
    while (time < t && !hit) {
      const double h = std::min(dt, t - time);
      const double nw = w + std::sqrt(h) * s.normal();
      time += h;
      hit = nw >= x || s.uniform() < std::exp(-2.0 * (x - w) * (x - nw) / h);
      w = nw;
    }
    acc[0].add(hit ? 1.0 : 0.0);
  });
  return st[0].estimate(rng.seed(), rng.stream_id());
}

DtHalvingReport dt_halving_check(const KbmConfig& cfg, double r, std::uint64_t samples, RandomStream& rng) {
  DtHalvingReport rep;
  AnnulusOptions direct;
  direct.chain_steps = 1;
  for (int i = 0; i < 3; ++i) {
    KbmConfig c = cfg;
    c.dt = std::ldexp(cfg.dt, -i);
    rep.dts[i] = c.dt;
    rep.estimates[i] = annulus_survival(c, r, 2.0, samples, rng, direct);
  }
  // Weighted least squares for p = p0 + c dt.
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < 3; ++i) {
    const double se = rep.estimates[i].stderr_;
    const double wt = se > 0.0 ? 1.0 / (se * se) : 1.0;
    sw += wt;
    sx += wt * rep.dts[i];
    sy += wt * rep.estimates[i].mean;
    sxx += wt * rep.dts[i] * rep.dts[i];
    sxy += wt * rep.dts[i] * rep.estimates[i].mean;
  }
  const double den = sw * sxx - sx * sx;
  rep.slope = den != 0.0 ? (sw * sxy - sx * sy) / den : 0.0;
  rep.intercept = (sy - rep.slope * sx) / sw;
  const double diff = std::fabs(rep.estimates[0].mean - rep.estimates[1].mean);
  rep.consistent =
      diff <= 3.0 * combined_stderr(rep.estimates[0], rep.estimates[1]) + std::fabs(rep.slope) * rep.dts[0] / 2.0;
  return rep;
}

std::string to_string(KbmPath::Status s) {
  switch (s) {
    case KbmPath::Status::Escaped:
      return "escaped";
    case KbmPath::Status::Died:
      return "died";
    case KbmPath::Status::TimedOut:
      return "timed_out";
  }
  return "?";
}

std::string to_string(Side s) { return s == Side::Plus ? "plus" : "minus"; }

}  // namespace krw
