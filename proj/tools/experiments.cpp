#include "experiments.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "krw/harmonic.hpp"
#include "krw/kbm.hpp"
#include "krw/parallel.hpp"
#include "krw/snake.hpp"
#include "krw/trapping.hpp"

namespace krwlab {

using namespace krw;

namespace fs = std::filesystem;

Context::Context(const Resolved& cfg, std::ostream& log)
    : cfg_(cfg),
      log_(log),
      out_(cfg.text("out")),
      seed_(static_cast<std::uint64_t>(cfg.integer("seed", 0))) {
  if (cfg.has("cache")) cache_ = std::make_unique<SolveCache>(cfg.text("cache"));
}

SurvivalSolution Context::solve(const KillingField& k, const Exhaustion& ex, int d, std::int64_t R,
                                const RelaxOptions& opt) {
  const std::string fp = solution_fingerprint(k, ex, d, R, opt);
  std::optional<SurvivalSolution> hit;
  if (cache_) hit = cache_->find(fp);
  SurvivalSolution sol = hit ? std::move(*hit) : solve_escape(k, ex, d, R, opt);
  if (cache_ && !hit) cache_->store(sol);
  std::lock_guard lock(mutex_);
  (hit ? hits_ : misses_)++;
  solves_.push_back({{"fingerprint", fp},
                     {"killing", sol.killing},
                     {"exhaustion", sol.exhaustion},
                     {"d", d},
                     {"R", R},
                     {"sweeps", sol.report.sweeps},
                     {"max_rel_residual", sol.report.max_rel_residual},
                     {"from_cache", sol.from_cache}});
  return sol;
}

EscapeSolver Context::solver() {
  return [this](const KillingField& k, const Exhaustion& ex, int d, std::int64_t R, const RelaxOptions& opt) {
    return solve(k, ex, d, R, opt);
  };
}

void Context::write(const std::string& name, const std::string& content) {
  write_file_atomic(out_ / name, content);
  std::lock_guard lock(mutex_);
  outputs_.push_back(name);
}

void Context::write_svg(const std::string& name, Plot p) {
  p.footer = "krwlab " KRW_VERSION_STRING ", experiment " + cfg_.schema().name + ", seed " + std::to_string(seed_);
  write(name, render_svg(p));
}

json Context::manifest() const {
  json solves = solves_;
  std::sort(solves.begin(), solves.end(), [](const json& a, const json& b) {
    return std::tie(a["R"], a["exhaustion"], a["fingerprint"]) < std::tie(b["R"], b["exhaustion"], b["fingerprint"]);
  });
  json m = {{"artifact", "krwlab"},
            {"version", KRW_VERSION_STRING},
            {"experiment", cfg_.schema().name},
            {"config", cfg_.values()},
            {"outputs", outputs_},
            {"summary", summary},
            {"solves", solves}};
  if (cache_) m["cache"] = {{"dir", cfg_.text("cache")}, {"hits", hits_}, {"misses", misses_}};
  return m;
}

void Context::write_manifest() {
  outputs_.push_back("manifest.json");
  write_file_atomic(out_ / "manifest.json", manifest().dump(2) + "\n");
}

namespace {

using Cell = std::string;

Cell cell(double v) { return CsvTable::cell(v); }
Cell cell(std::int64_t v) { return CsvTable::cell(v); }
Cell cell(std::uint64_t v) { return CsvTable::cell(v); }
Cell cell(const std::string& v) { return CsvTable::cell(v); }

// Runs a constructor from the library and reports its complaint against the field.
template <class F>
auto checked(const Resolved& cfg, const std::string& field, F&& make) -> decltype(make()) {
  try {
    return make();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    cfg.fail(field, e.what());
  }
}

int dimension(const Resolved& cfg, int lo = 1, int hi = kMaxDim) { return static_cast<int>(cfg.integer("d", lo, hi)); }

Point point_in(const Resolved& cfg, const std::string& name, int d) {
  Point p = checked(cfg, name, [&] { return cfg.point(name); });
  if (p.d != d) cfg.fail(name, "has " + std::to_string(p.d) + " coordinates, expected " + std::to_string(d));
  return p;
}

KillingField killing(const Resolved& cfg, int d, const std::string& name = "killing") {
  return checked(cfg, name, [&] { return KillingField::parse(cfg.text(name), d); });
}

Exhaustion exhaustion(const Resolved& cfg, int d) {
  auto ex = checked(cfg, "exhaustion", [&] { return Exhaustion::parse(cfg.text("exhaustion")); });
  checked(cfg, "exhaustion", [&] {
    ex.check_dimension_compatible(d);
    return 0;
  });
  return ex;
}

OffspringLaw law(const Resolved& cfg) { return checked(cfg, "law", [&] { return OffspringLaw::parse(cfg.text("law")); }); }

RelaxOptions relax(const Resolved& cfg) {
  RelaxOptions opt;
  opt.tol = cfg.real("tol", 1e-16, 1e-4);
  return opt;
}

void check_increasing(const Resolved& cfg, const std::string& name, const std::vector<std::int64_t>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] <= v[i - 1]) cfg.fail(name, "must be strictly increasing");
}

void check_inside(const Resolved& cfg, const std::string& name, const Exhaustion& ex, const Point& x, std::int64_t R) {
  if (!ex.contains(x, R)) cfg.fail(name, x.str() + " lies outside the domain at R = " + std::to_string(R));
}

std::vector<std::string> coordinate_header(int d) {
  std::vector<std::string> h;
  for (int i = 1; i <= d; ++i) h.push_back("x" + std::to_string(i));
  return h;
}

std::string fixed(double v, int digits = 6) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

json estimate_json(const Estimate& e) { return {{"mean", e.mean}, {"stderr", e.stderr_}, {"n", e.n}}; }

// ------------------------------------------------------------------ solve

void run_solve(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const int d = dimension(cfg);
  const KillingField k = killing(cfg, d);
  Exhaustion ex;
  if (cfg.has("segment")) {
    if (d != 1) cfg.fail("segment", "needs d = 1");
    ex = checked(cfg, "segment", [&] { return Exhaustion::parse("segment:" + cfg.text("segment")); });
  } else {
    ex = exhaustion(cfg, d);
  }
  const std::int64_t R = cfg.integer("R", 1);
  const Point x = cfg.has("x") ? point_in(cfg, "x", d) : Point(d);
  check_inside(cfg, "x", ex, x, R);
  const RelaxOptions opt = relax(cfg);

  const SurvivalSolution sol = ctx.solve(k, ex, d, R, opt);
  ctx.write_csv("solve.csv", solution_csv(sol));

  const auto law = conditional_step_law(sol, k, x);
  const auto nb = neighbors(x);
  auto header = coordinate_header(d);
  header.push_back("probability");
  CsvTable steps(header);
  json law_json = json::array();
  for (std::size_t i = 0; i < nb.size(); ++i) {
    std::vector<std::string> row;
    for (int j = 0; j < d; ++j) row.push_back(cell(static_cast<std::int64_t>(nb[i][j])));
    row.push_back(cell(law[i]));
    steps.row(row);
    law_json.push_back({{"to", nb[i].str()}, {"probability", law[i]}});
  }
  ctx.write_csv("step_law.csv", steps);

  ctx.summary = {{"u_x", sol(x)},
                 {"x", x.str()},
                 {"first_step_law", law_json},
                 {"sweeps", sol.report.sweeps},
                 {"max_rel_residual", sol.report.max_rel_residual},
                 {"domain_size", sol.domain_size()}};
  ctx.log() << "u_R(" << x.str() << ") = " << fixed(sol(x), 12) << " on " << sol.exhaustion << ", R = " << R << "\n";
  ctx.log() << "conditioned first-step law from " << x.str() << ":\n";
  for (std::size_t i = 0; i < nb.size(); ++i) ctx.log() << "  -> " << nb[i].str() << "  " << fixed(law[i], 10) << "\n";
}

// ------------------------------------------------------------------ ratio

void run_ratio(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const int d = dimension(cfg);
  const KillingField k = killing(cfg, d);
  const Exhaustion ex = exhaustion(cfg, d);
  const Point x = point_in(cfg, "x", d);
  const Point x0 = point_in(cfg, "x0", d);
  const auto Rs = cfg.integers("R", 1);
  check_increasing(cfg, "R", Rs);
  check_inside(cfg, "x", ex, x, Rs.front());
  check_inside(cfg, "x0", ex, x0, Rs.front());
  const RelaxOptions opt = relax(cfg);

  // One curve per R in parallel, merged in R order.
  std::vector<RatioCurve> parts(Rs.size());
  auto solver = ctx.solver();
  parallel_for(Rs.size(), [&](std::size_t i) { parts[i] = ratio_curve(k, ex, x, x0, {Rs[i]}, opt, solver); });
  RatioCurve curve = parts.front();
  curve.points.clear();
  for (const auto& p : parts) curve.points.push_back(p.points.front());
  update_gaps(curve);

  ctx.write_csv("ratio.csv", ratio_csv(curve));
  Plot p;
  p.title = "u_R(" + x.str() + ") / u_R(" + x0.str() + "), " + curve.exhaustion;
  p.x_label = "R";
  p.y_label = "ratio";
  p.log_x = true;
  PlotSeries s{curve.killing, {}, {}};
  for (const auto& pt : curve.points) {
    s.x.push_back(static_cast<double>(pt.R));
    s.y.push_back(pt.ratio);
  }
  p.series.push_back(s);
  ctx.write_svg("ratio.svg", p);

  ctx.summary = {{"limit", curve.limit()}, {"cauchy_gap", curve.cauchy_gap}};
  for (const auto& pt : curve.points)
    ctx.log() << "R = " << pt.R << "  ratio = " << fixed(pt.ratio, 12) << "  gap = " << fixed(pt.gap, 3) << "\n";
}

// ------------------------------------------------------------------ counterexample

void run_counterexample(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const double alpha = cfg.real("alpha", 0.0, std::nextafter(2.0, 0.0));
  const std::int64_t r = cfg.integer("r", 2);
  const auto Rs = cfg.integers("R", 1);
  check_increasing(cfg, "R", Rs);
  const TruncationSchedule schedule{cfg.real("factor", 1.0, 1e3), 0.0};
  const RelaxOptions opt = relax(cfg);

  std::vector<CounterexampleReport> parts(Rs.size());
  auto solver = ctx.solver();
  parallel_for(Rs.size(), [&](std::size_t i) {
    parts[i] = counterexample_experiment(alpha, r, {Rs[i]}, schedule, opt, solver);
  });
  CounterexampleReport rep = parts.front();
  rep.rows.clear();
  for (const auto& part : parts) rep.rows.push_back(part.rows.front());

  ctx.write_csv("counterexample.csv", counterexample_csv(rep));
  Plot p;
  p.title = "mirrored half-plane ratios, alpha = " + fixed(alpha) + ", r = " + std::to_string(r);
  p.x_label = "R";
  p.y_label = "rho";
  p.log_x = true;
  p.log_y = true;
  PlotSeries plus{"rho_plus", {}, {}}, minus{"rho_minus", {}, {}};
  double residual = 0.0;
  for (const auto& row : rep.rows) {
    plus.x.push_back(static_cast<double>(row.R));
    plus.y.push_back(row.rho_plus);
    minus.x.push_back(static_cast<double>(row.R));
    minus.y.push_back(row.rho_minus);
    residual = std::max(residual, row.symmetry_residual);
    ctx.log() << "R = " << row.R << "  rho+ = " << fixed(row.rho_plus, 10) << "  rho- = " << fixed(row.rho_minus, 10)
              << "  |rho+ rho- - 1| = " << fixed(row.symmetry_residual, 3) << "\n";
  }
  p.series = {plus, minus};
  ctx.write_svg("counterexample.svg", p);
  ctx.summary = {{"max_symmetry_residual", residual}, {"gap_at_largest_R", rep.rows.back().gap}};
}

// ------------------------------------------------------------------ potential kernel

void run_potential_kernel(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const int m = static_cast<int>(cfg.integer("max", 0, 4096));
  const int nodes = static_cast<int>(cfg.integer("nodes", 16, 1 << 16));
  if (nodes % 2) cfg.fail("nodes", "must be even");

  const PotentialKernelTable table(m, nodes);
  CsvTable csv({"x1", "x2", "a"});
  for (std::int64_t i = -m; i <= m; ++i)
    for (std::int64_t j = -m; j <= m; ++j) csv.row({cell(i), cell(j), cell(table(Point{i, j}))});
  ctx.write_csv("potential-kernel.csv", csv);

  ctx.summary = {{"rows", csv.rows()}};
  if (m >= 1) {
    ctx.summary["a(1,0)"] = table(Point{1, 0});
    ctx.summary["a(1,1)"] = table(Point{1, 1});
    ctx.log() << "a(1,0) = " << fixed(table(Point{1, 0}), 15) << "\n";
    ctx.log() << "a(1,1) = " << fixed(table(Point{1, 1}), 15) << "  (4/pi = " << fixed(4 / std::numbers::pi, 15)
              << ")\n";
  }
  ctx.log() << csv.rows() << " values written\n";
}

// ------------------------------------------------------------------ hitting

void run_hitting(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const Point x = point_in(cfg, "x", 2);
  const Point y = point_in(cfg, "y", 2);
  if (y.is_origin()) cfg.fail("y", "must differ from the origin");
  HittingMcOptions opt;
  opt.samples = static_cast<std::uint64_t>(cfg.integer("samples", 1));
  opt.far_radius = cfg.real("far_radius", 2.0 * std::max(x.norm(), y.norm()) + 2.0, 1e9);

  const double exact = hitting_before_zero(x, y);
  RandomStream rng(ctx.seed(), 0);
  const Estimate mc = hitting_before_zero_mc(x, y, rng, opt);
  const double z = mc.stderr_ > 0 ? std::abs(mc.mean - exact) / mc.stderr_ : (mc.mean == exact ? 0.0 : INFINITY);

  CsvTable csv({"x", "y", "closed_form", "monte_carlo", "stderr", "n", "z"});
  csv.row({cell(x.str()), cell(y.str()), cell(exact), cell(mc.mean), cell(mc.stderr_), cell(mc.n), cell(z)});
  ctx.write_csv("hitting.csv", csv);
  ctx.summary = {{"closed_form", exact}, {"monte_carlo", estimate_json(mc)}, {"z", z}};
  ctx.log() << "P_" << x.str() << "[tau(" << y.str() << ") < tau(0)]: closed form " << fixed(exact, 10)
            << ", Monte Carlo " << fixed(mc.mean, 6) << " +- " << fixed(mc.stderr_, 2) << " (z = " << fixed(z, 3)
            << ")\n";
}

// ------------------------------------------------------------------ green

void run_green(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const int d = dimension(cfg, 3);
  const int box = static_cast<int>(cfg.integer("box", 4, 1 << 12));
  const auto radii = cfg.integers("radii", 0);
  for (auto r : radii)
    if (2 * r >= box) cfg.fail("radii", "entries must be below box / 2, got " + std::to_string(r));
  const RelaxOptions opt = relax(cfg);

  std::vector<Point> xs;
  for (auto r : radii) {
    Point p(d);
    p[0] = r;
    xs.push_back(p);
  }
  const auto g = green_function(xs, box, opt);

  CsvTable csv({"r", "g", "raw", "raw_half", "sensitivity"});
  Plot p;
  p.title = "Green function g(0, r e1), d = " + std::to_string(d);
  p.x_label = "r";
  p.y_label = "g";
  p.log_x = p.log_y = true;
  PlotSeries s{"box " + std::to_string(box), {}, {}};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    csv.row({cell(radii[i]), cell(g[i].value), cell(g[i].raw), cell(g[i].raw_half), cell(g[i].sensitivity)});
    if (radii[i] > 0) {
      s.x.push_back(static_cast<double>(radii[i]));
      s.y.push_back(g[i].value);
    }
    ctx.log() << "g(0, " << xs[i].str() << ") = " << fixed(g[i].value, 10) << "  (sensitivity "
              << fixed(g[i].sensitivity, 2) << ")\n";
  }
  p.series.push_back(s);
  ctx.write_csv("green.csv", csv);
  ctx.write_svg("green.svg", p);
  ctx.summary = {{"g", json::array()}};
  for (const auto& v : g) ctx.summary["g"].push_back(v.value);
}

// ------------------------------------------------------------------ snake

void run_snake_k(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const int d = dimension(cfg);
  const OffspringLaw mu = law(cfg);
  if (mu.is_single_node()) cfg.fail("law", "the single-node law has no k table");
  const std::int64_t max_radius = cfg.integer("max_radius", 1, 4096);
  KHatOptions opt;
  opt.orbit_radius = cfg.integer("orbit_radius", 0, max_radius);
  opt.node_cap = static_cast<std::size_t>(cfg.integer("node_cap", 1));
  const auto samples = static_cast<std::uint64_t>(cfg.integer("samples", 1));

  RandomStream rng(ctx.seed(), 0);
  const KHatTable t = build_k_table(mu, d, max_radius, samples, rng, opt);
  ctx.write_csv("snake-k.csv", k_table_csv(t));

  Plot p;
  p.title = "k(x) for " + mu.describe() + ", d = " + std::to_string(d);
  p.x_label = "|x|";
  p.y_label = "k_hat";
  p.log_x = p.log_y = true;
  PlotSeries s{"k_hat", {}, {}};
  for (const auto& e : t.entries)
    if (e.radius > 0 && e.k > 0) {
      s.x.push_back(e.radius);
      s.y.push_back(e.k);
    }
  p.series.push_back(s);
  ctx.write_svg("snake-k.svg", p);
  ctx.summary = {{"entries", t.entries.size()}};
  ctx.log() << t.entries.size() << " table entries up to radius " << max_radius << "\n";
}

void run_snake_escape(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const int d = dimension(cfg);
  const OffspringLaw mu = law(cfg);
  const Point x = point_in(cfg, "x", d);
  const Exhaustion ex = exhaustion(cfg, d);
  const std::int64_t R = cfg.integer("R", 1);
  check_inside(cfg, "x", ex, x, R);
  if (x.is_origin()) cfg.fail("x", "must differ from the origin");
  const auto samples = static_cast<std::uint64_t>(cfg.integer("samples", 1));
  const auto table_samples = static_cast<std::uint64_t>(cfg.integer("table_samples", 0));
  if (table_samples > 0 && mu.is_single_node()) cfg.fail("table_samples", "the single-node law has no k table");
  SnakeOptions sopt;
  sopt.node_cap = static_cast<std::size_t>(cfg.integer("node_cap", 1));

  RandomStream rng(ctx.seed(), 0);
  const auto snake = snake_escape_probability(x, mu, ex, R, samples, rng, sopt);
  CsvTable csv({"method", "estimate", "stderr", "n"});
  csv.row({"snake", cell(snake.estimate.mean), cell(snake.estimate.stderr_), cell(snake.estimate.n)});
  ctx.summary = {{"snake", estimate_json(snake.estimate)},
                 {"hit_before_0", snake.hit_before_0},
                 {"hit_0_first", snake.hit_0_first},
                 {"inconclusive", snake.inconclusive}};
  ctx.log() << "snake: " << fixed(snake.estimate.mean) << " +- " << fixed(snake.estimate.stderr_, 2) << "\n";

  if (table_samples > 0) {
    RandomStream table_rng(ctx.seed(), 1), walk_rng(ctx.seed(), 2);
    KHatOptions kopt;
    kopt.node_cap = sopt.node_cap;
    const KHatTable table = build_k_table_for_walk(mu, x, ex, R, table_samples, table_rng, kopt);
    const auto krw = krw_escape_with_table(x, table, ex, R, samples, walk_rng);
    csv.row({"krw_k_table", cell(krw.walk.mean), cell(krw.combined_stderr()), cell(krw.walk.n)});
    ctx.write_csv("k_table.csv", k_table_csv(table));
    Estimate combined = krw.walk;
    combined.stderr_ = krw.combined_stderr();
    const double z = z_score(snake.estimate, combined);
    ctx.summary["krw_k_table"] = estimate_json(combined);
    ctx.summary["z"] = z;
    ctx.log() << "KRW with k table: " << fixed(krw.walk.mean) << " +- " << fixed(krw.combined_stderr(), 2)
              << "  (z = " << fixed(z, 3) << ")\n";
  }
  ctx.write_csv("snake-escape.csv", csv);
}

void run_snake_condition(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const int d = dimension(cfg);
  const OffspringLaw mu = law(cfg);
  const KillingField k = killing(cfg, d);
  const Point x = point_in(cfg, "x", d);
  if (x.is_origin()) cfg.fail("x", "must differ from the origin");
  const auto steps = static_cast<std::size_t>(cfg.integer("steps", 0));
  const std::string weight = cfg.text("weight");
  if (weight != "potential" && weight != "ratio") cfg.fail("weight", "must be potential or ratio");
  if (weight == "potential" && d != 2) cfg.fail("weight", "the potential kernel needs d = 2");
  const std::int64_t R = cfg.integer("R", 1);
  if (weight == "ratio") check_inside(cfg, "x", Exhaustion::ball(), x, R);
  ConditionedSnakeOptions opt;
  opt.node_cap = static_cast<std::size_t>(cfg.integer("node_cap", 1));

  std::function<double(const Point&)> a;
  std::shared_ptr<PotentialKernelTable> table;
  std::shared_ptr<SurvivalSolution> sol;
  if (weight == "potential") {
    constexpr int kTable = 64;
    table = std::make_shared<PotentialKernelTable>(kTable);
    a = [table](const Point& y) {
      if (y.norm_inf() <= kTable) return (*table)(y);
      // a(y) ~ (2/pi)(ln|y| + gamma + (3/2) ln 2) beyond the table.
      return 2.0 / std::numbers::pi * (std::log(y.norm()) + std::numbers::egamma + 1.5 * std::numbers::ln2);
    };
  } else {
    sol = std::make_shared<SurvivalSolution>(ctx.solve(k, Exhaustion::ball(), d, R, RelaxOptions{}));
    a = ratio_weight(*sol, x);
  }

  RandomStream rng(ctx.seed(), 0);
  const LabeledTree t = sample_conditioned_snake(x, mu, k, a, steps, rng, opt);
  auto header = std::vector<std::string>{"id", "parent", "bush", "is_spine"};
  for (const auto& h : coordinate_header(d)) header.push_back(h);
  CsvTable csv(header);
  std::vector<bool> on_spine(t.size(), false);
  for (auto v : t.spine) on_spine[v] = true;
  for (std::size_t v = 0; v < t.size(); ++v) {
    std::vector<std::string> row{cell(static_cast<std::uint64_t>(v)), cell(t.parent[v]),
                                 cell(static_cast<std::int64_t>(t.bush[v])),
                                 cell(static_cast<std::int64_t>(on_spine[v]))};
    for (int j = 0; j < d; ++j) row.push_back(cell(t.label[v][j]));
    csv.row(row);
  }
  ctx.write_csv("snake-condition.csv", csv);
  std::ostringstream edges;
  write_edge_list(edges, t);
  ctx.write("edges.txt", edges.str());
  ctx.summary = {{"nodes", t.size()}, {"spine", t.spine.size()}};
  ctx.log() << "conditioned snake: " << t.size() << " nodes, spine of " << t.spine.size() << "\n";
}

// ------------------------------------------------------------------ kbm

void run_kbm_annulus(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const auto alphas = cfg.reals("alpha", 1e-9, 2.0 - 1e-9);
  const double dt = cfg.real("dt", 1e-9, 1e3);
  const auto radii = cfg.reals("r", 1e-6, 1e6);
  const double factor = cfg.real("factor", 1.0 + 1e-9, 1e6);
  const auto samples = static_cast<std::uint64_t>(cfg.integer("samples", 1));
  for (double r : radii)
    checked(cfg, "dt", [&] {
      KbmConfig::power_law(alphas.front(), dt).check_resolution(r);
      return 0;
    });

  CsvTable csv({"alpha", "r", "r_2beta", "estimate", "stderr", "n", "neg_log_p"});
  Plot p;
  p.title = "annulus survival of the killed Brownian motion, dt = " + fixed(dt);
  p.x_label = "r^(2 beta)";
  p.y_label = "-ln P[reach " + fixed(factor) + " r alive]";
  json rows = json::array();
  std::uint64_t stream = 0;
  for (double alpha : alphas) {
    const auto kc = KbmConfig::power_law(alpha, dt);
    PlotSeries s{"alpha = " + fixed(alpha), {}, {}};
    for (double r : radii) {
      RandomStream rng(ctx.seed(), stream++);
      const Estimate e = annulus_survival(kc, r, factor, samples, rng);
      const double x = std::pow(r, 2 * kc.beta());
      const double y = e.mean > 0 ? -std::log(e.mean) : INFINITY;
      csv.row({cell(alpha), cell(r), cell(x), cell(e.mean), cell(e.stderr_), cell(e.n), cell(y)});
      if (std::isfinite(y)) {
        s.x.push_back(x);
        s.y.push_back(y);
      }
      rows.push_back({{"alpha", alpha}, {"r", r}, {"estimate", estimate_json(e)}});
      ctx.log() << "alpha = " << fixed(alpha) << "  r = " << fixed(r) << "  p = " << fixed(e.mean) << " +- "
                << fixed(e.stderr_, 2) << "\n";
    }
    p.series.push_back(s);
  }
  ctx.write_csv("kbm-annulus.csv", csv);
  ctx.write_svg("kbm-annulus.svg", p);
  ctx.summary = {{"points", rows}};
}

void run_kbm_directional(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const double alpha = cfg.real("alpha", 1e-9, 2.0 - 1e-9);
  const double r = cfg.real("r", 1e-6, 1e6);
  const int n = static_cast<int>(cfg.integer("n", 1, 20));
  auto kc = KbmConfig::power_law(alpha, cfg.real("dt", 1e-9, 1e3));
  kc.bridge = cfg.flag("bridge");
  checked(cfg, "dt", [&] {
    kc.check_resolution(r);
    return 0;
  });
  SplittingOptions opt;
  opt.particles = static_cast<std::size_t>(cfg.integer("particles", 2));
  opt.replicates = static_cast<int>(cfg.integer("replicates", 2, 100000));

  RandomStream rp(ctx.seed(), 0), rm(ctx.seed(), 1), rr(ctx.seed(), 2);
  const auto plus = directional_escape(kc, {r, 0}, r, n, Side::Plus, rp, opt);
  const auto minus = directional_escape(kc, {r, 0}, r, n, Side::Minus, rm, opt);
  const auto mirror = directional_escape(kc, {-r, 0}, r, n, Side::Plus, rr, opt);
  const double ratio = minus.estimate.mean > 0 ? plus.estimate.mean / minus.estimate.mean : INFINITY;
  const double z = z_score(minus.estimate, mirror.estimate);

  CsvTable csv({"side", "start_x1", "estimate", "stderr", "n"});
  csv.row({"plus", cell(r), cell(plus.estimate.mean), cell(plus.estimate.stderr_), cell(plus.estimate.n)});
  csv.row({"minus", cell(r), cell(minus.estimate.mean), cell(minus.estimate.stderr_), cell(minus.estimate.n)});
  csv.row({"plus", cell(-r), cell(mirror.estimate.mean), cell(mirror.estimate.stderr_), cell(mirror.estimate.n)});
  ctx.write_csv("kbm-directional.csv", csv);
  ctx.summary = {{"plus", estimate_json(plus.estimate)},
                 {"minus", estimate_json(minus.estimate)},
                 {"mirror", estimate_json(mirror.estimate)},
                 {"plus_over_minus", ratio},
                 {"mirror_z", z}};
  ctx.log() << "plus " << fixed(plus.estimate.mean) << " +- " << fixed(plus.estimate.stderr_, 2) << ", minus "
            << fixed(minus.estimate.mean) << " +- " << fixed(minus.estimate.stderr_, 2) << ", ratio "
            << fixed(ratio, 4) << ", mirror z = " << fixed(z, 3) << "\n";
}

// ------------------------------------------------------------------ trapping

void run_trapping(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const int d = dimension(cfg);
  const KillingField k = killing(cfg, d);
  TrappingOptions opt;
  opt.exact_radius = cfg.integer("exact_radius", 1, 4096);
  opt.cutoff = cfg.real("cutoff", 4.0 * static_cast<double>(opt.exact_radius), 1e300);

  const TrappingReport rep = checked(cfg, "killing", [&] { return trapping_classifier(k, d, opt); });
  CsvTable csv({"M", "S_M"});
  for (std::size_t i = 0; i < rep.radii.size(); ++i) csv.row({cell(rep.radii[i]), cell(rep.partial_sums[i])});
  ctx.write_csv("trapping.csv", csv);
  Plot p;
  p.title = "partial sums of |x|^(2-d) k(x), " + k.describe() + ", d = " + std::to_string(d);
  p.x_label = "M";
  p.y_label = "S_M";
  p.log_x = true;
  p.series.push_back({"S_M", rep.radii, rep.partial_sums});
  ctx.write_svg("trapping.svg", p);
  ctx.summary = {{"verdict", to_string(rep.verdict)}, {"tail_slope", rep.tail_slope}, {"reason", rep.reason}};
  ctx.log() << to_string(rep.verdict) << " (" << rep.reason << ")\n";
}

const std::map<std::string, std::function<void(Context&)>>& runners() {
  static const std::map<std::string, std::function<void(Context&)>> m{
      {"solve", run_solve},
      {"ratio", run_ratio},
      {"counterexample", run_counterexample},
      {"potential-kernel", run_potential_kernel},
      {"hitting", run_hitting},
      {"green", run_green},
      {"snake-k", run_snake_k},
      {"snake-escape", run_snake_escape},
      {"snake-condition", run_snake_condition},
      {"kbm-annulus", run_kbm_annulus},
      {"kbm-directional", run_kbm_directional},
      {"trapping", run_trapping},
  };
  return m;
}

}  // namespace

void run_experiment(Context& ctx) {
  runners().at(ctx.cfg().schema().name)(ctx);
  ctx.write_manifest();
}

}  // namespace krwlab
