#include "krw/snake.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "krw/killing.hpp"
#include "krw/hash.hpp"
#include "krw/parallel.hpp"
#include "krw/ratio.hpp"

namespace krw {

// ---------------------------------------------------------------- offspring law

OffspringLaw::OffspringLaw(std::vector<double> pmf) : pmf_(std::move(pmf)) {
  while (!pmf_.empty() && pmf_.back() == 0.0) pmf_.pop_back();
  if (pmf_.empty()) throw std::invalid_argument("offspring law needs at least one atom");
  double sum = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < pmf_.size(); ++i) {
    if (!(pmf_[i] >= 0.0)) throw std::invalid_argument("offspring probabilities must be >= 0");
    sum += pmf_[i];
    mean += static_cast<double>(i) * pmf_[i];
  }
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("offspring probabilities must sum to 1");
  if (pmf_.size() == 2 && pmf_[1] == 1.0)
    throw std::invalid_argument("offspring law delta_1 gives an infinite line, not a critical GW tree");
  if (std::abs(mean - 1.0) > 1e-9)
    throw std::invalid_argument("offspring law must be critical (mean 1), got mean " + format_double(mean));
  double c = 0.0, r = 0.0;
  for (std::size_t i = 0; i < pmf_.size(); ++i) {
    c += pmf_[i];
    cdf_.push_back(c);
  }
  for (std::size_t i = 1; i < pmf_.size(); ++i) {
    r += static_cast<double>(i) * pmf_[i];
    root_cdf_.push_back(r);
  }
}

OffspringLaw OffspringLaw::geometric_half() {
  OffspringLaw law;
  law.geometric_ = true;
  return law;
}

OffspringLaw OffspringLaw::single_node() {
  OffspringLaw law;
  law.single_ = true;
  law.pmf_ = {1.0};
  law.cdf_ = {1.0};
  return law;
}

double OffspringLaw::pmf(int i) const {
  if (i < 0) return 0.0;
  if (geometric_) return std::ldexp(1.0, -(i + 1));
  return static_cast<std::size_t>(i) < pmf_.size() ? pmf_[static_cast<std::size_t>(i)] : 0.0;
}

double OffspringLaw::variance() const {
  if (geometric_) return 2.0;
  if (single_) return 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < pmf_.size(); ++i) m2 += static_cast<double>(i * i) * pmf_[i];
  return m2 - 1.0;
}

double OffspringLaw::generating(double s) const {
  if (geometric_) return 1.0 / (2.0 - s);
  double v = 0.0;
  for (std::size_t i = pmf_.size(); i-- > 0;) v = v * s + pmf_[i];
  return v;
}

int OffspringLaw::max_support() const { return geometric_ ? -1 : static_cast<int>(pmf_.size()) - 1; }

namespace {

int geometric_half_draw(RandomStream& rng) {
  for (int base = 0;; base += 64) {
    std::uint64_t b = rng.bits();
    if (b) return base + std::countr_zero(b);
  }
}

int draw_from_cdf(const std::vector<double>& cdf, double u) {
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u * cdf.back());
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1));
}

}  // namespace

int OffspringLaw::sample(RandomStream& rng) const {
  if (geometric_) return geometric_half_draw(rng);
  return draw_from_cdf(cdf_, rng.uniform());
}

int OffspringLaw::sample_root(RandomStream& rng) const {
  // For Geometric(1/2), mu*(i+1) = (i+1) 2^-(i+2) is the law of a sum of two draws.
  if (geometric_) return geometric_half_draw(rng) + geometric_half_draw(rng);
  if (single_) return 0;
  return draw_from_cdf(root_cdf_, rng.uniform());
}

OffspringLaw OffspringLaw::parse(const std::string& spec) {
  if (spec == "geometric") return geometric_half();
  if (spec == "single") return single_node();
  if (spec.rfind("pmf:", 0) == 0) {
    std::vector<double> p;
    std::stringstream ss(spec.substr(4));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        p.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw std::invalid_argument("bad probability '" + tok + "' in offspring spec '" + spec + "'");
      }
    }
    return OffspringLaw(std::move(p));
  }
  throw std::invalid_argument("unrecognised offspring spec '" + spec + "' (expected geometric, single or pmf:p0,p1,...)");
}

std::string OffspringLaw::describe() const {
  if (geometric_) return "geometric";
  if (single_) return "single";
  std::string s = "pmf:";
  for (std::size_t i = 0; i < pmf_.size(); ++i) s += (i ? "," : "") + format_double(pmf_[i]);
  return s;
}

// ---------------------------------------------------------------- trees

std::vector<std::vector<std::size_t>> LabeledTree::children() const {
  std::vector<std::vector<std::size_t>> out(size());
  for (std::size_t i = 0; i < size(); ++i)
    if (parent[i] >= 0) out[static_cast<std::size_t>(parent[i])].push_back(i);
  return out;
}

bool LabeledTree::contains_label(const Point& x) const {
  return std::find(label.begin(), label.end(), x) != label.end();
}

namespace {

LabeledTree breadth_first(const OffspringLaw& mu, std::size_t node_cap, RandomStream& rng, bool multitype) {
  if (node_cap < 1) throw std::invalid_argument("node_cap must be >= 1");
  LabeledTree t;
  t.parent.push_back(-1);
  for (std::size_t i = 0; i < t.size(); ++i) {
    int k = (multitype && i == 0) ? mu.sample_root(rng) : mu.sample(rng);
    for (int c = 0; c < k; ++c) {
      if (t.size() >= node_cap) {
        t.cap_exceeded = true;
        return t;
      }
      t.parent.push_back(static_cast<std::int64_t>(i));
    }
  }
  return t;
}

Point random_neighbor(const Point& x, RandomStream& rng) {
  Point y = x;
  auto j = rng.below(static_cast<std::uint64_t>(2 * x.d));
  y.c[j / 2] += (j % 2) ? -1 : 1;
  return y;
}

std::int64_t l1_norm(const Point& x) {
  std::int64_t s = 0;
  for (int i = 0; i < x.d; ++i) s += std::llabs(x[i]);
  return s;
}

}  // namespace

LabeledTree sample_gw_tree(const OffspringLaw& mu, std::size_t node_cap, RandomStream& rng) {
  return breadth_first(mu, node_cap, rng, false);
}

LabeledTree sample_multitype_tree(const OffspringLaw& mu, std::size_t node_cap, RandomStream& rng) {
  return breadth_first(mu, node_cap, rng, true);
}

LabeledTree index_walk(LabeledTree tree, const Point& start, RandomStream& rng) {
  tree.label.assign(tree.size(), start);
  for (std::size_t i = 1; i < tree.size(); ++i) {
    auto p = tree.parent[i];
    if (p < 0 || static_cast<std::size_t>(p) >= i) throw std::invalid_argument("tree nodes must follow their parents");
    tree.label[i] = random_neighbor(tree.label[static_cast<std::size_t>(p)], rng);
  }
  return tree;
}

// ---------------------------------------------------------------- pruned hit sampler

namespace {
constexpr std::int64_t kTailTable = 1 << 16;
}

HitSampler::HitSampler(OffspringLaw mu) : mu_(std::move(mu)) {
  // q_[h] = P[height >= h]; q_[0] = 1 and q_[h] = 1 - f(1 - q_[h-1]).
  q_.resize(kTailTable + 1);
  q_[0] = 1.0;
  for (std::int64_t h = 1; h <= kTailTable; ++h)
    q_[static_cast<std::size_t>(h)] =
        mu_.is_geometric() ? 1.0 / static_cast<double>(h + 1) : 1.0 - mu_.generating(1.0 - q_[static_cast<std::size_t>(h - 1)]);
}

double HitSampler::height_below(std::int64_t h) const {
  if (h < 0) return 0.0;
  if (h <= kTailTable) return 1.0 - q_[static_cast<std::size_t>(h)];
  if (mu_.is_geometric()) return 1.0 - 1.0 / static_cast<double>(h + 1);
  double t = q_.back();
  for (std::int64_t j = kTailTable + 1; j <= h; ++j) t = 1.0 - mu_.generating(1.0 - t);
  return 1.0 - t;
}

namespace {

// P[height >= h] with h = -1 meaning an unbounded height (probability 0).
double tail(const HitSampler& s, const std::vector<double>& q, std::int64_t h, bool geometric) {
  if (h < 0) return 0.0;
  if (h < static_cast<std::int64_t>(q.size())) return q[static_cast<std::size_t>(h)];
  if (geometric) return 1.0 / static_cast<double>(h + 1);
  return 1.0 - s.height_below(h);
}

}  // namespace

namespace {

template <class G>
double unit(G& rng) { return static_cast<double>(rng.bits() >> 11) * 0x1.0p-53; }

// Moves one coordinate of x by +-1 and keeps its l1 norm current.
template <class G>
void step(Point& x, std::int64_t& l1, G& rng) {
  const std::uint64_t j = ((rng.bits() >> 32) * static_cast<std::uint64_t>(2 * x.d)) >> 32;
  std::int64_t& c = x.c[j >> 1];
  l1 -= c < 0 ? -c : c;
  c += (j & 1) ? -1 : 1;
  l1 += c < 0 ? -c : c;
}

}  // namespace

HitSampler::Bits::Bits(RandomStream& rng) {
  std::uint64_t z = rng.bits();
  for (auto& w : s) {
    z += 0x9e3779b97f4a7c15ULL;
    std::uint64_t t = z;
    t = (t ^ (t >> 30)) * 0xbf58476d1ce4e5b9ULL;
    t = (t ^ (t >> 27)) * 0x94d049bb133111ebULL;
    w = t ^ (t >> 31);
  }
}

std::uint64_t HitSampler::Bits::bits() {
  const std::uint64_t out = std::rotl(s[1] * 5, 7) * 9;
  const std::uint64_t t = s[1] << 17;
  s[2] ^= s[0];
  s[3] ^= s[1];
  s[1] ^= s[2];
  s[0] ^= s[3];
  s[2] ^= t;
  s[3] = std::rotl(s[3], 45);
  return out;
}

void HitSampler::sample_children(std::int64_t a, std::int64_t hi, bool need_short, Bits& rng, int& tall,
                                 int& shorter) const {
  // Node height in [a, hi): every child below hi - 1 and at least one at or above a - 1.
  const bool geo = mu_.is_geometric();
  const double p_short = 1.0 - tail(*this, q_, a - 1, geo);
  const double p_tall = tail(*this, q_, a - 1, geo) - tail(*this, q_, hi < 0 ? -1 : hi - 1, geo);
  if (geo) {
    // Joint law of (#tall, #short): #tall is geometric on {1, 2, ...} with ratio
    // p_tall / (2 - p_short); given #tall = t, #short is negative binomial (t + 1, p_short / 2).
    const double rho = p_tall / (2.0 - p_short);
    tall = 1;
    while (unit(rng) < rho) ++tall;
    shorter = 0;
    if (!need_short) return;
    const double beta = 0.5 * p_short;
    for (int j = 0; j <= tall; ++j)
      while (unit(rng) < beta) ++shorter;
    return;
  }
  const int n = mu_.max_support();
  std::vector<double> w;
  std::vector<std::pair<int, int>> atoms;
  double total = 0.0;
  for (int k = 1; k <= n; ++k) {
    double binom = 1.0;
    for (int t = 1; t <= k; ++t) {
      binom = binom * (k - t + 1) / t;
      double v = mu_.pmf(k) * binom * std::pow(p_tall, t) * std::pow(p_short, k - t);
      total += v;
      w.push_back(total);
      atoms.emplace_back(t, k - t);
    }
  }
  if (!(total > 0.0)) throw std::logic_error("conditioned offspring law has no mass");
  auto j = static_cast<std::size_t>(draw_from_cdf(w, unit(rng)));
  tall = atoms[j].first;
  shorter = atoms[j].second;
}

HitSampler::Result HitSampler::run(std::vector<Pending>& stack, std::size_t node_cap, Bits& rng) const {
  Result res;
  const bool geo = mu_.is_geometric();
  while (!stack.empty()) {
    Pending p = stack.back();
    stack.pop_back();
    if (++res.nodes > node_cap) {
      res.capped = true;
      return res;
    }
    const std::int64_t D = p.l1;
    if (D == 0) {
      res.hit = true;
      return res;
    }
    if (p.hi >= 0 && p.hi <= D) continue;
    const std::int64_t a = std::max(p.lo, D);
    if (a > p.lo) {
      const double top = tail(*this, q_, p.hi, geo);
      const double keep = (tail(*this, q_, a, geo) - top) / (tail(*this, q_, p.lo, geo) - top);
      if (!(unit(rng) < keep)) continue;
    }
    int tall = 0, shorter = 0;
    sample_children(a, p.hi, a > D, rng, tall, shorter);
    const std::int64_t child_hi = p.hi < 0 ? -1 : p.hi - 1;
    for (int i = 0; i < tall; ++i) {
      Pending c{p.label, D, a - 1, child_hi};
      step(c.label, c.l1, rng);
      stack.push_back(c);
    }
    // Short children have height below a - 1 and start at l1 distance >= D - 1,
    // so they matter only when a > D.
    if (a > D)
      for (int i = 0; i < shorter; ++i) {
        Pending c{p.label, D, 0, a - 1};
        step(c.label, c.l1, rng);
        stack.push_back(c);
        }
  }
  return res;
}

HitSampler::Result HitSampler::multitype(const Point& start, std::size_t node_cap, RandomStream& rng) const {
  if (start.is_origin()) return {true, false, 1};
  thread_local std::vector<Pending> stack;
  stack.clear();
  const int k = mu_.sample_root(rng);
  Bits bits(rng);
  const std::int64_t l1 = l1_norm(start);
  for (int i = 0; i < k; ++i) {
    Pending c{start, l1, 0, -1};
    step(c.label, c.l1, bits);
    stack.push_back(c);
  }
  Result r = run(stack, node_cap, bits);
  r.nodes += 1;
  return r;
}

HitSampler::Result HitSampler::plain(const Point& start, std::size_t node_cap, RandomStream& rng) const {
  thread_local std::vector<Pending> stack;
  stack.assign(1, {start, l1_norm(start), 0, -1});
  Bits bits(rng);
  return run(stack, node_cap, bits);
}

// ---------------------------------------------------------------- estimates

namespace {

constexpr std::uint64_t kBlock = 4096;

// Estimate of a {0, 1/2, 1}-valued sample mean from counts.
Estimate half_count_estimate(std::uint64_t hits, std::uint64_t capped, std::uint64_t n, const RandomStream& rng) {
  Estimate e;
  e.n = n;
  e.seed = rng.seed();
  e.stream = rng.stream_id();
  if (n == 0) return e;
  const double dn = static_cast<double>(n);
  const double m = (static_cast<double>(hits) + 0.5 * static_cast<double>(capped)) / dn;
  const double m2 = (static_cast<double>(hits) + 0.25 * static_cast<double>(capped)) / dn;
  e.mean = m;
  e.stderr_ = n > 1 ? std::sqrt(std::max(0.0, m2 - m * m) * dn / (dn - 1.0) / dn) : 0.0;
  if (capped) {
    double lo = static_cast<double>(hits) / dn, hi = static_cast<double>(hits + capped) / dn;
    e.note = std::to_string(capped) + " samples reached the node cap";
    if (hi - lo > e.stderr_) {
      e.lower = lo;
      e.upper = hi;
    }
  }
  return e;
}

}  // namespace

Estimate estimate_k(const Point& x, const OffspringLaw& mu, std::uint64_t samples, RandomStream& rng,
                    std::size_t node_cap) {
  if (samples == 0) throw std::invalid_argument("estimate_k needs at least one sample");
  HitSampler sampler(mu);
  if (x.is_origin()) return half_count_estimate(samples, 0, samples, rng);
  const std::uint64_t blocks = (samples + kBlock - 1) / kBlock;
  const std::uint64_t salt = rng.draw_salt();
  std::vector<std::uint64_t> hits(blocks), capped(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    RandomStream s = rng.substream(salt, b);
    const std::uint64_t n = std::min(kBlock, samples - b * kBlock);
    for (std::uint64_t i = 0; i < n; ++i) {
      auto r = sampler.multitype(x, node_cap, s);
      if (r.capped)
        ++capped[b];
      else if (r.hit)
        ++hits[b];
    }
  });
  std::uint64_t h = 0, c = 0;
  for (std::uint64_t b = 0; b < blocks; ++b) {
    h += hits[b];
    c += capped[b];
  }
  return half_count_estimate(h, c, samples, rng);
}

// ---------------------------------------------------------------- k-hat table

namespace {

Point canonical(const Point& x) {
  Point c(x.d);
  for (int i = 0; i < x.d; ++i) c.c[i] = std::llabs(x[i]);
  std::sort(c.c.begin(), c.c.begin() + x.d, std::greater<>());
  return c;
}

std::int64_t norm2(const Point& x) {
  std::int64_t s = 0;
  for (int i = 0; i < x.d; ++i) s += x[i] * x[i];
  return s;
}

std::uint64_t orbit_size(const Point& rep) {
  std::uint64_t size = 1;
  for (int i = 1; i <= rep.d; ++i) size *= static_cast<std::uint64_t>(i);
  int run = 1;
  for (int i = 1; i <= rep.d; ++i) {
    if (i < rep.d && rep[i] == rep[i - 1]) {
      ++run;
      continue;
    }
    for (int j = 2; j <= run; ++j) size /= static_cast<std::uint64_t>(j);
    run = 1;
  }
  for (int i = 0; i < rep.d; ++i)
    if (rep[i] != 0) size *= 2;
  return size;
}

// Non-increasing tuples of non-negative integers with squared norm <= r2.
void enumerate_orbits(int d, std::int64_t r2, std::vector<Point>& out) {
  Point cur(d);
  auto rec = [&](auto&& self, int i, std::int64_t cap, std::int64_t left) -> void {
    if (i == d) {
      out.push_back(cur);
      return;
    }
    for (std::int64_t v = 0; v <= cap && v * v <= left; ++v) {
      cur.c[i] = v;
      self(self, i + 1, v, left - v * v);
    }
    cur.c[i] = 0;
  };
  std::int64_t top = static_cast<std::int64_t>(std::sqrt(static_cast<double>(r2))) + 1;
  rec(rec, 0, top, r2);
}

}  // namespace

std::size_t KHatTable::index(const Point& x) const {
  if (x.d != d) throw std::invalid_argument("point dimension does not match the k table");
  const std::int64_t n2 = norm2(x);
  if (n2 <= orbit_radius * orbit_radius) {
    auto it = orbit_index.find(canonical(x));
    if (it == orbit_index.end()) throw std::logic_error("k table is missing orbit " + canonical(x).str());
    return it->second;
  }
  if (n2 > max_radius * max_radius || sphere_index.empty()) return entries.size() - 1;
  auto j = sphere_index[static_cast<std::size_t>(n2)];
  if (j < 0) throw std::logic_error("k table is missing sphere |x|^2 = " + std::to_string(n2));
  return static_cast<std::size_t>(j);
}

void KHatTable::rebuild_index() {
  orbit_index.clear();
  sphere_index.assign(static_cast<std::size_t>(max_radius * max_radius + 1), -1);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (e.orbit)
      orbit_index[canonical(e.representative)] = i;
    else
      sphere_index[static_cast<std::size_t>(norm2(e.representative))] = static_cast<std::int64_t>(i);
  }
}

KillingField KHatTable::field() const {
  std::unordered_map<Point, double, PointHash> values;
  const Box box = Box::cube(d, orbit_radius);
  Point x(d);
  for (int i = 0; i < d; ++i) x.c[i] = box.lo[i];
  while (true) {
    if (norm2(x) <= orbit_radius * orbit_radius) values[x] = (*this)(x);
    int i = 0;
    while (i < d && ++x.c[i] > box.hi[i]) x.c[i] = box.lo[i], ++i;
    if (i == d) break;
  }
  RadialProfile prof;
  for (const auto& e : entries)
    if (!e.orbit) {
      prof.radii.push_back(e.radius);
      prof.values.push_back(e.k);
    }
  if (prof.radii.empty()) {
    // Everything is tabulated exactly; beyond the table use the outermost entry.
    return KillingField::tabulated(std::move(values), entries.back().k);
  }
  return KillingField::tabulated(std::move(values), std::move(prof));
}

KHatTable k_table_layout(int d, std::int64_t max_radius, std::int64_t orbit_radius) {
  check_dimension(d);
  if (max_radius < 1) throw std::invalid_argument("k table radius must be >= 1");
  if (orbit_radius < 0) throw std::invalid_argument("orbit radius must be >= 0");
  KHatTable t;
  t.d = d;
  t.max_radius = max_radius;
  t.orbit_radius = std::min(orbit_radius, max_radius);
  std::vector<Point> orbits;
  enumerate_orbits(d, max_radius * max_radius, orbits);
  std::sort(orbits.begin(), orbits.end(), [](const Point& a, const Point& b) {
    auto na = norm2(a), nb = norm2(b);
    return na != nb ? na < nb : b < a;
  });
  for (const auto& o : orbits) {
    const auto n2 = norm2(o);
    const auto size = orbit_size(o);
    const bool own = n2 <= t.orbit_radius * t.orbit_radius;
    if (own || t.entries.empty() || t.entries.back().orbit || norm2(t.entries.back().representative) != n2) {
      KHatEntry e;
      e.radius = std::sqrt(static_cast<double>(n2));
      e.representative = o;
      e.orbit = own;
      t.entries.push_back(e);
    }
    t.entries.back().sites += size;
    t.entries.back().members.emplace_back(o, size);
  }
  t.rebuild_index();
  return t;
}

void fill_k_table(KHatTable& t, const OffspringLaw& mu, const std::vector<std::uint64_t>& samples, RandomStream& rng,
                  std::size_t node_cap) {
  if (samples.size() != t.entries.size()) throw std::invalid_argument("one sample count per table entry is required");
  const std::uint64_t salt = rng.draw_salt();
  HitSampler sampler(mu);
  parallel_for(t.entries.size(), [&](std::size_t j) {
    auto& e = t.entries[j];
    e.n = std::max<std::uint64_t>(1, samples[j]);
    RandomStream s = rng.substream(salt, j);
    std::vector<double> cdf;
    double acc = 0.0;
    for (const auto& m : e.members) cdf.push_back(acc += static_cast<double>(m.second));
    std::uint64_t hits = 0, capped = 0;
    for (std::uint64_t i = 0; i < e.n; ++i) {
      const Point& start = e.members[cdf.size() == 1 ? 0 : static_cast<std::size_t>(draw_from_cdf(cdf, unit(s)))].first;
      auto r = sampler.multitype(start, node_cap, s);
      if (r.capped)
        ++capped;
      else if (r.hit)
        ++hits;
    }
    Estimate est = half_count_estimate(hits, capped, e.n, s);
    e.k = est.mean;
    e.stderr_ = est.stderr_;
  });
}

KHatTable build_k_table(const OffspringLaw& mu, int d, std::int64_t max_radius, std::uint64_t total_samples,
                        RandomStream& rng, const KHatOptions& opt) {
  KHatTable t = k_table_layout(d, max_radius, opt.orbit_radius);
  std::uint64_t population = 0;
  for (const auto& e : t.entries) population += e.sites;
  std::vector<std::uint64_t> n(t.entries.size());
  for (std::size_t j = 0; j < n.size(); ++j) {
    const double share = static_cast<double>(total_samples) * static_cast<double>(t.entries[j].sites) /
                         static_cast<double>(population);
    n[j] = std::max<std::uint64_t>(opt.min_samples, static_cast<std::uint64_t>(std::llround(share)));
  }
  fill_k_table(t, mu, n, rng, opt.node_cap);
  return t;
}

std::vector<double> table_occupation(const KHatTable& t, const Point& x, const Exhaustion& ex, std::int64_t R,
                                     std::uint64_t paths, RandomStream& rng) {
  std::vector<double> occ(t.entries.size(), 0.0);
  for (std::uint64_t i = 0; i < paths; ++i) {
    Point p = x;
    std::int64_t l1 = l1_norm(p);
    while (ex.contains(p, R)) {
      occ[t.index(p)] += 1.0;
      step(p, l1, rng);
    }
  }
  for (auto& v : occ) v /= static_cast<double>(paths);
  return occ;
}

namespace {

std::vector<std::uint64_t> allocate(const std::vector<double>& weight, std::uint64_t budget, std::uint64_t floor) {
  double total = 0.0;
  for (double w : weight) total += w;
  std::vector<std::uint64_t> n(weight.size(), floor);
  if (total > 0.0)
    for (std::size_t j = 0; j < n.size(); ++j)
      n[j] = std::max<std::uint64_t>(floor, static_cast<std::uint64_t>(
                                                std::llround(static_cast<double>(budget) * weight[j] / total)));
  return n;
}

std::int64_t covering_radius(const Exhaustion& ex, int d, std::int64_t R) {
  if (std::holds_alternative<exhaustion::Ball>(ex.variant())) return std::max<std::int64_t>(R, 1);
  const Box b = ex.bounding_box(d, R);
  double s = 0.0;
  for (int i = 0; i < d; ++i) {
    const double m = static_cast<double>(std::max(std::llabs(b.lo[i]), std::llabs(b.hi[i])));
    s += m * m;
  }
  return static_cast<std::int64_t>(std::ceil(std::sqrt(s)));
}

}  // namespace

KHatTable build_k_table_for_walk(const OffspringLaw& mu, const Point& x, const Exhaustion& ex, std::int64_t R,
                                 std::uint64_t total_samples, RandomStream& rng, const KHatOptions& opt) {
  ex.check_dimension_compatible(x.d);
  KHatTable t = k_table_layout(x.d, covering_radius(ex, x.d, R), opt.orbit_radius);
  const auto occ = table_occupation(t, x, ex, R, opt.pilot_paths, rng);
  // A tenth of the budget, spread by occupation, gives rough values of k; the
  // rest goes where occupation * sd(k) is largest, which minimises the first-order
  // table variance of the walk estimate. Only the second batch enters the table.
  const std::uint64_t first = total_samples / 10;
  fill_k_table(t, mu, allocate(occ, first, opt.min_samples), rng, opt.node_cap);
  std::vector<double> w(occ.size());
  for (std::size_t j = 0; j < w.size(); ++j) {
    const auto& e = t.entries[j];
    const double k = std::max(e.k, 1.0 / static_cast<double>(e.n));
    w[j] = occ[j] * std::sqrt(k * std::max(1.0 - e.k, 1.0 / static_cast<double>(e.n)));
  }
  fill_k_table(t, mu, allocate(w, total_samples - first, opt.min_samples), rng, opt.node_cap);
  return t;
}

// ---------------------------------------------------------------- snake vs KRW

std::string to_string(SnakeOutcome o) {
  switch (o) {
    case SnakeOutcome::HitBefore0:
      return "hit-before-0";
    case SnakeOutcome::Hit0First:
      return "hit-0-first";
    case SnakeOutcome::Inconclusive:
      return "inconclusive";
  }
  return "?";
}

SnakeOutcome snake_trial(const Point& x, const HitSampler& bushes, const Exhaustion& ex, std::int64_t R,
                         RandomStream& rng, const SnakeOptions& opt) {
  Point s = x;
  for (std::uint64_t j = 0;; ++j) {
    if (!ex.contains(s, R)) return SnakeOutcome::HitBefore0;
    if (j >= opt.spine_cap) return SnakeOutcome::Inconclusive;
    auto b = bushes.multitype(s, opt.node_cap, rng);
    if (b.capped) return SnakeOutcome::Inconclusive;
    if (b.hit) return SnakeOutcome::Hit0First;
    s = random_neighbor(s, rng);
  }
}

SnakeEscapeReport snake_escape_probability(const Point& x, const OffspringLaw& mu, const Exhaustion& ex,
                                           std::int64_t R, std::uint64_t samples, RandomStream& rng,
                                           const SnakeOptions& opt) {
  if (x.is_origin()) throw std::invalid_argument("snake escape needs a start away from 0");
  if (samples == 0) throw std::invalid_argument("snake escape needs at least one sample");
  ex.check_dimension_compatible(x.d);
  HitSampler sampler(mu);
  const std::uint64_t blocks = (samples + kBlock - 1) / kBlock;
  const std::uint64_t salt = rng.draw_salt();
  std::vector<std::array<std::uint64_t, 3>> counts(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    RandomStream s = rng.substream(salt, b);
    const std::uint64_t n = std::min(kBlock, samples - b * kBlock);
    for (std::uint64_t i = 0; i < n; ++i) ++counts[b][static_cast<std::size_t>(snake_trial(x, sampler, ex, R, s, opt))];
  });
  SnakeEscapeReport rep;
  for (const auto& c : counts) {
    rep.hit_before_0 += c[0];
    rep.hit_0_first += c[1];
    rep.inconclusive += c[2];
  }
  rep.estimate = half_count_estimate(rep.hit_before_0, rep.inconclusive, samples, rng);
  return rep;
}

double KrwTableEstimate::combined_stderr() const {
  return std::sqrt(walk.stderr_ * walk.stderr_ + table_stderr * table_stderr);
}

KrwTableEstimate krw_escape_with_table(const Point& x, const KHatTable& table, const Exhaustion& ex,
                                       std::int64_t R, std::uint64_t samples, RandomStream& rng,
                                       std::uint64_t spine_cap) {
  if (samples == 0) throw std::invalid_argument("KRW estimate needs at least one sample");
  ex.check_dimension_compatible(x.d);
  const std::size_t m = table.entries.size();
  const std::uint64_t blocks = (samples + kBlock - 1) / kBlock;
  const std::uint64_t salt = rng.draw_salt();
  std::vector<RunningStats> stats(blocks);
  std::vector<std::vector<double>> grad(blocks, std::vector<double>(m, 0.0));
  parallel_for(blocks, [&](std::size_t b) {
    RandomStream s = rng.substream(salt, b);
    const std::uint64_t n = std::min(kBlock, samples - b * kBlock);
    std::vector<std::size_t> visits;
    for (std::uint64_t i = 0; i < n; ++i) {
      visits.clear();
      Point p = x;
      double w = 1.0;
      std::uint64_t steps = 0;
      while (ex.contains(p, R) && w > 0.0) {
        if (++steps > spine_cap) throw std::runtime_error("KRW path exceeded the step cap before leaving the domain");
        const std::size_t j = table.index(p);
        visits.push_back(j);
        w *= 1.0 - table.entries[j].k;
        p = random_neighbor(p, s);
      }
      stats[b].add(w);
      if (w == 0.0) continue;
      // d w / d k_j = -c_j w / (1 - k_j) for an entry visited c_j times.
      std::sort(visits.begin(), visits.end());
      for (std::size_t a = 0; a < visits.size();) {
        std::size_t e = a;
        while (e < visits.size() && visits[e] == visits[a]) ++e;
        grad[b][visits[a]] -= static_cast<double>(e - a) * w / (1.0 - table.entries[visits[a]].k);
        a = e;
      }
    }
  });
  RunningStats all;
  std::vector<double> g(m, 0.0);
  for (std::uint64_t b = 0; b < blocks; ++b) {
    all.merge(stats[b]);
    for (std::size_t j = 0; j < m; ++j) g[j] += grad[b][j];
  }
  KrwTableEstimate out;
  out.walk = all.estimate(rng.seed(), rng.stream_id());
  double var = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double gj = g[j] / static_cast<double>(samples);
    var += gj * gj * table.entries[j].stderr_ * table.entries[j].stderr_;
  }
  out.table_stderr = std::sqrt(var);
  return out;
}

// ---------------------------------------------------------------- conditioned snake

LabeledTree sample_conditioned_snake(const Point& x, const OffspringLaw& mu, const KillingField& k_hat,
                                     const std::function<double(const Point&)>& a, std::size_t n,
                                     RandomStream& rng, const ConditionedSnakeOptions& opt) {
  if (!(a(x) > 0.0)) throw std::invalid_argument("weight a must be positive at the start " + x.str());
  auto kernel = build_conditioned_kernel(k_hat, a);
  auto spine = sample_conditioned_path(kernel, x, static_cast<std::int64_t>(n), rng);
  LabeledTree t;
  for (std::size_t i = 0; i <= n; ++i) {
    const std::size_t u = t.size();
    t.parent.push_back(i == 0 ? -1 : static_cast<std::int64_t>(t.spine.back()));
    t.label.push_back(spine[i]);
    t.bush.push_back(i < n ? static_cast<int>(i) : -1);
    t.spine.push_back(u);
    if (i == n) break;
    const Point& s = spine[i];
    for (std::uint64_t attempt = 1;; ++attempt) {
      if (attempt > opt.max_attempts)
        throw std::runtime_error("bush rejection stalled at spine site " + s.str() + " after " +
                                 std::to_string(opt.max_attempts) + " attempts");
      auto bush = sample_multitype_tree(mu, opt.node_cap, rng);
      if (bush.cap_exceeded) continue;
      bush = index_walk(std::move(bush), s, rng);
      if (bush.contains_label(Point(s.d))) continue;
      // Node 0 of the bush is the spine vertex itself.
      const std::size_t offset = t.size() - 1;
      for (std::size_t v = 1; v < bush.size(); ++v) {
        const auto p = static_cast<std::size_t>(bush.parent[v]);
        t.parent.push_back(static_cast<std::int64_t>(p == 0 ? u : p + offset));
        t.label.push_back(bush.label[v]);
        t.bush.push_back(static_cast<int>(i));
      }
      break;
    }
  }
  return t;
}

void write_edge_list(std::ostream& os, const LabeledTree& tree) {
  std::vector<char> on_spine(tree.size(), 0);
  for (auto u : tree.spine) on_spine[u] = 1;
  os << "# id parent bush spine coords\n";
  for (std::size_t i = 0; i < tree.size(); ++i) {
    os << i << ' ' << tree.parent[i] << ' ' << (tree.bush.empty() ? -1 : tree.bush[i]) << ' '
       << static_cast<int>(on_spine[i]);
    if (!tree.label.empty())
      for (int c = 0; c < tree.label[i].d; ++c) os << ' ' << tree.label[i][c];
    os << '\n';
  }
}

}  // namespace krw
