#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "krw/exhaustion.hpp"
#include "krw/killing.hpp"
#include "krw/lattice.hpp"
#include "krw/random.hpp"
#include "krw/stats.hpp"

namespace krw {

// Critical offspring law with finite variance: a finite probability vector or
// the Geometric(1/2) law mu(i) = 2^-(i+1).
class OffspringLaw {
 public:
  explicit OffspringLaw(std::vector<double> pmf);
  static OffspringLaw geometric_half();
  // delta_0 with a root that has no children either: every bush is a single
  // vertex, so the snake reduces to a SRW killed at 0. Not critical; only the
  // snake drivers accept it.
  static OffspringLaw single_node();

  bool is_geometric() const { return geometric_; }
  bool is_single_node() const { return single_; }
  double pmf(int i) const;
  double size_biased(int i) const { return i * pmf(i); }
  double variance() const;
  // Generating function f(s) = sum mu(i) s^i.
  double generating(double s) const;
  int max_support() const;  // -1 for unbounded support

  int sample(RandomStream& rng) const;
  // Root offspring of a multitype tree: i with probability mu*(i + 1).
  int sample_root(RandomStream& rng) const;

  // "geometric", "single" or "pmf:p0,p1,..."
  static OffspringLaw parse(const std::string& spec);
  std::string describe() const;

 private:
  OffspringLaw() = default;
  bool geometric_ = false;
  bool single_ = false;
  std::vector<double> pmf_;
  std::vector<double> cdf_;
  std::vector<double> root_cdf_;
};

struct LabeledTree {
  std::vector<std::int64_t> parent;  // -1 at the root, which is node 0
  std::vector<Point> label;          // empty until index_walk
  // Truncated Kesten trees: spine vertices u_0..u_n and the bush of every node
  // (bush i hangs from u_i; u_n carries no bush and has bush index -1).
  std::vector<std::size_t> spine;
  std::vector<int> bush;
  bool cap_exceeded = false;

  std::size_t size() const { return parent.size(); }
  std::vector<std::vector<std::size_t>> children() const;
  bool contains_label(const Point& x) const;
};

// Breadth-first mu-GW tree; stops at node_cap nodes and flags cap_exceeded.
LabeledTree sample_gw_tree(const OffspringLaw& mu, std::size_t node_cap, RandomStream& rng);
// As above with root offspring law mu* - 1.
LabeledTree sample_multitype_tree(const OffspringLaw& mu, std::size_t node_cap, RandomStream& rng);
// Labels the root with start and every edge with an independent uniform unit step.
LabeledTree index_walk(LabeledTree tree, const Point& start, RandomStream& rng);

// Decides whether a tree-indexed SRW reaches 0 without building the whole tree.
// A subtree whose root is at l1 distance D from 0 can only reach 0 if its height
// is at least D; heights are sampled first from the exact height law and only
// subtrees tall enough to matter are expanded. The answer has the same law as
// the one read off a full sample.
class HitSampler {
 public:
  explicit HitSampler(OffspringLaw mu);

  struct Result {
    bool hit = false;
    bool capped = false;     // node_cap reached before the answer was known
    std::uint64_t nodes = 0;  // expanded nodes
  };
  Result multitype(const Point& start, std::size_t node_cap, RandomStream& rng) const;
  Result plain(const Point& start, std::size_t node_cap, RandomStream& rng) const;

  const OffspringLaw& law() const { return mu_; }
  // P[height < h] for a mu-GW tree.
  double height_below(std::int64_t h) const;

 private:
  struct Pending {
    Point label;
    std::int64_t l1;
    std::int64_t lo;
    std::int64_t hi;  // -1 for unbounded
  };
  // xoshiro256** seeded by one draw from the caller's stream per sample; the
  // inner loop is dominated by random bits.
  struct Bits {
    std::uint64_t s[4];
    explicit Bits(RandomStream& rng);
    std::uint64_t bits();
  };
  Result run(std::vector<Pending>& stack, std::size_t node_cap, Bits& rng) const;
  void sample_children(std::int64_t a, std::int64_t hi, bool need_short, Bits& rng, int& tall,
                       int& shorter) const;

  OffspringLaw mu_;
  std::vector<double> q_;
};

inline constexpr std::size_t kDefaultNodeCap = 10'000'000;

// k(x) = P_x[multitype-tree-indexed SRW reaches 0]. Capped samples are counted
// as half a hit; lower/upper hold the pessimistic bounds when they are wider
// than the standard error.
Estimate estimate_k(const Point& x, const OffspringLaw& mu, std::uint64_t samples, RandomStream& rng,
                    std::size_t node_cap = kDefaultNodeCap);

// Tabulated killing estimate: one entry per symmetry orbit for |x| <= orbit_radius
// and one per sphere |x|^2 = n beyond that, up to max_radius. Samples are split in
// proportion to the number of sites an entry covers, with a floor of min_samples.
struct KHatEntry {
  double radius = 0.0;
  Point representative;
  bool orbit = false;
  double k = 0.0;
  double stderr_ = 0.0;
  std::uint64_t n = 0;
  std::uint64_t sites = 0;
  std::vector<std::pair<Point, std::uint64_t>> members;  // orbit representatives and sizes
};

struct KHatTable {
  int d = 0;
  std::int64_t orbit_radius = 0;
  std::int64_t max_radius = 0;
  std::vector<KHatEntry> entries;
  std::unordered_map<Point, std::size_t, PointHash> orbit_index;  // keyed by sorted |coordinates|
  std::vector<std::int64_t> sphere_index;                         // by |x|^2, -1 when absent

  void rebuild_index();

  // Entry governing x; sites beyond max_radius use the last sphere.
  std::size_t index(const Point& x) const;
  double operator()(const Point& x) const { return entries[index(x)].k; }
  KillingField field() const;
};

struct KHatOptions {
  std::int64_t orbit_radius = 8;
  std::uint64_t min_samples = 64;
  std::size_t node_cap = kDefaultNodeCap;
  std::uint64_t pilot_paths = 20000;  // occupation pilot of build_k_table_for_walk
};

// Entries without estimates.
KHatTable k_table_layout(int d, std::int64_t max_radius, std::int64_t orbit_radius);
// Fresh estimates for every entry, samples[j] for entry j.
void fill_k_table(KHatTable& t, const OffspringLaw& mu, const std::vector<std::uint64_t>& samples, RandomStream& rng,
                  std::size_t node_cap = kDefaultNodeCap);
// Population-proportional budget.
KHatTable build_k_table(const OffspringLaw& mu, int d, std::int64_t max_radius, std::uint64_t total_samples,
                        RandomStream& rng, const KHatOptions& opt = {});
// Expected number of visits to each entry by a SRW from x before leaving Lambda_R.
std::vector<double> table_occupation(const KHatTable& t, const Point& x, const Exhaustion& ex, std::int64_t R,
                                     std::uint64_t paths, RandomStream& rng);
// Table covering Lambda_R with the budget placed where the walk from x needs it.
KHatTable build_k_table_for_walk(const OffspringLaw& mu, const Point& x, const Exhaustion& ex, std::int64_t R,
                                 std::uint64_t total_samples, RandomStream& rng, const KHatOptions& opt = {});

enum class SnakeOutcome { HitBefore0, Hit0First, Inconclusive };

struct SnakeEscapeReport {
  Estimate estimate;  // inconclusive trials count one half
  std::uint64_t hit_before_0 = 0;
  std::uint64_t hit_0_first = 0;
  std::uint64_t inconclusive = 0;
};

struct SnakeOptions {
  std::uint64_t spine_cap = 100'000'000;
  std::size_t node_cap = kDefaultNodeCap;
};

// One infinite-snake trial: the spine walks from x; at spine index j the exit of
// Lambda_R is checked first, then the bush grafted at S_j is checked for 0.
SnakeOutcome snake_trial(const Point& x, const HitSampler& bushes, const Exhaustion& ex, std::int64_t R,
                         RandomStream& rng, const SnakeOptions& opt = {});

SnakeEscapeReport snake_escape_probability(const Point& x, const OffspringLaw& mu, const Exhaustion& ex,
                                           std::int64_t R, std::uint64_t samples, RandomStream& rng,
                                           const SnakeOptions& opt = {});

// Monte Carlo of P_x[tau(Lambda_R^c) < tau(Delta)] for the KRW killed by the
// table: each SRW path to the exit scores prod (1 - k(S_i)). table_stderr is the
// first-order effect of the table's own sampling error.
struct KrwTableEstimate {
  Estimate walk;
  double table_stderr = 0.0;
  double combined_stderr() const;
};

KrwTableEstimate krw_escape_with_table(const Point& x, const KHatTable& table, const Exhaustion& ex,
                                       std::int64_t R, std::uint64_t samples, RandomStream& rng,
                                       std::uint64_t spine_cap = 100'000'000);

// Prefix of the infinite snake conditioned to avoid 0: the spine follows the Doob
// kernel of (k_hat, a) and each bush is a multitype tree-indexed walk drawn by
// rejection until it avoids 0.
struct ConditionedSnakeOptions {
  std::size_t node_cap = 1'000'000;
  std::uint64_t max_attempts = 1'000'000;  // acceptance below 1e-6 counts as a stall
};

LabeledTree sample_conditioned_snake(const Point& x, const OffspringLaw& mu, const KillingField& k_hat,
                                     const std::function<double(const Point&)>& a, std::size_t n,
                                     RandomStream& rng, const ConditionedSnakeOptions& opt = {});

// One line per node: "id parent bush is_spine x_1 ... x_d".
void write_edge_list(std::ostream& os, const LabeledTree& tree);

std::string to_string(SnakeOutcome o);

}  // namespace krw
