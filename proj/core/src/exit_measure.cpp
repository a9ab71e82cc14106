#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "krw/harmonic.hpp"

namespace krw {

double ExitMeasure::total() const {
  double s = death_mass + leaked_mass;
  for (const auto& [w, h] : weights) s += h;
  return s;
}

ExitMeasure exit_measure(const KillingField& k, const std::vector<Point>& D, const Point& v, double tol) {
  if (!(tol > 0)) throw std::invalid_argument("exit_measure tolerance must be positive");
  std::unordered_map<Point, std::size_t, PointHash> where;
  for (std::size_t i = 0; i < D.size(); ++i) {
    if (D[i].d != v.d) throw std::invalid_argument("domain and start differ in dimension");
    where.emplace(D[i], i);
  }
  auto it = where.find(v);
  if (it == where.end()) throw std::invalid_argument("start point " + v.str() + " is not in the domain");

  // Neighbour table: index into D, or into the exterior list (encoded negative).
  const std::size_t n = D.size();
  const int deg = 2 * v.d;
  std::vector<Point> exterior;
  std::unordered_map<Point, std::size_t, PointHash> exterior_index;
  std::vector<std::int64_t> nb(n * static_cast<std::size_t>(deg));
  std::vector<double> death(n), move(n);
  for (std::size_t i = 0; i < n; ++i) {
    double kx = k(D[i]);
    death[i] = kx;
    move[i] = (1.0 - kx) / deg;
    auto ns = neighbors(D[i]);
    for (int j = 0; j < deg; ++j) {
      auto f = where.find(ns[j]);
      std::int64_t code;
      if (f != where.end()) {
        code = static_cast<std::int64_t>(f->second);
      } else {
        auto [e, inserted] = exterior_index.emplace(ns[j], exterior.size());
        if (inserted) exterior.push_back(ns[j]);
        code = -1 - static_cast<std::int64_t>(e->second);
      }
      nb[i * deg + j] = code;
    }
  }

  ExitMeasure out;
  out.start = v;
  out.domain = D;
  std::vector<double> mass(n, 0.0), next(n, 0.0), exits(exterior.size(), 0.0);
  mass[it->second] = 1.0;
  double inside = 1.0;
  while (inside >= tol) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double m = mass[i];
      if (m == 0.0) continue;
      out.death_mass += m * death[i];
      double share = m * move[i];
      for (int j = 0; j < deg; ++j) {
        std::int64_t c = nb[i * deg + j];
        if (c >= 0)
          next[static_cast<std::size_t>(c)] += share;
        else
          exits[static_cast<std::size_t>(-1 - c)] += share;
      }
    }
    mass.swap(next);
    inside = 0.0;
    for (double m : mass) inside += m;
    ++out.steps;
  }
  out.leaked_mass = inside;
  for (std::size_t e = 0; e < exterior.size(); ++e) out.weights[exterior[e]] = exits[e];
  return out;
}

}  // namespace krw
