#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "krw/exhaustion.hpp"
#include "krw/grid.hpp"
#include "krw/killing.hpp"
#include "krw/relax.hpp"

namespace krw {

// u(x) = P_x[tau(Lambda_R^c) < tau(Delta)] on Lambda_R, 1 elsewhere.
struct SurvivalSolution {
  int d = 0;
  std::int64_t R = 0;
  std::string killing;
  std::string exhaustion;
  double tol = 0.0;
  LinearSystem system;
  RelaxReport report;
  bool from_cache = false;

  double operator()(const Point& x) const { return system.value(x, 1.0); }
  bool in_domain(const Point& x) const { return system.in_domain(x); }
  std::vector<Point> domain_points() const;
  std::size_t domain_size() const { return system.domain_size(); }
  std::string fingerprint;  // cache key of (killing, exhaustion, d, R, tolerance)
};

std::string solution_fingerprint(const KillingField& k, const Exhaustion& ex, int d, std::int64_t R,
                                 const RelaxOptions& opt);

SurvivalSolution solve_escape(const KillingField& k, const Exhaustion& ex, int d, std::int64_t R,
                              const RelaxOptions& opt = {});

// General Dirichlet solve on an arbitrary finite domain: u = M u + source on the
// domain, u = boundary elsewhere. Used for Green functions and path splitting.
LinearSystem solve_dirichlet(const Box& box, const DomainPredicate& member, const KillingField& k,
                             const PointFunction& boundary, const PointFunction& source,
                             const RelaxOptions& opt = {}, RelaxReport* report = nullptr);

}  // namespace krw
