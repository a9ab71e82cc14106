#include "krw/solve.hpp"

#include <iostream>
#include <stdexcept>

#include "krw/hash.hpp"

namespace krw {

std::vector<Point> SurvivalSolution::domain_points() const {
  std::vector<Point> out;
  for (std::size_t i = 0; i < system.u.size(); ++i)
    if (system.domain[i]) out.push_back(system.index.point(i));
  return out;
}

std::string solution_fingerprint(const KillingField& k, const Exhaustion& ex, int d, std::int64_t R,
                                  const RelaxOptions& opt) {
  std::string key = "killing=" + k.describe() + "|exhaustion=" + ex.describe() + "|d=" +
                    std::to_string(d) + "|R=" + std::to_string(R) + "|tol=" + format_double(opt.tol) +
                    "|relative=" + (opt.relative ? "1" : "0");
  return hex64(fnv1a(key));
}

SurvivalSolution solve_escape(const KillingField& k, const Exhaustion& ex, int d, std::int64_t R,
                              const RelaxOptions& opt) {
  ex.check_dimension_compatible(d);
  if (R < 0) throw std::invalid_argument("exhaustion index must be >= 0");
  SurvivalSolution sol;
  sol.d = d;
  sol.R = R;
  sol.killing = k.describe();
  sol.exhaustion = ex.describe();
  sol.tol = opt.tol;
  sol.fingerprint = solution_fingerprint(k, ex, d, R, opt);
  Box box = ex.bounding_box(d, R);
  sol.system = build_system(box, [&](const Point& x) { return ex.contains(x, R); }, k);
  if (sol.system.domain_size() == 0) throw std::invalid_argument("exhaustion set Lambda_R is empty");
  sol.report = relax(sol.system, opt);
  if (sol.report.tiny_values > 0)
    std::cerr << "warning: " << sol.report.tiny_values << " escape probabilities below 1e-290 (R=" << R
              << ", killing " << sol.killing << "); ratios involving them are unreliable\n";
  return sol;
}

LinearSystem solve_dirichlet(const Box& box, const DomainPredicate& member, const KillingField& k,
                             const PointFunction& boundary, const PointFunction& source,
                             const RelaxOptions& opt, RelaxReport* report) {
  LinearSystem sys = build_system(box, member, k, boundary ? boundary : [](const Point&) { return 0.0; });
  if (source) {
    sys.source.assign(sys.u.size(), 0.0);
    for (std::size_t i = 0; i < sys.u.size(); ++i)
      if (sys.domain[i]) sys.source[i] = source(sys.index.point(i));
  }
  RelaxReport r = relax(sys, opt);
  if (report) *report = r;
  return sys;
}

}  // namespace krw
