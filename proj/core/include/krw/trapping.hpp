#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "krw/killing.hpp"
#include "krw/lattice.hpp"

namespace krw {

// Finite-radius version of the escape set: true iff a nearest-neighbour path
// from x reaches {|y| >= search_radius} through sites with k < 1 only.
bool in_escape_set(const KillingField& k, const Point& x, std::int64_t search_radius);

enum class Trapping { Trapped, NotTrapped, Inconclusive };
std::string to_string(Trapping t);

struct TrappingReport {
  Trapping verdict = Trapping::Inconclusive;
  std::vector<double> radii;         // geometric grid M_j
  std::vector<double> partial_sums;  // S_M = sum over 0 < |x| <= M of |x|^(2-d) k(x)
  double tail_slope = 0.0;           // log-log slope of S_{M_j+1} - S_{M_j} against M_j
  std::string reason;
};

struct TrappingOptions {
  double cutoff = 1e12;
  std::int64_t exact_radius = 64;  // shells summed site by site up to here
  double divergent_slope = -0.1;   // slope >= this: log-divergent or faster
  double convergent_slope = -0.2;  // slope <= this: summable
};

// Classifies by the growth of S_M on M = M0 2^j up to the cutoff. Beyond the
// exact radius the radial part of k is integrated: sum over a shell ~ omega_d r k(r) dr.
// The origin term is omitted (finite, and |0|^(2-d) is undefined for d >= 3).
TrappingReport trapping_classifier(const KillingField& k, int d, const TrappingOptions& opt = {});

}  // namespace krw
