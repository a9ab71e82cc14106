#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "krw/grid.hpp"

namespace krw {

enum class SweepOrder { RedBlack, Lexicographic };

struct RelaxOptions {
  double tol = 1e-13;
  std::int64_t max_sweeps = 1'000'000;
  // Over-relaxation factor in [1,2); 0 selects the adaptive estimate.
  double omega = 0.0;
  SweepOrder order = SweepOrder::RedBlack;
  // Pointwise relative residual |r(x)| <= tol |u(x)| (true) or absolute |r(x)| <= tol.
  bool relative = true;
};

struct RelaxReport {
  std::int64_t sweeps = 0;
  double max_abs_residual = 0.0;
  double max_rel_residual = 0.0;
  double omega = 1.0;
  int refinements = 0;              // correction solves after the rounding floor was reached
  bool converged = false;
  double min_positive = 0.0;        // smallest positive value in the domain
  std::size_t tiny_values = 0;      // domain values in (0, 1e-290)
  std::size_t structural_zeros = 0; // cells whose value is identically zero
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double last_residual)
      : std::runtime_error(what), last_residual_(last_residual) {}
  double last_residual() const { return last_residual_; }

 private:
  double last_residual_;
};

inline constexpr double kUnderflowFloor = 1e-290;

// Successive over-relaxation until the residual criterion holds. When the
// iterate stalls at its rounding floor the remaining error is removed by
// iterative refinement (a correction solve driven by the current residual).
// Throws SolverError when max_sweeps is reached first.
RelaxReport relax(LinearSystem& sys, const RelaxOptions& opt = {});

struct Residual {
  double max_abs = 0.0;
  double max_rel = 0.0;
};
Residual residual(const LinearSystem& sys);

}  // namespace krw
