#pragma once

#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "krw/lattice.hpp"

namespace krw {

// Piecewise-linear radial profile: linear interpolation between knots,
// constant extrapolation on both sides.
struct RadialProfile {
  std::vector<double> radii;   // strictly increasing
  std::vector<double> values;  // same length, each in [0,1]
  double operator()(double r) const;
};

namespace killing {

struct IndicatorSet {
  std::vector<Point> points;
  double rate = 1.0;  // in (0,1]
};

// x -> min(1, |x|^-alpha), equal to 1 at the origin.
struct PowerLaw {
  double alpha = 0.0;
};

// x -> min(1, c / (|x|^2 ln max(|x|, e))), equal to 1 at the origin.
struct LogCorrected {
  double c = 1.0;
};

struct Tabulated {
  std::unordered_map<Point, double, PointHash> values;
  // Rule for points absent from the table.
  std::variant<double, RadialProfile> fallback = 0.0;
};

struct Zero {};

}  // namespace killing

class KillingField {
 public:
  using Variant = std::variant<killing::Zero, killing::IndicatorSet, killing::PowerLaw,
                               killing::LogCorrected, killing::Tabulated>;

  KillingField() = default;
  explicit KillingField(Variant v);

  static KillingField zero() { return KillingField(killing::Zero{}); }
  static KillingField indicator(std::vector<Point> points, double rate);
  static KillingField power_law(double alpha);
  static KillingField log_corrected(double c);
  static KillingField tabulated(std::unordered_map<Point, double, PointHash> values,
                                std::variant<double, RadialProfile> fallback = 0.0);
  static KillingField radial(RadialProfile profile);

  // Parses "zero", "power:A", "logcorr:C", "indicator:P1;P2;...:Q" with P as
  // comma-separated coordinates, or "constant:V".
  static KillingField parse(const std::string& spec, int d);

  double operator()(const Point& x) const;

  const Variant& variant() const { return v_; }
  bool is_zero() const;
  // True when k depends on |x| only (Zero, PowerLaw, LogCorrected, radial tables).
  bool is_radial() const;
  // Value as a function of the radius; only meaningful when is_radial().
  double radial_value(double r) const;
  // Canonical text used in manifests and cache fingerprints.
  std::string describe() const;

 private:
  Variant v_;
};

}  // namespace krw
