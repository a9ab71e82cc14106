#include "krw/killing.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "krw/hash.hpp"

namespace krw {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double RadialProfile::operator()(double r) const {
  if (radii.empty()) return 0.0;
  if (r <= radii.front()) return values.front();
  if (r >= radii.back()) return values.back();
  auto it = std::upper_bound(radii.begin(), radii.end(), r);
  std::size_t j = static_cast<std::size_t>(it - radii.begin());
  double r0 = radii[j - 1], r1 = radii[j];
  double t = (r - r0) / (r1 - r0);
  return values[j - 1] + t * (values[j] - values[j - 1]);
}

namespace {

void check_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(std::string(what) + " must lie in [0,1]");
}

void validate(const RadialProfile& p) {
  if (p.radii.size() != p.values.size() || p.radii.empty())
    throw std::invalid_argument("radial profile needs matching, non-empty radii and values");
  for (std::size_t i = 0; i < p.radii.size(); ++i) {
    check_unit(p.values[i], "radial profile value");
    if (i && !(p.radii[i] > p.radii[i - 1]))
      throw std::invalid_argument("radial profile radii must be strictly increasing");
  }
}

double power_law_value(double alpha, double r) {
  if (r == 0.0) return 1.0;
  return std::min(1.0, std::pow(r, -alpha));
}

double log_corrected_value(double c, double r) {
  if (r == 0.0) return 1.0;
  double l = std::log(std::max(r, std::exp(1.0)));
  return std::min(1.0, c / (r * r * l));
}

}  // namespace

KillingField::KillingField(Variant v) : v_(std::move(v)) {
  std::visit(
      [](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, killing::IndicatorSet>) {
          if (!(f.rate > 0.0 && f.rate <= 1.0))
            throw std::invalid_argument("indicator rate must lie in (0,1]");
          for (std::size_t i = 1; i < f.points.size(); ++i)
            if (f.points[i].d != f.points[0].d)
              throw std::invalid_argument("indicator points must share one dimension");
        } else if constexpr (std::is_same_v<T, killing::PowerLaw>) {
          if (!(f.alpha >= 0.0)) throw std::invalid_argument("power-law exponent must be >= 0");
        } else if constexpr (std::is_same_v<T, killing::LogCorrected>) {
          if (!(f.c > 0.0)) throw std::invalid_argument("log-corrected constant must be > 0");
        } else if constexpr (std::is_same_v<T, killing::Tabulated>) {
          for (const auto& [p, v] : f.values) check_unit(v, "tabulated killing value");
          if (std::holds_alternative<double>(f.fallback))
            check_unit(std::get<double>(f.fallback), "tabulated fallback");
          else
            validate(std::get<RadialProfile>(f.fallback));
        }
      },
      v_);
}

KillingField KillingField::indicator(std::vector<Point> points, double rate) {
  return KillingField(killing::IndicatorSet{std::move(points), rate});
}
KillingField KillingField::power_law(double alpha) { return KillingField(killing::PowerLaw{alpha}); }
KillingField KillingField::log_corrected(double c) { return KillingField(killing::LogCorrected{c}); }
KillingField KillingField::tabulated(std::unordered_map<Point, double, PointHash> values,
                                     std::variant<double, RadialProfile> fallback) {
  return KillingField(killing::Tabulated{std::move(values), std::move(fallback)});
}
KillingField KillingField::radial(RadialProfile profile) {
  return tabulated({}, std::move(profile));
}

double KillingField::operator()(const Point& x) const {
  return std::visit(
      [&](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, killing::Zero>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, killing::IndicatorSet>) {
          for (const auto& p : f.points)
            if (p == x) return f.rate;
          return 0.0;
        } else if constexpr (std::is_same_v<T, killing::PowerLaw>) {
          return power_law_value(f.alpha, x.norm());
        } else if constexpr (std::is_same_v<T, killing::LogCorrected>) {
          return log_corrected_value(f.c, x.norm());
        } else {
          auto it = f.values.find(x);
          if (it != f.values.end()) return it->second;
          if (std::holds_alternative<double>(f.fallback)) return std::get<double>(f.fallback);
          return std::get<RadialProfile>(f.fallback)(x.norm());
        }
      },
      v_);
}

bool KillingField::is_zero() const {
  if (std::holds_alternative<killing::Zero>(v_)) return true;
  if (auto t = std::get_if<killing::Tabulated>(&v_)) {
    if (!std::holds_alternative<double>(t->fallback) || std::get<double>(t->fallback) != 0.0)
      return false;
    return std::all_of(t->values.begin(), t->values.end(), [](auto& kv) { return kv.second == 0.0; });
  }
  return false;
}

bool KillingField::is_radial() const {
  if (std::holds_alternative<killing::IndicatorSet>(v_)) return false;
  if (auto t = std::get_if<killing::Tabulated>(&v_)) return t->values.empty();
  return true;
}

double KillingField::radial_value(double r) const {
  return std::visit(
      [&](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, killing::Zero>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, killing::IndicatorSet>) {
          throw std::logic_error("indicator killing is not radial");
        } else if constexpr (std::is_same_v<T, killing::PowerLaw>) {
          return power_law_value(f.alpha, r);
        } else if constexpr (std::is_same_v<T, killing::LogCorrected>) {
          return log_corrected_value(f.c, r);
        } else {
          if (std::holds_alternative<double>(f.fallback)) return std::get<double>(f.fallback);
          return std::get<RadialProfile>(f.fallback)(r);
        }
      },
      v_);
}

std::string KillingField::describe() const {
  return std::visit(
      [](const auto& f) -> std::string {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, killing::Zero>) {
          return "zero";
        } else if constexpr (std::is_same_v<T, killing::IndicatorSet>) {
          std::string s = "indicator:";
          for (std::size_t i = 0; i < f.points.size(); ++i) {
            if (i) s += ';';
            s += f.points[i].str();
          }
          return s + ":" + format_double(f.rate);
        } else if constexpr (std::is_same_v<T, killing::PowerLaw>) {
          return "power:" + format_double(f.alpha);
        } else if constexpr (std::is_same_v<T, killing::LogCorrected>) {
          return "logcorr:" + format_double(f.c);
        } else {
          if (f.values.empty() && std::holds_alternative<double>(f.fallback))
            return "constant:" + format_double(std::get<double>(f.fallback));
          // Sorted so the text does not depend on hash-map iteration order.
          std::map<Point, double> sorted(f.values.begin(), f.values.end());
          std::string body;
          for (const auto& [p, v] : sorted) body += p.str() + "=" + format_double(v) + ";";
          if (std::holds_alternative<double>(f.fallback)) {
            body += "else=" + format_double(std::get<double>(f.fallback));
          } else {
            const auto& prof = std::get<RadialProfile>(f.fallback);
            body += "radial=";
            for (std::size_t i = 0; i < prof.radii.size(); ++i)
              body += format_double(prof.radii[i]) + ":" + format_double(prof.values[i]) + ",";
          }
          return "table:" + std::to_string(f.values.size()) + ":" + hex64(fnv1a(body));
        }
      },
      v_);
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, sep)) out.push_back(tok);
  return out;
}

double parse_number(const std::string& s, const std::string& spec) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("bad number '" + s + "' in killing spec '" + spec + "'");
  }
}

}  // namespace

KillingField KillingField::parse(const std::string& spec, int d) {
  check_dimension(d);
  auto parts = split(spec, ':');
  if (parts.empty()) throw std::invalid_argument("empty killing spec");
  const std::string& kind = parts[0];
  if (kind == "zero" && parts.size() == 1) return zero();
  if (kind == "power" && parts.size() == 2) return power_law(parse_number(parts[1], spec));
  if (kind == "logcorr" && parts.size() == 2) return log_corrected(parse_number(parts[1], spec));
  if (kind == "constant" && parts.size() == 2) return tabulated({}, parse_number(parts[1], spec));
  if (kind == "indicator" && parts.size() == 3) {
    std::vector<Point> pts;
    for (const auto& ptxt : split(parts[1], ';')) {
      Point p = parse_point(ptxt);
      if (p.d == 1 && d > 1 && p[0] == 0) p = Point(d);  // "0" is shorthand for the origin
      if (p.d != d)
        throw std::invalid_argument("indicator point '" + ptxt + "' does not have dimension " +
                                    std::to_string(d));
      pts.push_back(p);
    }
    return indicator(std::move(pts), parse_number(parts[2], spec));
  }
  throw std::invalid_argument("unrecognised killing spec '" + spec +
                              "' (expected zero, power:A, logcorr:C, constant:V or indicator:PTS:Q)");
}

}  // namespace krw
