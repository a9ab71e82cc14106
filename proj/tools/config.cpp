#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace krwlab {

namespace {

std::string where(const std::string& field, int line) {
  std::string s;
  if (line > 0) s += "line " + std::to_string(line) + ": ";
  if (!field.empty()) s += "field '" + field + "': ";
  return s;
}

std::string type_name(FieldType t) {
  switch (t) {
    case FieldType::Int: return "an integer";
    case FieldType::Double: return "a number";
    case FieldType::String: return "a string";
    case FieldType::Bool: return "a boolean";
    case FieldType::IntList: return "a list of integers";
    case FieldType::DoubleList: return "a list of numbers";
    case FieldType::Point: return "a lattice point";
  }
  return "a value";
}

bool is_integer(const json& v) {
  if (v.is_number_integer()) return true;
  if (!v.is_number_float()) return false;
  const double x = v.get<double>();
  return std::isfinite(x) && std::floor(x) == x && std::abs(x) < 9e15;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

// Strict text to number conversions for flag values.
bool parse_double(const std::string& s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stod(t, &pos);
  } catch (...) {
    return false;
  }
  return pos == t.size();
}

// Integers may be written as 1e6.
bool parse_int(const std::string& s, std::int64_t& out) {
  double d = 0;
  if (!parse_double(s, d) || std::floor(d) != d || std::abs(d) >= 9e15) return false;
  out = static_cast<std::int64_t>(d);
  return true;
}

// Converts and checks a document value; returns the normalised JSON.
json normalise(const Field& f, const json& v, int line) {
  auto bad = [&] { return ConfigError(f.name, line, "expected " + type_name(f.type) + ", got " + v.dump()); };
  switch (f.type) {
    case FieldType::Int:
      if (!is_integer(v)) throw bad();
      return json(v.is_number_integer() ? v.get<std::int64_t>() : static_cast<std::int64_t>(v.get<double>()));
    case FieldType::Double:
      if (!v.is_number()) throw bad();
      return json(v.get<double>());
    case FieldType::String:
      if (!v.is_string()) throw bad();
      return v;
    case FieldType::Bool:
      if (!v.is_boolean()) throw bad();
      return v;
    case FieldType::IntList: {
      if (!v.is_array() || v.empty()) throw bad();
      json out = json::array();
      for (const auto& e : v) {
        if (!is_integer(e)) throw bad();
        out.push_back(e.is_number_integer() ? e.get<std::int64_t>() : static_cast<std::int64_t>(e.get<double>()));
      }
      return out;
    }
    case FieldType::DoubleList: {
      if (!v.is_array() || v.empty()) throw bad();
      json out = json::array();
      for (const auto& e : v) {
        if (!e.is_number()) throw bad();
        out.push_back(e.get<double>());
      }
      return out;
    }
    case FieldType::Point: {
      if (v.is_string()) {
        try {
          krw::Point p = krw::parse_point(v.get<std::string>());
          return json(p.str());
        } catch (const std::exception& e) {
          throw ConfigError(f.name, line, e.what());
        }
      }
      if (!v.is_array() || v.empty() || v.size() > static_cast<std::size_t>(krw::kMaxDim)) throw bad();
      std::string s;
      for (const auto& e : v) {
        if (!is_integer(e)) throw bad();
        if (!s.empty()) s += ",";
        s += std::to_string(e.is_number_integer() ? e.get<std::int64_t>() : static_cast<std::int64_t>(e.get<double>()));
      }
      return json(s);
    }
  }
  throw bad();
}

// Flag text to the JSON a document would hold.
json from_text(const Field& f, const std::string& s) {
  auto bad = [&] { return ConfigError(f.name, 0, "expected " + type_name(f.type) + ", got '" + s + "'"); };
  switch (f.type) {
    case FieldType::Int: {
      std::int64_t v = 0;
      if (!parse_int(s, v)) throw bad();
      return json(v);
    }
    case FieldType::Double: {
      double v = 0;
      if (!parse_double(s, v)) throw bad();
      return json(v);
    }
    case FieldType::String: return json(s);
    case FieldType::Bool:
      if (s == "true" || s == "1" || s == "yes" || s == "on") return json(true);
      if (s == "false" || s == "0" || s == "no" || s == "off") return json(false);
      throw bad();
    case FieldType::IntList: {
      json out = json::array();
      for (const auto& item : split(s, ',')) {
        std::int64_t v = 0;
        if (!parse_int(item, v)) throw bad();
        out.push_back(v);
      }
      if (out.empty()) throw bad();
      return out;
    }
    case FieldType::DoubleList: {
      json out = json::array();
      for (const auto& item : split(s, ',')) {
        double v = 0;
        if (!parse_double(item, v)) throw bad();
        out.push_back(v);
      }
      if (out.empty()) throw bad();
      return out;
    }
    case FieldType::Point: return normalise(f, json(s), 0);
  }
  throw bad();
}

Field int_field(std::string name, std::int64_t v, std::string help) {
  return {std::move(name), FieldType::Int, json(v), std::move(help)};
}
Field real_field(std::string name, double v, std::string help) {
  return {std::move(name), FieldType::Double, json(v), std::move(help)};
}
Field text_field(std::string name, json v, std::string help) {
  return {std::move(name), FieldType::String, std::move(v), std::move(help)};
}
Field point_field(std::string name, json v, std::string help) {
  return {std::move(name), FieldType::Point, std::move(v), std::move(help)};
}
Field ints_field(std::string name, std::vector<std::int64_t> v, std::string help) {
  return {std::move(name), FieldType::IntList, json(v), std::move(help)};
}
Field reals_field(std::string name, std::vector<double> v, std::string help) {
  return {std::move(name), FieldType::DoubleList, json(v), std::move(help)};
}
Field bool_field(std::string name, bool v, std::string help) {
  return {std::move(name), FieldType::Bool, json(v), std::move(help)};
}

const char* kKillingHelp = "killing field: zero, power:A, logcorr:C, constant:V or indicator:P1;P2:Q";
const char* kExhaustionHelp = "exhaustion: ball, halfspace:AXIS:SIGN[:FACTOR] or segment:BM,BP";
const char* kLawHelp = "offspring law: geometric, single or pmf:p0,p1,...";

std::vector<Schema> build_schemas() {
  std::vector<Schema> s;
  s.push_back({"solve",
               "one escape-probability solve with the conditioned first-step law",
               {int_field("d", 2, "dimension"),
                text_field("killing", "power:1.6", kKillingHelp),
                text_field("exhaustion", "ball", kExhaustionHelp),
                text_field("segment", nullptr, "shorthand for exhaustion segment:BM,BP (d = 1)"),
                int_field("R", 32, "exhaustion index"),
                point_field("x", nullptr, "point for the first-step law (default origin)"),
                real_field("tol", 1e-13, "relative residual tolerance")}});
  s.push_back({"ratio",
               "ratio u_R(x)/u_R(x0) along an R-sweep",
               {int_field("d", 2, "dimension"),
                text_field("killing", "indicator:0,0:1", kKillingHelp),
                text_field("exhaustion", "ball", kExhaustionHelp),
                point_field("x", "2,0", "numerator point"),
                point_field("x0", "1,0", "reference point"),
                ints_field("R", {16, 32, 64}, "increasing exhaustion indices"),
                real_field("tol", 1e-13, "relative residual tolerance")}});
  s.push_back({"counterexample",
               "mirrored half-plane ratios for k = min(1, |x|^-alpha) in d = 2",
               {real_field("alpha", 1.6, "decay exponent in [0,2)"),
                int_field("r", 16, "the points are (r,0) and (-r,0)"),
                ints_field("R", {64, 128, 256}, "increasing exhaustion indices"),
                real_field("factor", 8.0, "truncation radius factor * R"),
                real_field("tol", 1e-13, "relative residual tolerance")}});
  s.push_back({"potential-kernel",
               "planar potential kernel a(x) on |x|_inf <= max",
               {int_field("max", 5, "largest coordinate"),
                int_field("nodes", 4096, "trapezoid nodes per axis (even)")}});
  s.push_back({"hitting",
               "P_x[tau(y) < tau(0)] in Z^2: closed form against Monte Carlo",
               {point_field("x", "3,1", "start"),
                point_field("y", "-2,4", "target"),
                int_field("samples", 1000000, "Monte Carlo paths"),
                real_field("far_radius", 2048.0, "radius at which a path scores 1/2")}});
  s.push_back({"green",
               "Green function g(0, x) of the simple walk in d >= 3 along the first axis",
               {int_field("d", 3, "dimension"),
                ints_field("radii", {1, 2, 4, 8}, "points x = (n, 0, ..., 0)"),
                int_field("box", 32, "radius of the solve box"),
                real_field("tol", 1e-13, "relative residual tolerance")}});
  s.push_back({"snake-k",
               "table of k(x), the probability that a tree-indexed walk from x hits 0",
               {int_field("d", 4, "dimension"),
                text_field("law", "geometric", kLawHelp),
                int_field("max_radius", 16, "largest tabulated radius"),
                int_field("orbit_radius", 8, "one entry per symmetry orbit up to here"),
                int_field("samples", 100000, "total tree samples"),
                int_field("node_cap", 10000000, "node cap per tree")}});
  s.push_back({"snake-escape",
               "escape probability of the infinite snake, optionally against the KRW with a k table",
               {int_field("d", 4, "dimension"),
                text_field("law", "geometric", kLawHelp),
                point_field("x", "4,0,0,0", "start"),
                text_field("exhaustion", "ball", kExhaustionHelp),
                int_field("R", 32, "exhaustion index"),
                int_field("samples", 100000, "snake trials (and KRW paths)"),
                int_field("table_samples", 0, "tree samples for the k table; 0 skips the KRW estimate"),
                int_field("node_cap", 10000000, "node cap per bush")}});
  s.push_back({"snake-condition",
               "prefix of the snake conditioned to avoid 0, written as an edge list",
               {int_field("d", 2, "dimension"),
                text_field("law", "geometric", kLawHelp),
                text_field("killing", "indicator:0,0:1", "killing of the spine walk"),
                point_field("x", "1,0", "start"),
                int_field("steps", 100, "spine length"),
                text_field("weight", "potential", "Doob weight: potential (d = 2) or ratio"),
                int_field("R", 64, "ball radius of the solve behind the ratio weight"),
                int_field("node_cap", 1000, "node cap per bush")}});
  s.push_back({"kbm-annulus",
               "killed Brownian motion: survival from |x| = r to factor * r",
               {reals_field("alpha", {1.0, 1.9}, "decay exponents in (0,2)"),
                real_field("dt", 0.16, "Euler step"),
                reals_field("r", {4, 8, 16, 32}, "inner radii"),
                real_field("factor", 2.0, "outer radius / inner radius"),
                int_field("samples", 20000, "paths per point")}});
  s.push_back({"kbm-directional",
               "killed Brownian motion: escape to the plus and minus sides of B(2^n r)",
               {real_field("alpha", 1.0, "decay exponent in (0,2)"),
                real_field("r", 8.0, "start (r, 0)"),
                int_field("n", 3, "outer radius 2^n r"),
                real_field("dt", 0.64, "Euler step"),
                int_field("particles", 2000, "splitting particles per replicate"),
                int_field("replicates", 20, "independent splitting runs"),
                bool_field("bridge", true, "Brownian-bridge crossing correction")}});
  s.push_back({"trapping",
               "trapped or not trapped, from the growth of sum |x|^(2-d) k(x)",
               {int_field("d", 3, "dimension"),
                text_field("killing", "power:3", kKillingHelp),
                real_field("cutoff", 1e12, "largest radius of the partial sums"),
                int_field("exact_radius", 64, "shells summed site by site up to here")}});
  return s;
}

}  // namespace

ConfigError::ConfigError(std::string field, int line, const std::string& message)
    : std::runtime_error(where(field, line) + message), field_(std::move(field)), line_(line) {}

const std::vector<Field>& common_fields() {
  static const std::vector<Field> f{
      int_field("seed", 1, "random seed"),
      text_field("out", "out", "output directory"),
      int_field("workers", 0, "worker threads (0 = hardware concurrency)"),
      text_field("cache", nullptr, "directory of cached solves"),
  };
  return f;
}

std::vector<Field> Schema::all_fields() const {
  std::vector<Field> out = fields;
  out.insert(out.end(), common_fields().begin(), common_fields().end());
  return out;
}

const Field* Schema::find(const std::string& name) const {
  for (const auto& f : fields)
    if (f.name == name) return &f;
  for (const auto& f : common_fields())
    if (f.name == name) return &f;
  return nullptr;
}

const std::vector<Schema>& schemas() {
  static const std::vector<Schema> s = build_schemas();
  return s;
}

const Schema* find_schema(const std::string& name) {
  for (const auto& s : schemas())
    if (s.name == name) return &s;
  return nullptr;
}

std::string flag_name(const std::string& field) {
  std::string s = field;
  std::replace(s.begin(), s.end(), '_', '-');
  return "--" + s;
}

int line_of_key(const std::string& text, const std::string& key) {
  const std::string quoted = "\"" + key + "\"";
  for (std::size_t pos = text.find(quoted); pos != std::string::npos; pos = text.find(quoted, pos + 1)) {
    std::size_t after = pos + quoted.size();
    while (after < text.size() && std::isspace(static_cast<unsigned char>(text[after]))) ++after;
    if (after < text.size() && text[after] == ':')
      return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
  }
  return 0;
}

json parse_document(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t byte = std::min(e.byte, text.size());
    int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
    if (byte > 0 && byte <= text.size() && text[byte - 1] == '\n') --line;
    std::string msg = e.what();
    const auto colon = msg.find(": ", msg.find("parse error"));
    throw ConfigError("", line, "malformed JSON (" + (colon == std::string::npos ? msg : msg.substr(colon + 2)) + ")");
  }
  if (!doc.is_object()) throw ConfigError("", 1, "the configuration must be a JSON object");
  if (doc.contains("config") && doc.contains("version")) {
    json inner = doc["config"];
    if (!inner.is_object()) throw ConfigError("config", line_of_key(text, "config"), "expected an object");
    if (doc.contains("experiment")) inner["experiment"] = doc["experiment"];
    return inner;
  }
  return doc;
}

Resolved::Resolved(const Schema& schema, const json& document, std::string document_text,
                   const std::map<std::string, std::string>& overrides)
    : schema_(&schema), values_(json::object()), text_(std::move(document_text)) {
  for (const auto& f : schema.all_fields()) {
    values_[f.name] = f.fallback;
    origin_[f.name] = "default";
  }
  if (!document.is_null()) {
    if (!document.is_object()) throw ConfigError("", 1, "the configuration must be a JSON object");
    for (const auto& [key, v] : document.items()) {
      const int line = line_of_key(text_, key);
      if (key == "experiment") {
        if (!v.is_string() || v.get<std::string>() != schema.name)
          throw ConfigError(key, line, "document is for experiment " + v.dump() + ", not \"" + schema.name + "\"");
        continue;
      }
      const Field* f = schema.find(key);
      if (!f) throw ConfigError(key, line, "unknown field for experiment \"" + schema.name + "\"");
      values_[key] = v.is_null() ? json(nullptr) : normalise(*f, v, line);
      origin_[key] = "config";
    }
  }
  for (const auto& [key, s] : overrides) {
    const Field* f = schema.find(key);
    if (!f) throw ConfigError(key, 0, "unknown flag " + flag_name(key));
    values_[key] = from_text(*f, s);
    origin_[key] = "flag";
  }
}

bool Resolved::has(const std::string& name) const { return values_.contains(name) && !values_[name].is_null(); }

void Resolved::fail(const std::string& name, const std::string& message) const {
  auto it = origin_.find(name);
  const bool from_doc = it != origin_.end() && it->second == "config";
  throw ConfigError(name, from_doc ? line_of_key(text_, name) : 0,
                    message + (it != origin_.end() && it->second == "flag" ? " (from " + flag_name(name) + ")" : ""));
}

std::int64_t Resolved::integer(const std::string& name, std::int64_t min, std::int64_t max) const {
  if (!has(name)) fail(name, "is required");
  const auto v = values_[name].get<std::int64_t>();
  if (v < min || v > max)
    fail(name, "must lie in [" + std::to_string(min) + ", " + (max == INT64_MAX ? "inf" : std::to_string(max)) +
                   "], got " + std::to_string(v));
  return v;
}

double Resolved::real(const std::string& name, double min, double max) const {
  if (!has(name)) fail(name, "is required");
  const auto v = values_[name].get<double>();
  if (!std::isfinite(v) || v < min || v > max) {
    std::ostringstream os;
    os << "must lie in [" << min << ", " << max << "], got " << v;
    fail(name, os.str());
  }
  return v;
}

std::string Resolved::text(const std::string& name) const {
  if (!has(name)) fail(name, "is required");
  return values_[name].get<std::string>();
}

bool Resolved::flag(const std::string& name) const {
  if (!has(name)) fail(name, "is required");
  return values_[name].get<bool>();
}

std::vector<std::int64_t> Resolved::integers(const std::string& name, std::int64_t min) const {
  if (!has(name)) fail(name, "is required");
  auto v = values_[name].get<std::vector<std::int64_t>>();
  for (auto x : v)
    if (x < min) fail(name, "entries must be >= " + std::to_string(min) + ", got " + std::to_string(x));
  return v;
}

std::vector<double> Resolved::reals(const std::string& name, double min, double max) const {
  if (!has(name)) fail(name, "is required");
  auto v = values_[name].get<std::vector<double>>();
  for (auto x : v)
    if (!std::isfinite(x) || x < min || x > max) {
      std::ostringstream os;
      os << "entries must lie in [" << min << ", " << max << "], got " << x;
      fail(name, os.str());
    }
  return v;
}

krw::Point Resolved::point(const std::string& name) const {
  if (!has(name)) fail(name, "is required");
  return krw::parse_point(values_[name].get<std::string>());
}

}  // namespace krwlab
