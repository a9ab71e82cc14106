#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "krw/lattice.hpp"

namespace krwlab {

using nlohmann::json;

// Invalid configuration; field is empty for document-level problems and line
// is 0 when the position is unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, int line, const std::string& message);
  const std::string& field() const { return field_; }
  int line() const { return line_; }

 private:
  std::string field_;
  int line_;
};

enum class FieldType { Int, Double, String, Bool, IntList, DoubleList, Point };

struct Field {
  std::string name;  // document key; the flag is --name with '_' written as '-'
  FieldType type;
  json fallback;     // default value, null when the field is optional
  std::string help;
};

struct Schema {
  std::string name;
  std::string summary;
  std::vector<Field> fields;  // experiment fields; common fields are added by all_fields()
  std::vector<Field> all_fields() const;
  const Field* find(const std::string& name) const;
};

// Fields shared by every experiment: seed, out, workers, cache.
const std::vector<Field>& common_fields();
const std::vector<Schema>& schemas();
const Schema* find_schema(const std::string& name);
std::string flag_name(const std::string& field);

// Parses a configuration document. A manifest written by a previous run is
// accepted as well and its resolved config is used.
json parse_document(const std::string& text);

// Defaults, then the document, then flag overrides given as text. Every value
// is type-checked; unknown keys and experiment mismatches are rejected.
class Resolved {
 public:
  Resolved(const Schema& schema, const json& document, std::string document_text,
           const std::map<std::string, std::string>& overrides);

  const Schema& schema() const { return *schema_; }
  const json& values() const { return values_; }
  bool has(const std::string& name) const;

  // Typed accessors; range violations raise ConfigError naming the field.
  std::int64_t integer(const std::string& name, std::int64_t min, std::int64_t max = INT64_MAX) const;
  double real(const std::string& name, double min, double max) const;
  std::string text(const std::string& name) const;
  bool flag(const std::string& name) const;
  std::vector<std::int64_t> integers(const std::string& name, std::int64_t min) const;
  std::vector<double> reals(const std::string& name, double min, double max) const;
  krw::Point point(const std::string& name) const;

  // ConfigError for name, located in the document when the key appears there.
  [[noreturn]] void fail(const std::string& name, const std::string& message) const;

 private:
  const Schema* schema_;
  json values_;
  std::string text_;
  std::map<std::string, std::string> origin_;  // "default", "config" or "flag"
};

int line_of_key(const std::string& text, const std::string& key);

}  // namespace krwlab
