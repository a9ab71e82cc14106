#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "config.hpp"
#include "krw/io.hpp"
#include "krw/ratio.hpp"

namespace krwlab {

// Output directory, seed, solve cache and manifest bookkeeping of one run.
class Context {
 public:
  Context(const Resolved& cfg, std::ostream& log);

  const Resolved& cfg() const { return cfg_; }
  std::uint64_t seed() const { return seed_; }
  std::ostream& log() { return log_; }

  // Thread-safe solve behind the cache; every solve is recorded for the manifest.
  krw::EscapeSolver solver();
  krw::SurvivalSolution solve(const krw::KillingField& k, const krw::Exhaustion& ex, int d, std::int64_t R,
                              const krw::RelaxOptions& opt);

  void write(const std::string& name, const std::string& content);
  void write_csv(const std::string& name, const krw::CsvTable& t) { write(name, t.str()); }
  // Adds the seed footer.
  void write_svg(const std::string& name, krw::Plot p);

  json summary = json::object();
  json manifest() const;
  void write_manifest();

 private:
  const Resolved& cfg_;
  std::ostream& log_;
  std::filesystem::path out_;
  std::uint64_t seed_;
  std::unique_ptr<krw::SolveCache> cache_;
  std::mutex mutex_;
  json solves_ = json::array();
  std::uint64_t hits_ = 0, misses_ = 0;
  std::vector<std::string> outputs_;
};

// Validates every field, then computes and writes the outputs.
void run_experiment(Context& ctx);

}  // namespace krwlab
