#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "krw/ratio.hpp"
#include "krw/snake.hpp"
#include "krw/solve.hpp"
#include "krw/stats.hpp"

namespace krw {

// CSV with a mandatory header row, '.' decimals and shortest round-trip doubles.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  CsvTable& row(std::vector<std::string> cells);
  static std::string cell(double v);
  static std::string cell(std::int64_t v);
  static std::string cell(std::uint64_t v);
  static std::string cell(const std::string& v);  // quoted when it contains ',', '"' or a newline

  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_.size(); }
  void write(std::ostream& os) const;
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Writes through a temporary file in the same directory and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

// Columns x_1..x_d, u over the domain of the solve.
CsvTable solution_csv(const SurvivalSolution& sol);

// Compact binary form of a solve; load checks the magic, the version and the sizes.
void save_solution(const std::filesystem::path& path, const SurvivalSolution& sol);
SurvivalSolution load_solution(const std::filesystem::path& path);

// Directory of binary solves named by fingerprint.
class SolveCache {
 public:
  explicit SolveCache(std::filesystem::path dir);

  std::filesystem::path path_for(const std::string& fingerprint) const;
  std::optional<SurvivalSolution> find(const std::string& fingerprint) const;
  void store(const SurvivalSolution& sol) const;
  // solve_escape behind the cache; hits come back with from_cache set.
  SurvivalSolution solve(const KillingField& k, const Exhaustion& ex, int d, std::int64_t R,
                         const RelaxOptions& opt = {});
  EscapeSolver solver();

  std::uint64_t hits() const { return hits_; }
  std::uint64_t misses() const { return misses_; }

 private:
  std::filesystem::path dir_;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
};

// radius, k_hat, stderr, n
CsvTable k_table_csv(const KHatTable& t);
// r, estimate, stderr, n
CsvTable estimate_csv(const std::vector<double>& r, const std::vector<Estimate>& e);
// R, ratio, gap
CsvTable ratio_csv(const RatioCurve& c);
// R, rho_plus, rho_minus, symmetry_residual
CsvTable counterexample_csv(const CounterexampleReport& rep);

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<PlotSeries> series;
  std::string footer;  // seed and provenance line
};

// Self-contained SVG line plot with axes, ticks, legend and footer.
std::string render_svg(const Plot& plot);

}  // namespace krw
