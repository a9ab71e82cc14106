#include "krw/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "krw/hash.hpp"

namespace krw {

// ---------------------------------------------------------------- csv

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
  if (header_.empty()) throw std::invalid_argument("CSV header must not be empty");
}

CsvTable& CsvTable::row(std::vector<std::string> cells) {
  if (cells.size() != header_.size())
    throw std::invalid_argument("CSV row has " + std::to_string(cells.size()) + " cells, header has " +
                                std::to_string(header_.size()));
  rows_.push_back(std::move(cells));
  return *this;
}

std::string CsvTable::cell(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return format_double(v);
}

std::string CsvTable::cell(std::int64_t v) { return std::to_string(v); }
std::string CsvTable::cell(std::uint64_t v) { return std::to_string(v); }

std::string CsvTable::cell(const std::string& v) {
  if (v.find_first_of(",\"\n\r") == std::string::npos) return v;
  std::string q = "\"";
  for (char c : v) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

void CsvTable::write(std::ostream& os) const {
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    os << '\n';
  };
  std::vector<std::string> h;
  for (const auto& c : header_) h.push_back(cell(c));
  line(h);
  for (const auto& r : rows_) line(r);
}

std::string CsvTable::str() const {
  std::ostringstream os;
  write(os);
  return os.str();
}

// ---------------------------------------------------------------- files

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw std::runtime_error("write to " + tmp.string() + " failed");
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

CsvTable solution_csv(const SurvivalSolution& sol) {
  std::vector<std::string> header;
  for (int a = 0; a < sol.d; ++a) header.push_back("x" + std::to_string(a + 1));
  header.push_back("u");
  CsvTable t(std::move(header));
  for (const auto& x : sol.domain_points()) {
    std::vector<std::string> cells;
    for (int a = 0; a < sol.d; ++a) cells.push_back(CsvTable::cell(x[a]));
    cells.push_back(CsvTable::cell(sol(x)));
    t.row(std::move(cells));
  }
  return t;
}

// ---------------------------------------------------------------- binary cache

namespace {

constexpr char kMagic[8] = {'K', 'R', 'W', 'S', 'O', 'L', '\0', '\0'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  template <class T>
  void pod(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    buf_.append(reinterpret_cast<const char*>(&v), sizeof v);
  }
  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    buf_ += s;
  }
  template <class T>
  void vec(const std::vector<T>& v) {
    pod<std::uint64_t>(v.size());
    buf_.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(T));
  }
  void raw(const char* p, std::size_t n) { buf_.append(p, n); }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& buf, std::string what) : buf_(buf), what_(std::move(what)) {}
  template <class T>
  T pod() {
    T v;
    need(sizeof v);
    std::memcpy(&v, buf_.data() + pos_, sizeof v);
    pos_ += sizeof v;
    return v;
  }
  std::string str() {
    auto n = pod<std::uint64_t>();
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  template <class T>
  std::vector<T> vec() {
    auto n = pod<std::uint64_t>();
    if (n > (buf_.size() - pos_) / sizeof(T)) fail("vector length exceeds file size");
    std::vector<T> v(n);
    std::memcpy(v.data(), buf_.data() + pos_, n * sizeof(T));
    pos_ += n * sizeof(T);
    return v;
  }
  void expect(const char* p, std::size_t n) {
    need(n);
    if (std::memcmp(buf_.data() + pos_, p, n) != 0) fail("bad magic");
    pos_ += n;
  }
  bool at_end() const { return pos_ == buf_.size(); }
  [[noreturn]] void fail(const std::string& why) const {
    throw std::runtime_error("corrupt solve cache " + what_ + ": " + why);
  }

 private:
  void need(std::size_t n) const {
    if (n > buf_.size() - pos_) fail("truncated");
  }
  const std::string& buf_;
  std::string what_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_solution(const std::filesystem::path& path, const SurvivalSolution& sol) {
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.pod(kVersion);
  w.str(sol.fingerprint);
  w.pod<std::int32_t>(sol.d);
  w.pod(sol.R);
  w.str(sol.killing);
  w.str(sol.exhaustion);
  w.pod(sol.tol);
  const RelaxReport& rep = sol.report;
  w.pod(rep.sweeps);
  w.pod(rep.max_abs_residual);
  w.pod(rep.max_rel_residual);
  w.pod(rep.omega);
  w.pod<std::int32_t>(rep.refinements);
  w.pod<std::uint8_t>(rep.converged);
  w.pod(rep.min_positive);
  w.pod<std::uint64_t>(rep.tiny_values);
  w.pod<std::uint64_t>(rep.structural_zeros);
  const Box& box = sol.system.index.box();
  w.pod<std::int32_t>(box.d);
  w.pod(box.lo);
  w.pod(box.hi);
  w.vec(sol.system.u);
  w.vec(sol.system.coef);
  w.vec(sol.system.source);
  w.vec(sol.system.domain);
  write_file_atomic(path, w.bytes());
}

SurvivalSolution load_solution(const std::filesystem::path& path) {
  const std::string buf = read_file(path);
  Reader r(buf, path.string());
  r.expect(kMagic, sizeof kMagic);
  if (r.pod<std::uint32_t>() != kVersion) r.fail("unsupported version");
  SurvivalSolution sol;
  sol.fingerprint = r.str();
  sol.d = r.pod<std::int32_t>();
  sol.R = r.pod<std::int64_t>();
  sol.killing = r.str();
  sol.exhaustion = r.str();
  sol.tol = r.pod<double>();
  RelaxReport& rep = sol.report;
  rep.sweeps = r.pod<std::int64_t>();
  rep.max_abs_residual = r.pod<double>();
  rep.max_rel_residual = r.pod<double>();
  rep.omega = r.pod<double>();
  rep.refinements = r.pod<std::int32_t>();
  rep.converged = r.pod<std::uint8_t>() != 0;
  rep.min_positive = r.pod<double>();
  rep.tiny_values = r.pod<std::uint64_t>();
  rep.structural_zeros = r.pod<std::uint64_t>();
  Box box;
  box.d = r.pod<std::int32_t>();
  if (box.d < 1 || box.d > kMaxDim) r.fail("bad dimension");
  box.lo = r.pod<decltype(box.lo)>();
  box.hi = r.pod<decltype(box.hi)>();
  sol.system.index = BoxIndex(box);
  sol.system.u = r.vec<double>();
  sol.system.coef = r.vec<double>();
  sol.system.source = r.vec<double>();
  sol.system.domain = r.vec<std::uint8_t>();
  const std::size_t n = sol.system.index.size();
  if (sol.system.u.size() != n || sol.system.coef.size() != n || sol.system.domain.size() != n ||
      (!sol.system.source.empty() && sol.system.source.size() != n))
    r.fail("array sizes do not match the box");
  if (!r.at_end()) r.fail("trailing bytes");
  sol.from_cache = true;
  return sol;
}

SolveCache::SolveCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path SolveCache::path_for(const std::string& fingerprint) const {
  return dir_ / (fingerprint + ".krwsol");
}

std::optional<SurvivalSolution> SolveCache::find(const std::string& fingerprint) const {
  auto p = path_for(fingerprint);
  if (!std::filesystem::exists(p)) return std::nullopt;
  auto sol = load_solution(p);
  if (sol.fingerprint != fingerprint) throw std::runtime_error("solve cache " + p.string() + " holds another key");
  return sol;
}

void SolveCache::store(const SurvivalSolution& sol) const { save_solution(path_for(sol.fingerprint), sol); }

SurvivalSolution SolveCache::solve(const KillingField& k, const Exhaustion& ex, int d, std::int64_t R,
                                   const RelaxOptions& opt) {
  const std::string fp = solution_fingerprint(k, ex, d, R, opt);
  if (auto hit = find(fp)) {
    ++hits_;
    return std::move(*hit);
  }
  ++misses_;
  auto sol = solve_escape(k, ex, d, R, opt);
  store(sol);
  return sol;
}

EscapeSolver SolveCache::solver() {
  return [this](const KillingField& k, const Exhaustion& ex, int d, std::int64_t R, const RelaxOptions& opt) {
    return solve(k, ex, d, R, opt);
  };
}

// ---------------------------------------------------------------- report tables

CsvTable k_table_csv(const KHatTable& t) {
  CsvTable csv({"radius", "k_hat", "stderr", "n"});
  for (const auto& e : t.entries)
    csv.row({CsvTable::cell(e.radius), CsvTable::cell(e.k), CsvTable::cell(e.stderr_), CsvTable::cell(e.n)});
  return csv;
}

CsvTable estimate_csv(const std::vector<double>& r, const std::vector<Estimate>& e) {
  if (r.size() != e.size()) throw std::invalid_argument("estimate_csv: radii and estimates differ in length");
  CsvTable csv({"r", "estimate", "stderr", "n"});
  for (std::size_t i = 0; i < r.size(); ++i)
    csv.row({CsvTable::cell(r[i]), CsvTable::cell(e[i].mean), CsvTable::cell(e[i].stderr_), CsvTable::cell(e[i].n)});
  return csv;
}

CsvTable ratio_csv(const RatioCurve& c) {
  CsvTable csv({"R", "ratio", "gap"});
  for (const auto& p : c.points) csv.row({CsvTable::cell(p.R), CsvTable::cell(p.ratio), CsvTable::cell(p.gap)});
  return csv;
}

CsvTable counterexample_csv(const CounterexampleReport& rep) {
  CsvTable csv({"R", "rho_plus", "rho_minus", "symmetry_residual"});
  for (const auto& row : rep.rows)
    csv.row({CsvTable::cell(row.R), CsvTable::cell(row.rho_plus), CsvTable::cell(row.rho_minus),
             CsvTable::cell(row.symmetry_residual)});
  return csv;
}

// ---------------------------------------------------------------- svg

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// Roughly five round ticks covering [lo, hi].
std::vector<double> linear_ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  std::vector<double> t;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) t.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  return t;
}

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace

std::string render_svg(const Plot& plot) {
  const double W = 720, H = 480, left = 80, right = 180, top = 50, bottom = 80;
  const double pw = W - left - right, ph = H - top - bottom;
  auto tx = [&](double v) { return plot.log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return plot.log_y ? std::log10(v) : v; };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : plot.series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("plot series '" + s.label + "' has mismatched x/y");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if ((plot.log_x && !(s.x[i] > 0)) || (plot.log_y && !(s.y[i] > 0)) || !std::isfinite(s.x[i]) ||
          !std::isfinite(s.y[i]))
        continue;
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 <= 0) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 <= 0) y0 -= 0.5, y1 += 0.5;
  const double padx = 0.04 * (x1 - x0), pady = 0.06 * (y1 - y0);
  x0 -= padx, x1 += padx, y0 -= pady, y1 += pady;
  auto px = [&](double v) { return left + (v - x0) / (x1 - x0) * pw; };
  auto py = [&](double v) { return top + ph - (v - y0) / (y1 - y0) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << num(W / 2) << "\" y=\"28\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(plot.title)
    << "</text>\n";
  o << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : linear_ticks(x0, x1)) {
    o << "<line x1=\"" << num(px(t)) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(px(t)) << "\" y2=\""
      << num(top + ph + 5) << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << num(px(t)) << "\" y=\"" << num(top + ph + 18) << "\" text-anchor=\"middle\">"
      << tick_label(plot.log_x ? std::pow(10.0, t) : t) << "</text>\n";
  }
  for (double t : linear_ticks(y0, y1)) {
    o << "<line x1=\"" << num(left - 5) << "\" y1=\"" << num(py(t)) << "\" x2=\"" << num(left) << "\" y2=\""
      << num(py(t)) << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << num(left - 8) << "\" y=\"" << num(py(t) + 4) << "\" text-anchor=\"end\">"
      << tick_label(plot.log_y ? std::pow(10.0, t) : t) << "</text>\n";
  }
  o << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(H - bottom + 40) << "\" text-anchor=\"middle\">"
    << xml_escape(plot.x_label) << (plot.log_x ? " (log scale)" : "") << "</text>\n";
  o << "<text transform=\"translate(20," << num(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << xml_escape(plot.y_label) << (plot.log_y ? " (log scale)" : "") << "</text>\n";
  for (std::size_t k = 0; k < plot.series.size(); ++k) {
    const auto& s = plot.series[k];
    const char* color = kColors[k % std::size(kColors)];
    std::string pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if ((plot.log_x && !(s.x[i] > 0)) || (plot.log_y && !(s.y[i] > 0)) || !std::isfinite(s.x[i]) ||
          !std::isfinite(s.y[i]))
        continue;
      const double a = px(tx(s.x[i])), b = py(ty(s.y[i]));
      pts += num(a) + "," + num(b) + " ";
      o << "<circle cx=\"" << num(a) << "\" cy=\"" << num(b) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    if (!pts.empty())
      o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << pts << "\"/>\n";
    const double ly = top + 14 + 18 * static_cast<double>(k);
    o << "<line x1=\"" << num(left + pw + 12) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(left + pw + 32)
      << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << num(left + pw + 38) << "\" y=\"" << num(ly + 4) << "\">" << xml_escape(s.label)
      << "</text>\n";
  }
  o << "<text x=\"" << num(left) << "\" y=\"" << num(H - 12) << "\" font-size=\"10\" fill=\"#555\">"
    << xml_escape(plot.footer) << "</text>\n";
  o << "</svg>\n";
  return o.str();
}

}  // namespace krw
