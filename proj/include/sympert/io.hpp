#ifndef SYMPERT_IO_HPP
#define SYMPERT_IO_HPP

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sympert/hamiltonians.hpp"
#include "sympert/jordan.hpp"
#include "sympert/matcore.hpp"
#include "sympert/ode.hpp"
#include "sympert/stability.hpp"

namespace sympert {

using Json = nlohmann::json;

// %.17g survives a double -> text -> double round trip bit for bit.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& text) {
  const char* begin = text.c_str();
  char* end = nullptr;
  errno = 0;
  double value = std::strtod(begin, &end);
  while (end && *end == ' ') ++end;
  if (end == begin || (end && *end != '\0'))
    throw Error("config", "not a number: '" + text + "'");
  return value;
}

inline long parse_int(const std::string& text) {
  const char* begin = text.c_str();
  char* end = nullptr;
  errno = 0;
  long value = std::strtol(begin, &end, 10);
  while (end && *end == ' ') ++end;
  if (end == begin || (end && *end != '\0') || errno == ERANGE)
    throw Error("config", "not an integer: '" + text + "'");
  return value;
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream stream(s);
  std::string item;
  while (std::getline(stream, item, sep)) parts.push_back(trim(item));
  if (!s.empty() && s.back() == sep) parts.push_back("");
  return parts;
}

}  // namespace detail

// Matrix CSV: a "rows,cols" dimension header, then one comma-separated line
// per row with %.17g entries.
inline void write_matrix_csv(const std::filesystem::path& path, const Mat& m) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot open for writing: " + path.string());
  out << m.rows() << "," << m.cols() << "\n";
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (j) out << ",";
      out << format_double(m(i, j));
    }
    out << "\n";
  }
  out.flush();
  if (!out) throw Error("io", "write failed: " + path.string());
}

inline Mat read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("config", "cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error("config", "empty matrix file: " + path.string());
  std::vector<std::string> header = detail::split(detail::trim(line), ',');
  if (header.size() != 2)
    throw Error("config", "matrix header must be 'rows,cols': " + path.string());
  long rows = parse_int(header[0]);
  long cols = parse_int(header[1]);
  if (rows < 1 || cols < 1)
    throw Error("config", "matrix dimensions must be positive: " + path.string());

  Mat m(rows, cols);
  for (long i = 0; i < rows; ++i) {
    if (!std::getline(in, line))
      throw Error("config", "missing row " + std::to_string(i + 1) + ": " + path.string());
    std::vector<std::string> cells = detail::split(detail::trim(line), ',');
    if (static_cast<long>(cells.size()) != cols)
      throw Error("config", "row " + std::to_string(i + 1) + " has " +
                                std::to_string(cells.size()) + " of " +
                                std::to_string(cols) + " entries: " + path.string());
    for (long j = 0; j < cols; ++j) m(i, j) = parse_double(cells[j]);
  }
  while (std::getline(in, line))
    if (!detail::trim(line).empty())
      throw Error("config", "trailing content after the last row: " + path.string());
  return m;
}

// Trajectory CSV: header "t,x_1_1,...,x_2N_2N" (states flattened row-major),
// then one line per sample.
inline void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  if (traj.times.size() != traj.states.size())
    throw Error("dimension", "trajectory times and states disagree");
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot open for writing: " + path.string());
  const int rows = traj.states.empty() ? 0 : static_cast<int>(traj.states.front().rows());
  const int cols = traj.states.empty() ? 0 : static_cast<int>(traj.states.front().cols());
  out << "t";
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) out << ",x_" << (i + 1) << "_" << (j + 1);
  out << "\n";
  for (std::size_t s = 0; s < traj.times.size(); ++s) {
    const Mat& state = traj.states[s];
    if (state.rows() != rows || state.cols() != cols)
      throw Error("dimension", "trajectory states must share one shape");
    out << format_double(traj.times[s]);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) out << "," << format_double(state(i, j));
    out << "\n";
  }
  out.flush();
  if (!out) throw Error("io", "write failed: " + path.string());
}

// Flat key=value configuration with '#' comments and blank lines.
inline std::map<std::string, std::string> parse_config_text(std::istream& in,
                                                            const std::string& origin) {
  std::map<std::string, std::string> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string stripped = detail::trim(line);
    std::size_t hash = stripped.find('#');
    if (hash != std::string::npos) stripped = detail::trim(stripped.substr(0, hash));
    if (stripped.empty()) continue;
    std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw Error("config", origin + ":" + std::to_string(line_no) + ": expected key=value");
    std::string key = detail::trim(stripped.substr(0, eq));
    std::string value = detail::trim(stripped.substr(eq + 1));
    if (key.empty())
      throw Error("config", origin + ":" + std::to_string(line_no) + ": empty key");
    if (out.count(key))
      throw Error("config", origin + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
    out[key] = value;
  }
  return out;
}

inline std::map<std::string, std::string> parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("config", "cannot open: " + path.string());
  return parse_config_text(in, path.filename().string());
}

// JSON has no literal for the infinities the reports legitimately contain.
inline Json json_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline Json stability_json(const StabilityReport& r) {
  Json j;
  j["delta_s"] = json_number(r.delta_s);
  j["min_gap_any"] = json_number(r.min_gap_any);
  Json norms = Json::array();
  for (double n : r.s_n_norms) norms.push_back(json_number(n));
  j["s_n_norms"] = norms;
  j["tr_p0"] = json_number(r.projectors.p0_stats.trace);
  j["tr_pinf"] = json_number(r.projectors.pinf_stats.trace);
  j["tr_pr"] = json_number(r.projectors.pr_stats.trace);
  j["tr_pg"] = json_number(r.projectors.pg_stats.trace);
  double idem = std::max({r.projectors.p0_stats.idempotency_defect,
                          r.projectors.pinf_stats.idempotency_defect,
                          r.projectors.pr_stats.idempotency_defect,
                          r.projectors.pg_stats.idempotency_defect});
  double comm = std::max({r.projectors.p0_stats.commutation_defect,
                          r.projectors.pinf_stats.commutation_defect,
                          r.projectors.pr_stats.commutation_defect,
                          r.projectors.pg_stats.commutation_defect});
  j["defects"] = Json{{"commutation", json_number(comm)},
                      {"cross", json_number(r.projectors.cross_defect)},
                      {"decomposition", json_number(r.projectors.decomposition_defect)},
                      {"defective_circle", r.projectors.defective_circle},
                      {"idempotency", json_number(idem)},
                      {"ill_posed_dichotomy", r.projectors.p0_stats.ill_posed},
                      {"ill_posed_colors", r.projectors.pr_stats.ill_posed},
                      {"pairing", json_number(r.pairing_defect)}};
  j["verdict"] = to_string(r.verdict);
  return j;
}

inline Json thr_json(const ThrReport& r) {
  Json j;
  j["case"] = r.case_label;
  j["predicted"] = format_sizes(r.predicted);
  Json hist = Json::object();
  for (const auto& [key, count] : r.observed_histogram) hist[key] = count;
  j["observed_histogram"] = hist;
  j["match_fraction"] = r.match_fraction;
  j["borderline_count"] = r.borderline_count;
  j["seed"] = r.seed;
  return j;
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
  out.flush();
  if (!out) throw Error("io", "write failed: " + path.string());
}

inline Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("config", "cannot open: " + path.string());
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error("config", "malformed JSON: " + path.string());
  return j;
}

// Coefficient description of a periodic Hamiltonian: a 'period=' line plus
// one 'term=matrix.csv,frequency,cos|sin' line per trigonometric term, with
// matrix paths resolved against the description file's directory. A constant
// term is written as frequency 0 with cos.
inline PeriodicHamiltonian read_system_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("config", "cannot open: " + path.string());
  std::filesystem::path base = path.parent_path();

  double period = 0.0;
  bool have_period = false;
  std::vector<TrigTerm> terms;

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string stripped = detail::trim(line);
    std::size_t hash = stripped.find('#');
    if (hash != std::string::npos) stripped = detail::trim(stripped.substr(0, hash));
    if (stripped.empty()) continue;
    std::string where = path.filename().string() + ":" + std::to_string(line_no);

    std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) throw Error("config", where + ": expected key=value");
    std::string key = detail::trim(stripped.substr(0, eq));
    std::string value = detail::trim(stripped.substr(eq + 1));
    if (key == "period") {
      if (have_period) throw Error("config", where + ": duplicate period");
      period = parse_double(value);
      have_period = true;
    } else if (key == "term") {
      std::vector<std::string> fields = detail::split(value, ',');
      if (fields.size() != 3)
        throw Error("config", where + ": term needs matrix.csv,frequency,cos|sin");
      TrigTerm term;
      term.coefficient = read_matrix_csv(base / fields[0]);
      term.frequency = parse_double(fields[1]);
      if (fields[2] == "cos")
        term.sine = false;
      else if (fields[2] == "sin")
        term.sine = true;
      else
        throw Error("config", where + ": waveform must be cos or sin");
      terms.push_back(std::move(term));
    } else {
      throw Error("config", where + ": unknown key '" + key + "'");
    }
  }
  if (!have_period) throw Error("config", path.filename().string() + ": missing period");
  if (terms.empty()) throw Error("config", path.filename().string() + ": no terms");
  return trig_hamiltonian(terms, period);
}

}  // namespace sympert

#endif
