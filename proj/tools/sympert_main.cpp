// Batch front end: reproduces the stability tables, the solution-equivalence
// curves, and the perturbed Jordan-structure experiments from flat key=value
// configs or command-line flags. Exit codes: 0 success, 1 numerical failure,
// 2 invalid configuration.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sympert/hamiltonians.hpp"
#include "sympert/io.hpp"
#include "sympert/isotropic.hpp"
#include "sympert/jordan.hpp"
#include "sympert/matcore.hpp"
#include "sympert/ode.hpp"
#include "sympert/perturb.hpp"
#include "sympert/rng.hpp"
#include "sympert/stability.hpp"

namespace fs = std::filesystem;
using namespace sympert;

namespace {

std::uint64_t parse_seed(const std::string& text) {
  const char* begin = text.c_str();
  char* end = nullptr;
  errno = 0;
  unsigned long long v = std::strtoull(begin, &end, 10);
  while (end && *end == ' ') ++end;
  if (end == begin || (end && *end != '\0') || errno == ERANGE ||
      text.find('-') != std::string::npos)
    throw Error("config", "not a seed: '" + text + "'");
  return v;
}

std::vector<double> parse_scales(const std::string& text) {
  std::vector<double> scales;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    double s = parse_double(item);
    if (!(s >= 0.0) || !std::isfinite(s))
      throw Error("config", "scales must be finite and nonnegative");
    scales.push_back(s);
  }
  if (scales.empty()) throw Error("config", "empty scale list");
  return scales;
}

// %g labels keep the per-scale file names short: 1, 0.1, 0.001, 0.
std::string scale_label(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", s);
  return buf;
}

struct RunSetup {
  std::string system;
  double eps = 2.0, delta = 4.0;
  double a = 2.0, b = 2.0;
  fs::path system_file;
  std::string perturbation = "none";
  std::uint64_t seed = 20260819ull;
  int rank = 2;
  std::vector<double> scales;
  double tol = 1e-12;
  int n_max = 30;
  fs::path out = ".";
};

void apply_config_map(RunSetup& s, const std::map<std::string, std::string>& kv,
                      const fs::path& config_dir) {
  for (const auto& [key, value] : kv) {
    if (key == "system") {
      s.system = value;
    } else if (key == "eps") {
      s.eps = parse_double(value);
    } else if (key == "delta") {
      s.delta = parse_double(value);
    } else if (key == "a") {
      s.a = parse_double(value);
    } else if (key == "b") {
      s.b = parse_double(value);
    } else if (key == "path") {
      fs::path p = value;
      s.system_file = p.is_relative() ? config_dir / p : p;
    } else if (key == "perturbation") {
      s.perturbation = value;
    } else if (key == "seed") {
      s.seed = parse_seed(value);
    } else if (key == "rank") {
      s.rank = static_cast<int>(parse_int(value));
    } else if (key == "scales") {
      s.scales = parse_scales(value);
    } else if (key == "integrator_tol") {
      s.tol = parse_double(value);
    } else if (key == "n_max") {
      s.n_max = static_cast<int>(parse_int(value));
    } else if (key == "output_dir") {
      fs::path p = value;
      s.out = p.is_relative() ? config_dir / p : p;
    } else {
      throw Error("config", "unknown key '" + key + "'");
    }
  }
}

void validate_setup(const RunSetup& s) {
  if (s.system != "example1" && s.system != "example2" && s.system != "file")
    throw Error("config", "system must be example1, example2, or file");
  if (s.system == "file" && s.system_file.empty())
    throw Error("config", "system=file needs path=");
  if (s.perturbation != "none" && s.perturbation != "random")
    throw Error("config", "perturbation must be none or random");
  if (s.perturbation == "random" && s.scales.empty())
    throw Error("config", "perturbation needs a nonempty scale list");
  if (s.perturbation == "random" && s.rank < 1)
    throw Error("config", "rank must be at least 1");
  if (!(s.tol > 0.0) || !std::isfinite(s.tol))
    throw Error("config", "integrator_tol must be positive");
  if (s.n_max < 0 || s.n_max > 60)
    throw Error("config", "n_max must lie in [0, 60]");
}

struct BuiltSystem {
  PeriodicHamiltonian sys;
  std::string label;
};

BuiltSystem build_system(const RunSetup& s) {
  if (s.system == "example1")
    return {example1(s.eps, s.delta),
            "example1(eps=" + format_double(s.eps) + ",delta=" + format_double(s.delta) + ")"};
  if (s.system == "example2")
    return {example2(s.a, s.b),
            "example2(a=" + format_double(s.a) + ",b=" + format_double(s.b) + ")"};
  return {read_system_file(s.system_file), "file(" + s.system_file.string() + ")"};
}

void ensure_output_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("io", "cannot create output directory: " + dir.string());
}

// One shared draw: a random Gaussian block reduced to an orthonormal isotropic
// basis, so table and psi runs with the same seed perturb identically.
IsotropicBasis draw_basis(const RunSetup& s, const SymplecticContext& ctx) {
  if (s.rank > ctx.n_half)
    throw Error("config", "rank exceeds N for this system");
  Rng rng(s.seed);
  return isotropic_from(rng.gauss_mat(ctx.dim(), s.rank), ctx).basis;
}

int run_isotropic(const fs::path& input, const fs::path& out) {
  Mat a = read_matrix_csv(input);
  if (a.rows() % 2 != 0) throw Error("dimension", "input must have 2N rows");
  SymplecticContext ctx = SymplecticContext::standard(static_cast<int>(a.rows()) / 2);
  IsotropicFromResult result = isotropic_from(a, ctx);

  ensure_output_dir(out);
  write_matrix_csv(out / "basis_u.csv", result.basis.U);
  write_matrix_csv(out / "factor_q.csv", result.Q);
  write_matrix_csv(out / "reduced.csv", result.reduced);

  Json summary;
  summary["input"] = input.string();
  summary["rows"] = a.rows();
  summary["cols"] = a.cols();
  summary["k"] = result.basis.k();
  summary["orthonormality_defect"] = json_number(result.basis.orthonormality_defect());
  summary["isotropy_defect"] = json_number(result.basis.isotropy_defect());
  write_json(out / "isotropic_summary.json", summary);
  std::cout << "isotropic basis of dimension " << result.basis.k() << " written to "
            << out.string() << "\n";
  return 0;
}

int run_psi(const RunSetup& s) {
  validate_setup(s);
  if (s.perturbation != "random")
    throw Error("config", "psi needs perturbation=random");
  BuiltSystem built = build_system(s);
  SymplecticContext ctx = SymplecticContext::standard(built.sys.dim / 2);
  IsotropicBasis basis = draw_basis(s, ctx);
  ensure_output_dir(s.out);

  const int points = 401;
  std::vector<double> grid(points);
  for (int i = 0; i < points; ++i)
    grid[i] = built.sys.period * i / (points - 1);

  IntegratorOptions opt;
  opt.tol = s.tol;
  opt.grid = grid;

  Mat id = Mat::Identity(built.sys.dim, built.sys.dim);
  Trajectory plain = integrate_matrizant(built.sys, id, built.sys.period, ctx, opt);
  double max_state = 0.0;
  for (const Mat& state : plain.states) max_state = std::max(max_state, op_norm(state));
  write_trajectory_csv(s.out / "trajectory_unperturbed.csv", plain);

  Json results = Json::array();
  bool any_failure = false;
  for (double scale : s.scales) {
    Json row;
    row["scale"] = json_number(scale);
    try {
      RankKPerturbation p{basis, scale};
      PsiCurves curves = psi_curves(built.sys, p, grid, ctx, opt);
      std::string name = "psi_" + scale_label(scale) + ".csv";
      std::ofstream csv(s.out / name);
      if (!csv) throw Error("io", "cannot open for writing: " + (s.out / name).string());
      csv << "t,psi\n";
      double max_psi = 0.0;
      for (std::size_t i = 0; i < curves.gaps.size(); ++i) {
        csv << format_double(grid[i]) << "," << format_double(curves.gaps[i]) << "\n";
        max_psi = std::max(max_psi, curves.gaps[i]);
      }
      csv.flush();
      if (!csv) throw Error("io", "write failed: " + (s.out / name).string());
      std::string traj_name = "trajectory_" + scale_label(scale) + ".csv";
      write_trajectory_csv(s.out / traj_name, curves.tilde);
      row["csv"] = name;
      row["trajectory_csv"] = traj_name;
      row["max_psi"] = json_number(max_psi);
    } catch (const Error& e) {
      row["error"] = std::string(e.code()) + ": " + e.what();
      any_failure = true;
    }
    results.push_back(row);
  }

  Json summary;
  summary["system"] = built.label;
  summary["seed"] = s.seed;
  summary["rank"] = s.rank;
  summary["integrator_tol"] = json_number(s.tol);
  summary["grid_points"] = points;
  summary["max_state_norm"] = json_number(max_state);
  summary["psi_bound"] = json_number(1e3 * s.tol * max_state);
  summary["trajectory_csv"] = "trajectory_unperturbed.csv";
  summary["results"] = results;
  write_json(s.out / "psi_summary.json", summary);
  std::cout << "psi curves for " << s.scales.size() << " scales written to "
            << s.out.string() << "\n";
  return any_failure ? 1 : 0;
}

int run_table(const RunSetup& s) {
  validate_setup(s);
  BuiltSystem built = build_system(s);
  SymplecticContext ctx = SymplecticContext::standard(built.sys.dim / 2);
  ensure_output_dir(s.out);

  IntegratorOptions opt;
  opt.tol = s.tol;
  Mat x_p = monodromy(built.sys, ctx, opt);

  std::vector<double> row_scales;
  if (s.perturbation == "random") {
    row_scales = s.scales;
    std::sort(row_scales.begin(), row_scales.end(), std::greater<>());
    row_scales.erase(std::unique(row_scales.begin(), row_scales.end()), row_scales.end());
  }
  if (row_scales.empty() || row_scales.back() != 0.0) row_scales.push_back(0.0);

  IsotropicBasis basis;
  if (s.perturbation == "random") basis = draw_basis(s, ctx);

  std::ofstream csv(s.out / "stability_table.csv");
  if (!csv) throw Error("io", "cannot open for writing: " + (s.out / "stability_table.csv").string());
  csv << "scale,s_n_norm,delta_s,min_gap_any,tr_p0,tr_pinf,tr_pr,tr_pg,"
         "decomposition_defect,cross_defect,pairing_defect,verdict\n";

  Json rows = Json::array();
  bool any_failure = false;
  for (double scale : row_scales) {
    Json row;
    row["scale"] = json_number(scale);
    try {
      Mat w = x_p;
      if (scale > 0.0) w = apply(RankKPerturbation{basis, scale}, x_p);
      StabilityReport report = analyze(w, ctx, s.n_max);
      csv << scale_label(scale) << "," << format_double(report.s_n_norms.back()) << ","
          << format_double(report.delta_s) << "," << format_double(report.min_gap_any) << ","
          << format_double(report.projectors.p0_stats.trace) << ","
          << format_double(report.projectors.pinf_stats.trace) << ","
          << format_double(report.projectors.pr_stats.trace) << ","
          << format_double(report.projectors.pg_stats.trace) << ","
          << format_double(report.projectors.decomposition_defect) << ","
          << format_double(report.projectors.cross_defect) << ","
          << format_double(report.pairing_defect) << "," << to_string(report.verdict) << "\n";
      row["report"] = stability_json(report);
    } catch (const Error& e) {
      csv << scale_label(scale) << ",-,-,-,-,-,-,-,-,-,-,-\n";
      row["error"] = std::string(e.code()) + ": " + e.what();
      any_failure = true;
    }
    rows.push_back(row);
  }
  csv.flush();
  if (!csv) throw Error("io", "write failed: " + (s.out / "stability_table.csv").string());

  Json summary;
  summary["system"] = built.label;
  summary["perturbation"] = s.perturbation;
  if (s.perturbation == "random") {
    summary["seed"] = s.seed;
    summary["rank"] = s.rank;
  }
  summary["integrator_tol"] = json_number(s.tol);
  summary["n_max"] = s.n_max;
  summary["rows"] = rows;
  write_json(s.out / "table_summary.json", summary);
  std::cout << "stability table with " << row_scales.size() << " rows written to "
            << s.out.string() << "\n";
  return any_failure ? 1 : 0;
}

std::vector<std::pair<int, int>> parse_sizes(const std::string& text) {
  std::vector<std::pair<int, int>> sizes;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    std::size_t colon = item.find(':');
    if (colon == std::string::npos)
      throw Error("config", "sizes must look like n:l,n:l");
    int n = static_cast<int>(parse_int(item.substr(0, colon)));
    int l = static_cast<int>(parse_int(item.substr(colon + 1)));
    if (n < 1 || l < 1) throw Error("config", "block sizes and counts must be positive");
    if (!sizes.empty() && n >= sizes.back().first)
      throw Error("config", "block sizes must be strictly descending");
    sizes.push_back({n, l});
  }
  if (sizes.empty()) throw Error("config", "empty size list");
  return sizes;
}

int run_jordan(double lambda, const std::string& sizes_text, int k, int trials,
               std::uint64_t seed, const fs::path& out) {
  SegreCharacteristic part;
  part.lambda = Complex(lambda, 0.0);
  part.sizes = parse_sizes(sizes_text);

  int total = 0;
  for (auto [n, l] : part.sizes) total += n * l;
  bool self_paired = std::abs(lambda - 1.0) <= 1e-9 || std::abs(lambda + 1.0) <= 1e-9;
  if (self_paired && total % 2 != 0)
    throw Error("structure_unrealizable", "odd total multiplicity at a self-paired eigenvalue");
  int half = self_paired ? total / 2 : total;

  SymplecticContext ctx = SymplecticContext::standard(half);
  Rng rng(seed);
  Mat w = symplectic_with_structure({part}, ctx, &rng);
  ThrReport report = check_thr(w, part.lambda, k, trials, ctx, seed);

  ensure_output_dir(out);
  write_json(out / "jordan.json", thr_json(report));
  std::cout << "jordan report (" << report.case_label << ", match fraction "
            << report.match_fraction << ") written to " << out.string() << "\n";
  return 0;
}

struct CommonFlags {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  double tol = 0.0;
  int n_max = 0;
  int rank = 0;
  std::string scales;
  CLI::Option* o_config = nullptr;
  CLI::Option* o_out = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_tol = nullptr;
  CLI::Option* o_nmax = nullptr;
  CLI::Option* o_rank = nullptr;
  CLI::Option* o_scales = nullptr;

  void attach(CLI::App* cmd, bool with_config) {
    if (with_config)
      o_config = cmd->add_option("--config", config, "flat key=value configuration file");
    o_out = cmd->add_option("--out", out, "output directory (default .)");
    o_seed = cmd->add_option("--seed", seed, "random seed");
    o_tol = cmd->add_option("--tol", tol, "integrator tolerance");
    o_nmax = cmd->add_option("--nmax", n_max, "averaged-sequence depth");
    o_rank = cmd->add_option("--rank", rank, "perturbation rank");
    o_scales = cmd->add_option("--scales", scales, "comma-separated perturbation scales");
  }

  // Config file first, explicit flags override it.
  RunSetup merge(const std::string& default_system) const {
    RunSetup s;
    s.system = default_system;
    if (o_config && o_config->count()) {
      fs::path path = config;
      apply_config_map(s, parse_config_file(path), path.parent_path());
    }
    if (o_out->count()) s.out = out;
    if (o_seed->count()) s.seed = seed;
    if (o_tol->count()) s.tol = tol;
    if (o_nmax->count()) s.n_max = n_max;
    if (o_rank->count()) s.rank = rank;
    if (o_scales->count()) {
      s.scales = parse_scales(scales);
      s.perturbation = "random";
    }
    return s;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rank-k structured perturbations of symplectic matrices and "
               "periodic Hamiltonian systems"};
  app.require_subcommand(1);

  auto* iso = app.add_subcommand("isotropic",
                                 "reduce a 2N x k matrix to an orthonormal isotropic basis");
  std::string iso_input, iso_out = ".";
  iso->add_option("--input", iso_input, "matrix CSV with a rows,cols header")->required();
  iso->add_option("--out", iso_out, "output directory (default .)");

  auto* psi_cmd = app.add_subcommand("psi", "solution-equivalence gap curves per scale");
  CommonFlags psi_flags;
  psi_flags.attach(psi_cmd, true);

  auto* table_cmd = app.add_subcommand("table", "strong-stability table per scale");
  CommonFlags table_flags;
  table_flags.attach(table_cmd, true);

  auto* jordan_cmd = app.add_subcommand("jordan",
                                        "perturbed Jordan structure match statistics");
  double j_lambda = 2.0;
  std::string j_sizes, j_out = ".";
  int j_rank = 1, j_trials = 100;
  std::uint64_t j_seed = 20260819ull;
  jordan_cmd->add_option("--lambda", j_lambda, "real eigenvalue of the generated matrix")
      ->required();
  jordan_cmd->add_option("--sizes", j_sizes, "Segre sizes as n:l,n:l (descending)")->required();
  jordan_cmd->add_option("--rank", j_rank, "perturbation rank k");
  jordan_cmd->add_option("--trials", j_trials, "number of random trials");
  jordan_cmd->add_option("--seed", j_seed, "random seed");
  jordan_cmd->add_option("--out", j_out, "output directory (default .)");

  auto* ex1_cmd = app.add_subcommand("example1", "stability table for the first model system");
  CommonFlags ex1_flags;
  double ex1_eps = 2.0, ex1_delta = 4.0;
  ex1_cmd->add_option("--eps", ex1_eps, "parameter (default 2)");
  ex1_cmd->add_option("--delta", ex1_delta, "parameter (default 4)");
  ex1_flags.attach(ex1_cmd, false);

  auto* ex2_cmd = app.add_subcommand("example2", "stability table for the second model system");
  CommonFlags ex2_flags;
  double ex2_a = 2.0, ex2_b = 2.0;
  ex2_cmd->add_option("--a", ex2_a, "parameter (default 2)");
  ex2_cmd->add_option("--b", ex2_b, "parameter (default 2)");
  ex2_flags.attach(ex2_cmd, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (iso->parsed()) return run_isotropic(iso_input, iso_out);
    if (psi_cmd->parsed()) {
      RunSetup s = psi_flags.merge("");
      return run_psi(s);
    }
    if (table_cmd->parsed()) {
      RunSetup s = table_flags.merge("");
      return run_table(s);
    }
    if (jordan_cmd->parsed())
      return run_jordan(j_lambda, j_sizes, j_rank, j_trials, j_seed, j_out);
    if (ex1_cmd->parsed()) {
      RunSetup s = ex1_flags.merge("example1");
      s.eps = ex1_eps;
      s.delta = ex1_delta;
      return run_table(s);
    }
    if (ex2_cmd->parsed()) {
      RunSetup s = ex2_flags.merge("example2");
      s.a = ex2_a;
      s.b = ex2_b;
      return run_table(s);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    static const std::set<std::string> invalid = {
        "config", "dimension", "structure_unrealizable", "not_symmetric",
        "structure", "deficient_input"};
    return invalid.count(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error " << e.what() << "\n";
    return 1;
  }
  return 0;
}
