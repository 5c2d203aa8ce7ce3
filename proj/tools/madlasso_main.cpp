// madlasso: adaptive soft-thresholding solver and fixed-point analysis CLI.
//
// Subcommands: solve, path, fixed-points, recur, experiment. Matrices and
// vectors travel as headerless CSV; structured results as JSON. Every
// invocation writes a manifest next to its primary output so runs can be
// reproduced bit for bit.
//
// Exit codes: 0 success/converged, 1 bad input or arguments, 2 MaxIter,
// 3 Diverged, 4 degenerate path.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "madlasso/madlasso.hpp"

using json = nlohmann::ordered_json;
using namespace madlasso;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBadInput = 1;
constexpr int kExitMaxIter = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitDegenerate = 4;

const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIter: return "maxiter";
    case SolveStatus::Diverged: return "diverged";
  }
  return "?";
}

int status_exit_code(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return kExitOk;
    case SolveStatus::MaxIter: return kExitMaxIter;
    case SolveStatus::Diverged: return kExitDiverged;
  }
  return kExitBadInput;
}

struct ManifestWriter {
  std::string command;
  json config = json::object();
  std::map<std::string, std::string> input_hashes;
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

  void add_input(const std::string& path) {
    input_hashes[path] = fnv1a_file_hash(path);
  }

  void write(const std::string& next_to) const {
    json m;
    m["command"] = command;
    m["config"] = config;
    json inputs = json::object();
    for (const auto& [path, hash] : input_hashes) inputs[path] = hash;
    m["inputs"] = inputs;
    m["tool_version"] = kVersion;
    const auto elapsed = std::chrono::steady_clock::now() - started;
    m["duration_seconds"] =
        std::chrono::duration_cast<std::chrono::duration<double>>(elapsed).count();
    std::ofstream out(next_to + ".manifest.json");
    out << m.dump(2) << '\n';
  }
};

ThresholdRule parse_rule(const std::string& text) {
  if (text == "mad") return ThresholdRule::mad();
  if (text.rfind("ksparse:", 0) == 0) {
    const long k = std::stol(text.substr(8));
    if (k < 1) throw CLI::ValidationError("--rule", "ksparse level must be >= 1");
    return ThresholdRule::ksparse(static_cast<std::size_t>(k));
  }
  if (text.rfind("fixed:", 0) == 0) {
    const double lam = std::stod(text.substr(6));
    if (lam < 0) throw CLI::ValidationError("--rule", "fixed lambda must be >= 0");
    return ThresholdRule::fixed(lam);
  }
  throw CLI::ValidationError("--rule", "expected mad, ksparse:K or fixed:LAMBDA");
}

void write_trace_csv(const std::string& path, const IterateTrace& trace) {
  std::ofstream out(path);
  out << "k,threshold,median_index,support_size,step_residual,fixed_point_residual\n";
  for (const TraceRecord& r : trace.records) {
    out << r.k << ',' << format_double(r.threshold) << ',' << r.median_index << ','
        << r.support.size() << ',' << format_double(r.step_residual) << ','
        << format_double(r.fixed_point_residual) << '\n';
  }
}

// ---------------------------------------------------------------- solve ----

struct SolveArgs {
  std::string a_path, y_path, out_path, trace_path;
  double gamma = 0.0;
  double mu = 0.0;
  double tol = 1e-10;
  std::size_t max_iter = 100000;
  std::string rule = "mad";
};

int cmd_solve(const SolveArgs& args) {
  ManifestWriter manifest;
  manifest.command = "solve";

  SolverConfig cfg;
  cfg.rule = parse_rule(args.rule);
  if (cfg.rule.kind == ThresholdRule::Kind::Mad) {
    if (!(args.gamma > 1.0)) {
      std::cerr << "solve: the MAD rule requires --gamma > 1\n"
                << "usage: madlasso solve --A <csv> --y <csv> --gamma <f> "
                   "[--mu <f>] [--rule mad|ksparse:K|fixed:LAMBDA] --out <csv>\n";
      return kExitBadInput;
    }
    cfg.gamma = args.gamma;
  }
  cfg.mu = args.mu;
  cfg.tol = args.tol;
  cfg.max_iter = args.max_iter;
  cfg.trace = !args.trace_path.empty();

  const DenseMatrix a = read_matrix_csv(args.a_path);
  const Vec y = read_vector_csv(args.y_path);
  manifest.add_input(args.a_path);
  manifest.add_input(args.y_path);
  manifest.config = {{"A", args.a_path},
                     {"y", args.y_path},
                     {"gamma", args.gamma},
                     {"mu", args.mu},
                     {"tol", args.tol},
                     {"max_iter", args.max_iter},
                     {"rule", args.rule},
                     {"out", args.out_path},
                     {"trace", args.trace_path}};

  SolveOutcome out;
  if (cfg.rule.kind == ThresholdRule::Kind::Fixed)
    out = ista_fixed(a, y, cfg.rule.lambda, cfg);
  else
    out = adaptive_ista(a, y, cfg);

  write_vector_csv(args.out_path, out.x_star);
  if (cfg.trace && out.trace) write_trace_csv(args.trace_path, *out.trace);
  manifest.write(args.out_path);

  double fp_residual = 0.0;
  if (cfg.rule.kind == ThresholdRule::Kind::Mad) {
    const FixedPointReport rep = check_fixed_point(a, y, out.x_star, cfg.gamma, 0.0);
    fp_residual =
        std::max(rep.max_on_support_violation, rep.max_off_support_violation);
  }
  json line;
  line["status"] = status_name(out.status);
  line["lambda_star"] = out.lambda_star;
  line["iterations"] = out.iterations;
  line["mu_used"] = out.mu_used;
  line["fixed_point_residual"] = fp_residual;
  std::cout << line.dump() << '\n';
  return status_exit_code(out.status);
}

// ----------------------------------------------------------------- path ----

struct PathArgs {
  std::string a_path, y_path, segments_path, gamma_grid_path;
  double lambda_min = 0.0;
  std::size_t grid_points = 500;
};

int cmd_path(const PathArgs& args) {
  ManifestWriter manifest;
  manifest.command = "path";
  const DenseMatrix a = read_matrix_csv(args.a_path);
  const Vec y = read_vector_csv(args.y_path);
  manifest.add_input(args.a_path);
  manifest.add_input(args.y_path);
  manifest.config = {{"A", args.a_path},
                     {"y", args.y_path},
                     {"lambda_min", args.lambda_min},
                     {"segments", args.segments_path},
                     {"gamma_grid", args.gamma_grid_path},
                     {"grid_points", args.grid_points}};

  const double lambda_max = norm_inf(a.tmul(y));
  std::ofstream seg_out(args.segments_path);
  seg_out << "lambda_hi,lambda_lo,support_size,median_index,a,b\n";

  if (args.lambda_min >= lambda_max) {
    std::cerr << "path: warning: --lambda-min " << args.lambda_min
              << " is at or above lambda_max " << lambda_max
              << "; the table is empty\n";
    seg_out.close();
    manifest.write(args.segments_path);
    return kExitOk;
  }

  const std::vector<PathSegment> segments = lasso_path(a, y, args.lambda_min);
  for (const PathSegment& seg : segments) {
    seg_out << format_double(seg.lambda_hi) << ',' << format_double(seg.lambda_lo)
            << ',' << seg.equicorrelation.size() << ',' << seg.median_index << ','
            << format_double(seg.a) << ',' << format_double(seg.b) << '\n';
  }
  seg_out.close();

  if (!args.gamma_grid_path.empty()) {
    std::ofstream grid(args.gamma_grid_path);
    grid << "lambda,gamma\n";
    const double lo = segments.back().lambda_lo;
    const double hi = lambda_max;
    for (std::size_t i = 0; i <= args.grid_points; ++i) {
      const double lam =
          lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(args.grid_points);
      try {
        grid << format_double(lam) << ',' << format_double(gamma_of_lambda(segments, lam))
             << '\n';
      } catch (const ZeroMedian&) {
        // skip grid points where the median vanishes
      }
    }
  }
  manifest.write(args.segments_path);
  return kExitOk;
}

// --------------------------------------------------------- fixed-points ----

struct FixedPointArgs {
  std::string a_path, y_path, out_path;
  double gamma = 0.0;
  double mu = 0.0;
};

json spectrum_to_json(const Spectrum& s) {
  json evs = json::array();
  for (const auto& e : s.eigenvalues) evs.push_back({e.real(), e.imag()});
  return {{"eigenvalues", evs},
          {"spectral_radius", s.spectral_radius},
          {"converged", s.converged}};
}

int cmd_fixed_points(const FixedPointArgs& args) {
  if (!(args.gamma > 1.0)) {
    std::cerr << "fixed-points: --gamma must exceed 1\n";
    return kExitBadInput;
  }
  ManifestWriter manifest;
  manifest.command = "fixed-points";
  const DenseMatrix a = read_matrix_csv(args.a_path);
  const Vec y = read_vector_csv(args.y_path);
  manifest.add_input(args.a_path);
  manifest.add_input(args.y_path);
  manifest.config = {{"A", args.a_path},
                     {"y", args.y_path},
                     {"gamma", args.gamma},
                     {"mu", args.mu},
                     {"out", args.out_path}};

  const std::vector<PathSegment> segments = lasso_path(a, y);
  SolverConfig mu_cfg;
  mu_cfg.mu = args.mu;
  const double mu = resolve_mu(a, mu_cfg);
  const std::vector<FixedPointCandidate> cands =
      candidates_for_gamma(a, y, segments, args.gamma, mu);

  json out;
  out["gamma"] = args.gamma;
  out["mu"] = mu;
  out["candidates"] = json::array();
  for (const FixedPointCandidate& c : cands) {
    json jc;
    jc["lambda_star"] = c.lambda_star;
    jc["x_star"] = c.x_star;
    jc["segment_id"] = c.segment_id;
    jc["gamma_slope_positive"] = c.gamma_slope_positive;
    jc["jacobian_radius"] = c.jacobian_radius;
    jc["verdict"] = to_string(c.verdict);
    jc["median_index"] = c.median_index;
    jc["a"] = c.a;
    jc["b"] = c.b;
    jc["stability"] = {{"necessary_ok", c.report.necessary_ok},
                       {"necessary_value", c.report.necessary_value},
                       {"rank1_value", c.report.rank1_value},
                       {"jacobian_radius", c.report.jacobian_radius},
                       {"mu_used", c.report.mu_used},
                       {"mu_bound", c.report.mu_bound},
                       {"mu_bound_fallback", c.report.mu_bound_fallback},
                       {"spectrum", spectrum_to_json(c.report.eigenvalues)},
                       {"notes", c.report.notes}};
    out["candidates"].push_back(std::move(jc));
  }
  std::ofstream f(args.out_path);
  f << out.dump(2) << '\n';
  f.close();
  manifest.write(args.out_path);
  std::cout << "{\"candidates\":" << cands.size() << "}\n";
  return kExitOk;
}

// ---------------------------------------------------------------- recur ----

struct RecurArgs {
  std::string a_path, y_path, x0_path, log_path;
  double gamma = 0.0;
  double mu = 0.0;
  std::size_t iters = 500;
  double tol = 1e-12;
};

int cmd_recur(const RecurArgs& args) {
  if (!(args.gamma > 1.0)) {
    std::cerr << "recur: --gamma must exceed 1\n";
    return kExitBadInput;
  }
  ManifestWriter manifest;
  manifest.command = "recur";
  const DenseMatrix a = read_matrix_csv(args.a_path);
  const Vec y = read_vector_csv(args.y_path);
  manifest.add_input(args.a_path);
  manifest.add_input(args.y_path);
  Vec x0;
  if (!args.x0_path.empty()) {
    x0 = read_vector_csv(args.x0_path);
    manifest.add_input(args.x0_path);
  }
  manifest.config = {{"A", args.a_path},   {"y", args.y_path},
                     {"x0", args.x0_path}, {"gamma", args.gamma},
                     {"mu", args.mu},      {"iters", args.iters},
                     {"tol", args.tol},    {"log", args.log_path}};

  SolverConfig cfg;
  cfg.gamma = args.gamma;
  cfg.mu = args.mu;
  cfg.tol = args.tol;
  const RecurrenceLog log = run_recurrence(a, y, cfg, args.iters, x0);

  std::ofstream out(args.log_path);
  out << "k,segment_id,radius,residual\n";
  for (const RecurrenceStep& s : log.steps)
    out << s.k << ',' << s.segment_id << ',' << format_double(s.spectral_radius)
        << ',' << format_double(s.z_residual) << '\n';
  out.close();
  manifest.write(args.log_path);

  json line;
  line["status"] = status_name(log.status);
  line["iterations"] = log.steps.size();
  line["segments"] = json::array();
  for (const SegmentRate& r : detect_piecewise(log)) {
    line["segments"].push_back({{"segment_id", r.segment_id},
                                {"start_k", r.start_k},
                                {"end_k", r.end_k},
                                {"radius", r.radius},
                                {"fitted_rate", r.fitted_rate},
                                {"at_fixed_point", r.at_fixed_point}});
  }
  std::cout << line.dump() << '\n';
  return status_exit_code(log.status);
}

// ----------------------------------------------------------- experiment ----

struct ExperimentArgs {
  std::string config_path, out_dir;
  std::size_t jobs = 1;
  long long seed_flag = -1;  // -1: not given
};

Family parse_family(const std::string& name) {
  if (name == "gaussian") return Family::Gaussian;
  if (name == "dct") return Family::DCT;
  if (name == "deconv") return Family::Deconv;
  throw InvalidSpec("experiment: unknown family '" + name + "'");
}

Method parse_method(const std::string& name) {
  if (name == "mad") return Method::Mad;
  if (name == "oracle_lasso") return Method::OracleLasso;
  if (name == "amp") return Method::Amp;
  if (name == "ksparse") return Method::KSparse;
  throw InvalidSpec("experiment: unknown method '" + name + "'");
}

int cmd_experiment(const ExperimentArgs& args) {
  ManifestWriter manifest;
  manifest.command = "experiment";

  std::ifstream cf(args.config_path);
  if (!cf) {
    std::cerr << "experiment: cannot open config " << args.config_path << "\n";
    return kExitBadInput;
  }
  json config;
  try {
    cf >> config;
  } catch (const json::exception& e) {
    std::cerr << "experiment: " << args.config_path << ": " << e.what() << "\n";
    return kExitBadInput;
  }
  manifest.add_input(args.config_path);

  static const std::vector<std::string> known_keys = {
      "family",       "n",          "undersampling", "filter_length",
      "rho",          "snr_db",     "methods",       "n_realizations",
      "seed",         "gamma_mad",  "oracle_scale",  "gamma_amp",
      "ksparse_k",    "max_iter",   "tol"};
  for (const auto& [key, value] : config.items()) {
    (void)value;
    if (std::find(known_keys.begin(), known_keys.end(), key) == known_keys.end()) {
      std::cerr << "experiment: unknown config key '" << key << "'\n";
      return kExitBadInput;
    }
  }
  for (const char* required : {"family", "n", "snr_db", "methods", "n_realizations"}) {
    if (!config.contains(required)) {
      std::cerr << "experiment: missing config key '" << required << "'\n";
      return kExitBadInput;
    }
  }

  ProblemSpec spec;
  std::vector<double> snr_list;
  std::vector<Method> methods;
  std::size_t n_realizations = 0;
  SweepParams params;
  try {
    spec.family = parse_family(config.at("family").get<std::string>());
    spec.n = config.at("n").get<std::size_t>();
    spec.undersampling = config.value("undersampling", 0.5);
    spec.filter_length = config.value("filter_length", std::size_t{10});
    spec.rho = config.value("rho", 0.1);
    snr_list = config.at("snr_db").get<std::vector<double>>();
    for (const auto& m : config.at("methods"))
      methods.push_back(parse_method(m.get<std::string>()));
    n_realizations = config.at("n_realizations").get<std::size_t>();

    params = default_sweep_params(spec.family);
    params.gamma_mad = config.value("gamma_mad", params.gamma_mad);
    params.oracle_scale = config.value("oracle_scale", params.oracle_scale);
    params.gamma_amp = config.value("gamma_amp", params.gamma_amp);
    params.ksparse_k = config.value("ksparse_k", params.ksparse_k);
    params.max_iter = config.value("max_iter", params.max_iter);
    params.tol = config.value("tol", params.tol);
  } catch (const std::exception& e) {
    std::cerr << "experiment: bad config: " << e.what() << "\n";
    return kExitBadInput;
  }

  // seed precedence: flag > MADLASSO_SEED > config > 0
  std::uint64_t seed = config.value("seed", std::uint64_t{0});
  if (const char* env = std::getenv("MADLASSO_SEED"))
    seed = std::strtoull(env, nullptr, 10);
  if (args.seed_flag >= 0) seed = static_cast<std::uint64_t>(args.seed_flag);
  spec.seed = seed;

  std::filesystem::create_directories(args.out_dir);

  std::vector<CellResult> cells;
  try {
    cells = sweep(spec, snr_list, methods, n_realizations, args.jobs, params);
  } catch (const std::exception& e) {
    std::cerr << "experiment: " << e.what() << "\n";
    return kExitBadInput;
  }

  const std::string results_path = args.out_dir + "/results.csv";
  std::ofstream results(results_path);
  results << "family,n,snr_db,method,realization,mse,status\n";
  for (const CellResult& cell : cells) {
    for (const RealizationResult& r : cell.realizations) {
      results << to_string(spec.family) << ',' << spec.n << ','
              << format_double(cell.snr_db) << ',' << to_string(cell.method) << ','
              << r.realization << ',' << format_double(r.mse) << ','
              << (r.failed ? "failed" : status_name(r.status)) << '\n';
    }
  }
  results.close();

  json summary;
  summary["family"] = to_string(spec.family);
  summary["n"] = spec.n;
  summary["seed"] = seed;
  summary["n_realizations"] = n_realizations;
  summary["cells"] = json::array();
  for (const CellResult& cell : cells) {
    json jc;
    jc["snr_db"] = cell.snr_db;
    jc["method"] = to_string(cell.method);
    jc["mean_mse"] = cell.mean_mse;
    jc["histogram"] = {{"edges", cell.histogram.edges},
                       {"counts", cell.histogram.counts}};
    summary["cells"].push_back(std::move(jc));
  }
  std::ofstream sf(args.out_dir + "/summary.json");
  sf << summary.dump(2) << '\n';
  sf.close();

  manifest.config = {{"config_file", args.config_path},
                     {"resolved_config", config},
                     {"seed", seed},
                     {"jobs", args.jobs},
                     {"out_dir", args.out_dir}};
  manifest.write(args.out_dir + "/run");
  std::cout << "{\"cells\":" << cells.size() << ",\"out\":\"" << results_path
            << "\"}\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive ISTA with MAD thresholding: solver and analysis tools"};
  app.require_subcommand(1);

  SolveArgs solve_args;
  CLI::App* solve = app.add_subcommand("solve", "Run the solver on A, y");
  solve->add_option("--A", solve_args.a_path, "measurement matrix CSV")->required();
  solve->add_option("--y", solve_args.y_path, "observation vector CSV")->required();
  solve->add_option("--gamma", solve_args.gamma, "MAD multiplier (> 1)");
  solve->add_option("--mu", solve_args.mu, "step size (default 1/||A||^2)");
  solve->add_option("--rule", solve_args.rule, "mad | ksparse:K | fixed:LAMBDA");
  solve->add_option("--tol", solve_args.tol, "stopping tolerance");
  solve->add_option("--max-iter", solve_args.max_iter, "iteration limit");
  solve->add_option("--trace", solve_args.trace_path, "per-iteration trace CSV");
  solve->add_option("--out", solve_args.out_path, "solution CSV")->required();

  PathArgs path_args;
  CLI::App* path = app.add_subcommand("path", "Compute the LASSO homotopy path");
  path->add_option("--A", path_args.a_path)->required();
  path->add_option("--y", path_args.y_path)->required();
  path->add_option("--lambda-min", path_args.lambda_min, "path floor");
  path->add_option("--segments", path_args.segments_path, "segment table CSV")
      ->required();
  path->add_option("--gamma-grid", path_args.gamma_grid_path,
                   "dense gamma(lambda) samples CSV");
  path->add_option("--grid-points", path_args.grid_points, "grid sample count");

  FixedPointArgs fp_args;
  CLI::App* fp = app.add_subcommand("fixed-points",
                                    "Enumerate and classify fixed points");
  fp->add_option("--A", fp_args.a_path)->required();
  fp->add_option("--y", fp_args.y_path)->required();
  fp->add_option("--gamma", fp_args.gamma)->required();
  fp->add_option("--mu", fp_args.mu);
  fp->add_option("--out", fp_args.out_path, "candidate report JSON")->required();

  RecurArgs recur_args;
  CLI::App* recur = app.add_subcommand("recur", "Matrix-recurrence analysis run");
  recur->add_option("--A", recur_args.a_path)->required();
  recur->add_option("--y", recur_args.y_path)->required();
  recur->add_option("--x0", recur_args.x0_path, "initial iterate CSV");
  recur->add_option("--gamma", recur_args.gamma)->required();
  recur->add_option("--mu", recur_args.mu);
  recur->add_option("--iters", recur_args.iters, "iteration budget");
  recur->add_option("--tol", recur_args.tol, "stopping tolerance (0 disables)");
  recur->add_option("--log", recur_args.log_path, "recurrence log CSV")->required();

  ExperimentArgs exp_args;
  CLI::App* exp = app.add_subcommand("experiment", "Run a realization sweep");
  exp->add_option("--config", exp_args.config_path, "sweep config JSON")->required();
  exp->add_option("--out-dir", exp_args.out_dir, "output directory")->required();
  exp->add_option("--jobs", exp_args.jobs, "parallel workers");
  exp->add_option("--seed", exp_args.seed_flag, "override base seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) return cmd_solve(solve_args);
    if (*path) return cmd_path(path_args);
    if (*fp) return cmd_fixed_points(fp_args);
    if (*recur) return cmd_recur(recur_args);
    if (*exp) return cmd_experiment(exp_args);
  } catch (const MalformedInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const DegeneratePath& e) {
    std::cerr << "error: degenerate path at knot " << format_double(e.knot) << ": "
              << e.what() << "\n";
    return kExitDegenerate;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  }
  return kExitBadInput;
}
