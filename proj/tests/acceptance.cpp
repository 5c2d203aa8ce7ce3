// Acceptance suite: one pass/fail line per criterion (A1-A10), nonzero exit
// if any criterion fails. Runtimes are desk scale; the whole suite is a few
// minutes single-threaded.

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "instances.hpp"
#include "madlasso/madlasso.hpp"
#include "oracles.hpp"

using namespace madlasso;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(const char* id, bool pass, const std::string& detail) {
  std::printf("%s %s — %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

// ------------------------------------------------------------------- A1 ----
// Prox property and support bound of the MAD thresholding operator.
void a1_prox_and_support() {
  auto g = oracle::rng(0xA1);
  const std::vector<std::size_t> sizes{5, 6, 100, 101};
  const std::vector<double> gammas{1.01, 1.5, 1.4826 * 1.2};
  double worst_residual = 0.0;
  std::size_t support_checks = 0, support_violations = 0;
  for (std::size_t draw = 0; draw < 10000; ++draw) {
    const std::size_t n = sizes[draw % sizes.size()];
    const Vec z = oracle::random_gaussian_vec(g, n);
    for (double gamma : gammas) {
      const ThresholdResult t = mad_threshold(z, gamma);
      for (std::size_t i = 0; i < n; ++i) {
        const double r = t.output[i] - z[i];
        const double viol = t.output[i] != 0.0
                                ? std::abs(r + t.threshold * sgn(t.output[i]))
                                : std::max(0.0, std::abs(r) - t.threshold);
        worst_residual = std::max(worst_residual, viol);
      }
      if (t.median.value > 0.0) {
        ++support_checks;
        if (2 * t.support.size() >= n) ++support_violations;
      }
    }
  }
  const bool pass = worst_residual <= 1e-12 && support_violations == 0;
  report("A1", pass,
         fmt("prox subgradient residual max %.2e (<= 1e-12); support bound "
             "|S| < N/2 held in %zu/%zu checks",
             worst_residual, support_checks - support_violations, support_checks));
}

// -------------------------------------------------------------- A2 / A3 ----
// Fixed-point condition with mu-invariance, then scale equivariance, on the
// same 50 compressive-sensing instances (N = 64, M = 32, rho = 0.1).
void a2_a3_mu_invariance_and_scale() {
  const double gamma = 1.2 * 1.4826;
  std::size_t converged_runs = 0, fp_failures = 0;
  double worst_pair = 0.0;
  std::size_t pairs = 0;
  double worst_scale = 0.0;
  std::size_t scale_checks = 0;

  for (std::uint64_t inst_id = 0; inst_id < 50; ++inst_id) {
    ProblemSpec spec;
    spec.family = Family::Gaussian;
    spec.n = 64;
    spec.undersampling = 0.5;
    spec.rho = 0.1;
    spec.snr_db = 20.0;
    spec.seed = 0xA2000 + inst_id;
    const ProblemInstance inst = generate(spec);
    const double nsq = std::pow(operator_norm(inst.A), 2);

    std::vector<Vec> limits;
    for (double factor : {0.3, 1.0, 1.8}) {
      SolverConfig cfg;
      cfg.gamma = gamma;
      cfg.mu = factor / nsq;
      cfg.tol = 1e-12;
      cfg.max_iter = 200000;
      const SolveOutcome out = adaptive_ista(inst.A, inst.y, cfg);
      if (out.status != SolveStatus::Converged) continue;
      ++converged_runs;
      if (!check_fixed_point(inst.A, inst.y, out.x_star, gamma, 1e-8).passes)
        ++fp_failures;
      limits.push_back(out.x_star);
    }
    for (std::size_t i = 0; i < limits.size(); ++i) {
      for (std::size_t j = i + 1; j < limits.size(); ++j) {
        ++pairs;
        const double diff = max_abs_diff(limits[i], limits[j]) /
                            std::max(1.0, norm_inf(limits[i]));
        worst_pair = std::max(worst_pair, diff);
      }
    }

    // A3 on the baseline run
    if (!limits.empty()) {
      SolverConfig cfg;
      cfg.gamma = gamma;
      cfg.mu = 1.0 / nsq;
      cfg.tol = 1e-12;
      cfg.max_iter = 200000;
      const SolveOutcome base = adaptive_ista(inst.A, inst.y, cfg);
      if (base.status == SolveStatus::Converged) {
        for (double c : {0.1, 3.0}) {
          const SolveOutcome scaled = adaptive_ista(inst.A, c * inst.y, cfg);
          if (scaled.status != SolveStatus::Converged) continue;
          ++scale_checks;
          const double err = max_abs_diff(scaled.x_star, c * base.x_star) /
                             (c * std::max(1.0, norm_inf(base.x_star)));
          worst_scale = std::max(worst_scale, err);
        }
      }
    }
  }

  const bool a2_pass =
      converged_runs >= 140 && fp_failures == 0 && worst_pair <= 1e-6 && pairs >= 140;
  report("A2", a2_pass,
         fmt("mu-invariance: %zu/150 runs converged, %zu fixed-point failures, "
             "worst pairwise limit gap %.2e (<= 1e-6) over %zu pairs",
             converged_runs, fp_failures, worst_pair, pairs));
  const bool a3_pass = scale_checks >= 90 && worst_scale <= 1e-6;
  report("A3", a3_pass,
         fmt("scale equivariance: %zu checks, worst normalized error %.2e "
             "(<= 1e-6)",
             scale_checks, worst_scale));
}

// ------------------------------------------------------------------- A4 ----
// Path correctness against the coordinate-descent oracle plus the Lemma-2
// median line and knot continuity.
void a4_path_correctness() {
  auto grand = oracle::rng(0xA4);
  double worst_solution = 0.0, worst_median = 0.0, worst_knot = 0.0;
  std::size_t instances_done = 0;
  for (std::uint64_t inst_id = 0; inst_id < 20; ++inst_id) {
    const std::size_t n = 18 + (inst_id % 13);  // up to 30
    const std::size_t m = n / 2 + 2;
    auto g = oracle::rng(0xA400 + inst_id);
    const DenseMatrix a =
        oracle::random_matrix(g, m, n, 1.0 / std::sqrt(static_cast<double>(m)));
    Vec x0(n, 0.0);
    std::bernoulli_distribution spike(0.2);
    std::normal_distribution<double> ampd(0.0, 1.0);
    for (double& v : x0)
      if (spike(g)) v = ampd(g);
    const Vec y = a.mul(x0) + oracle::random_gaussian_vec(g, m, 0.05);

    std::vector<PathSegment> segs;
    try {
      segs = lasso_path(a, y);
    } catch (const DegeneratePath&) {
      continue;  // ties violate the general-position assumption
    }
    ++instances_done;
    const double lambda_max = segs[0].lambda_lo;
    const double lambda_lo = segs.back().lambda_lo;

    std::uniform_real_distribution<double> unif(lambda_lo * 1.01, lambda_max * 0.999);
    for (int rep = 0; rep < 50; ++rep) {
      const double lam = unif(grand);
      for (const PathSegment& s : segs) {
        if (lam >= s.lambda_lo && lam < s.lambda_hi) {
          const Vec x_path = segment_solution(s, lam, n);
          const Vec x_cd = oracle::cd_lasso(a, y, lam, 1e-12);
          worst_solution = std::max(worst_solution, max_abs_diff(x_path, x_cd));
          break;
        }
      }
    }

    for (const PathSegment& seg : segs) {
      const double hi =
          std::isinf(seg.lambda_hi) ? seg.lambda_lo * 2.0 + 1.0 : seg.lambda_hi;
      for (int i = 1; i <= 10; ++i) {
        const double lam =
            seg.lambda_lo + (hi - seg.lambda_lo) * static_cast<double>(i) / 11.0;
        const Vec x = segment_solution(seg, lam, n);
        const Vec c = a.tmul(y - a.mul(x));
        const double med = median_abs(c).value;
        worst_median =
            std::max(worst_median, std::abs(std::abs(seg.a * lam + seg.b) - med));
      }
    }

    for (std::size_t k = 0; k + 1 < segs.size(); ++k) {
      const double knot = segs[k].lambda_lo;
      const Vec x_hi = segment_solution(segs[k], knot, n);
      const Vec x_lo = segment_solution(segs[k + 1], knot, n);
      worst_knot = std::max(worst_knot, max_abs_diff(x_hi, x_lo));
    }
  }
  const bool pass = instances_done >= 18 && worst_solution <= 1e-7 &&
                    worst_median <= 1e-9 && worst_knot <= 1e-9;
  report("A4", pass,
         fmt("path vs CD oracle on %zu instances: max solution gap %.2e "
             "(<= 1e-7), median-line gap %.2e (<= 1e-9), knot gap %.2e (<= 1e-9)",
             instances_done, worst_solution, worst_median, worst_knot));
}

// ------------------------------------------------------------------- A5 ----
// Stability verdicts against the actual dynamics on the curated corpus.
void a5_stability_dynamics() {
  std::size_t stable_checked = 0, stable_ok = 0;
  std::size_t unstable_checked = 0, unstable_ok = 0;
  for (const testinst::CuratedEntry& entry : testinst::curated_corpus()) {
    const testinst::Instance inst = testinst::gaussian_8x16(entry.seed);
    const double mu = 1.0 / std::pow(operator_norm(inst.A), 2);
    const std::vector<PathSegment> segs = lasso_path(inst.A, inst.y);
    const std::vector<FixedPointCandidate> cands =
        candidates_for_gamma(inst.A, inst.y, segs, entry.gamma, mu);
    for (const FixedPointCandidate& c : cands) {
      std::vector<std::size_t> support;
      for (std::size_t i = 0; i < c.x_star.size(); ++i)
        if (c.x_star[i] != 0.0) support.push_back(i);
      if (support.empty()) continue;

      Vec xp = c.x_star;
      for (std::size_t t = 0; t < support.size(); ++t)
        xp[support[t]] += (t % 2 ? -1e-6 : 1e-6);

      SolverConfig cfg;
      cfg.gamma = entry.gamma;
      cfg.mu = mu;
      cfg.tol = 1e-13;
      cfg.max_iter = 20000;
      cfg.trace = true;
      const SolveOutcome out = warm_start(inst.A, inst.y, cfg, xp);

      if (c.verdict == Verdict::Stable) {
        ++stable_checked;
        if (out.status == SolveStatus::Converged &&
            max_abs_diff(out.x_star, c.x_star) <= 1e-8)
          ++stable_ok;
      } else {
        ++unstable_checked;
        for (const TraceRecord& rec : out.trace->records) {
          if (rec.k >= 2000) break;
          if (max_abs_diff(rec.x, c.x_star) > 1e-3) {
            ++unstable_ok;
            break;
          }
        }
      }
    }
  }
  const bool pass = stable_checked >= 10 && unstable_checked >= 10 &&
                    stable_ok == stable_checked && unstable_ok == unstable_checked;
  report("A5", pass,
         fmt("curated corpus (%zu instances): %zu/%zu stable candidates "
             "re-attract to 1e-8, %zu/%zu unstable candidates exit the 1e-3 "
             "ball within 2000 iterations",
             testinst::curated_corpus().size(), stable_ok, stable_checked,
             unstable_ok, unstable_checked));
}

// ------------------------------------------------------------------- A6 ----
// Matrix-recurrence equivalence and final-segment linear rate.
void a6_recurrence() {
  double worst_z = 0.0, worst_rate_rel = 0.0;
  std::size_t runs_rated = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto g = oracle::rng(seed);
    const std::size_t m = 16, n = 40;
    const DenseMatrix a = oracle::random_matrix(g, m, n, 0.25);
    std::bernoulli_distribution spike(0.12);
    std::normal_distribution<double> ampd(0.0, 1.0);
    Vec x0(n, 0.0);
    for (double& v : x0)
      if (spike(g)) v = ampd(g);
    const Vec y = a.mul(x0) + oracle::random_gaussian_vec(g, m, 0.05);

    SolverConfig cfg;
    cfg.tol = 1e-12;
    const RecurrenceLog log = run_recurrence(a, y, cfg, 200);
    for (const RecurrenceStep& s : log.steps)
      worst_z = std::max(worst_z, s.z_residual);

    const std::vector<SegmentRate> rates = detect_piecewise(log);
    if (rates.empty()) continue;
    const SegmentRate& fin = rates.back();
    if (fin.at_fixed_point || fin.radius <= 0.0) continue;
    ++runs_rated;
    worst_rate_rel = std::max(worst_rate_rel,
                              std::abs(fin.fitted_rate - fin.radius) / fin.radius);
  }
  const bool pass = worst_z <= 1e-10 && runs_rated == 20 && worst_rate_rel <= 0.05;
  report("A6", pass,
         fmt("recurrence replay on 20 runs x 200 iterations: max z-residual "
             "%.2e (<= 1e-10); final-segment rate vs radius off by at most "
             "%.2f%% on %zu rated runs (<= 5%%)",
             worst_z, 100.0 * worst_rate_rel, runs_rated));
}

// -------------------------------------------------------------- A7 / A8 ----
void a7_oracle_parity() {
  struct FamilyCase {
    Family family;
    double tol;
  };
  const std::vector<FamilyCase> cases{{Family::Gaussian, 0.05},
                                      {Family::DCT, 0.05},
                                      {Family::Deconv, 0.10}};
  bool pass = true;
  std::string detail;
  for (const FamilyCase& fc : cases) {
    ProblemSpec spec;
    spec.family = fc.family;
    spec.n = 256;
    spec.undersampling = 0.5;
    spec.filter_length = 10;
    spec.rho = 0.1;
    spec.seed = 0xA70000;
    const SweepParams params = default_sweep_params(fc.family);
    const std::vector<CellResult> cells =
        sweep(spec, {30.0, 20.0, 10.0}, {Method::Mad, Method::OracleLasso}, 100, 1,
              params);
    for (std::size_t i = 0; i < cells.size(); i += 2) {
      const double mad = cells[i].mean_mse;
      const double orc = cells[i + 1].mean_mse;
      const double rel = std::abs(mad - orc) / orc;
      if (!(rel <= fc.tol)) pass = false;
      detail += fmt("%s@%g:%.1f%% ", to_string(fc.family), cells[i].snr_db,
                    100.0 * rel);
    }
  }
  report("A7", pass,
         "mean-MSE gap MAD vs oracle LASSO, 100 realizations (CS/DCT <= 5%, "
         "deconv <= 10%): " +
             detail);
}

void a8_amp_parity() {
  ProblemSpec spec;
  spec.family = Family::Gaussian;
  spec.n = 256;
  spec.undersampling = 0.5;
  spec.rho = 0.1;
  spec.seed = 0xA80000;
  const std::vector<CellResult> cells =
      sweep(spec, {30.0, 20.0, 10.0}, {Method::Mad, Method::Amp}, 100, 1);
  bool pass = true;
  std::string detail;
  for (std::size_t i = 0; i < cells.size(); i += 2) {
    const double mad = cells[i].mean_mse;
    const double amp = cells[i + 1].mean_mse;
    const double rel = std::abs(mad - amp) / amp;
    if (!(rel <= 0.10)) pass = false;
    detail += fmt("snr%g:%.1f%% ", cells[i].snr_db, 100.0 * rel);
  }
  report("A8", pass,
         "mean-MSE gap MAD vs AMP on compressive sensing (<= 10%): " + detail);
}

// ------------------------------------------------------------------- A9 ----
void a9_concentration() {
  std::vector<double> sds;
  std::string detail;
  for (std::size_t n : {std::size_t{128}, std::size_t{256}, std::size_t{512}}) {
    ProblemSpec spec;
    spec.family = Family::Gaussian;
    spec.n = n;
    spec.undersampling = 0.5;
    spec.rho = 0.1;
    spec.seed = 0xA90000;
    const std::vector<CellResult> cells = sweep(spec, {20.0}, {Method::Mad}, 100, 1);
    const CellResult& cell = cells[0];
    const double mean = cell.mean_mse;
    double ss = 0.0;
    std::size_t cnt = 0;
    for (const RealizationResult& r : cell.realizations) {
      if (r.failed || r.status == SolveStatus::Diverged) continue;
      ss += (r.mse - mean) * (r.mse - mean);
      ++cnt;
    }
    const double sd = std::sqrt(ss / static_cast<double>(cnt - 1));
    sds.push_back(sd);
    detail += fmt("N=%zu sd=%.3e ", n, sd);
  }
  const bool pass = sds[1] <= 1.1 * sds[0] && sds[2] <= 1.1 * sds[1];
  report("A9", pass,
         "MSE standard deviation nonincreasing in N within 10% slack: " + detail);
}

// ------------------------------------------------------------------ A10 ----
// Byte-identical reruns of every CLI command.
std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(MADLASSO_CLI_PATH) + " " + args + " >/dev/null 2>/dev/null";
  return WEXITSTATUS(std::system(cmd.c_str()));
}

void a10_determinism() {
  const fs::path dir = fs::temp_directory_path() / "madlasso_acceptance_a10";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto p = [&](const std::string& name) { return (dir / name).string(); };

  auto g = oracle::rng(0xA10);
  const DenseMatrix a = oracle::random_matrix(g, 8, 16, 0.35);
  const Vec y = oracle::random_gaussian_vec(g, 8);
  write_matrix_csv(p("A.csv"), a);
  write_vector_csv(p("y.csv"), y);
  {
    std::ofstream cfg(p("cfg.json"));
    cfg << R"({"family":"gaussian","n":48,"snr_db":[20.0],"methods":["mad",)"
        << R"("oracle_lasso"],"n_realizations":5,"seed":3})";
  }

  bool pass = true;
  std::string detail;
  auto check_pair = [&](const std::string& name, const std::string& args,
                        const std::vector<std::string>& outputs) {
    const int rc1 = run_cli(args);
    std::vector<std::string> first;
    for (const std::string& o : outputs) first.push_back(slurp(o));
    const int rc2 = run_cli(args);
    bool same = rc1 == rc2;
    for (std::size_t i = 0; i < outputs.size(); ++i)
      if (slurp(outputs[i]) != first[i]) same = false;
    if (!same) pass = false;
    detail += name + (same ? ":ok " : ":DIFFERS ");
  };

  check_pair("solve",
             "solve --A " + p("A.csv") + " --y " + p("y.csv") +
                 " --gamma 1.78 --trace " + p("t.csv") + " --out " + p("x.csv"),
             {p("x.csv"), p("t.csv")});
  check_pair("path",
             "path --A " + p("A.csv") + " --y " + p("y.csv") + " --segments " +
                 p("s.csv") + " --gamma-grid " + p("g.csv"),
             {p("s.csv"), p("g.csv")});
  check_pair("fixed-points",
             "fixed-points --A " + p("A.csv") + " --y " + p("y.csv") +
                 " --gamma 1.6 --out " + p("fp.json"),
             {p("fp.json")});
  check_pair("recur",
             "recur --A " + p("A.csv") + " --y " + p("y.csv") +
                 " --gamma 1.6 --iters 100 --log " + p("r.csv"),
             {p("r.csv")});

  run_cli("experiment --config " + p("cfg.json") + " --out-dir " + p("e1") +
          " --jobs 2");
  run_cli("experiment --config " + p("cfg.json") + " --out-dir " + p("e2") +
          " --jobs 1");
  if (slurp(p("e1") + "/results.csv") != slurp(p("e2") + "/results.csv") ||
      slurp(p("e1") + "/summary.json") != slurp(p("e2") + "/summary.json")) {
    pass = false;
    detail += "experiment:DIFFERS ";
  } else {
    detail += "experiment:ok ";
  }
  fs::remove_all(dir);
  report("A10", pass, "byte-identical CLI reruns: " + detail);
}

}  // namespace

int main() {
  a1_prox_and_support();
  a2_a3_mu_invariance_and_scale();
  a4_path_correctness();
  a5_stability_dynamics();
  a6_recurrence();
  a7_oracle_parity();
  a8_amp_parity();
  a9_concentration();
  a10_determinism();
  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
