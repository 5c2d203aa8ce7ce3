#include <catch2/catch_amalgamated.hpp>

#include "instances.hpp"
#include "madlasso/lasso_path.hpp"
#include "madlasso/recurrence.hpp"
#include "oracles.hpp"

using namespace madlasso;

namespace {

struct Instance {
  DenseMatrix A;
  Vec y;
};

Instance random_run_instance(std::uint64_t seed) {
  auto g = oracle::rng(seed);
  const std::size_t m = 16, n = 40;
  Instance inst{oracle::random_matrix(g, m, n, 1.0 / 4.0), {}};
  std::bernoulli_distribution spike(0.12);
  std::normal_distribution<double> amp(0.0, 1.0);
  Vec x0(n, 0.0);
  for (double& v : x0)
    if (spike(g)) v = amp(g);
  inst.y = inst.A.mul(x0) + oracle::random_gaussian_vec(g, m, 0.05);
  return inst;
}

}  // namespace

TEST_CASE("build_Bk identity design at mu=1 vanishes", "[recurrence]") {
  auto g = oracle::rng(70);
  const Vec z = oracle::random_gaussian_vec(g, 8);
  const ThresholdResult t = mad_threshold(z, 1.4);
  const DenseMatrix b = build_Bk(DenseMatrix::identity(8), 1.0, t);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) CHECK(b(i, j) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("build_Bk at mu=0 equals the matrix form of T", "[recurrence]") {
  auto g = oracle::rng(71);
  const DenseMatrix a = oracle::random_matrix(g, 6, 10, 0.4);
  const Vec z = oracle::random_gaussian_vec(g, 10);
  const ThresholdResult t = mad_threshold(z, 1.4);
  const DenseMatrix b = build_Bk(a, 0.0, t);
  const DenseMatrix m = mad_matrix_form(z, 1.4);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 10; ++j) CHECK(b(i, j) == m(i, j));
}

TEST_CASE("build_Bk reproduces the direct update formula", "[recurrence]") {
  auto g = oracle::rng(72);
  const DenseMatrix a = oracle::random_matrix(g, 7, 12, 0.4);
  const Vec y = oracle::random_gaussian_vec(g, 7);
  const double mu = 0.8 / std::pow(operator_norm(a), 2);
  for (int rep = 0; rep < 20; ++rep) {
    const Vec z = oracle::random_gaussian_vec(g, 12, 2.0);
    const ThresholdResult t = mad_threshold(z, 1.5);
    const DenseMatrix b = build_Bk(a, mu, t);

    // columns outside support ∪ {median} are zero
    std::vector<char> live(12, 0);
    for (std::size_t idx : t.support) live[idx] = 1;
    live[t.median.index] = 1;
    for (std::size_t j = 0; j < 12; ++j) {
      if (live[j]) continue;
      for (std::size_t i = 0; i < 12; ++i) CHECK(b(i, j) == 0.0);
    }

    // B z + mu A^T y = (I - mu A^T A) T(z) + mu A^T y
    const Vec lhs = b.mul(z) + mu * a.tmul(y);
    Vec rhs = t.output - mu * a.tmul(a.mul(t.output));
    rhs = rhs + mu * a.tmul(y);
    const double scale = std::max(1.0, norm_inf(rhs));
    CHECK(max_abs_diff(lhs, rhs) <= 1e-13 * scale);
  }
}

TEST_CASE("run_recurrence identity design is a two-step nilpotent run",
          "[recurrence]") {
  auto g = oracle::rng(73);
  const Vec y = oracle::random_gaussian_vec(g, 9);
  SolverConfig cfg;
  cfg.mu = 1.0;
  const RecurrenceLog log = run_recurrence(DenseMatrix::identity(9), y, cfg, 50);
  CHECK(log.status == SolveStatus::Converged);
  CHECK(log.steps.size() <= 2);
  for (const RecurrenceStep& s : log.steps) {
    CHECK(s.spectral_radius == Catch::Approx(0.0).margin(1e-14));
    CHECK(s.segment_id == 0);
  }
}

TEST_CASE("recurrence replay matches the direct algorithm", "[recurrence]") {
  for (std::uint64_t seed : {301, 302, 303, 304}) {
    const Instance inst = random_run_instance(seed);
    SolverConfig cfg;
    cfg.tol = 1e-12;
    const RecurrenceLog log = run_recurrence(inst.A, inst.y, cfg, 200);
    REQUIRE(!log.steps.empty());
    for (const RecurrenceStep& s : log.steps) CHECK(s.z_residual <= 1e-10);
  }
}

TEST_CASE("converged run: final segment radius below one matches the fitted rate",
          "[recurrence]") {
  const Instance inst = random_run_instance(9);  // final radius ~0.94
  SolverConfig cfg;
  cfg.tol = 1e-12;
  const RecurrenceLog log = run_recurrence(inst.A, inst.y, cfg, 1000);
  REQUIRE(log.status == SolveStatus::Converged);
  const std::vector<SegmentRate> rates = detect_piecewise(log);
  REQUIRE(!rates.empty());
  const SegmentRate& fin = rates.back();
  CHECK(fin.radius < 1.0);
  CHECK(std::abs(fin.fitted_rate - fin.radius) <= 0.05 * fin.radius);
}

TEST_CASE("warm start at an unstable candidate shows a growing segment",
          "[recurrence]") {
  const testinst::Instance inst = testinst::gaussian_8x16(4);
  const double nsq = std::pow(operator_norm(inst.A), 2);
  const std::vector<PathSegment> segs = lasso_path(inst.A, inst.y);
  const std::vector<FixedPointCandidate> cands =
      candidates_for_gamma(inst.A, inst.y, segs, 2.0, 1.0 / nsq);
  bool tested = false;
  for (const FixedPointCandidate& c : cands) {
    if (c.verdict == Verdict::Stable) continue;
    Vec xp = c.x_star;
    int t = 0;
    for (std::size_t i = 0; i < xp.size(); ++i)
      if (xp[i] != 0.0) xp[i] += (t++ % 2 ? -1e-9 : 1e-9);
    SolverConfig cfg;
    cfg.gamma = 2.0;
    cfg.mu = 1.0 / nsq;
    cfg.tol = 0.0;
    const RecurrenceLog log = run_recurrence(inst.A, inst.y, cfg, 300, xp);
    const std::vector<SegmentRate> rates = detect_piecewise(log);
    for (const SegmentRate& r : rates) {
      if (r.radius > 1.0 && !r.at_fixed_point) {
        tested = true;
        CHECK(std::abs(r.fitted_rate - r.radius) <= 0.05 * r.radius);
      }
    }
  }
  CHECK(tested);
}

TEST_CASE("detect_piecewise reports segment boundaries and fixed points",
          "[recurrence]") {
  const Instance inst = random_run_instance(1);  // several segments
  SolverConfig cfg;
  cfg.tol = 1e-12;
  const RecurrenceLog log = run_recurrence(inst.A, inst.y, cfg, 200);
  const std::vector<SegmentRate> rates = detect_piecewise(log);
  CHECK(rates.size() >= 2);
  for (std::size_t k = 0; k + 1 < rates.size(); ++k)
    CHECK(rates[k].segment_id < rates[k + 1].segment_id);

  // a run started at the fixed point: zero residuals, flagged
  auto g = oracle::rng(74);
  const Vec y = oracle::random_gaussian_vec(g, 31);
  const DenseMatrix id = DenseMatrix::identity(31);
  SolverConfig idcfg;
  idcfg.mu = 1.0;
  idcfg.tol = 0.0;
  const ThresholdResult t = mad_threshold(y, idcfg.gamma);
  const RecurrenceLog at_fp = run_recurrence(id, y, idcfg, 40, t.output);
  const std::vector<SegmentRate> fp_rates = detect_piecewise(at_fp);
  REQUIRE(!fp_rates.empty());
  CHECK(fp_rates.front().at_fixed_point);
  CHECK(fp_rates.front().fitted_rate == 0.0);
}

TEST_CASE("within-segment residual ratios are nearly constant", "[recurrence]") {
  const Instance inst = random_run_instance(9);
  SolverConfig cfg;
  cfg.tol = 1e-12;
  const RecurrenceLog log = run_recurrence(inst.A, inst.y, cfg, 1000);
  REQUIRE(log.status == SolveStatus::Converged);
  const std::vector<SegmentRate> rates = detect_piecewise(log);
  REQUIRE(!rates.empty());
  const SegmentRate& fin = rates.back();
  REQUIRE(fin.end_k - fin.start_k + 1 >= 20);

  std::vector<double> ratios;
  for (std::size_t idx = 1; idx < log.steps.size(); ++idx) {
    const RecurrenceStep& s = log.steps[idx];
    if (s.segment_id != fin.segment_id) continue;
    const double prev = log.steps[idx - 1].step_residual;
    if (prev > 1e-13 && prev < 1e-3 && s.step_residual > 1e-13)
      ratios.push_back(s.step_residual / prev);
  }
  REQUIRE(ratios.size() >= 10);
  double mean = 0.0;
  for (double r : ratios) mean += r;
  mean /= static_cast<double>(ratios.size());
  double var = 0.0;
  for (double r : ratios) var += (r - mean) * (r - mean);
  var /= static_cast<double>(ratios.size());
  CHECK(std::sqrt(var) / mean <= 0.1);
}

TEST_CASE("augmented block matrix has eigenvalue one", "[recurrence]") {
  auto g = oracle::rng(75);
  const DenseMatrix a = oracle::random_matrix(g, 5, 8, 0.4);
  const Vec y = oracle::random_gaussian_vec(g, 5);
  const double mu = 1.0 / std::pow(operator_norm(a), 2);
  const Vec x = oracle::random_gaussian_vec(g, 8);
  const Vec grad = a.tmul(y - a.mul(x));
  Vec z(x);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += mu * grad[i];
  const ThresholdResult t = mad_threshold(z, 1.5);
  const DenseMatrix b = build_Bk(a, mu, t);
  const Vec mu_aty = mu * a.tmul(y);

  DenseMatrix aug(9, 9, 0.0);
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t j = 0; j < 8; ++j) aug(i, j) = b(i, j);
    aug(i, 8) = mu_aty[i];
  }
  aug(8, 8) = 1.0;
  const Spectrum s = eigenvalues_dense(aug);
  bool has_one = false;
  for (const auto& ev : s.eigenvalues)
    if (std::abs(ev - std::complex<double>(1.0, 0.0)) <= 1e-9) has_one = true;
  CHECK(has_one);
}
