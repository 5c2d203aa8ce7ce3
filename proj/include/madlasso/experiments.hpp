#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "madlasso/errors.hpp"
#include "madlasso/matrix.hpp"
#include "madlasso/solvers.hpp"
#include "madlasso/thresholding.hpp"

namespace madlasso {

enum class Family { Gaussian, DCT, Deconv };

inline const char* to_string(Family f) {
  switch (f) {
    case Family::Gaussian: return "gaussian";
    case Family::DCT: return "dct";
    case Family::Deconv: return "deconv";
  }
  return "?";
}

struct ProblemSpec {
  Family family = Family::Gaussian;
  std::size_t n = 256;
  double undersampling = 0.5;     // M/N for Gaussian and DCT
  std::size_t filter_length = 10; // moving-average length for Deconv
  double rho = 0.1;               // Bernoulli-Gaussian sparsity level
  double snr_db = 20.0;
  std::uint64_t seed = 0;
};

struct ProblemInstance {
  DenseMatrix A;
  Vec y;
  Vec x0;
  double sigma = 0.0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent generator per (seed, stream tag); realization streams stay
// schedule-invariant under any parallelism degree.
inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t tag) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ tag));
}

inline DenseMatrix dct_rows(std::size_t m, std::size_t n) {
  DenseMatrix a(m, n);
  const double pi = 3.14159265358979323846;
  for (std::size_t k = 0; k < m; ++k) {
    const double c = k == 0 ? std::sqrt(1.0 / static_cast<double>(n))
                            : std::sqrt(2.0 / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i)
      a(k, i) = c * std::cos(pi * (2.0 * i + 1.0) * k / (2.0 * n));
  }
  return a;
}

// Full convolution with the length-L moving-average filter: (N+L-1) x N.
inline DenseMatrix moving_average_matrix(std::size_t n, std::size_t filter_length) {
  const std::size_t m = n + filter_length - 1;
  DenseMatrix a(m, n, 0.0);
  const double tap = 1.0 / static_cast<double>(filter_length);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i >= j && i - j < filter_length) a(i, j) = tap;
  return a;
}

}  // namespace detail

// Problem generator: measurement matrix per family, Bernoulli-Gaussian
// ground truth, and noise calibrated so 10 log10(||Ax0||^2/(M sigma^2))
// equals the requested SNR. Fully determined by the seed.
inline ProblemInstance generate(const ProblemSpec& spec) {
  if (spec.n == 0) throw InvalidSpec("generate: N must be positive");
  if (!(spec.rho > 0.0 && spec.rho < 1.0))
    throw InvalidSpec("generate: rho must lie in (0,1)");

  ProblemInstance inst;
  std::size_t m = 0;
  switch (spec.family) {
    case Family::Gaussian: {
      if (!(spec.undersampling > 0.0 && spec.undersampling <= 1.0))
        throw InvalidSpec("generate: undersampling must lie in (0,1]");
      m = static_cast<std::size_t>(
          std::lround(spec.undersampling * static_cast<double>(spec.n)));
      if (m < 1) throw InvalidSpec("generate: M = round(undersampling*N) < 1");
      auto g = detail::stream(spec.seed, 0x6d61747269784141ULL);
      std::normal_distribution<double> d(0.0, 1.0 / std::sqrt(static_cast<double>(m)));
      inst.A = DenseMatrix(m, spec.n);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < spec.n; ++j) inst.A(i, j) = d(g);
      break;
    }
    case Family::DCT: {
      if (!(spec.undersampling > 0.0 && spec.undersampling <= 1.0))
        throw InvalidSpec("generate: undersampling must lie in (0,1]");
      m = static_cast<std::size_t>(
          std::lround(spec.undersampling * static_cast<double>(spec.n)));
      if (m < 1) throw InvalidSpec("generate: M = round(undersampling*N) < 1");
      inst.A = detail::dct_rows(m, spec.n);
      break;
    }
    case Family::Deconv: {
      if (spec.filter_length < 1) throw InvalidSpec("generate: filter length < 1");
      inst.A = detail::moving_average_matrix(spec.n, spec.filter_length);
      m = inst.A.rows();
      break;
    }
  }

  auto gx = detail::stream(spec.seed, 0x7832304247575353ULL);
  std::bernoulli_distribution spike(spec.rho);
  std::normal_distribution<double> amp(0.0, 1.0 / std::sqrt(spec.rho));
  inst.x0.assign(spec.n, 0.0);
  for (std::size_t j = 0; j < spec.n; ++j)
    if (spike(gx)) inst.x0[j] = amp(gx);

  const Vec ax0 = inst.A.mul(inst.x0);
  const double signal_power = dot(ax0, ax0);
  inst.sigma = signal_power > 0.0
                   ? std::sqrt(signal_power /
                               (static_cast<double>(m) *
                                std::pow(10.0, spec.snr_db / 10.0)))
                   : 0.0;

  auto gw = detail::stream(spec.seed, 0x6e6f697365777777ULL);
  std::normal_distribution<double> noise(0.0, 1.0);
  inst.y.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) inst.y[i] = ax0[i] + inst.sigma * noise(gw);
  return inst;
}

// LASSO solution at lambda = c * sigma with sigma known from the generator.
inline Vec oracle_lasso_baseline(const ProblemInstance& inst, double c,
                                 SolverConfig cfg = {}) {
  if (!(inst.sigma > 0.0))
    throw InvalidSpec("oracle_lasso_baseline: instance carries no positive sigma");
  return ista_fixed(inst.A, inst.y, c * inst.sigma, cfg).x_star;
}

// AMP with the MAD threshold rule and the l0/M Onsager correction. Expected
// to diverge on deterministic designs (DCT, deconvolution).
inline SolveOutcome amp_baseline(const ProblemInstance& inst, double gamma_amp,
                                 std::size_t max_iter = 2000, double tol = 1e-10) {
  const DenseMatrix& a = inst.A;
  const std::size_t n = a.cols(), m = a.rows();
  SolveOutcome out;
  out.mu_used = 1.0;

  Vec x(n, 0.0);
  Vec z = inst.y;  // residual with z^{-1} = 0
  const double divergence_bound = 1e12;
  for (std::size_t k = 0; k < max_iter; ++k) {
    const Vec pseudo = x + a.tmul(z);
    const double theta = gamma_amp * median_abs(pseudo).value;
    Vec x_next = soft(pseudo, theta);

    double l0 = 0.0;
    for (double v : x_next) l0 += v != 0.0 ? 1.0 : 0.0;
    const double onsager = l0 / static_cast<double>(m);
    const Vec ax = a.mul(x_next);
    Vec z_next(m);
    for (std::size_t i = 0; i < m; ++i)
      z_next[i] = inst.y[i] - ax[i] + z[i] * onsager;

    const double step = max_abs_diff(x_next, x);
    out.iterations = k + 1;
    x = std::move(x_next);
    z = std::move(z_next);
    if (!std::isfinite(norm_inf(x)) || norm_inf(x) > divergence_bound) {
      out.status = SolveStatus::Diverged;
      out.x_star = x;
      return out;
    }
    if (step <= tol * std::max(1.0, norm_inf(x))) {
      out.status = SolveStatus::Converged;
      out.x_star = x;
      out.lambda_star = theta;
      return out;
    }
  }
  out.status = SolveStatus::MaxIter;
  out.x_star = x;
  return out;
}

enum class Method { Mad, OracleLasso, Amp, KSparse };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::Mad: return "mad";
    case Method::OracleLasso: return "oracle_lasso";
    case Method::Amp: return "amp";
    case Method::KSparse: return "ksparse";
  }
  return "?";
}

struct SweepParams {
  double gamma_mad = 1.2 * 1.4826;   // MAD multiplier for the main method
  double oracle_scale = 1.2;         // lambda = scale * sigma for the oracle
  double gamma_amp = 1.2 * 1.4826;   // MAD multiplier inside AMP
  std::size_t ksparse_k = 0;         // 0: use round(rho*N)
  std::size_t max_iter = 40000;
  double tol = 1e-9;
};

// Paper settings: gamma = 1.2*1.4826 and lambda = 1.2 sigma for Gaussian and
// DCT designs, gamma = 1.4826 and lambda = sigma for deconvolution.
inline SweepParams default_sweep_params(Family family) {
  SweepParams p;
  if (family == Family::Deconv) {
    p.gamma_mad = 1.4826;
    p.oracle_scale = 1.0;
    p.gamma_amp = 1.4826;
  }
  return p;
}

struct RealizationResult {
  std::size_t realization = 0;
  double mse = 0.0;
  SolveStatus status = SolveStatus::MaxIter;
  bool failed = false;  // generation or solver raised
  std::string error;
};

struct Histogram {
  std::vector<double> edges;   // size bins+1
  std::vector<std::size_t> counts;
};

struct CellResult {
  double snr_db = 0.0;
  Method method = Method::Mad;
  std::vector<RealizationResult> realizations;
  double mean_mse = 0.0;  // over non-diverged, non-failed realizations
  Histogram histogram;
};

// 30 logarithmically spaced bins over the positive MSE range of a cell.
inline Histogram log_histogram(const std::vector<double>& values,
                               std::size_t bins = 30) {
  Histogram h;
  std::vector<double> pos;
  for (double v : values)
    if (v > 0.0 && std::isfinite(v)) pos.push_back(v);
  if (pos.empty()) return h;
  double lo = *std::min_element(pos.begin(), pos.end());
  double hi = *std::max_element(pos.begin(), pos.end());
  if (hi <= lo) hi = lo * (1.0 + 1e-12) + 1e-300;
  const double llo = std::log10(lo), lhi = std::log10(hi);
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i)
    h.edges[i] = std::pow(10.0, llo + (lhi - llo) * static_cast<double>(i) /
                                    static_cast<double>(bins));
  h.counts.assign(bins, 0);
  for (double v : pos) {
    std::size_t b = static_cast<std::size_t>(
        (std::log10(v) - llo) / (lhi - llo) * static_cast<double>(bins));
    if (b >= bins) b = bins - 1;
    ++h.counts[b];
  }
  return h;
}

// Realization sweep: per realization r the instance is regenerated with seed
// base_seed + r (fresh A for the Gaussian family, fresh x0 and w always) and
// each method is run on the same instance. MSE = ||x_hat - x0||^2 / N.
// Aggregation is order-independent; the parallelism degree never changes the
// numbers.
inline std::vector<CellResult> sweep(const ProblemSpec& spec_template,
                                     const std::vector<double>& snr_list,
                                     const std::vector<Method>& methods,
                                     std::size_t n_realizations,
                                     std::size_t parallelism = 1,
                                     SweepParams params = {}) {
  if (n_realizations < 1) throw InvalidSpec("sweep: n_realizations must be >= 1");
  std::vector<CellResult> cells;
  for (double snr : snr_list)
    for (Method method : methods) {
      CellResult c;
      c.snr_db = snr;
      c.method = method;
      c.realizations.resize(n_realizations);
      cells.push_back(std::move(c));
    }

  auto run_realization = [&](std::size_t r) {
    for (CellResult& cell : cells) {
      ProblemSpec spec = spec_template;
      spec.snr_db = cell.snr_db;
      spec.seed = spec_template.seed + r;
      RealizationResult& res = cell.realizations[r];
      res.realization = r;
      try {
        const ProblemInstance inst = generate(spec);
        Vec x_hat;
        switch (cell.method) {
          case Method::Mad: {
            SolverConfig cfg;
            cfg.gamma = params.gamma_mad;
            cfg.max_iter = params.max_iter;
            cfg.tol = params.tol;
            const SolveOutcome o = adaptive_ista(inst.A, inst.y, cfg);
            res.status = o.status;
            x_hat = o.x_star;
            break;
          }
          case Method::OracleLasso: {
            SolverConfig cfg;
            cfg.max_iter = params.max_iter;
            cfg.tol = params.tol;
            x_hat = oracle_lasso_baseline(inst, params.oracle_scale, cfg);
            res.status = SolveStatus::Converged;
            break;
          }
          case Method::Amp: {
            const SolveOutcome o =
                amp_baseline(inst, params.gamma_amp, params.max_iter, params.tol);
            res.status = o.status;
            x_hat = o.x_star;
            break;
          }
          case Method::KSparse: {
            SolverConfig cfg;
            cfg.max_iter = params.max_iter;
            cfg.tol = params.tol;
            std::size_t k = params.ksparse_k;
            if (k == 0)
              k = std::max<std::size_t>(
                  1, static_cast<std::size_t>(
                         std::lround(spec.rho * static_cast<double>(spec.n))));
            cfg.rule = ThresholdRule::ksparse(k);
            const SolveOutcome o = adaptive_ista(inst.A, inst.y, cfg);
            res.status = o.status;
            x_hat = o.x_star;
            break;
          }
        }
        const Vec err = x_hat - inst.x0;
        res.mse = dot(err, err) / static_cast<double>(spec.n);
      } catch (const std::exception& e) {
        res.failed = true;
        res.error = e.what();
      }
    }
  };

  if (parallelism <= 1) {
    for (std::size_t r = 0; r < n_realizations; ++r) run_realization(r);
  } else {
    std::vector<std::thread> workers;
    std::size_t next = 0;
    std::mutex mtx;
    const std::size_t nw = std::min(parallelism, n_realizations);
    for (std::size_t w = 0; w < nw; ++w) {
      workers.emplace_back([&] {
        for (;;) {
          std::size_t r;
          {
            std::lock_guard<std::mutex> lock(mtx);
            if (next >= n_realizations) return;
            r = next++;
          }
          run_realization(r);
        }
      });
    }
    for (auto& t : workers) t.join();
  }

  for (CellResult& cell : cells) {
    std::vector<double> good;
    for (const RealizationResult& r : cell.realizations)
      if (!r.failed && r.status != SolveStatus::Diverged && std::isfinite(r.mse))
        good.push_back(r.mse);
    cell.mean_mse = good.empty()
                        ? std::numeric_limits<double>::quiet_NaN()
                        : std::accumulate(good.begin(), good.end(), 0.0) /
                              static_cast<double>(good.size());
    cell.histogram = log_histogram(good);
  }
  return cells;
}

}  // namespace madlasso
