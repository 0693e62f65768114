#include "stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "errors.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace kms {

namespace {

std::vector<Eigen::Index> shuffled_indices(Eigen::Index n, std::uint64_t seed) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  Rng rng(seed);
  rng.shuffle(std::span<Eigen::Index>(idx));
  return idx;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& idx, std::size_t from,
                          std::size_t to) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(to - from), m.cols());
  for (std::size_t i = from; i < to; ++i) out.row(static_cast<Eigen::Index>(i - from)) = m.row(idx[i]);
  return out;
}

}  // namespace

void CriticalValueParams::validate() const {
  if (!(A > 0.0) || !std::isfinite(A)) throw UsageError("critical value: A must be positive");
  if (!(C_univ >= 1.0) || !std::isfinite(C_univ)) throw UsageError("critical value: C must be >= 1");
  if (!(p >= 1.0) || !std::isfinite(p)) throw UsageError("critical value: p must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie in (0, 1)");
}

double critical_value(Eigen::Index n, const CriticalValueParams& params) {
  params.validate();
  if (n < 1) throw UsageError("critical value: n must be positive");
  const double inner = params.C_univ + 4.0 * std::sqrt(std::log(2.0 / params.alpha));
  return 4.0 * params.A * std::pow(inner, 1.0 / params.p) *
         std::pow(static_cast<double>(n), -1.0 / (2.0 * params.p));
}

TestResult two_sample_test(const PointCloud& x, const PointCloud& y, const KernelSpec& kernel,
                           const PermutationTestOptions& opts) {
  validate_pair(x, y);
  if (!(opts.alpha > 0.0 && opts.alpha < 1.0)) throw UsageError("alpha must lie in (0, 1)");
  if (opts.permutations < 1) throw UsageError("need at least one permutation");
  const Eigen::Index n = x.n();
  if (n < 4) throw UsageError("two-sample test needs n >= 4 per sample to split");

  const Eigen::Index n_train = n / 2;
  const auto ix = shuffled_indices(n, derive_seed(opts.seed, "test.split.x"));
  const auto iy = shuffled_indices(n, derive_seed(opts.seed, "test.split.y"));
  const auto nt = static_cast<std::size_t>(n_train);
  const auto nn = static_cast<std::size_t>(n);
  const PointCloud x_train(take_rows(x.points, ix, 0, nt)), x_test(take_rows(x.points, ix, nt, nn));
  const PointCloud y_train(take_rows(y.points, iy, 0, nt)), y_test(take_rows(y.points, iy, nt, nn));

  TestResult res;
  res.mode = "bootstrap";
  res.alpha = opts.alpha;
  res.n = n;
  res.n_train = n_train;
  res.n_test = n - n_train;
  res.seed = opts.seed;
  res.kernel = kernel.resolve(x_train, y_train);

  KmsOptions solver = opts.solver;
  solver.seed = derive_seed(opts.seed, "test.fit");
  const KmsResult fit = kms2(x_train, y_train, res.kernel, solver);
  res.fit_value = fit.value;

  const Eigen::VectorXd u = fit.projector.apply(x_test.points);
  const Eigen::VectorXd v = fit.projector.apply(y_test.points);
  res.statistic = projected_wasserstein_p(u, v, 2.0);

  const Eigen::Index m = u.size();
  Eigen::VectorXd pooled(2 * m);
  pooled << u, v;
  Rng rng(derive_seed(opts.seed, "test.permutation"));
  res.permutation_stats.resize(static_cast<std::size_t>(opts.permutations));
  int exceed = 0;
  for (int t = 0; t < opts.permutations; ++t) {
    rng.shuffle(std::span<double>(pooled.data(), static_cast<std::size_t>(pooled.size())));
    const double stat = projected_wasserstein_p(pooled.head(m), pooled.tail(m), 2.0);
    res.permutation_stats[static_cast<std::size_t>(t)] = stat;
    if (stat >= res.statistic) ++exceed;
  }
  std::vector<double> sorted = res.permutation_stats;
  std::sort(sorted.begin(), sorted.end());
  const auto rank = static_cast<std::size_t>(std::ceil((1.0 - opts.alpha) * opts.permutations));
  res.threshold = sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
  res.reject = res.statistic > res.threshold;
  res.p_value = (1.0 + exceed) / (1.0 + opts.permutations);
  return res;
}

TestResult theorem_test(const PointCloud& x, const PointCloud& y, const KernelSpec& kernel,
                        const CriticalValueParams& params, const KmsOptions& solver) {
  validate_pair(x, y);
  TestResult res;
  res.mode = "theorem";
  res.alpha = params.alpha;
  res.n = x.n();
  res.n_train = x.n();
  res.n_test = x.n();
  res.seed = solver.seed;
  res.kernel = kernel.resolve(x, y);
  CriticalValueParams cv = params;
  cv.A = res.kernel.bound(x, y);
  res.threshold = critical_value(x.n(), cv);
  const KmsResult fit = kms2(x, y, res.kernel, solver);
  res.fit_value = fit.value;
  if (params.p == 2.0) {
    res.statistic = fit.distance;
  } else {
    res.statistic = projected_wasserstein_p(fit.projector.apply(x.points), fit.projector.apply(y.points), params.p);
  }
  res.reject = res.statistic > res.threshold;
  res.p_value = 1.0;
  return res;
}

double t_quantile_975(int dof) {
  static const double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
                                 2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
                                 2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
  if (dof < 1) return std::numeric_limits<double>::quiet_NaN();
  if (dof <= 30) return table[dof - 1];
  return 1.959964 + 2.4 / dof;  // close enough beyond the table
}

SweepResult rate_sweep(const SampleGenerator& generator, const SweepOptions& opts) {
  if (opts.sizes.size() < 2) throw UsageError("rate sweep needs at least two sample sizes");
  if (opts.trials < 1) throw UsageError("rate sweep needs at least one trial");
  if (!(opts.p >= 1.0)) throw UsageError("p must be >= 1");
  for (const auto n : opts.sizes) {
    if (n < 1) throw UsageError("sample sizes must be positive");
  }

  SweepResult res;
  res.sizes = opts.sizes;
  res.expected_slope = -1.0 / (2.0 * opts.p);
  const std::size_t trials = static_cast<std::size_t>(opts.trials);
  const std::size_t jobs = opts.sizes.size() * trials;
  res.rows.resize(jobs);
  std::vector<std::string> methods(jobs);

  parallel_for(jobs, opts.threads, [&](std::size_t job) {
    const Eigen::Index n = opts.sizes[job / trials];
    const int trial = static_cast<int>(job % trials);
    const std::uint64_t seed = derive_seed(opts.seed, "sweep.trial", static_cast<std::uint64_t>(job));
    const auto [x, y] = generator(n, seed);
    double stat = 0.0;
    if (opts.p != 2.0 && opts.kernel.kind == KernelKind::dot_product && x.d() == 1) {
      // In one dimension the unit-norm linear projector is +-identity.
      stat = projected_wasserstein_p(x.points.col(0), y.points.col(0), opts.p);
      methods[job] = "sorted-1d";
    } else {
      const Kernel k = opts.kernel.resolve(x, y);
      KmsOptions solver = opts.solver;
      solver.seed = derive_seed(seed, "sweep.fit");
      const KmsResult fit = kms2(x, y, k, solver);
      if (opts.p == 2.0) {
        stat = fit.distance;
        methods[job] = "sdr";
      } else {
        stat = projected_wasserstein_p(fit.projector.apply(x.points), fit.projector.apply(y.points), opts.p);
        methods[job] = "sdr-projector";
      }
    }
    res.rows[job] = SweepRow{n, trial, stat};
  });

  std::sort(methods.begin(), methods.end());
  methods.erase(std::unique(methods.begin(), methods.end()), methods.end());
  for (const auto& m : methods) res.method += (res.method.empty() ? "" : "+") + m;

  const std::size_t k = opts.sizes.size();
  res.means.assign(k, 0.0);
  for (const auto& row : res.rows) {
    const auto at = std::find(opts.sizes.begin(), opts.sizes.end(), row.n) - opts.sizes.begin();
    res.means[static_cast<std::size_t>(at)] += row.statistic / static_cast<double>(opts.trials);
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  res.degenerate = std::any_of(res.means.begin(), res.means.end(), [](double m) { return !(m > 1e-6); });
  if (res.degenerate) {
    res.slope = res.intercept = res.slope_stderr = res.ci_low = res.ci_high = nan;
    return res;
  }
  Eigen::VectorXd lx(static_cast<Eigen::Index>(k)), ly(static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    lx(static_cast<Eigen::Index>(i)) = std::log(static_cast<double>(opts.sizes[i]));
    ly(static_cast<Eigen::Index>(i)) = std::log(res.means[i]);
  }
  const double mx = lx.mean(), my = ly.mean();
  const double sxx = (lx.array() - mx).square().sum();
  if (!(sxx > 0.0)) throw UsageError("rate sweep needs at least two distinct sample sizes");
  res.slope = ((lx.array() - mx) * (ly.array() - my)).sum() / sxx;
  res.intercept = my - res.slope * mx;
  const int dof = static_cast<int>(k) - 2;
  if (dof >= 1) {
    const double sse = (ly.array() - res.intercept - res.slope * lx.array()).square().sum();
    res.slope_stderr = std::sqrt(sse / dof / sxx);
    const double t = t_quantile_975(dof);
    res.ci_low = res.slope - t * res.slope_stderr;
    res.ci_high = res.slope + t * res.slope_stderr;
  } else {
    res.slope_stderr = res.ci_low = res.ci_high = nan;
  }
  return res;
}

SweepResult rate_sweep(const DatasetSpec& base, const SweepOptions& opts) {
  base.validate();
  return rate_sweep(
      [&base](Eigen::Index n, std::uint64_t seed) {
        DatasetSpec spec = base;
        spec.n = n;
        spec.seed = seed;
        return generate(spec);
      },
      opts);
}

std::vector<RankCheckRow> rank_check(const RankCheckOptions& opts) {
  if (opts.sizes.empty()) throw UsageError("rankcheck needs at least one n");
  if (opts.trials < 1) throw UsageError("rankcheck needs at least one trial");
  for (const auto n : opts.sizes) {
    if (n < 1) throw UsageError("sample sizes must be positive");
  }
  const std::size_t trials = static_cast<std::size_t>(opts.trials);
  std::vector<RankCheckRow> rows(opts.sizes.size() * trials);
  parallel_for(rows.size(), opts.threads, [&](std::size_t job) {
    DatasetSpec spec;
    spec.kind = opts.dataset;
    spec.n = opts.sizes[job / trials];
    spec.d = default_dimension(spec.kind);
    spec.seed = derive_seed(opts.seed, "rankcheck.data", static_cast<std::uint64_t>(job));
    const auto [x, y] = generate(spec);
    const KernelSpec ks{KernelKind::gaussian, std::nullopt, BandwidthConvention::half};
    KmsOptions solver = opts.solver;
    solver.seed = derive_seed(opts.seed, "rankcheck.fit", static_cast<std::uint64_t>(job));
    const KmsResult fit = kms2(x, y, ks.resolve(x, y), solver);
    rows[job] = RankCheckRow{spec.n, static_cast<int>(job % trials), fit.diagnostics.rank_before,
                             fit.rank_after_reduction, rank_bound(spec.n)};
  });
  return rows;
}

}  // namespace kms
