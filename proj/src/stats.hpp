#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "datagen.hpp"
#include "kernels.hpp"
#include "kms.hpp"

namespace kms {

struct CriticalValueParams {
  double A = 1.0;       // kernel bound sup sqrt(K(z, z))
  double C_univ = 1.0;  // universal constant, >= 1
  double p = 2.0;
  double alpha = 0.05;

  void validate() const;
};

/// 4 A (C + 4 sqrt(log(2 / alpha)))^(1/p) n^(-1/(2p)).
double critical_value(Eigen::Index n, const CriticalValueParams& params);

struct TestResult {
  std::string mode;  // "bootstrap" or "theorem"
  double statistic = 0.0;
  double threshold = 0.0;
  bool reject = false;
  double p_value = 1.0;  // 1 in theorem mode, which has no null distribution
  std::vector<double> permutation_stats;
  double alpha = 0.05;
  Eigen::Index n = 0;
  Eigen::Index n_train = 0;
  Eigen::Index n_test = 0;
  Kernel kernel;
  std::uint64_t seed = 0;
  double fit_value = 0.0;  // value of the projector fit
};

struct PermutationTestOptions {
  double alpha = 0.05;
  int permutations = 500;
  std::uint64_t seed = 0;
  KmsOptions solver;
};

/// Split each cloud 50/50, fit the projector on the training halves, use the
/// projected W2 of the test halves as the statistic and calibrate it by
/// permuting the pooled projected test values with the projector frozen.
TestResult two_sample_test(const PointCloud& x, const PointCloud& y, const KernelSpec& kernel,
                           const PermutationTestOptions& opts);

/// Reject when the computed KMS_p distance exceeds the critical value.
/// For p != 2 the p = 2 projector is reused with the projected p-distance.
TestResult theorem_test(const PointCloud& x, const PointCloud& y, const KernelSpec& kernel,
                        const CriticalValueParams& params, const KmsOptions& solver = {});

using SampleGenerator = std::function<std::pair<PointCloud, PointCloud>(Eigen::Index n, std::uint64_t seed)>;

struct SweepOptions {
  KernelSpec kernel{KernelKind::dot_product, std::nullopt, BandwidthConvention::half};
  double p = 2.0;
  std::vector<Eigen::Index> sizes;
  int trials = 20;
  std::uint64_t seed = 0;
  KmsOptions solver;
  int threads = 1;
};

struct SweepRow {
  Eigen::Index n = 0;
  int trial = 0;
  double statistic = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<Eigen::Index> sizes;
  std::vector<double> means;
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double ci_low = 0.0;   // 95% t-interval for the slope; NaN with fewer than 3 sizes
  double ci_high = 0.0;
  bool degenerate = false;  // some mean <= 1e-6: the log-log fit is meaningless
  double expected_slope = 0.0;
  std::string method;       // how each statistic was computed
};

/// Mean KMS_p over `trials` samples per size under mu = nu, then the
/// least-squares slope of log(mean) against log(n).
SweepResult rate_sweep(const SampleGenerator& generator, const SweepOptions& opts);
SweepResult rate_sweep(const DatasetSpec& base, const SweepOptions& opts);

struct RankCheckRow {
  Eigen::Index n = 0;
  int trial = 0;
  Eigen::Index before = 0;  // numerical rank of the relaxation solution
  Eigen::Index after = 0;   // rank after reduction
  Eigen::Index bound = 0;
};

struct RankCheckOptions {
  std::vector<Eigen::Index> sizes;
  DatasetKind dataset = DatasetKind::gauss_cov_shift;
  int trials = 1;
  std::uint64_t seed = 0;
  KmsOptions solver;
  int threads = 1;
};

/// Gaussian-kernel (median bandwidth) fits on seeded datasets, one per (n, trial).
std::vector<RankCheckRow> rank_check(const RankCheckOptions& opts);

/// Two-sided 97.5% Student-t quantile.
double t_quantile_975(int dof);

}  // namespace kms
