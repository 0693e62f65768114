#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "kernels.hpp"
#include "point_cloud.hpp"
#include "rankred.hpp"
#include "sdr.hpp"

namespace kms {

struct KmsOptions {
  double relative_delta = 0.002;   // delta = relative_delta * C_bound
  long max_iterations = 300;       // cap on the mirror-ascent horizon (0 = uncapped)
  std::uint64_t seed = 0;
  Eigen::Index exact_threshold = 200;  // exact inner OT for n <= threshold
  double kappa = 4.0;
  bool early_stop = true;
  StepRule step_rule = StepRule::adaptive;
  long level_pivots = 10;          // reduction pivots per rank level before a fallback step
  int polish_iterations = 20;      // rank-1 fixed-point refinements, kept only when they improve
};

/// f(z) = sum_i a_x[i] K(z, x_i) - sum_i a_y[i] K(z, y_i).
struct Projector {
  Eigen::VectorXd a_x;
  Eigen::VectorXd a_y;
  Kernel kernel;
  PointCloud anchors_x;
  PointCloud anchors_y;

  double operator()(const Eigen::Ref<const Eigen::VectorXd>& z) const;
  /// f applied to every row of Z.
  Eigen::VectorXd apply(const Eigen::MatrixXd& Z) const;
  /// s^T G s with s = (a_x; a_y).
  double rkhs_norm2() const;
};

double evaluate_projector(const Projector& p, const Eigen::Ref<const Eigen::VectorXd>& z);

/// 1-d p-Wasserstein distance between two equal-size uniform samples.
double projected_wasserstein_p(const Eigen::VectorXd& u, const Eigen::VectorXd& v, double p);

struct KmsTimings {
  double assemble = 0.0;
  double sdr = 0.0;
  double reduce = 0.0;
  double extract = 0.0;
};

struct KmsDiagnostics {
  Eigen::Index n = 0;
  Eigen::Index d = 0;
  Eigen::Index dim = 0;  // r, the dimension of the relaxation
  bool range_restricted = false;
  double c_bound = 0.0;
  double delta = 0.0;
  long horizon = 0;      // T after the cap
  long theorem_horizon = 0;
  double gamma = 0.0;
  bool exact_inner = true;
  long sdr_iterations = 0;
  bool early_stopped = false;
  double value_avg = 0.0;   // F at the averaged iterate
  double value_last = 0.0;  // F at the final iterate
  Eigen::Index rank_before = 0;
  Eigen::Index k_bound = 0;
  long reduction_iterations = 0;
  long reduction_pivots = 0;
  long tie_constraints = 0;
  long fallback_steps = 0;            // reduction steps that kept only the n binding pairs
  double reduction_value_before = 0.0;  // F at the iterate handed to the reduction
  double reduced_value = 0.0;
  std::string candidate;  // which rounding produced the reported projector
  std::vector<TraceEntry> trace_log;
  std::vector<Eigen::VectorXd> eigen_history;
  KmsTimings timings;
};

struct KmsResult {
  double distance = 0.0;     // sqrt(value)
  double value = 0.0;        // F(omega omega^T) for the extracted unit omega
  double sdr_value = 0.0;    // best F over the solver iterates, the reduced point and omega omega^T
  double upper_bound = 0.0;  // certified bound on the relaxation optimum
  Eigen::Index rank_after_reduction = 0;
  Eigen::VectorXd omega;
  Projector projector;
  KernelKind kernel_kind = KernelKind::gaussian;
  std::uint64_t seed = 0;
  KmsDiagnostics diagnostics;
};

KmsResult kms2(const PointCloud& x, const PointCloud& y, const Kernel& k, const KmsOptions& opts = {});

/// kms2 with the dot-product kernel: the linear max-sliced distance.
KmsResult ms2(const PointCloud& x, const PointCloud& y, const KmsOptions& opts = {});

/// Mirror ascent followed by rank reduction of the better iterate.
struct Relaxation {
  SolverConfig config;
  long theorem_horizon = 0;
  SdrSolution sdr;
  double value_last = 0.0;  // F at the final iterate
  bool reduced_last = false;  // whether the final iterate (not the average) was reduced
  ReducedSolution reduced;
  double sdr_seconds = 0.0;
  double reduce_seconds = 0.0;
};

Relaxation relax(const GramAssembly& ga, const KmsOptions& opts);

/// Same pipeline on a prepared assembly; the projector is left without anchors.
KmsResult kms2_assembled(const GramAssembly& ga, const KmsOptions& opts);

/// F(omega omega^T): exact OT over the costs (M_ij^T omega)^2.
double rank_one_value(const GramAssembly& ga, const Eigen::VectorXd& omega);

}  // namespace kms
