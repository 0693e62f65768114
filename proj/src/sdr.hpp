#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "kernels.hpp"
#include "ot.hpp"

namespace kms {

/// Symmetric PSD matrix with unit trace, in the r-dimensional coordinates of
/// the assembly (r = 2n unless the gram matrix was range-restricted).
struct SpectrahedronPoint {
  Eigen::MatrixXd S;
};

// theorem: gamma fixed from the trace bound C.
// adaptive: gamma_k = gamma * C / G_k with G_k the largest operator norm of the
// supgradients seen so far (G_k <= C, so steps are never smaller).
enum class StepRule { theorem, adaptive };

struct SolverConfig {
  double delta = 0.0;      // target accuracy (absolute)
  long T = 0;              // iteration budget
  double gamma = 0.0;      // mirror step size
  double eps_inner = 0.0;  // inner OT accuracy
  std::uint64_t seed = 0;
  bool exact_inner = true;
  double kappa = 4.0;      // entropic outer-loop constant
  bool early_stop = true;
  StepRule step_rule = StepRule::theorem;
};

/// Parameters that certify delta-optimality after T steps:
/// T = ceil(16 C^2 log(2n) / delta^2), eps_inner = delta / 4,
/// gamma = log(2n) / (C sqrt(T)), with C = ga.c_bound.
SolverConfig theorem_config(const GramAssembly& ga, double delta, std::uint64_t seed,
                            Eigen::Index exact_threshold = 200);

/// Caps T and recomputes gamma for the shorter horizon.
SolverConfig with_iteration_cap(SolverConfig cfg, long cap);

/// c_ij = M_ij^T S M_ij for all pairs.
Eigen::MatrixXd pair_costs(const Eigen::MatrixXd& S, const GramAssembly& ga);

struct ObjectiveValue {
  double value = 0.0;
  TransportPlan plan;
  Assignment assignment;  // filled only by the exact oracle
};

/// F(S) = min over plans of sum pi_ij <M_ij M_ij^T, S>.
ObjectiveValue objective(const Eigen::MatrixXd& S, const GramAssembly& ga, bool exact, double eps_inner = 0.0,
                         std::uint64_t seed = 0, double kappa = 4.0);

/// Exact F(S) without materialising the plan.
double objective_exact(const Eigen::MatrixXd& S, const GramAssembly& ga);

/// sum_ij pi_ij M_ij M_ij^T for a given plan.
Eigen::MatrixXd supgradient_from_plan(const GramAssembly& ga, const Eigen::MatrixXd& pi);

/// Same for a permutation plan with mass 1/n per matched pair.
Eigen::MatrixXd supgradient_from_assignment(const GramAssembly& ga, const std::vector<Eigen::Index>& sigma);

/// Biased supgradient built from an eps_inner-optimal plan (exact when eps_inner == 0).
Eigen::MatrixXd supgradient(const Eigen::MatrixXd& S, const GramAssembly& ga, double eps_inner,
                            std::uint64_t seed = 0);

/// exp(log S + gamma v) / trace(...). Eigenvalues of S are clamped at 1e-300
/// before the logarithm.
SpectrahedronPoint mirror_step(const SpectrahedronPoint& S, const Eigen::MatrixXd& v, double gamma);

struct TraceEntry {
  long iteration = 0;
  double value = 0.0;      // inner-oracle objective at the current iterate
  double step_norm = 0.0;  // Frobenius norm of S_{k+1} - S_k
};

struct SdrSolution {
  SpectrahedronPoint S_avg;
  SpectrahedronPoint S_last;  // final iterate, kept as an extra rounding candidate
  double value = 0.0;        // exact F(S_avg)
  double upper_bound = 0.0;  // lambda_max of the averaged supgradient; bounds the SDR optimum
  long iterations = 0;
  bool early_stopped = false;
  std::vector<TraceEntry> trace_log;
};

SdrSolution solve_sdr(const GramAssembly& ga, const SolverConfig& cfg);

}  // namespace kms
