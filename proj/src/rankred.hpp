#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "kernels.hpp"
#include "sdr.hpp"

namespace kms {

/// 1 + floor(sqrt(2n + 9/4) - 3/2), evaluated in integer arithmetic.
Eigen::Index rank_bound(Eigen::Index n);

/// Number of eigenvalues above tol.
Eigen::Index numerical_rank(const Eigen::MatrixXd& S, double tol = 1e-6);

/// Optimal assignment at S with its duals; the n matched pairs are the
/// binding constraints of the reduction.
struct BindingSet {
  std::vector<Eigen::Index> sigma;
  Eigen::VectorXd dual_f;
  Eigen::VectorXd dual_g;
  double value = 0.0;
};

BindingSet find_binding(const Eigen::MatrixXd& S, const GramAssembly& ga);

/// Symmetric trace-free direction in the r-dimensional basis with
/// <F_c F_c^T, Delta> = 0 for every constraint factor F_c, unit Frobenius norm.
/// `pivot` selects which coordinate direction e e^T is projected first.
std::optional<Eigen::MatrixXd> null_direction(const std::vector<Eigen::MatrixXd>& factors, Eigen::Index r,
                                              Eigen::Index pivot = 0, std::uint64_t seed = 0);

/// Y = Q Delta Q^T over the range of S (eigenvalues above 1e-6), constrained by
/// the trace and the n binding pairs; none when only Delta = 0 satisfies them.
std::optional<Eigen::MatrixXd> null_direction(const Eigen::MatrixXd& S, const BindingSet& binding,
                                              const GramAssembly& ga);

/// Largest step keeping diag(lambda) + step * Delta PSD; 0 when Delta never
/// leaves the cone in that direction.
double step_to_boundary(const Eigen::VectorXd& lambda, const Eigen::MatrixXd& Delta);

struct ReductionOptions {
  double rank_tol = 1e-6;
  std::uint64_t seed = 0;
  long max_iterations = 0;  // rank-reducing steps; 0 means 2n + 2
  long max_pivots = 0;      // 0 means 50n + 500
  long level_pivots = 0;    // pivots allowed per rank level above the bound before a fallback step; 0 means 2n
};

struct ReducedSolution {
  SpectrahedronPoint S;
  Eigen::Index rank = 0;
  Eigen::Index rank_before = 0;
  Eigen::Index k_bound = 0;
  long iterations = 0;       // rank-reducing steps
  long pivots = 0;           // steps that stopped at a tie and switched the binding assignment
  long tie_constraints = 0;  // ties pinned after repeated zero-length pivots
  long fallback_steps = 0;   // steps that kept only the n binding pairs; these may lower the objective
  BindingSet binding;        // final binding assignment with duals valid at the output
  double value_before = 0.0;
  double value_after = 0.0;
  double dual_violation = 0.0;  // max_ij f_i + g_j - c_ij at the output
  bool hit_iteration_limit = false;
  std::vector<Eigen::VectorXd> eigen_history;  // range spectrum (descending) at the start and after each rank drop
};

ReducedSolution reduce(const SpectrahedronPoint& S, const GramAssembly& ga, const ReductionOptions& opts = {});

}  // namespace kms
