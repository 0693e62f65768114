#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace kms {

/// Nonnegative n x n matrix whose rows and columns each sum to 1/n.
struct TransportPlan {
  Eigen::MatrixXd pi;
};

/// Optimal permutation with dual potentials: f_i + g_j <= c_ij everywhere,
/// with equality on the matched pairs (i, sigma[i]).
struct Assignment {
  std::vector<Eigen::Index> sigma;
  Eigen::VectorXd dual_f;
  Eigen::VectorXd dual_g;
};

struct ExactSolution {
  TransportPlan plan;
  Assignment assignment;
  double value = 0.0;  // (1/n) sum_i c_{i, sigma(i)}
};

/// Hungarian algorithm, O(n^3). Ties resolve deterministically: rows are
/// inserted in index order and the lowest-index column wins every comparison.
ExactSolution solve_exact(const Eigen::MatrixXd& c);

/// Only the matching and its value; skips building the dense plan.
Assignment solve_assignment(const Eigen::MatrixXd& c, double* value);

struct EntropicOptions {
  double kappa = 4.0;          // T_out = ceil(kappa * |C|_inf * sqrt(ln n) / eps)
  std::uint64_t seed = 0;
  bool early_exit = true;      // stop once the certified gap is below eps / 2
};

struct EntropicReport {
  TransportPlan plan;
  double value = 0.0;
  double eta = 0.0;
  double eps_prime = 0.0;      // carried for completeness; the iteration never reads it
  int outer_limit = 0;
  int outer_iterations = 0;
  double certified_gap = 0.0;  // value minus a dual lower bound on the optimum
};

/// Entropic semi-dual with Katyusha momentum, followed by rounding onto the
/// transport polytope. The returned plan is feasible; `value` is its cost.
EntropicReport solve_entropic(const Eigen::MatrixXd& c, double eps, const EntropicOptions& opts = {});

/// Row-then-column scaling plus a rank-one correction onto the polytope.
TransportPlan round_to_polytope(const Eigen::MatrixXd& pi);

/// pi(v)_ij = (1/n) softmax_j((v_j - c_ij) / eta), row by row.
Eigen::MatrixXd dual_to_plan(const Eigen::VectorXd& v, const Eigen::MatrixXd& c, double eta);

double plan_cost(const Eigen::MatrixXd& pi, const Eigen::MatrixXd& c);

/// Largest deviation of any row or column sum from 1/n.
double marginal_error(const Eigen::MatrixXd& pi);

}  // namespace kms
