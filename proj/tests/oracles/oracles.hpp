#pragma once

// Reference computations used only by the tests. None of them call into the
// library, so agreement with it is evidence rather than tautology.

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace oracle {

/// Minimum of (1/n) sum_i c(i, s(i)) over all n! permutations.
double brute_force_assignment(const Eigen::MatrixXd& c);

/// Successive shortest augmenting paths with Dijkstra on reduced costs.
/// Returns (1/n) times the optimal assignment cost.
double ssp_assignment(const Eigen::MatrixXd& c, std::vector<int>* match = nullptr);

/// exp(-|a-b|^2 / (2 s^2)) or exp(-|a-b|^2 / s^2) written out entry by entry.
Eigen::MatrixXd gaussian_gram(const Eigen::MatrixXd& z, double sigma, bool unit_convention);

Eigen::MatrixXd dot_gram(const Eigen::MatrixXd& z);

/// Pooled gram K over z = [x; y]. For a unit-norm f = sum_k c_k K(., z_k) the
/// value is the squared sorted 1-d W2 between f(x_i) and f(y_j). Draws
/// `draws` gaussian coefficient vectors and returns the best value seen.
double best_random_rank_one(const Eigen::MatrixXd& K, int draws, std::uint64_t seed);

/// Value for the coefficient vector c, normalised so that c^T K c = 1.
double rank_one_from_coefficients(const Eigen::MatrixXd& K, const Eigen::VectorXd& c);

/// Optimum of max_{S psd, tr S = 1} min_sigma <V_sigma, S> / 2 for two points
/// per side. K is the 4 x 4 pooled gram.
struct TwoPointReference {
  double ascent = 0.0;   // best of the random-restart projected supgradient runs
  double minimax = 0.0;  // min over t of lambda_max(t V_id + (1-t) V_swap) / 2
};

TwoPointReference two_point_sdr(const Eigen::MatrixXd& K, int restarts, std::uint64_t seed);

/// Euclidean projection of a symmetric matrix onto {S psd, tr S = 1}.
Eigen::MatrixXd project_spectrahedron(const Eigen::MatrixXd& S);

}  // namespace oracle
