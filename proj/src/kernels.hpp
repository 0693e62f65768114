#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "point_cloud.hpp"

namespace kms {

enum class KernelKind { gaussian, dot_product };

// gaussian exponent: half -> -|x-y|^2 / (2 sigma^2), unit -> -|x-y|^2 / sigma^2.
enum class BandwidthConvention { half, unit };

struct Kernel {
  KernelKind kind = KernelKind::gaussian;
  double bandwidth = 1.0;
  BandwidthConvention convention = BandwidthConvention::half;

  /// Sup of sqrt(K(z,z)) over the data; 1 for gaussian.
  double bound(const PointCloud& x, const PointCloud& y) const;
  std::string describe() const;
};

/// Kernel description before the data is seen: an unset bandwidth means
/// "median heuristic on whatever clouds the kernel is resolved against".
struct KernelSpec {
  KernelKind kind = KernelKind::gaussian;
  std::optional<double> bandwidth;
  BandwidthConvention convention = BandwidthConvention::half;

  Kernel resolve(const PointCloud& x, const PointCloud& y) const;
};

KernelKind parse_kernel_kind(const std::string& name);
std::string to_string(KernelKind kind);
BandwidthConvention parse_convention(const std::string& name);
std::string to_string(BandwidthConvention convention);

double eval_kernel(const Kernel& k, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y);

/// K(a_i, b_j) for all rows a_i of a and b_j of b.
Eigen::MatrixXd cross_kernel(const Kernel& k, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Median Euclidean distance over all unordered pairs of the pooled samples.
double median_bandwidth(const PointCloud& x, const PointCloud& y);

/// Gram data for the pair (x, y).
///
/// G = [Kxx, -Kxy; -Kyx, Kyy] is factored as G = V diag(lambda) V^T, keeping
/// the r eigenpairs above the rank threshold, and U = V diag(lambda^-1/2). The
/// difference vectors are never stored: M_ij = a_i - b_j with columns
/// A = U^T G[:, :n] and B = -U^T G[:, n:]. When r = 2n, U U^T = G^-1.
struct GramAssembly {
  Eigen::Index n = 0;
  Eigen::MatrixXd G;
  Eigen::MatrixXd U;       // 2n x r
  Eigen::MatrixXd A;       // r x n
  Eigen::MatrixXd B;       // r x n
  Eigen::VectorXd lambda;  // kept eigenvalues, ascending
  double c_bound = 0.0;
  bool range_restricted = false;

  Eigen::Index dim() const { return A.rows(); }
  Eigen::VectorXd m(Eigen::Index i, Eigen::Index j) const { return A.col(i) - B.col(j); }
};

GramAssembly assemble(const Kernel& k, const PointCloud& x, const PointCloud& y);

/// True iff the smallest eigenvalue of the symmetric matrix G exceeds tol.
bool check_pd(const Eigen::MatrixXd& G, double tol);

/// Eigenvalue floor below which G is treated as singular.
double pd_tolerance(const Eigen::MatrixXd& G);

}  // namespace kms
