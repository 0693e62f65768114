#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "point_cloud.hpp"

namespace kms {

enum class DatasetKind { circle, gauss_cov_shift, gauss_mixture, two_point_1d, circulant_adversarial };

DatasetKind parse_dataset_kind(const std::string& name);
std::string to_string(DatasetKind kind);
/// "circle|gauss_cov_shift|..." for error messages.
std::string dataset_kind_list();

/// Parameters per kind (unset ones take the defaults below):
///   circle                 r_in = 1, r_out = 2, noise = 0.1        (d is always 2)
///   gauss_cov_shift        rho = 0.06 in [0, 1]                   x ~ N(0, I), y ~ N(0, I + rho E)
///   gauss_mixture          rho = 0.05 in [0, 1], shift = 0.5      both halves of y get covariance I + rho E
///   two_point_1d           p_one = 0.5                            x, y iid on {0, 1}   (d is always 1)
///   circulant_adversarial  none                                   x: n gaussian vectors, y: n unit probes
struct DatasetSpec {
  DatasetKind kind = DatasetKind::circle;
  Eigen::Index n = 100;
  Eigen::Index d = 2;
  std::uint64_t seed = 0;
  std::map<std::string, double> params;

  double param(const std::string& name) const;
  /// Throws UsageError for out-of-range sizes or parameters.
  void validate() const;
};

/// Dimension used when a spec leaves d unset: 2, 10, 40, 1 and 5 by kind.
Eigen::Index default_dimension(DatasetKind kind);

std::pair<PointCloud, PointCloud> generate(const DatasetSpec& spec);

/// Array whose row i is row 0 shifted circularly by i: entry (i, j) = index (j - i) mod n.
std::vector<std::vector<Eigen::Index>> circulant_indices(Eigen::Index n);

/// Costs c_ij = (A_{(j - i) mod n}^T omega)^2, one vector A_k per row of A.
Eigen::MatrixXd circulant_costs(const Eigen::MatrixXd& A, const Eigen::VectorXd& omega);

}  // namespace kms
