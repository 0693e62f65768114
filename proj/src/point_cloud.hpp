#pragma once

#include <Eigen/Dense>

namespace kms {

/// n samples in R^d, one per row, each carrying weight 1/n.
struct PointCloud {
  Eigen::MatrixXd points;

  PointCloud() = default;
  explicit PointCloud(Eigen::MatrixXd p) : points(std::move(p)) {}

  Eigen::Index n() const { return points.rows(); }
  Eigen::Index d() const { return points.cols(); }
};

/// Throws UsageError when the cloud is empty or holds non-finite entries.
void validate(const PointCloud& cloud, const char* what);

/// Throws UsageError unless both clouds are valid, equally sized and share d.
void validate_pair(const PointCloud& x, const PointCloud& y);

}  // namespace kms
