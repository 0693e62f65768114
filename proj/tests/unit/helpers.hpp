#pragma once

#include <random>

#include "kernels.hpp"
#include "point_cloud.hpp"

namespace testing_util {

inline std::pair<kms::PointCloud, kms::PointCloud> random_pair(Eigen::Index n, Eigen::Index d, std::uint64_t seed,
                                                                double shift = 0.5) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd x(n, d), y(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      x(i, j) = g(gen);
      y(i, j) = g(gen) + (j == 0 ? shift : 0.0);
    }
  }
  return {kms::PointCloud(x), kms::PointCloud(y)};
}

inline kms::Kernel gaussian(double sigma = 1.0) {
  return kms::Kernel{kms::KernelKind::gaussian, sigma, kms::BandwidthConvention::half};
}

inline kms::GramAssembly random_assembly(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  auto [x, y] = random_pair(n, d, seed);
  return kms::assemble(gaussian(), x, y);
}

inline Eigen::MatrixXd random_spectrahedron(Eigen::Index r, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd W(r, r);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < r; ++j) W(i, j) = g(gen);
  Eigen::MatrixXd S = W * W.transpose();
  return S / S.trace();
}

}  // namespace testing_util
