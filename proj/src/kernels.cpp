#include "kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "errors.hpp"
#include "io.hpp"
#include "log.hpp"

namespace kms {

namespace {

double exponent_scale(const Kernel& k) {
  if (!(k.bandwidth > 0.0) || !std::isfinite(k.bandwidth)) {
    throw UsageError("gaussian bandwidth must be positive, got " + io::format_double(k.bandwidth));
  }
  const double s2 = k.bandwidth * k.bandwidth;
  return k.convention == BandwidthConvention::half ? 1.0 / (2.0 * s2) : 1.0 / s2;
}

bool has_duplicate_rows(const Eigen::MatrixXd& pooled) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(pooled.rows()));
  for (Eigen::Index i = 0; i < pooled.rows(); ++i) order[static_cast<std::size_t>(i)] = i;
  const auto less = [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index c = 0; c < pooled.cols(); ++c) {
      if (pooled(a, c) != pooled(b, c)) return pooled(a, c) < pooled(b, c);
    }
    return false;
  };
  std::sort(order.begin(), order.end(), less);
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (!less(order[i - 1], order[i])) return true;
  }
  return false;
}

}  // namespace

KernelKind parse_kernel_kind(const std::string& name) {
  if (name == "gaussian") return KernelKind::gaussian;
  if (name == "dot_product" || name == "dot" || name == "linear") return KernelKind::dot_product;
  throw UsageError("unknown kernel '" + name + "' (expected gaussian|dot_product)");
}

std::string to_string(KernelKind kind) { return kind == KernelKind::gaussian ? "gaussian" : "dot_product"; }

BandwidthConvention parse_convention(const std::string& name) {
  if (name == "half") return BandwidthConvention::half;
  if (name == "unit") return BandwidthConvention::unit;
  throw UsageError("unknown bandwidth convention '" + name + "' (expected half|unit)");
}

std::string to_string(BandwidthConvention convention) {
  return convention == BandwidthConvention::half ? "half" : "unit";
}

double Kernel::bound(const PointCloud& x, const PointCloud& y) const {
  if (kind == KernelKind::gaussian) return 1.0;
  return std::max(x.points.rowwise().norm().maxCoeff(), y.points.rowwise().norm().maxCoeff());
}

std::string Kernel::describe() const {
  if (kind == KernelKind::dot_product) return "dot_product";
  return "gaussian(sigma=" + io::format_double(bandwidth) + "," + to_string(convention) + ")";
}

Kernel KernelSpec::resolve(const PointCloud& x, const PointCloud& y) const {
  Kernel k{kind, 1.0, convention};
  if (kind == KernelKind::gaussian) k.bandwidth = bandwidth ? *bandwidth : median_bandwidth(x, y);
  if (kind == KernelKind::gaussian) exponent_scale(k);
  return k;
}

double eval_kernel(const Kernel& k, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (x.size() != y.size()) throw UsageError("eval_kernel: dimension mismatch");
  if (k.kind == KernelKind::dot_product) return x.dot(y);
  return std::exp(-(x - y).squaredNorm() * exponent_scale(k));
}

Eigen::MatrixXd cross_kernel(const Kernel& k, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) throw UsageError("cross_kernel: dimension mismatch");
  Eigen::MatrixXd out(a.rows(), b.rows());
  if (k.kind == KernelKind::dot_product) {
    out.noalias() = a * b.transpose();
    return out;
  }
  const double scale = exponent_scale(k);
  // Direct differences rather than the |a|^2 - 2ab + |b|^2 expansion: it keeps
  // K(x, x) exactly 1 and avoids cancellation for close points.
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      out(i, j) = std::exp(-(a.row(i) - b.row(j)).squaredNorm() * scale);
    }
  }
  return out;
}

double median_bandwidth(const PointCloud& x, const PointCloud& y) {
  if (x.d() != y.d()) throw UsageError("median_bandwidth: dimension mismatch");
  Eigen::MatrixXd pooled(x.n() + y.n(), x.d());
  pooled << x.points, y.points;
  const Eigen::Index m = pooled.rows();
  if (m < 2) throw UsageError("median_bandwidth: need at least two points");
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(m * (m - 1) / 2));
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) dist.push_back((pooled.row(i) - pooled.row(j)).norm());
  }
  const std::size_t half = dist.size() / 2;
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(half), dist.end());
  double med = dist[half];
  if (dist.size() % 2 == 0) {
    med = 0.5 * (med + *std::max_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(half)));
  }
  if (!(med > 0.0)) throw NumericalError("median bandwidth is zero: the pooled points are (mostly) identical");
  return med;
}

double pd_tolerance(const Eigen::MatrixXd& G) { return 1e-10 * G.trace() / static_cast<double>(G.rows()); }

bool check_pd(const Eigen::MatrixXd& G, double tol) {
  if (G.rows() == 0) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G, Eigen::EigenvaluesOnly);
  return eig.info() == Eigen::Success && eig.eigenvalues()(0) > tol;
}

GramAssembly assemble(const Kernel& k, const PointCloud& x, const PointCloud& y) {
  validate_pair(x, y);
  const Eigen::Index n = x.n();
  Eigen::MatrixXd pooled(2 * n, x.d());
  pooled << x.points, y.points;

  if (k.kind == KernelKind::gaussian && has_duplicate_rows(pooled)) {
    throw NumericalError("gram matrix is singular: the gaussian kernel requires pairwise distinct points");
  }

  GramAssembly ga;
  ga.n = n;
  ga.G = cross_kernel(k, pooled, pooled);
  ga.G.topRightCorner(n, n) *= -1.0;
  ga.G.bottomLeftCorner(n, n) *= -1.0;
  ga.G = 0.5 * (ga.G + ga.G.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(ga.G);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition of the gram matrix failed");
  const double tol = pd_tolerance(ga.G);
  const Eigen::VectorXd& lam = eig.eigenvalues();
  Eigen::Index first = 0;
  while (first < lam.size() && !(lam(first) > tol)) ++first;
  const Eigen::Index r = lam.size() - first;
  if (r == 0) throw NumericalError("gram matrix is numerically zero");
  ga.range_restricted = first > 0;
  if (ga.range_restricted) {
    log::info("gram matrix has rank " + std::to_string(r) + " of " + std::to_string(2 * n) +
              "; solving on its range space");
  }

  ga.lambda = lam.tail(r);
  const Eigen::MatrixXd V = eig.eigenvectors().rightCols(r);
  ga.U = V * ga.lambda.cwiseSqrt().cwiseInverse().asDiagonal();
  // U^T G = diag(lambda^1/2) V^T on the kept range.
  const Eigen::MatrixXd UtG = ga.lambda.cwiseSqrt().asDiagonal() * V.transpose();
  ga.A = UtG.leftCols(n);
  ga.B = -UtG.rightCols(n);

  const Eigen::VectorXd a2 = ga.A.colwise().squaredNorm();
  const Eigen::VectorXd b2 = ga.B.colwise().squaredNorm();
  const Eigen::MatrixXd ab = ga.A.transpose() * ga.B;
  double cmax = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) cmax = std::max(cmax, a2(i) - 2.0 * ab(i, j) + b2(j));
  }
  ga.c_bound = cmax;
  if (!(cmax > 0.0)) throw NumericalError("all difference vectors vanish: the two samples coincide in feature space");
  return ga;
}

}  // namespace kms
