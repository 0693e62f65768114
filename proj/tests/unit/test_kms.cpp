#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "kms.hpp"
#include "oracles.hpp"
#include "ot.hpp"

using namespace kms;

TEST_CASE("projected Wasserstein") {
  Eigen::VectorXd u(2), v(2);
  u << 0, 1;
  v << 1, 2;
  CHECK(projected_wasserstein_p(u, u, 2.0) == 0.0);
  CHECK(projected_wasserstein_p(u, v, 1.0) == doctest::Approx(1.0));
  CHECK(projected_wasserstein_p(u, v, 3.0) == doctest::Approx(1.0));
  CHECK_THROWS(projected_wasserstein_p(u, v, 0.5));

  const Eigen::VectorXd a = Eigen::VectorXd::Random(5), b = Eigen::VectorXd::Random(5);
  Eigen::MatrixXd c(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) c(i, j) = (a(i) - b(j)) * (a(i) - b(j));
  const double w = projected_wasserstein_p(a, b, 2.0);
  CHECK(w * w == doctest::Approx(solve_exact(c).value).epsilon(1e-12));
}

TEST_CASE("evaluate_projector") {
  Projector p;
  p.kernel = Kernel{KernelKind::dot_product, 1.0, BandwidthConvention::half};
  Eigen::MatrixXd ax(1, 2), ay(1, 2);
  ax << 2, 0;
  ay << 5, 5;
  p.anchors_x = PointCloud(ax);
  p.anchors_y = PointCloud(ay);
  p.a_x = Eigen::VectorXd::Zero(1);
  p.a_y = Eigen::VectorXd::Zero(1);
  CHECK(evaluate_projector(p, Eigen::Vector2d(3, 4)) == 0.0);
  p.a_x(0) = 1.0;
  CHECK(evaluate_projector(p, Eigen::Vector2d(3, 4)) == doctest::Approx(6.0));
}

TEST_CASE("kms2, n = 1 is tight") {
  auto [x, y] = testing_util::random_pair(1, 3, 1);
  const Kernel k = testing_util::gaussian(1.3);
  const KmsResult r = kms2(x, y, k);
  const double want = 2.0 - 2.0 * eval_kernel(k, x.points.row(0).transpose(), y.points.row(0).transpose());
  CHECK(r.value == doctest::Approx(want).epsilon(1e-6));
  CHECK(r.rank_after_reduction == 1);
  CHECK(r.distance == doctest::Approx(std::sqrt(r.value)));
}

TEST_CASE("kms2 on jittered copies is near zero") {
  auto [x, unused] = testing_util::random_pair(12, 2, 2);
  Eigen::MatrixXd jitter = Eigen::MatrixXd::Random(12, 2) * 1e-9;
  const PointCloud y(x.points + jitter);
  const KmsResult r = kms2(x, y, testing_util::gaussian());
  CHECK(r.distance < 1e-3);
  const KmsResult m = ms2(x, y);
  CHECK(m.distance < 1e-3);
}

TEST_CASE("fitted projector reproduces the reported value") {
  auto [x, y] = testing_util::random_pair(15, 2, 3);
  const KmsResult r = kms2(x, y, testing_util::gaussian());
  const Eigen::VectorXd u = r.projector.apply(x.points), v = r.projector.apply(y.points);
  const double w = projected_wasserstein_p(u, v, 2.0);
  CHECK(w * w == doctest::Approx(r.value).epsilon(1e-8));
  CHECK(r.projector.rkhs_norm2() == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(r.value <= r.upper_bound * (1.0 + 1e-12));
  // the rank-one value beats random unit functions in the same span
  Eigen::MatrixXd z(30, 2);
  z << x.points, y.points;
  CHECK(r.value >= oracle::best_random_rank_one(oracle::gaussian_gram(z, 1.0, false), 2000, 4));
}

TEST_CASE("ms2 in one dimension is the classical W2") {
  Eigen::MatrixXd x(6, 1), y(6, 1);
  x << 0.1, 0.9, -0.4, 2.0, 1.1, 0.3;
  y << 1.5, -0.2, 0.7, 3.1, 0.0, 1.2;
  const KmsResult r = ms2(PointCloud(x), PointCloud(y));
  const double w = projected_wasserstein_p(x.col(0), y.col(0), 2.0);
  CHECK(r.value == doctest::Approx(w * w).epsilon(1e-9));
}

TEST_CASE("ms2 and kms2 differ on covariance shift data") {
  auto [x, y] = testing_util::random_pair(20, 3, 5, 0.0);
  y.points.col(0) *= 1.5;
  const KmsResult lin = ms2(x, y);
  const KmsResult gau = kms2(x, y, testing_util::gaussian(2.0));
  CHECK(lin.value >= 0.0);
  CHECK(lin.value != doctest::Approx(gau.value));
}

TEST_CASE("kms2 is deterministic") {
  auto [x, y] = testing_util::random_pair(10, 2, 6);
  KmsOptions o;
  o.seed = 17;
  const KmsResult a = kms2(x, y, testing_util::gaussian(), o), b = kms2(x, y, testing_util::gaussian(), o);
  CHECK(a.value == b.value);
  CHECK(a.omega == b.omega);
}
