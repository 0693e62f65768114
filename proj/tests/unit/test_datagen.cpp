#include <cmath>

#include "doctest.h"
#include "datagen.hpp"
#include "errors.hpp"
#include "oracles.hpp"
#include "rng.hpp"

using namespace kms;

TEST_CASE("cov shift with rho = 0 gives two draws of one law") {
  DatasetSpec spec;
  spec.kind = DatasetKind::gauss_cov_shift;
  spec.n = 4000;
  spec.d = 3;
  spec.params["rho"] = 0.0;
  const auto [x, y] = generate(spec);
  CHECK((x.points - y.points).cwiseAbs().maxCoeff() > 0.1);
  const Eigen::MatrixXd cx = x.points.transpose() * x.points / 4000.0;
  const Eigen::MatrixXd cy = y.points.transpose() * y.points / 4000.0;
  CHECK((cx - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 0.1);
  CHECK((cy - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 0.1);

  spec.params["rho"] = 0.5;
  const auto [x2, y2] = generate(spec);
  const Eigen::MatrixXd c2 = y2.points.transpose() * y2.points / 4000.0;
  CHECK(c2(0, 1) == doctest::Approx(0.5).epsilon(0.3));
}

TEST_CASE("two point law") {
  DatasetSpec spec;
  spec.kind = DatasetKind::two_point_1d;
  spec.n = 1000;
  spec.d = 1;
  spec.seed = 42;
  const auto [x, y] = generate(spec);
  CHECK(x.points.mean() == doctest::Approx(0.5).epsilon(0.1));
  CHECK(((x.points.array() == 0.0) || (x.points.array() == 1.0)).all());
}

TEST_CASE("circle radii") {
  DatasetSpec spec;
  spec.kind = DatasetKind::circle;
  spec.n = 500;
  const auto [x, y] = generate(spec);
  CHECK(x.d() == 2);
  const Eigen::VectorXd rx = x.points.rowwise().norm(), ry = y.points.rowwise().norm();
  CHECK(rx.minCoeff() >= 0.5);
  CHECK(rx.maxCoeff() <= 1.5);
  CHECK(ry.minCoeff() >= 1.5);
  CHECK(ry.maxCoeff() <= 2.5);
}

TEST_CASE("generate is deterministic and validates") {
  DatasetSpec spec;
  spec.kind = DatasetKind::gauss_mixture;
  spec.n = 30;
  spec.d = 40;
  spec.seed = 9;
  CHECK(generate(spec).first.points == generate(spec).first.points);
  spec.seed = 10;
  const auto other = generate(spec);
  spec.seed = 9;
  CHECK(other.first.points != generate(spec).first.points);

  spec.params["rho"] = 2.0;
  CHECK_THROWS_AS(generate(spec), UsageError);
  spec.params.clear();
  spec.params["radius"] = 1.0;
  CHECK_THROWS_AS(generate(spec), UsageError);
  CHECK_THROWS_AS(parse_dataset_kind("spiral"), UsageError);
  try {
    parse_dataset_kind("spiral");
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find(dataset_kind_list()) != std::string::npos);
  }
}

TEST_CASE("circulant instance") {
  const auto one = circulant_indices(1);
  CHECK(one == std::vector<std::vector<Eigen::Index>>{{0}});
  const auto three = circulant_indices(3);
  // second row reads (A_3, A_1, A_2)
  CHECK(three[1] == std::vector<Eigen::Index>{2, 0, 1});

  Rng rng(5);
  Eigen::MatrixXd A(4, 3);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) A(i, j) = rng.normal();
  const Eigen::VectorXd w = Eigen::Vector3d(0.3, -0.8, 0.5).normalized();
  const Eigen::MatrixXd c = circulant_costs(A, w);
  const double smallest = (A * w).array().square().minCoeff();
  CHECK(oracle::brute_force_assignment(c) == doctest::Approx(smallest).epsilon(1e-10));
}
