#include <cmath>

#include "doctest.h"
#include "errors.hpp"
#include "helpers.hpp"
#include "rng.hpp"
#include "stats.hpp"

using namespace kms;

TEST_CASE("critical value") {
  CriticalValueParams p;
  p.A = 1.0;
  p.C_univ = 1.0;
  p.p = 1.0;
  p.alpha = 2.0 / std::exp(1.0);
  CHECK(critical_value(400, p) == doctest::Approx(20.0 / 20.0).epsilon(1e-14));

  p.p = 2.0;
  p.alpha = 0.05;
  CHECK(critical_value(10000, p) == doctest::Approx(4.0 * std::sqrt(1.0 + 4.0 * std::sqrt(std::log(40.0))) / 10.0));

  p.p = 100.0;
  const double far = critical_value(1000000, p);
  CHECK(far > 4.0 * 0.9);
  CHECK(far < 4.0 * 1.1);

  p.alpha = 1.5;
  CHECK_THROWS_AS(critical_value(10, p), UsageError);
  p.alpha = 0.05;
  p.C_univ = 0.5;
  CHECK_THROWS_AS(critical_value(10, p), UsageError);
}

TEST_CASE("permutation test separates the circle classes") {
  const KernelSpec ks{KernelKind::gaussian, std::nullopt, BandwidthConvention::half};
  int rejected = 0;
  for (int t = 0; t < 20; ++t) {
    DatasetSpec spec;
    spec.kind = DatasetKind::circle;
    spec.n = 60;
    spec.seed = 1000 + t;
    const auto [x, y] = generate(spec);
    PermutationTestOptions o;
    o.permutations = 100;
    o.seed = t;
    const TestResult r = two_sample_test(x, y, ks, o);
    rejected += r.reject;
    CHECK(r.n_train == 30);
    CHECK(r.permutation_stats.size() == 100);
    CHECK(r.p_value > 0.0);
  }
  CHECK(rejected == 20);
}

TEST_CASE("permutation test bookkeeping") {
  auto [x, y] = testing_util::random_pair(20, 2, 1, 0.0);
  const KernelSpec ks{KernelKind::gaussian, 1.0, BandwidthConvention::half};
  PermutationTestOptions o;
  o.permutations = 50;
  const TestResult a = two_sample_test(x, y, ks, o), b = two_sample_test(x, y, ks, o);
  CHECK(a.statistic == b.statistic);
  CHECK(a.permutation_stats == b.permutation_stats);
  int exceed = 0;
  for (double s : a.permutation_stats) exceed += s >= a.statistic;
  CHECK(a.p_value == doctest::Approx((1.0 + exceed) / 51.0));
  o.alpha = 1.5;
  CHECK_THROWS_AS(two_sample_test(x, y, ks, o), UsageError);
}

TEST_CASE("theorem test") {
  SUBCASE("tiny n never rejects") {
    auto [x, y] = testing_util::random_pair(4, 2, 2, 0.0);
    const TestResult r = theorem_test(x, y, KernelSpec{}, CriticalValueParams{});
    CHECK_FALSE(r.reject);
    CHECK(r.threshold > r.statistic);
  }
  SUBCASE("dot product in one dimension reports the sample W_p") {
    Eigen::MatrixXd x(10, 1), y(10, 1);
    x << 0, 1, 1, 0, 1, 1, 1, 0, 1, 1;
    y << 0, 0, 1, 0, 0, 1, 0, 0, 1, 0;
    const KernelSpec dp{KernelKind::dot_product, std::nullopt, BandwidthConvention::half};
    for (double p : {1.0, 2.0, 3.0}) {
      CriticalValueParams cv;
      cv.p = p;
      const TestResult r = theorem_test(PointCloud(x), PointCloud(y), dp, cv);
      // four points move from 1 to 0
      CHECK(r.statistic == doctest::Approx(std::pow(0.4, 1.0 / p)).epsilon(1e-6));
    }
  }
}

TEST_CASE("rate sweep") {
  SUBCASE("fewer than two sizes") {
    SweepOptions o;
    o.sizes = {50};
    DatasetSpec spec;
    spec.kind = DatasetKind::two_point_1d;
    spec.d = 1;
    CHECK_THROWS_AS(rate_sweep(spec, o), UsageError);
  }
  SUBCASE("constant law is degenerate") {
    SweepOptions o;
    o.sizes = {10, 20, 40};
    o.trials = 3;
    const SampleGenerator gen = [](Eigen::Index n, std::uint64_t seed) {
      Rng rng(seed);
      Eigen::MatrixXd x(n, 1), y(n, 1);
      for (Eigen::Index i = 0; i < n; ++i) {
        x(i, 0) = 2.0 + 1e-9 * rng.normal();
        y(i, 0) = 2.0 + 1e-9 * rng.normal();
      }
      return std::make_pair(PointCloud(x), PointCloud(y));
    };
    const SweepResult r = rate_sweep(gen, o);
    CHECK(r.degenerate);
    CHECK(r.rows.size() == 9);
  }
  SUBCASE("analytic p = 1 path") {
    SweepOptions o;
    o.sizes = {100, 400, 1600};
    o.trials = 30;
    o.p = 1.0;
    DatasetSpec spec;
    spec.kind = DatasetKind::two_point_1d;
    spec.d = 1;
    const SweepResult r = rate_sweep(spec, o);
    CHECK(r.method == "sorted-1d");
    CHECK(r.slope == doctest::Approx(-0.5).epsilon(0.3));
    CHECK(r.ci_low <= r.slope);
    CHECK(r.rows.size() == 90);
  }
}

TEST_CASE("rank check rows") {
  RankCheckOptions o;
  o.sizes = {12, 20};
  o.trials = 2;
  const auto rows = rank_check(o);
  REQUIRE(rows.size() == 4);
  for (const auto& row : rows) {
    CHECK(row.after <= row.bound);
    CHECK(row.bound == rank_bound(row.n));
  }
  CHECK(rows[2].n == 20);
  CHECK(rows[3].trial == 1);
}

TEST_CASE("t quantiles") {
  CHECK(t_quantile_975(1) == doctest::Approx(12.706));
  CHECK(t_quantile_975(10) == doctest::Approx(2.228));
  CHECK(std::isnan(t_quantile_975(0)));
}
