#include <gkpca/novelty.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "support/oracles.hpp"

using namespace gkpca;
using Catch::Approx;

TEST_CASE("training points are fully reconstructed when d covers the rank", "[novelty]") {
  std::mt19937_64 rng(3);
  const DataMatrix X = oracle::random_points(rng, 15, 2);
  const auto m = fit(X, KernelSpec::gaussian(1.0), 15);
  for (Eigen::Index j = 0; j < 15; ++j) {
    CHECK(novelty_score(m, row_span(X, j)) <= 1e-8);
    CHECK(training_novelty_score(m, j) <= 1e-8);
  }
}

TEST_CASE("no components leaves the spherical potential", "[novelty]") {
  std::mt19937_64 rng(4);
  const DataMatrix X = oracle::random_points(rng, 10, 2);
  const auto m = fit(X, KernelSpec::gaussian(1.0), 4);
  const std::vector<double> z{0.3, -0.2};
  const auto kc = centered_kernel_vector(m, z);
  CHECK(novelty_score(m, z, 0) == Approx(kc.self).epsilon(1e-15));
  CHECK(training_novelty_score(m, 3, 0) == Approx(m.centered_gram.values(3, 3)).epsilon(1e-15));
  CHECK_THROWS_AS(novelty_score(m, z, 5), Error);
}

TEST_CASE("novelty matches brute-force feature-space reconstruction error", "[novelty][oracle]") {
  const double c = 1.0;
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 8; ++trial) {
    const Eigen::Index n = 3 + trial * 2;
    const oracle::Mat P = oracle::random_points(rng, n, 2);
    const oracle::FeatureSpacePca fs(P, c);
    const Eigen::Index rank = fs.axes.cols();
    for (Eigen::Index d = 1; d <= std::min<Eigen::Index>(rank, n); ++d) {
      const auto m = fit(DataMatrix(P), PolynomialKernel{2, c}, d);
      const oracle::Mat Q = oracle::random_points(rng, 5, 2);
      for (Eigen::Index q = 0; q < Q.rows(); ++q) {
        const std::vector<double> z{Q(q, 0), Q(q, 1)};
        const double expected = fs.reconstruction_error(Q.row(q).transpose(), c, d);
        CHECK(novelty_score(m, z) == Approx(expected).epsilon(1e-8).margin(1e-10));
      }
    }
  }
}

TEST_CASE("novelty is monotone nonincreasing in the component count", "[novelty][property]") {
  std::mt19937_64 rng(13);
  const DataMatrix X = oracle::random_points(rng, 40, 3);
  const auto m = fit(X, KernelSpec::gaussian(2.0), 20);
  const oracle::Mat Q = oracle::random_points(rng, 10, 3);
  for (Eigen::Index q = 0; q < Q.rows(); ++q) {
    const std::vector<double> z{Q(q, 0), Q(q, 1), Q(q, 2)};
    double previous = novelty_score(m, z, 0);
    for (Eigen::Index d = 1; d <= 20; ++d) {
      const double s = novelty_score(m, z, d);
      CHECK(s >= 0.0);
      CHECK(s <= previous + 1e-10);
      previous = s;
    }
  }
}

TEST_CASE("training novelty equals out-of-sample novelty on training points", "[novelty]") {
  std::mt19937_64 rng(14);
  const DataMatrix X = oracle::random_points(rng, 30, 3);
  const auto m = fit(X, KernelSpec::gaussian(2.0), 5);
  for (Eigen::Index j = 0; j < 30; ++j)
    CHECK(training_novelty_score(m, j) == Approx(novelty_score(m, row_span(X, j))).epsilon(1e-9).margin(1e-12));
}

TEST_CASE("novelty report flags the top quantile", "[novelty]") {
  SECTION("five points, 20% flags exactly one") {
    const auto r = make_report({0.1, 0.5, 0.3, 0.2, 0.4}, 0.2);
    CHECK(r.flagged_count() == 1);
    CHECK(r.flags[1]);
    CHECK(r.threshold == 0.5);
  }
  SECTION("four points, 50% flags two") {
    const auto r = make_report({4.0, 1.0, 3.0, 2.0}, 0.5);
    CHECK(r.flagged_count() == 2);
    CHECK(r.flags[0]);
    CHECK(r.flags[2]);
    CHECK(r.threshold == 3.0);
  }
  SECTION("1000 points, 20% flags 200") {
    std::vector<double> s(1000);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<double>((i * 7919) % 1000);
    CHECK(make_report(s, 0.2).flagged_count() == 200);
  }
  SECTION("ties at the threshold go to the lower index") {
    const auto r = make_report({1.0, 2.0, 2.0, 2.0, 0.0}, 0.4);
    CHECK(r.flagged_count() == 2);
    CHECK(r.flags[1]);
    CHECK(r.flags[2]);
    CHECK_FALSE(r.flags[3]);
  }
  SECTION("invalid quantiles and empty input") {
    CHECK_THROWS_AS(make_report({1.0}, 0.0), Error);
    CHECK_THROWS_AS(make_report({1.0}, 1.0), Error);
    CHECK_THROWS_AS(make_report({1.0}, 1.5), Error);
    CHECK_THROWS_AS(make_report({}, 0.2), Error);
  }
  SECTION("flag fraction tracks the quantile for any M") {
    for (std::size_t m = 1; m <= 60; ++m) {
      std::vector<double> s(m);
      for (std::size_t i = 0; i < m; ++i) s[i] = std::sin(static_cast<double>(i));
      for (double q : {0.05, 0.2, 0.33, 0.5, 0.9}) {
        const auto r = make_report(s, q);
        CHECK(std::abs(static_cast<double>(r.flagged_count()) / m - q) <= 1.0 / m);
        for (std::size_t i = 0; i < m; ++i)
          if (r.flags[i]) CHECK(r.scores[i] >= r.threshold);
      }
    }
  }
}

TEST_CASE("novelty report over the training set", "[novelty]") {
  std::mt19937_64 rng(15);
  const DataMatrix X = oracle::random_points(rng, 25, 2);
  const auto full = fit(X, KernelSpec::gaussian(1.0), 25);
  const auto r = training_novelty_report(full, 0.2);
  CHECK(r.flagged_count() == 5);
  for (double s : r.scores) CHECK(s <= 1e-8);

  const auto partial = fit(X, KernelSpec::gaussian(1.0), 3);
  const auto a = training_novelty_report(partial, 0.2);
  const auto b = novelty_report(partial, X, 0.2);
  CHECK(a.flags == b.flags);
  CHECK_THROWS_AS(novelty_report(partial, DataMatrix(0, 2), 0.2), Error);
}
