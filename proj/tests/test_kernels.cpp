#include <gkpca/kernels.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "support/oracles.hpp"

using namespace gkpca;
using Catch::Approx;

namespace {

DataMatrix rows(std::initializer_list<std::initializer_list<double>> init) {
  DataMatrix X(static_cast<Eigen::Index>(init.size()), static_cast<Eigen::Index>(init.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : init) {
    Eigen::Index j = 0;
    for (double v : r) X(i, j++) = v;
    ++i;
  }
  return X;
}

std::span<const double> sp(const std::vector<double>& v) { return v; }

}  // namespace

TEST_CASE("eval_kernel matches the closed forms", "[kernels]") {
  const std::vector<double> origin{0, 0}, up2{0, 2};
  const auto g = KernelSpec::gaussian(2.0);
  CHECK(eval_kernel(g, sp(origin), sp(origin)) == 1.0);
  CHECK(eval_kernel(g, sp(origin), sp(up2)) == Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(eval_kernel(g, sp(origin), sp(up2)) == Approx(0.367879).margin(1e-6));

  const auto l = KernelSpec::laplace(1.0);
  const std::vector<double> zero{0}, three{3};
  CHECK(eval_kernel(l, sp(zero), sp(three)) == Approx(std::exp(-3.0)).epsilon(1e-15));
  CHECK(eval_kernel(l, sp(zero), sp(three)) == Approx(0.049787).margin(1e-6));
}

TEST_CASE("eval_kernel rejects mismatched dimensions and bad bandwidths", "[kernels]") {
  const std::vector<double> a{0, 0}, b{1, 2, 3};
  try {
    (void)eval_kernel(KernelSpec::gaussian(1.0), sp(a), sp(b));
    FAIL("expected an input error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Input);
  }
  CHECK_THROWS_AS(KernelSpec::gaussian(0.0), Error);
  CHECK_THROWS_AS(KernelSpec::laplace(-1.0), Error);
  CHECK_THROWS_AS(KernelSpec::gaussian(std::nan("")), Error);
}

TEST_CASE("Gaussian and Laplace kernels stay in (0, 1]", "[kernels][property]") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(4), y(4);
    for (auto& v : x) v = g(rng);
    for (auto& v : y) v = g(rng);
    for (const auto& spec : {KernelSpec::gaussian(5.0), KernelSpec::laplace(2.0)}) {
      const double k = spec(x, y);
      CHECK(k > 0.0);
      CHECK(k <= 1.0);
      CHECK(spec(x, x) == 1.0);
    }
  }
}

TEST_CASE("gram builds the kernel matrix", "[kernels]") {
  SECTION("identical rows give all ones") {
    const auto G = gram(KernelSpec::gaussian(1.0), rows({{1, 2}, {1, 2}}));
    CHECK(G.values == Matrix::Ones(2, 2));
    CHECK_FALSE(G.centered);
  }
  SECTION("two points at distance 2 with sigma^2 = 2") {
    const auto G = gram(KernelSpec::gaussian(2.0), rows({{0, 0}, {0, 2}}));
    CHECK(G.values(0, 0) == 1.0);
    CHECK(G.values(1, 1) == 1.0);
    CHECK(G.values(0, 1) == Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(G.values(1, 0) == G.values(0, 1));
  }
  SECTION("random data: exact symmetry, unit diagonal, matches direct evaluation") {
    std::mt19937_64 rng(3);
    const oracle::Mat P = oracle::random_points(rng, 30, 5);
    const DataMatrix X = P;
    const auto G = gram(KernelSpec::gaussian(3.0), X);
    CHECK(G.values == G.values.transpose());
    CHECK(G.values.diagonal() == Vector::Ones(30));
    for (Eigen::Index i = 0; i < 30; ++i)
      for (Eigen::Index j = 0; j < 30; ++j)
        CHECK(G.values(i, j) == Approx(oracle::gaussian(P.row(i).transpose(), P.row(j).transpose(), 3.0)).epsilon(1e-14));
  }
  SECTION("fewer than two points is an input error") {
    CHECK_THROWS_AS(gram(KernelSpec::gaussian(1.0), rows({{1, 2}})), Error);
  }
}

TEST_CASE("center performs double centering", "[kernels]") {
  SECTION("2x2 hand example") {
    GramMatrix K{Matrix(2, 2), false};
    K.values << 1.0, 0.5, 0.5, 1.0;
    const auto [Kc, stats] = center(K);
    CHECK(Kc.centered);
    CHECK(Kc.values(0, 0) == Approx(0.25));
    CHECK(Kc.values(1, 1) == Approx(0.25));
    CHECK(Kc.values(0, 1) == Approx(-0.25));
    CHECK(Kc.values(1, 0) == Approx(-0.25));
    CHECK(stats.row_means(0) == Approx(0.75));
    CHECK(stats.grand_mean == Approx(0.75));
  }
  SECTION("constant matrix centers to zero") {
    const auto [Kc, stats] = center(GramMatrix{Matrix::Constant(4, 4, 0.7), false});
    CHECK(Kc.values.cwiseAbs().maxCoeff() < 1e-15);
  }
  SECTION("random Gram: zero row sums, idempotent, equals the explicit averaging-matrix formula") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
      const Eigen::Index n = 5 + trial * 7;
      const DataMatrix X = oracle::random_points(rng, n, 3);
      const auto K = gram(KernelSpec::gaussian(2.0), X);
      const auto [Kc, stats] = center(K);
      CHECK(Kc.values.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-8 * n);
      CHECK(Kc.values.colwise().sum().cwiseAbs().maxCoeff() <= 1e-8 * n);
      CHECK(Kc.values == Kc.values.transpose());
      CHECK((Kc.values - oracle::double_center(K.values)).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(std::abs(stats.grand_mean - stats.row_means.mean()) < 1e-12);

      const auto [twice, unused] = center(Kc);
      CHECK((twice.values - Kc.values).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("center_vector is consistent with center", "[kernels]") {
  std::mt19937_64 rng(9);
  const DataMatrix X = oracle::random_points(rng, 12, 3);
  const auto spec = KernelSpec::gaussian(1.5);
  const auto [Kc, stats] = center(gram(spec, X));

  SECTION("training points reproduce rows of the centered Gram matrix") {
    for (Eigen::Index j = 0; j < X.rows(); ++j) {
      const auto cv = center_vector(stats, kernel_vector(spec, X, row_span(X, j)), 1.0);
      CHECK((cv.values - Kc.values.row(j).transpose()).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK(std::abs(cv.self - Kc.values(j, j)) <= 1e-10);
    }
  }
  SECTION("constant training set centers everything to zero") {
    const DataMatrix C = DataMatrix::Constant(5, 2, 0.3);
    const auto [Cc, cstats] = center(gram(spec, C));
    const std::vector<double> z{1.0, -2.0};
    const auto cv = center_vector(cstats, kernel_vector(spec, C, z), 1.0);
    CHECK(cv.values.cwiseAbs().maxCoeff() < 1e-15);
  }
  SECTION("length mismatch is an input error") {
    CHECK_THROWS_AS(center_vector(stats, Vector::Zero(3), 1.0), Error);
  }
}

TEST_CASE("center_vector matches explicit feature-space inner products", "[kernels][oracle]") {
  // Quadratic kernel: phi is finite, so k~(z, x_i) = (phi(z) - mean)(phi(x_i) - mean) can be formed directly.
  const double c = 1.0;
  const PolynomialKernel poly{2, c};
  oracle::Mat P(3, 2);
  P << 0.5, -1.0, 1.5, 0.25, -0.75, 2.0;
  const DataMatrix X = P;
  const auto [Kc, stats] = center(gram(poly, X));
  const oracle::FeatureSpacePca fs(P, c);

  const std::vector<std::vector<double>> queries{{0.1, 0.2}, {-1.0, 3.0}, {2.0, -0.5}};
  for (const auto& q : queries) {
    const oracle::Vec z = Eigen::Map<const oracle::Vec>(q.data(), 2);
    const auto cv = center_vector(stats, kernel_vector(poly, X, q), poly(q, q));
    const oracle::Vec fz = fs.centered_feature(z, c);
    for (Eigen::Index i = 0; i < 3; ++i) {
      const oracle::Vec fi = fs.phi.row(i).transpose() - fs.mean;
      CHECK(cv.values(i) == Approx(fz.dot(fi)).epsilon(1e-12).margin(1e-12));
    }
    CHECK(cv.self == Approx(fz.squaredNorm()).epsilon(1e-12));
  }
}
