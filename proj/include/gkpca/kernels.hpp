#pragma once

#include <cmath>
#include <concepts>
#include <span>
#include <string>
#include <string_view>

#include "gkpca/error.hpp"
#include "gkpca/linalg.hpp"

namespace gkpca {

/// Anything that evaluates a symmetric positive semi-definite kernel on two points.
template <typename K>
concept Kernel = requires(const K& k, std::span<const double> x, std::span<const double> y) {
  { k(x, y) } -> std::convertible_to<double>;
};

enum class KernelFamily { GaussianRbf, Laplace };

inline std::string_view to_string(KernelFamily f) {
  return f == KernelFamily::GaussianRbf ? "gaussian" : "laplace";
}

inline KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "gaussian" || name == "rbf") return KernelFamily::GaussianRbf;
  if (name == "laplace") return KernelFamily::Laplace;
  fail(ErrorKind::Input, "unknown kernel family '" + std::string(name) + "'");
}

namespace detail {

inline void check_same_dim(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    fail(ErrorKind::Input, "kernel arguments differ in dimension (" + std::to_string(x.size()) + " vs " +
                               std::to_string(y.size()) + ")");
}

inline double squared_distance(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

}  // namespace detail

/// Kernel family plus bandwidth. For the Gaussian RBF `bandwidth` is sigma^2,
/// k(x,y) = exp(-|x-y|^2 / (2 sigma^2)); for Laplace it is sigma,
/// k(x,y) = exp(-|x-y| / sigma).
struct KernelSpec {
  KernelFamily family = KernelFamily::GaussianRbf;
  double bandwidth = 1.0;

  static KernelSpec gaussian(double sigma2) { return validated({KernelFamily::GaussianRbf, sigma2}); }
  static KernelSpec laplace(double sigma) { return validated({KernelFamily::Laplace, sigma}); }

  static KernelSpec validated(KernelSpec s) {
    if (!(s.bandwidth > 0.0) || !std::isfinite(s.bandwidth))
      fail(ErrorKind::Input, "kernel bandwidth must be a positive finite number");
    return s;
  }

  double operator()(std::span<const double> x, std::span<const double> y) const {
    detail::check_same_dim(x, y);
    const double d2 = detail::squared_distance(x, y);
    if (family == KernelFamily::GaussianRbf) return std::exp(-d2 / (2.0 * bandwidth));
    return std::exp(-std::sqrt(d2) / bandwidth);
  }

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

/// Inhomogeneous polynomial kernel (x.y + offset)^degree. Its feature map is
/// finite, which makes it the kernel of choice for brute-force checks.
struct PolynomialKernel {
  int degree = 2;
  double offset = 1.0;

  double operator()(std::span<const double> x, std::span<const double> y) const {
    detail::check_same_dim(x, y);
    double dot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
    return std::pow(dot + offset, degree);
  }
};

template <Kernel K>
double eval_kernel(const K& kernel, std::span<const double> x, std::span<const double> y) {
  return kernel(x, y);
}

struct GramMatrix {
  Matrix values;
  bool centered = false;

  Eigen::Index size() const { return values.rows(); }
};

/// Means of the uncentered Gram rows; reused to center out-of-sample kernel vectors.
struct CenteringStats {
  Vector row_means;
  double grand_mean = 0.0;
};

/// Uncentered Gram matrix. Only the upper triangle is evaluated and then
/// mirrored, so the result is exactly symmetric.
template <Kernel K>
GramMatrix gram(const K& kernel, const DataMatrix& X) {
  const Eigen::Index n = X.rows();
  if (n < 2) fail(ErrorKind::Input, "gram matrix needs at least 2 data points");
  GramMatrix g{Matrix(n, n), false};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = kernel(row_span(X, i), row_span(X, j));
      g.values(i, j) = v;
      g.values(j, i) = v;
    }
  }
  return g;
}

/// Double centering K~ = K - 1K - K1 + 1K1 with 1 the matrix of 1/N.
inline std::pair<GramMatrix, CenteringStats> center(const GramMatrix& K) {
  const Eigen::Index n = K.size();
  if (n == 0 || K.values.cols() != n) fail(ErrorKind::Input, "center() needs a square non-empty matrix");
  CenteringStats stats;
  stats.row_means = K.values.rowwise().mean();
  stats.grand_mean = stats.row_means.mean();

  GramMatrix out{Matrix(n, n), true};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = K.values(i, j) - stats.row_means(i) - stats.row_means(j) + stats.grand_mean;
      out.values(i, j) = v;
      out.values(j, i) = v;
    }
  }
  return {std::move(out), std::move(stats)};
}

struct CenteredKernelVector {
  Vector values;        // k~(z, x_i)
  double self = 0.0;    // k~(z, z) = |phi~(z)|^2
};

/// Centers the kernel vector k_i = k(z, x_i) of an out-of-sample point z
/// consistently with center().
inline CenteredKernelVector center_vector(const CenteringStats& stats, const Vector& k_vec, double self_k) {
  const Eigen::Index n = stats.row_means.size();
  if (k_vec.size() != n)
    fail(ErrorKind::Input, "kernel vector has length " + std::to_string(k_vec.size()) + ", expected " +
                               std::to_string(n));
  const double mean_k = k_vec.mean();
  CenteredKernelVector out{Vector(n), 0.0};
  for (Eigen::Index i = 0; i < n; ++i) out.values(i) = k_vec(i) - mean_k - stats.row_means(i) + stats.grand_mean;
  out.self = self_k - 2.0 * mean_k + stats.grand_mean;
  return out;
}

/// k(z, x_i) for every row of X.
template <Kernel K>
Vector kernel_vector(const K& kernel, const DataMatrix& X, std::span<const double> z) {
  Vector k(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) k(i) = kernel(z, row_span(X, i));
  return k;
}

}  // namespace gkpca
