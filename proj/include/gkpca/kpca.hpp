#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "gkpca/error.hpp"
#include "gkpca/kernels.hpp"
#include "gkpca/linalg.hpp"
#include "gkpca/symmetric_eigen.hpp"

namespace gkpca {

/// Components whose eigenvalue is at most this fraction of the largest one
/// are kept in H but treated as null directions by project() and novelty.
inline constexpr double kNullComponentRatio = 1e-10;

/// Tolerated negative eigenvalue, relative to the largest, before fit() reports a non-PSD matrix.
inline constexpr double kNegativeEigenTolerance = 1e-8;

/// A point h* in hidden-unit coordinates, one entry per kept component.
struct LatentPoint {
  Vector coords;

  Eigen::Index size() const { return coords.size(); }
  double operator[](Eigen::Index l) const { return coords(l); }
};

/// Fitted kernel PCA latent space.
///
/// `hidden` is the d x N matrix H whose row l is the l-th unit-norm
/// eigenvector of the centered Gram matrix, so column i is the hidden unit
/// of training point i. Eigenvalues are nonincreasing and nonnegative.
template <Kernel K>
struct BasicKpcaModel {
  DataMatrix X;
  K kernel;
  GramMatrix centered_gram;
  CenteringStats stats;
  Matrix hidden;
  Vector eigenvalues;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index input_dim() const { return X.cols(); }
  Eigen::Index components() const { return hidden.rows(); }

  /// True when component l carries (numerically) no variance.
  bool is_null_component(Eigen::Index l) const {
    const double top = eigenvalues.size() > 0 ? eigenvalues(0) : 0.0;
    return !(eigenvalues(l) > kNullComponentRatio * top);
  }

  /// Number of leading components that are not null; components are sorted,
  /// so these are exactly the first `effective_components()` rows of H.
  Eigen::Index effective_components() const {
    Eigen::Index c = 0;
    while (c < components() && !is_null_component(c)) ++c;
    return c;
  }
};

using KpcaModel = BasicKpcaModel<KernelSpec>;

namespace detail {

// Flip so that the largest-magnitude entry (first one on ties) is positive.
inline void canonicalize_sign(Eigen::Ref<Vector> v) {
  Eigen::Index arg = 0;
  double best = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > best) {
      best = std::abs(v(i));
      arg = i;
    }
  }
  if (v(arg) < 0) v = -v;
}

}  // namespace detail

/// Builds the model from an already centered Gram matrix. Shared by fit()
/// and model deserialization.
template <Kernel K>
BasicKpcaModel<K> fit_centered(DataMatrix X, K kernel, GramMatrix centered, CenteringStats stats, Eigen::Index d) {
  const Eigen::Index n = X.rows();
  if (d < 1 || d > n)
    fail(ErrorKind::Input, "component count d=" + std::to_string(d) + " outside [1, " + std::to_string(n) + "]");

  SymmetricEigen eig = symmetric_eigen(centered.values);
  // A constant dataset centers to the zero matrix; every component is then null.
  const double top = std::max(eig.values(0), 0.0);
  const double roundoff = 64.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(n) *
                          centered.values.cwiseAbs().maxCoeff();
  const double negative_floor = kNegativeEigenTolerance * top + roundoff;

  BasicKpcaModel<K> m{std::move(X), std::move(kernel), std::move(centered), std::move(stats), Matrix(d, n), Vector(d)};
  for (Eigen::Index l = 0; l < d; ++l) {
    double lambda = eig.values(l);
    if (lambda < 0.0) {
      if (lambda < -negative_floor)
        fail(ErrorKind::Numeric, "centered Gram matrix is not positive semi-definite (eigenvalue " +
                                     std::to_string(lambda) + ")");
      lambda = 0.0;
    }
    Vector v = eig.vectors.col(l);
    detail::canonicalize_sign(v);
    m.hidden.row(l) = v.transpose();
    m.eigenvalues(l) = lambda;
  }
  return m;
}

/// Solves K~ H^T = H^T Lambda for the leading d components.
template <Kernel K>
BasicKpcaModel<K> fit(DataMatrix X, K kernel, Eigen::Index d) {
  if (X.rows() < 2) fail(ErrorKind::Input, "fit needs at least 2 data points");
  if (!X.allFinite()) fail(ErrorKind::Input, "data matrix contains non-finite values");
  if (d < 1 || d > X.rows())
    fail(ErrorKind::Input, "component count d=" + std::to_string(d) + " outside [1, " + std::to_string(X.rows()) + "]");
  auto [centered, stats] = center(gram(kernel, X));
  return fit_centered(std::move(X), std::move(kernel), std::move(centered), std::move(stats), d);
}

template <Kernel K>
LatentPoint hidden_unit(const BasicKpcaModel<K>& model, Eigen::Index i) {
  if (i < 0 || i >= model.n())
    fail(ErrorKind::Index, "hidden unit index " + std::to_string(i) + " outside [0, " + std::to_string(model.n()) + ")");
  return {model.hidden.col(i)};
}

/// Centered kernel vector of an arbitrary input point against the training set.
template <Kernel K>
CenteredKernelVector centered_kernel_vector(const BasicKpcaModel<K>& model, std::span<const double> z) {
  if (static_cast<Eigen::Index>(z.size()) != model.input_dim())
    fail(ErrorKind::Input, "point has dimension " + std::to_string(z.size()) + ", model expects " +
                               std::to_string(model.input_dim()));
  for (double v : z)
    if (!std::isfinite(v)) fail(ErrorKind::Input, "point contains non-finite values");
  return center_vector(model.stats, kernel_vector(model.kernel, model.X, z), model.kernel(z, z));
}

/// Out-of-sample projection: coords_l = (1/lambda_l) sum_i H_{l,i} k~(z, x_i).
/// This scaling maps a training point onto its stored hidden unit. Null
/// components project to 0.
template <Kernel K>
LatentPoint project(const BasicKpcaModel<K>& model, std::span<const double> z) {
  const CenteredKernelVector kc = centered_kernel_vector(model, z);
  LatentPoint p{Vector::Zero(model.components())};
  for (Eigen::Index l = 0; l < model.components(); ++l) {
    if (model.is_null_component(l)) continue;
    p.coords(l) = model.hidden.row(l).dot(kc.values) / model.eigenvalues(l);
  }
  return p;
}

}  // namespace gkpca
