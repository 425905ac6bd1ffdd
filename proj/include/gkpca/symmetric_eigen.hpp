#pragma once

// Dense symmetric eigensolver: Householder reduction to tridiagonal form
// followed by the implicit QL algorithm with Wilkinson-style shifts.
// O(n^3), intended for Gram matrices of at most a few thousand rows.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "gkpca/error.hpp"
#include "gkpca/linalg.hpp"

namespace gkpca {

struct SymmetricEigen {
  Vector values;   // descending
  Matrix vectors;  // column j belongs to values(j)
};

namespace detail {

// Reduces the symmetric matrix held in `v` to tridiagonal form in place.
// On return `v` holds the accumulated orthogonal transform, `diag` the
// diagonal and `off` the subdiagonal (off[0] == 0).
inline void householder_tridiagonalize(Matrix& v, std::vector<double>& diag, std::vector<double>& off) {
  const Eigen::Index n = v.rows();
  diag.assign(n, 0.0);
  off.assign(n, 0.0);
  for (Eigen::Index j = 0; j < n; ++j) diag[j] = v(n - 1, j);

  for (Eigen::Index i = n - 1; i > 0; --i) {
    double scale = 0.0;
    double h = 0.0;
    for (Eigen::Index k = 0; k < i; ++k) scale += std::abs(diag[k]);

    if (scale == 0.0) {
      off[i] = diag[i - 1];
      for (Eigen::Index j = 0; j < i; ++j) {
        diag[j] = v(i - 1, j);
        v(i, j) = 0.0;
        v(j, i) = 0.0;
      }
    } else {
      for (Eigen::Index k = 0; k < i; ++k) {
        diag[k] /= scale;
        h += diag[k] * diag[k];
      }
      double f = diag[i - 1];
      double g = std::sqrt(h);
      if (f > 0) g = -g;
      off[i] = scale * g;
      h -= f * g;
      diag[i - 1] = f - g;
      for (Eigen::Index j = 0; j < i; ++j) off[j] = 0.0;

      for (Eigen::Index j = 0; j < i; ++j) {
        f = diag[j];
        v(j, i) = f;
        g = off[j] + v(j, j) * f;
        for (Eigen::Index k = j + 1; k <= i - 1; ++k) {
          g += v(k, j) * diag[k];
          off[k] += v(k, j) * f;
        }
        off[j] = g;
      }
      f = 0.0;
      for (Eigen::Index j = 0; j < i; ++j) {
        off[j] /= h;
        f += off[j] * diag[j];
      }
      const double hh = f / (h + h);
      for (Eigen::Index j = 0; j < i; ++j) off[j] -= hh * diag[j];
      for (Eigen::Index j = 0; j < i; ++j) {
        f = diag[j];
        g = off[j];
        for (Eigen::Index k = j; k <= i - 1; ++k) v(k, j) -= (f * off[k] + g * diag[k]);
        diag[j] = v(i - 1, j);
        v(i, j) = 0.0;
      }
    }
    diag[i] = h;
  }

  // Accumulate transformations.
  for (Eigen::Index i = 0; i < n - 1; ++i) {
    v(n - 1, i) = v(i, i);
    v(i, i) = 1.0;
    const double h = diag[i + 1];
    if (h != 0.0) {
      for (Eigen::Index k = 0; k <= i; ++k) diag[k] = v(k, i + 1) / h;
      for (Eigen::Index j = 0; j <= i; ++j) {
        double g = 0.0;
        for (Eigen::Index k = 0; k <= i; ++k) g += v(k, i + 1) * v(k, j);
        for (Eigen::Index k = 0; k <= i; ++k) v(k, j) -= g * diag[k];
      }
    }
    for (Eigen::Index k = 0; k <= i; ++k) v(k, i + 1) = 0.0;
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    diag[j] = v(n - 1, j);
    v(n - 1, j) = 0.0;
  }
  v(n - 1, n - 1) = 1.0;
  off[0] = 0.0;
}

// Implicit QL on the tridiagonal (diag, off), rotating the columns of `v`.
inline void tridiagonal_ql(Matrix& v, std::vector<double>& diag, std::vector<double>& off, int max_sweeps) {
  const Eigen::Index n = v.rows();
  for (Eigen::Index i = 1; i < n; ++i) off[i - 1] = off[i];
  off[n - 1] = 0.0;

  double f = 0.0;
  double tst1 = 0.0;
  const double eps = std::numeric_limits<double>::epsilon();

  for (Eigen::Index l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(diag[l]) + std::abs(off[l]));
    Eigen::Index m = l;
    while (m < n) {
      if (std::abs(off[m]) <= eps * tst1) break;
      ++m;
    }
    if (m == n) m = n - 1;

    if (m > l) {
      int iter = 0;
      do {
        if (++iter > max_sweeps) fail(ErrorKind::Numeric, "tridiagonal QL iteration did not converge");

        double g = diag[l];
        double p = (diag[l + 1] - g) / (2.0 * off[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        diag[l] = off[l] / (p + r);
        diag[l + 1] = off[l] * (p + r);
        const double dl1 = diag[l + 1];
        double h = g - diag[l];
        for (Eigen::Index i = l + 2; i < n; ++i) diag[i] -= h;
        f += h;

        p = diag[m];
        double c = 1.0, c2 = 1.0, c3 = 1.0;
        const double el1 = off[l + 1];
        double s = 0.0, s2 = 0.0;
        for (Eigen::Index i = m - 1; i >= l; --i) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * off[i];
          h = c * p;
          r = std::hypot(p, off[i]);
          off[i + 1] = s * r;
          s = off[i] / r;
          c = p / r;
          p = c * diag[i] - s * g;
          diag[i + 1] = h + s * (c * g + s * diag[i]);
          for (Eigen::Index k = 0; k < n; ++k) {
            h = v(k, i + 1);
            v(k, i + 1) = s * v(k, i) + c * h;
            v(k, i) = c * v(k, i) - s * h;
          }
        }
        p = -s * s2 * c3 * el1 * off[l] / dl1;
        off[l] = s * p;
        diag[l] = c * p;
      } while (std::abs(off[l]) > eps * tst1);
    }
    diag[l] += f;
    off[l] = 0.0;
  }
}

}  // namespace detail

/// Full eigendecomposition of a symmetric matrix, eigenvalues in descending
/// order. Only the lower triangle of `a` is read.
inline SymmetricEigen symmetric_eigen(const Matrix& a, int max_sweeps = 60) {
  const Eigen::Index n = a.rows();
  if (n == 0 || a.cols() != n) fail(ErrorKind::Input, "symmetric_eigen needs a square non-empty matrix");
  if (!a.allFinite()) fail(ErrorKind::Input, "symmetric_eigen: matrix has non-finite entries");

  SymmetricEigen out;
  if (n == 1) {
    out.values = Vector::Constant(1, a(0, 0));
    out.vectors = Matrix::Identity(1, 1);
    return out;
  }

  Matrix v = a.triangularView<Eigen::Lower>();
  v.triangularView<Eigen::StrictlyUpper>() = v.transpose();
  std::vector<double> diag, off;
  detail::householder_tridiagonalize(v, diag, off);
  detail::tridiagonal_ql(v, diag, off, max_sweeps);

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return diag[x] > diag[y]; });

  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    out.values(j) = diag[order[j]];
    out.vectors.col(j) = v.col(order[j]);
  }
  return out;
}

}  // namespace gkpca
