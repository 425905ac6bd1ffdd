#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "gkpca/error.hpp"
#include "gkpca/kpca.hpp"

namespace gkpca {

namespace detail {

// |phi~(z)|^2 minus the energy captured by the first `use` non-null components,
// with f_l = (1/sqrt(lambda_l)) sum_i H_{l,i} k~(z, x_i).
template <Kernel K>
double reconstruction_error(const BasicKpcaModel<K>& model, const CenteredKernelVector& kc, Eigen::Index use) {
  double captured = 0.0;
  for (Eigen::Index l = 0; l < use; ++l) {
    if (model.is_null_component(l)) continue;
    const double f = model.hidden.row(l).dot(kc.values) / std::sqrt(model.eigenvalues(l));
    captured += f * f;
  }
  return std::max(kc.self - captured, 0.0);
}

template <Kernel K>
Eigen::Index resolve_components(const BasicKpcaModel<K>& model, std::optional<Eigen::Index> components) {
  const Eigen::Index use = components.value_or(model.components());
  if (use < 0 || use > model.components())
    fail(ErrorKind::Input, "novelty component count " + std::to_string(use) + " outside [0, " +
                               std::to_string(model.components()) + "]");
  return use;
}

}  // namespace detail

/// Squared feature-space distance between phi~(z) and its projection onto the
/// leading principal subspace. `components` restricts the subspace to the
/// first few components (all d by default). Clamped below at 0.
template <Kernel K>
double novelty_score(const BasicKpcaModel<K>& model, std::span<const double> z,
                     std::optional<Eigen::Index> components = std::nullopt) {
  const Eigen::Index use = detail::resolve_components(model, components);
  return detail::reconstruction_error(model, centered_kernel_vector(model, z), use);
}

/// Novelty of training point j, read from the stored centered Gram column:
/// K~_jj - sum_l lambda_l H_{l,j}^2.
template <Kernel K>
double training_novelty_score(const BasicKpcaModel<K>& model, Eigen::Index j,
                              std::optional<Eigen::Index> components = std::nullopt) {
  if (j < 0 || j >= model.n()) fail(ErrorKind::Index, "training index " + std::to_string(j) + " out of range");
  const Eigen::Index use = detail::resolve_components(model, components);
  double captured = 0.0;
  for (Eigen::Index l = 0; l < use; ++l) {
    if (model.is_null_component(l)) continue;
    captured += model.eigenvalues(l) * model.hidden(l, j) * model.hidden(l, j);
  }
  return std::max(model.centered_gram.values(j, j) - captured, 0.0);
}

struct NoveltyReport {
  std::vector<double> scores;
  double threshold = 0.0;
  std::vector<bool> flags;
  double quantile = 0.2;

  std::size_t flagged_count() const { return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true)); }
};

/// Flags the ceil(quantile * M) highest scores. Ties at the threshold go to
/// the lower index, so the flagged count is always exact.
inline NoveltyReport make_report(std::vector<double> scores, double quantile) {
  if (!(quantile > 0.0 && quantile < 1.0)) fail(ErrorKind::Input, "novelty quantile must lie in (0, 1)");
  if (scores.empty()) fail(ErrorKind::Input, "novelty report needs at least one point");
  const std::size_t m = scores.size();
  // The epsilon absorbs representation error such as 0.2 * 1000.
  const auto k = static_cast<std::size_t>(std::ceil(quantile * static_cast<double>(m) - 1e-9));
  const std::size_t keep = std::clamp<std::size_t>(k, 1, m);

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  NoveltyReport r;
  r.quantile = quantile;
  r.flags.assign(m, false);
  for (std::size_t i = 0; i < keep; ++i) r.flags[order[i]] = true;
  r.threshold = scores[order[keep - 1]];
  r.scores = std::move(scores);
  return r;
}

template <Kernel K>
NoveltyReport novelty_report(const BasicKpcaModel<K>& model, const DataMatrix& Z, double quantile = 0.2) {
  if (Z.rows() == 0) fail(ErrorKind::Input, "novelty report needs at least one point");
  if (!(quantile > 0.0 && quantile < 1.0)) fail(ErrorKind::Input, "novelty quantile must lie in (0, 1)");
  std::vector<double> scores(Z.rows());
  for (Eigen::Index i = 0; i < Z.rows(); ++i) scores[i] = novelty_score(model, row_span(Z, i));
  return make_report(std::move(scores), quantile);
}

/// Report over the training set itself, reusing the stored centered Gram matrix.
template <Kernel K>
NoveltyReport training_novelty_report(const BasicKpcaModel<K>& model, double quantile = 0.2) {
  std::vector<double> scores(model.n());
  for (Eigen::Index j = 0; j < model.n(); ++j) scores[j] = training_novelty_score(model, j);
  return make_report(std::move(scores), quantile);
}

}  // namespace gkpca
