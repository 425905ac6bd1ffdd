#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "gkpca/error.hpp"
#include "gkpca/kpca.hpp"

namespace gkpca {

/// Similarity of a generated point to every training point.
/// `raw` is k^(x_k, x*) = sum_i K~_{k,i} h_i^T h*, `scaled` its min-max
/// normalisation to [0, 1] over all N training points.
struct SimilarityVector {
  Vector raw;
  Vector scaled;
};

struct Neighbor {
  Eigen::Index index = 0;
  double similarity = 0.0;  // scaled similarity, used as the smoother weight
};

struct GeneratedSample {
  Vector x_hat;
  std::vector<Neighbor> neighbors;  // descending similarity, length S
  LatentPoint h_star;
};

template <Kernel K>
void check_latent(const BasicKpcaModel<K>& model, const LatentPoint& h) {
  if (h.size() != model.components())
    fail(ErrorKind::Input, "latent point has " + std::to_string(h.size()) + " coordinates, model has d=" +
                               std::to_string(model.components()));
  if (!h.coords.allFinite()) fail(ErrorKind::Input, "latent point contains non-finite values");
}

/// Min-max scaling. A constant vector maps to all zeros.
inline Vector min_max_scale(const Vector& raw) {
  const double lo = raw.minCoeff();
  const double hi = raw.maxCoeff();
  if (!(hi > lo)) return Vector::Zero(raw.size());
  return (raw.array() - lo) / (hi - lo);
}

template <Kernel K>
SimilarityVector similarity(const BasicKpcaModel<K>& model, const LatentPoint& h_star) {
  check_latent(model, h_star);
  const Vector weights = model.hidden.transpose() * h_star.coords;  // h_i^T h*
  SimilarityVector s;
  s.raw = model.centered_gram.values * weights;
  s.scaled = min_max_scale(s.raw);
  return s;
}

/// Indices of the S largest scaled similarities, descending, lower index first on ties.
inline std::vector<Eigen::Index> top_neighbors(const Vector& scaled, Eigen::Index count) {
  std::vector<Eigen::Index> order(scaled.size());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto by_rank = [&](Eigen::Index a, Eigen::Index b) {
    if (scaled(a) != scaled(b)) return scaled(a) > scaled(b);
    return a < b;
  };
  std::partial_sort(order.begin(), order.begin() + count, order.end(), by_rank);
  order.resize(count);
  return order;
}

/// Kernel smoother pre-image: the similarity-weighted mean of the S most
/// similar training points. Weights are normalised before accumulation, in
/// rank order, so S = 1 reproduces the neighbour bit for bit.
template <Kernel K>
GeneratedSample preimage(const BasicKpcaModel<K>& model, const LatentPoint& h_star, Eigen::Index S) {
  if (S < 1 || S > model.n())
    fail(ErrorKind::Input, "neighbour count S=" + std::to_string(S) + " outside [1, " + std::to_string(model.n()) + "]");
  const SimilarityVector sim = similarity(model, h_star);
  const std::vector<Eigen::Index> chosen = top_neighbors(sim.scaled, S);

  double total = 0.0;
  for (Eigen::Index i : chosen) total += sim.scaled(i);
  if (!(total > 0.0))
    fail(ErrorKind::Degenerate, "all selected neighbours have zero scaled similarity; no neighbourhood to average");

  GeneratedSample out{Vector::Zero(model.input_dim()), {}, h_star};
  out.neighbors.reserve(chosen.size());
  for (Eigen::Index i : chosen) {
    const double w = sim.scaled(i) / total;
    out.x_hat += w * model.X.row(i).transpose();
    out.neighbors.push_back({i, sim.scaled(i)});
  }
  return out;
}

/// Sweep component `component` (0-based) of the start point from `from` to `to`.
struct AlongComponent {
  Eigen::Index component = 0;
  double from = 0.0;
  double to = 0.0;
};

/// Straight line (1-t) a + t b.
struct Interpolate {
  LatentPoint a;
  LatentPoint b;
};

struct TraversalPath {
  LatentPoint start;
  std::variant<AlongComponent, Interpolate> mode;
  Eigen::Index steps = 2;
};

/// The latent points visited by a path; t runs over `steps` equally spaced
/// values in [0, 1] and hits both endpoints exactly.
template <Kernel K>
std::vector<LatentPoint> traversal_points(const BasicKpcaModel<K>& model, const TraversalPath& path) {
  if (path.steps < 2) fail(ErrorKind::Input, "a traversal needs at least 2 steps");
  std::vector<LatentPoint> points;
  points.reserve(path.steps);
  const auto t_at = [&](Eigen::Index s) { return static_cast<double>(s) / static_cast<double>(path.steps - 1); };

  if (const auto* along = std::get_if<AlongComponent>(&path.mode)) {
    check_latent(model, path.start);
    if (along->component < 0 || along->component >= model.components())
      fail(ErrorKind::Input, "component " + std::to_string(along->component + 1) + " outside [1, " +
                                 std::to_string(model.components()) + "]");
    for (Eigen::Index s = 0; s < path.steps; ++s) {
      const double t = t_at(s);
      LatentPoint p = path.start;
      p.coords(along->component) = (1.0 - t) * along->from + t * along->to;
      points.push_back(std::move(p));
    }
  } else {
    const auto& line = std::get<Interpolate>(path.mode);
    check_latent(model, line.a);
    check_latent(model, line.b);
    for (Eigen::Index s = 0; s < path.steps; ++s) {
      const double t = t_at(s);
      points.push_back({(1.0 - t) * line.a.coords + t * line.b.coords});
    }
  }
  return points;
}

/// Decodes every point of a traversal path, in step order.
template <Kernel K>
std::vector<GeneratedSample> traverse(const BasicKpcaModel<K>& model, const TraversalPath& path, Eigen::Index S) {
  std::vector<GeneratedSample> samples;
  const std::vector<LatentPoint> points = traversal_points(model, path);
  samples.reserve(points.size());
  for (std::size_t s = 0; s < points.size(); ++s) {
    try {
      samples.push_back(preimage(model, points[s], S));
    } catch (const Error& e) {
      throw Error(e.kind(), "step " + std::to_string(s) + ": " + e.what());
    }
  }
  return samples;
}

}  // namespace gkpca
