#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "gkpca/linalg.hpp"

namespace gkpca {

/// Row-major w x h grayscale images with pixels in [0, 1].
struct ImageGrid {
  int width = 0;
  int height = 0;
  friend bool operator==(const ImageGrid&, const ImageGrid&) = default;
};

/// Fixed-length signal windows sampled at `sample_rate_hz`.
struct Signal {
  double sample_rate_hz = 0.0;
  friend bool operator==(const Signal&, const Signal&) = default;
};

struct Tabular {
  friend bool operator==(const Tabular&, const Tabular&) = default;
};

using DatasetKind = std::variant<Tabular, ImageGrid, Signal>;

struct Dataset {
  DataMatrix X;
  std::optional<std::vector<int>> labels;
  DatasetKind kind = Tabular{};

  Eigen::Index size() const { return X.rows(); }
};

}  // namespace gkpca
