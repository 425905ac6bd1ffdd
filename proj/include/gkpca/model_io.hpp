#pragma once

// Binary model archive. Layout (all integers and doubles little-endian):
//
//   "GKPCA1"                       magic, 6 bytes
//   u8   kernel family              0 gaussian, 1 laplace
//   f64  bandwidth
//   u64  N, u64 input dim, u64 d
//   u8   dataset kind               0 tabular, 1 image grid, 2 signal
//        image grid: u32 width, u32 height; signal: f64 sample rate
//   u8   has labels; then N x i32 labels if set
//   f64  X            N x input dim, row-major
//   f64  eigenvalues  d
//   f64  H            d x N, row-major
//   f64  row means    N
//   f64  grand mean
//
// The centered Gram matrix is recomputed on load. Saving a loaded model
// reproduces the original bytes.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gkpca/dataset.hpp"
#include "gkpca/error.hpp"
#include "gkpca/idx.hpp"
#include "gkpca/kpca.hpp"

namespace gkpca {

inline constexpr char kModelMagic[] = "GKPCA1";

/// A fitted model together with what is needed to render its samples.
struct ModelBundle {
  KpcaModel model;
  DatasetKind kind = Tabular{};
  std::optional<std::vector<int>> labels;
};

namespace detail {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }

  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::vector<std::uint8_t>& b) : b_(b) {}

  std::uint8_t u8() {
    need(1);
    return b_[at_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{b_[at_++]} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{b_[at_++]} << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string raw(std::size_t n) {
    need(n);
    std::string s(b_.begin() + static_cast<std::ptrdiff_t>(at_), b_.begin() + static_cast<std::ptrdiff_t>(at_ + n));
    at_ += n;
    return s;
  }
  bool done() const { return at_ == b_.size(); }
  std::size_t remaining() const { return b_.size() - at_; }

 private:
  void need(std::size_t n) const {
    if (b_.size() - at_ < n) fail(ErrorKind::Format, "model file is truncated");
  }
  const std::vector<std::uint8_t>& b_;
  std::size_t at_ = 0;
};

}  // namespace detail

inline std::vector<std::uint8_t> serialize_model(const ModelBundle& bundle) {
  const KpcaModel& m = bundle.model;
  detail::ByteWriter w;
  w.raw(std::string_view(kModelMagic, 6));
  w.u8(m.kernel.family == KernelFamily::GaussianRbf ? 0 : 1);
  w.f64(m.kernel.bandwidth);
  w.u64(static_cast<std::uint64_t>(m.n()));
  w.u64(static_cast<std::uint64_t>(m.input_dim()));
  w.u64(static_cast<std::uint64_t>(m.components()));

  if (const auto* g = std::get_if<ImageGrid>(&bundle.kind)) {
    w.u8(1);
    w.u32(static_cast<std::uint32_t>(g->width));
    w.u32(static_cast<std::uint32_t>(g->height));
  } else if (const auto* s = std::get_if<Signal>(&bundle.kind)) {
    w.u8(2);
    w.f64(s->sample_rate_hz);
  } else {
    w.u8(0);
  }

  w.u8(bundle.labels ? 1 : 0);
  if (bundle.labels) {
    if (static_cast<Eigen::Index>(bundle.labels->size()) != m.n()) fail(ErrorKind::Input, "label count differs from N");
    for (int l : *bundle.labels) w.u32(static_cast<std::uint32_t>(l));
  }

  for (Eigen::Index i = 0; i < m.n(); ++i)
    for (Eigen::Index j = 0; j < m.input_dim(); ++j) w.f64(m.X(i, j));
  for (Eigen::Index l = 0; l < m.components(); ++l) w.f64(m.eigenvalues(l));
  for (Eigen::Index l = 0; l < m.components(); ++l)
    for (Eigen::Index i = 0; i < m.n(); ++i) w.f64(m.hidden(l, i));
  for (Eigen::Index i = 0; i < m.n(); ++i) w.f64(m.stats.row_means(i));
  w.f64(m.stats.grand_mean);
  return w.take();
}

inline ModelBundle deserialize_model(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes);
  if (bytes.size() < 6 || r.raw(6) != std::string_view(kModelMagic, 6))
    fail(ErrorKind::Format, "not a model file (missing GKPCA1 header)");

  KernelSpec spec;
  const std::uint8_t family = r.u8();
  if (family > 1) fail(ErrorKind::Format, "unknown kernel family tag");
  spec.family = family == 0 ? KernelFamily::GaussianRbf : KernelFamily::Laplace;
  spec.bandwidth = r.f64();
  if (!(spec.bandwidth > 0.0)) fail(ErrorKind::Format, "stored bandwidth is not positive");

  const std::uint64_t n = r.u64(), dim = r.u64(), d = r.u64();
  if (n < 2 || dim < 1 || d < 1 || d > n) fail(ErrorKind::Format, "model dimensions are inconsistent");
  // Cheap size sanity check before allocating.
  if (r.remaining() / 8 < n * dim + d + d * n + n + 1) fail(ErrorKind::Format, "model file is truncated");

  ModelBundle bundle;
  switch (r.u8()) {
    case 0: bundle.kind = Tabular{}; break;
    case 1: {
      ImageGrid g;
      g.width = static_cast<int>(r.u32());
      g.height = static_cast<int>(r.u32());
      bundle.kind = g;
      break;
    }
    case 2: bundle.kind = Signal{r.f64()}; break;
    default: fail(ErrorKind::Format, "unknown dataset kind tag");
  }
  if (r.u8() != 0) {
    bundle.labels.emplace();
    for (std::uint64_t i = 0; i < n; ++i) bundle.labels->push_back(static_cast<std::int32_t>(r.u32()));
  }

  const auto N = static_cast<Eigen::Index>(n), D = static_cast<Eigen::Index>(dim), C = static_cast<Eigen::Index>(d);
  DataMatrix X(N, D);
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index j = 0; j < D; ++j) X(i, j) = r.f64();
  Vector lambdas(C);
  for (Eigen::Index l = 0; l < C; ++l) lambdas(l) = r.f64();
  Matrix H(C, N);
  for (Eigen::Index l = 0; l < C; ++l)
    for (Eigen::Index i = 0; i < N; ++i) H(l, i) = r.f64();
  CenteringStats stats{Vector(N), 0.0};
  for (Eigen::Index i = 0; i < N; ++i) stats.row_means(i) = r.f64();
  stats.grand_mean = r.f64();
  if (!r.done()) fail(ErrorKind::Format, "trailing bytes after model data");

  auto [centered, recomputed] = center(gram(spec, X));
  if (!recomputed.row_means.isApprox(stats.row_means, 1e-9) || std::abs(recomputed.grand_mean - stats.grand_mean) > 1e-9)
    fail(ErrorKind::Format, "stored centering statistics do not match the stored data");

  bundle.model = KpcaModel{std::move(X), spec, std::move(centered), std::move(stats), std::move(H), std::move(lambdas)};
  return bundle;
}

inline void save_model(const std::filesystem::path& path, const ModelBundle& bundle) {
  detail::write_file_bytes(path, serialize_model(bundle));
}

inline ModelBundle load_model(const std::filesystem::path& path) {
  return deserialize_model(detail::read_file_bytes(path));
}

}  // namespace gkpca
