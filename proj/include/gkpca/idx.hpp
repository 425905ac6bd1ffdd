#pragma once

// Reader/writer for the big-endian IDX files MNIST is distributed in.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gkpca/dataset.hpp"
#include "gkpca/error.hpp"

namespace gkpca {

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

struct IdxImages {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols, row-major per image

  std::size_t count() const { return rows * cols == 0 ? 0 : pixels.size() / (rows * cols); }
};

namespace detail {

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

inline std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t at, const std::string& what) {
  if (b.size() < at + 4) fail(ErrorKind::Format, what + ": truncated header");
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
         std::uint32_t{b[at + 3]};
}

inline void append_be32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  b.push_back(static_cast<std::uint8_t>(v >> 24));
  b.push_back(static_cast<std::uint8_t>(v >> 16));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
  b.push_back(static_cast<std::uint8_t>(v));
}

}  // namespace detail

inline IdxImages parse_idx_images(const std::vector<std::uint8_t>& bytes, const std::string& name = "idx images") {
  const std::uint32_t magic = detail::read_be32(bytes, 0, name);
  if (magic != kIdxImagesMagic) fail(ErrorKind::Format, name + ": bad magic number");
  const std::uint32_t count = detail::read_be32(bytes, 4, name);
  IdxImages img;
  img.rows = detail::read_be32(bytes, 8, name);
  img.cols = detail::read_be32(bytes, 12, name);
  const std::size_t expected = std::size_t{count} * img.rows * img.cols;
  if (bytes.size() - 16 < expected) fail(ErrorKind::Format, name + ": truncated pixel data");
  if (bytes.size() - 16 > expected) fail(ErrorKind::Format, name + ": trailing bytes after pixel data");
  img.pixels.assign(bytes.begin() + 16, bytes.end());
  return img;
}

inline std::vector<std::uint8_t> parse_idx_labels(const std::vector<std::uint8_t>& bytes,
                                                  const std::string& name = "idx labels") {
  const std::uint32_t magic = detail::read_be32(bytes, 0, name);
  if (magic != kIdxLabelsMagic) fail(ErrorKind::Format, name + ": bad magic number");
  const std::uint32_t count = detail::read_be32(bytes, 4, name);
  if (bytes.size() - 8 != count) fail(ErrorKind::Format, name + ": label count does not match file size");
  return {bytes.begin() + 8, bytes.end()};
}

inline std::vector<std::uint8_t> serialize_idx_images(const IdxImages& img) {
  std::vector<std::uint8_t> b;
  b.reserve(16 + img.pixels.size());
  detail::append_be32(b, kIdxImagesMagic);
  detail::append_be32(b, static_cast<std::uint32_t>(img.count()));
  detail::append_be32(b, img.rows);
  detail::append_be32(b, img.cols);
  b.insert(b.end(), img.pixels.begin(), img.pixels.end());
  return b;
}

inline std::vector<std::uint8_t> serialize_idx_labels(const std::vector<std::uint8_t>& labels) {
  std::vector<std::uint8_t> b;
  b.reserve(8 + labels.size());
  detail::append_be32(b, kIdxLabelsMagic);
  detail::append_be32(b, static_cast<std::uint32_t>(labels.size()));
  b.insert(b.end(), labels.begin(), labels.end());
  return b;
}

/// Packs an ImageGrid dataset back into IDX form; pixels are rounded from [0, 1] to bytes.
inline std::pair<IdxImages, std::vector<std::uint8_t>> to_idx(const Dataset& ds) {
  const auto* grid = std::get_if<ImageGrid>(&ds.kind);
  if (grid == nullptr) fail(ErrorKind::Input, "only image datasets can be written as IDX");
  IdxImages img;
  img.rows = static_cast<std::uint32_t>(grid->height);
  img.cols = static_cast<std::uint32_t>(grid->width);
  img.pixels.reserve(static_cast<std::size_t>(ds.X.size()));
  for (Eigen::Index i = 0; i < ds.X.rows(); ++i)
    for (Eigen::Index j = 0; j < ds.X.cols(); ++j)
      img.pixels.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(ds.X(i, j), 0.0, 1.0) * 255.0)));
  std::vector<std::uint8_t> labels;
  if (ds.labels)
    for (int l : *ds.labels) labels.push_back(static_cast<std::uint8_t>(l));
  return {std::move(img), std::move(labels)};
}

/// Loads IDX images and labels. With `filter_digits`, only those labels are
/// kept; `limit_per_class` keeps the first images of each class in file order.
inline Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                        const std::optional<std::set<int>>& filter_digits = std::nullopt,
                        std::optional<std::size_t> limit_per_class = std::nullopt) {
  if (filter_digits && filter_digits->empty()) fail(ErrorKind::Input, "digit filter is empty");
  const IdxImages img = parse_idx_images(detail::read_file_bytes(images_path), images_path.string());
  const std::vector<std::uint8_t> labels = parse_idx_labels(detail::read_file_bytes(labels_path), labels_path.string());
  if (labels.size() != img.count())
    fail(ErrorKind::Format, "image count " + std::to_string(img.count()) + " differs from label count " +
                                std::to_string(labels.size()));

  std::vector<std::size_t> keep;
  std::map<int, std::size_t> taken;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int label = labels[i];
    if (filter_digits && !filter_digits->contains(label)) continue;
    if (limit_per_class && taken[label] >= *limit_per_class) continue;
    ++taken[label];
    keep.push_back(i);
  }

  const std::size_t dim = std::size_t{img.rows} * img.cols;
  Dataset ds;
  ds.kind = ImageGrid{static_cast<int>(img.cols), static_cast<int>(img.rows)};
  ds.X.resize(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(dim));
  ds.labels.emplace();
  ds.labels->reserve(keep.size());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const std::uint8_t* src = img.pixels.data() + keep[r] * dim;
    for (std::size_t j = 0; j < dim; ++j) ds.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = src[j] / 255.0;
    ds.labels->push_back(labels[keep[r]]);
  }
  return ds;
}

}  // namespace gkpca
