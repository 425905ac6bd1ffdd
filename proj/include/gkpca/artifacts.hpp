#pragma once

// Files and JSON documents produced from generated samples: PGM images,
// waveform CSVs, novelty CSV reports and traversal manifests.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gkpca/csv.hpp"
#include "gkpca/dataset.hpp"
#include "gkpca/error.hpp"
#include "gkpca/generator.hpp"
#include "gkpca/novelty.hpp"

namespace gkpca {

using json = nlohmann::json;

inline constexpr std::string_view kManifestFormat = "gkpca-traversal";
inline constexpr int kManifestVersion = 1;

/// Binary 8-bit PGM; [0, 1] maps linearly to 0..255.
inline std::string pgm_bytes(const Vector& x, int width, int height) {
  if (static_cast<Eigen::Index>(width) * height != x.size()) fail(ErrorKind::Input, "image shape does not match sample length");
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  out.reserve(out.size() + static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i)
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(x(i), 0.0, 1.0) * 255.0))));
  return out;
}

/// `sample,time_s,value` rows.
inline std::string waveform_csv(const Vector& x, double sample_rate_hz) {
  std::string out = "sample,time_s,value\n";
  for (Eigen::Index i = 0; i < x.size(); ++i)
    out += std::to_string(i) + "," + format_double(static_cast<double>(i) / sample_rate_hz) + "," + format_double(x(i)) + "\n";
  return out;
}

inline std::string vector_csv(const Vector& x) {
  std::string out;
  for (Eigen::Index i = 0; i < x.size(); ++i) out += (i ? "," : "") + format_double(x(i));
  return out + "\n";
}

/// File extension used for a sample of the given dataset kind.
inline std::string sample_extension(const DatasetKind& kind) {
  return std::holds_alternative<ImageGrid>(kind) ? ".pgm" : ".csv";
}

inline std::string render_sample(const Vector& x, const DatasetKind& kind) {
  if (const auto* g = std::get_if<ImageGrid>(&kind)) return pgm_bytes(x, g->width, g->height);
  if (const auto* s = std::get_if<Signal>(&kind)) return waveform_csv(x, s->sample_rate_hz);
  return vector_csv(x);
}

inline void write_text_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string novelty_csv(const NoveltyReport& r) {
  std::string out = "index,score,flag\n";
  for (std::size_t i = 0; i < r.scores.size(); ++i)
    out += std::to_string(i) + "," + format_double(r.scores[i]) + "," + (r.flags[i] ? "1" : "0") + "\n";
  return out;
}

inline json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Vector vector_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) fail(ErrorKind::Input, what + " must be an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(ErrorKind::Input, what + " must be an array of numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

inline json render_hint(const DatasetKind& kind) {
  if (const auto* g = std::get_if<ImageGrid>(&kind)) return {{"kind", "image"}, {"width", g->width}, {"height", g->height}};
  if (const auto* s = std::get_if<Signal>(&kind)) return {{"kind", "signal"}, {"sample_rate_hz", s->sample_rate_hz}};
  return {{"kind", "tabular"}};
}

inline json to_json(const GeneratedSample& s, const DatasetKind& kind) {
  json neighbors = json::array();
  for (const auto& nb : s.neighbors) neighbors.push_back({{"index", nb.index}, {"similarity", nb.similarity}});
  return {{"h_star", to_json(s.h_star.coords)},
          {"x_hat", to_json(s.x_hat)},
          {"neighbors", std::move(neighbors)},
          {"render_hint", render_hint(kind)}};
}

/// Describes how a traversal was requested; stored verbatim in the manifest.
inline json describe_path(const TraversalPath& path, std::optional<Eigen::Index> base = std::nullopt) {
  json j;
  if (const auto* along = std::get_if<AlongComponent>(&path.mode)) {
    j = {{"type", "component"}, {"component", along->component + 1}, {"from", along->from}, {"to", along->to}};
    j["start"] = to_json(path.start.coords);
  } else {
    const auto& line = std::get<Interpolate>(path.mode);
    j = {{"type", "interpolate"}, {"h_a", to_json(line.a.coords)}, {"h_b", to_json(line.b.coords)}};
  }
  if (base) j["base"] = *base;
  return j;
}

struct ManifestStep {
  LatentPoint h_star;
  std::string file;  // may be empty (e.g. exported from the explorer)
};

struct Manifest {
  long S = 1;
  json mode = json::object();
  std::vector<ManifestStep> steps;
};

inline json to_json(const Manifest& m) {
  json steps = json::array();
  for (std::size_t k = 0; k < m.steps.size(); ++k) {
    json step = {{"step", k}, {"h_star", to_json(m.steps[k].h_star.coords)}};
    if (!m.steps[k].file.empty()) step["file"] = m.steps[k].file;
    steps.push_back(std::move(step));
  }
  return {{"format", kManifestFormat}, {"version", kManifestVersion}, {"S", m.S}, {"mode", m.mode}, {"steps", std::move(steps)}};
}

inline Manifest manifest_from_json(const json& j) {
  if (!j.is_object() || j.value("format", std::string{}) != kManifestFormat)
    fail(ErrorKind::Format, "not a traversal manifest");
  if (j.value("version", 0) != kManifestVersion) fail(ErrorKind::Format, "unsupported manifest version");
  Manifest m;
  if (!j.contains("S") || !j["S"].is_number_integer()) fail(ErrorKind::Format, "manifest lacks an integer S");
  m.S = j["S"].get<long>();
  m.mode = j.value("mode", json::object());
  if (!j.contains("steps") || !j["steps"].is_array()) fail(ErrorKind::Format, "manifest lacks a steps array");
  for (const json& step : j["steps"]) {
    if (!step.is_object() || !step.contains("h_star")) fail(ErrorKind::Format, "manifest step lacks h_star");
    m.steps.push_back({LatentPoint{vector_from_json(step["h_star"], "h_star")}, step.value("file", std::string{})});
  }
  return m;
}

/// Stable, human-diffable JSON text (two-space indent, trailing newline).
inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace gkpca
