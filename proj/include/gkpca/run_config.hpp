#pragma once

// Dataset + hyperparameter description shared by the CLI and the HTTP
// service, and the glue that turns it into a fitted model.

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gkpca/csv.hpp"
#include "gkpca/ecg.hpp"
#include "gkpca/error.hpp"
#include "gkpca/idx.hpp"
#include "gkpca/kpca.hpp"
#include "gkpca/model_io.hpp"

namespace gkpca {

struct RunConfig {
  std::string data = "csv";  // mnist | csv | ecg

  // mnist
  std::string images = "train-images-idx3-ubyte";
  std::string labels = "train-labels-idx1-ubyte";
  std::vector<int> digits;                  // empty: keep all classes
  std::optional<std::size_t> per_class;

  // csv
  std::string csv;
  bool csv_labels = false;
  bool csv_header = false;
  int image_width = 0;  // > 0 marks the rows as w x h images
  int image_height = 0;

  // ecg: one plain-text record per path, record-level label per path
  std::vector<std::string> ecg;
  std::vector<int> ecg_labels;

  std::string kernel = "gaussian";
  double bandwidth = 1.0;  // sigma^2 (gaussian) or sigma (laplace)
  long d = 2;
  long S = 1;
};

/// Resolves a dataset path: as given if it exists, otherwise relative to
/// $GKPCA_DATA_DIR when that is set.
inline std::filesystem::path resolve_data_path(const std::string& path) {
  namespace fs = std::filesystem;
  const fs::path p(path);
  if (fs::exists(p) || p.is_absolute()) return p;
  if (const char* root = std::getenv("GKPCA_DATA_DIR"); root != nullptr && *root != '\0') {
    const fs::path candidate = fs::path(root) / p;
    if (fs::exists(candidate)) return candidate;
  }
  return p;
}

inline void validate(const RunConfig& cfg) {
  if (cfg.data != "mnist" && cfg.data != "csv" && cfg.data != "ecg")
    fail(ErrorKind::Input, "unknown data kind '" + cfg.data + "' (expected mnist, csv or ecg)");
  (void)parse_kernel_family(cfg.kernel);
  if (!(cfg.bandwidth > 0.0)) fail(ErrorKind::Input, "bandwidth must be positive");
  if (cfg.d < 1) fail(ErrorKind::Input, "d must be at least 1");
  if (cfg.S < 1) fail(ErrorKind::Input, "S must be at least 1");
  if (cfg.data == "csv" && cfg.csv.empty()) fail(ErrorKind::Input, "csv data needs a file path");
  if (cfg.data == "ecg" && cfg.ecg.empty()) fail(ErrorKind::Input, "ecg data needs at least one record");
  if (!cfg.ecg_labels.empty() && cfg.ecg_labels.size() != cfg.ecg.size())
    fail(ErrorKind::Input, "ecg labels must match the number of records");
  if ((cfg.image_width > 0) != (cfg.image_height > 0)) fail(ErrorKind::Input, "image width and height go together");
}

inline Dataset load_dataset(const RunConfig& cfg) {
  validate(cfg);
  if (cfg.data == "mnist") {
    std::optional<std::set<int>> filter;
    if (!cfg.digits.empty()) filter = std::set<int>(cfg.digits.begin(), cfg.digits.end());
    return load_idx(resolve_data_path(cfg.images), resolve_data_path(cfg.labels), filter, cfg.per_class);
  }
  if (cfg.data == "csv") {
    Dataset ds = load_csv(resolve_data_path(cfg.csv), {.has_labels = cfg.csv_labels, .has_header = cfg.csv_header});
    if (cfg.image_width > 0) {
      if (static_cast<Eigen::Index>(cfg.image_width) * cfg.image_height != ds.X.cols())
        fail(ErrorKind::Input, "image shape does not match the CSV column count");
      if (ds.X.minCoeff() < 0.0 || ds.X.maxCoeff() > 1.0) {
        // Pixel matrices in 0..255 are rescaled to [0, 1].
        if (ds.X.minCoeff() < 0.0 || ds.X.maxCoeff() > 255.0) fail(ErrorKind::Input, "pixel values outside [0, 255]");
        ds.X /= 255.0;
      }
      ds.kind = ImageGrid{cfg.image_width, cfg.image_height};
    }
    return ds;
  }
  std::vector<EcgRecord> records;
  for (std::size_t r = 0; r < cfg.ecg.size(); ++r)
    records.push_back({load_signal_text(resolve_data_path(cfg.ecg[r])), cfg.ecg_labels.empty() ? 0 : cfg.ecg_labels[r]});
  return ecg_dataset(records, EcgConfig{});
}

inline KernelSpec kernel_spec(const RunConfig& cfg) {
  return KernelSpec::validated({parse_kernel_family(cfg.kernel), cfg.bandwidth});
}

inline ModelBundle fit_bundle(Dataset ds, const RunConfig& cfg) {
  ModelBundle bundle;
  bundle.kind = ds.kind;
  bundle.labels = std::move(ds.labels);
  bundle.model = fit(std::move(ds.X), kernel_spec(cfg), static_cast<Eigen::Index>(cfg.d));
  return bundle;
}

inline ModelBundle fit_from_config(const RunConfig& cfg) { return fit_bundle(load_dataset(cfg), cfg); }

/// Reads a RunConfig from JSON. Keys mirror the CLI flags; "sigma2" and
/// "sigma" are accepted as aliases for "bandwidth".
inline RunConfig run_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorKind::Input, "config must be a JSON object");
  RunConfig cfg;
  try {
    cfg.data = j.value("data", cfg.data);
    cfg.images = j.value("images", cfg.images);
    cfg.labels = j.value("labels", cfg.labels);
    cfg.digits = j.value("digits", cfg.digits);
    if (j.contains("per_class")) cfg.per_class = j.at("per_class").get<std::size_t>();
    cfg.csv = j.value("csv", cfg.csv);
    cfg.csv_labels = j.value("csv_labels", cfg.csv_labels);
    cfg.csv_header = j.value("csv_header", cfg.csv_header);
    cfg.image_width = j.value("image_width", cfg.image_width);
    cfg.image_height = j.value("image_height", cfg.image_height);
    cfg.ecg = j.value("ecg", cfg.ecg);
    cfg.ecg_labels = j.value("ecg_labels", cfg.ecg_labels);
    cfg.kernel = j.value("kernel", cfg.kernel);
    if (j.contains("bandwidth")) cfg.bandwidth = j.at("bandwidth").get<double>();
    if (j.contains("sigma2")) cfg.bandwidth = j.at("sigma2").get<double>();
    if (j.contains("sigma")) cfg.bandwidth = j.at("sigma").get<double>();
    cfg.d = j.value("d", cfg.d);
    cfg.S = j.value("S", cfg.S);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Input, std::string("bad config field: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

}  // namespace gkpca
