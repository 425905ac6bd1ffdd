// gkpca: fit kernel PCA models, traverse their latent space, score novelty
// and serve them over HTTP.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <gkpca/artifacts.hpp>
#include <gkpca/http_server.hpp>
#include <gkpca/run_config.hpp>

namespace fs = std::filesystem;
using namespace gkpca;

namespace {

struct TraverseArgs {
  std::string model;
  std::optional<long> component;
  double from = -0.05;
  double to = 0.05;
  std::optional<long> base;
  std::vector<long> interpolate;
  std::string replay;
  long steps = 7;
  std::optional<long> S;
  std::string out = "traversal";
};

struct NoveltyArgs {
  std::string model;
  double quantile = 0.2;
  std::string out = "novelty.csv";
  std::string csv;
  bool csv_labels = false;
  bool csv_header = false;
};

struct EpochsArgs {
  std::vector<std::string> ecg;
  std::vector<int> labels;
  std::string out = "epochs.csv";
};

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = kDefaultPort;
  std::string static_dir;
  std::vector<std::string> models;
};

const CLI::Validator open_unit_interval(
    [](std::string& text) -> std::string {
      double v = 0.0;
      try {
        v = std::stod(text);
      } catch (const std::exception&) {
        return "not a number: " + text;
      }
      return v > 0.0 && v < 1.0 ? std::string{} : "value " + text + " not in (0, 1)";
    },
    "(0,1)");

const CLI::Validator at_least_one(
    [](std::string& text) -> std::string {
      try {
        std::size_t used = 0;
        if (std::stol(text, &used) >= 1 && used == text.size()) return {};
      } catch (const std::exception&) {
      }
      return "must be an integer >= 1, got " + text;
    },
    "INT>=1");

void add_data_options(CLI::App& cmd, RunConfig& cfg) {
  cmd.add_option("--data", cfg.data, "Dataset kind")->check(CLI::IsMember({"mnist", "csv", "ecg"}));
  cmd.add_option("--images", cfg.images, "IDX image file (mnist)");
  cmd.add_option("--labels", cfg.labels, "IDX label file (mnist)");
  cmd.add_option("--digits", cfg.digits, "Classes to keep (mnist)")->delimiter(',');
  cmd.add_option("--per-class", cfg.per_class, "Images per class (mnist)");
  cmd.add_option("--csv", cfg.csv, "CSV data file");
  cmd.add_flag("--csv-labels", cfg.csv_labels, "Last CSV column holds integer labels");
  cmd.add_flag("--csv-header", cfg.csv_header, "Skip the first CSV line");
  cmd.add_option("--image-width", cfg.image_width, "Treat CSV rows as images of this width");
  cmd.add_option("--image-height", cfg.image_height, "Treat CSV rows as images of this height");
  cmd.add_option("--ecg", cfg.ecg, "ECG records, one sample per line")->delimiter(',');
  cmd.add_option("--ecg-labels", cfg.ecg_labels, "Label per ECG record")->delimiter(',');
}

void print_fit_summary(const ModelBundle& bundle) {
  const KpcaModel& m = bundle.model;
  std::cout << "N=" << m.n() << " d=" << m.components() << "\n";
  std::cout << "eigenvalues:";
  for (Eigen::Index l = 0; l < std::min<Eigen::Index>(10, m.components()); ++l) std::cout << " " << format_double(m.eigenvalues(l));
  std::cout << "\n";
}

int cmd_fit(const RunConfig& cfg, const std::string& out) {
  const Dataset ds = load_dataset(cfg);
  if (cfg.d > ds.size())
    fail(ErrorKind::Input, "d=" + std::to_string(cfg.d) + " exceeds the number of data points N=" + std::to_string(ds.size()));
  const ModelBundle bundle = fit_bundle(ds, cfg);
  save_model(out, bundle);
  print_fit_summary(bundle);
  std::cout << "wrote " << out << "\n";
  return 0;
}

std::string step_file(std::size_t k, const DatasetKind& kind) {
  char name[32];
  std::snprintf(name, sizeof name, "step_%03zu", k);
  return name + sample_extension(kind);
}

int cmd_traverse(const TraverseArgs& a) {
  const ModelBundle bundle = load_model(a.model);
  const KpcaModel& m = bundle.model;

  std::vector<LatentPoint> points;
  Manifest manifest;
  manifest.S = a.S.value_or(1);

  if (!a.replay.empty()) {
    if (a.component || !a.interpolate.empty()) fail(ErrorKind::Usage, "--replay cannot be combined with a path spec");
    const Manifest replay = manifest_from_json(json::parse(read_text_file(a.replay), nullptr, false));
    manifest.S = a.S.value_or(replay.S);
    manifest.mode = replay.mode;
    for (const auto& step : replay.steps) {
      check_latent(m, step.h_star);
      points.push_back(step.h_star);
    }
    if (points.empty()) fail(ErrorKind::Format, "manifest has no steps");
  } else {
    TraversalPath path;
    path.steps = a.steps;
    std::optional<Eigen::Index> base;
    if (!a.interpolate.empty()) {
      if (a.component) fail(ErrorKind::Usage, "choose either --component or --interpolate");
      if (a.interpolate.size() != 2) fail(ErrorKind::Usage, "--interpolate takes two indices i,j");
      path.mode = Interpolate{hidden_unit(m, a.interpolate[0]), hidden_unit(m, a.interpolate[1])};
    } else if (a.component) {
      base = a.base.value_or(0);
      path.start = hidden_unit(m, *base);
      path.mode = AlongComponent{*a.component - 1, a.from, a.to};
    } else {
      fail(ErrorKind::Usage, "a path needs --component, --interpolate or --replay");
    }
    points = traversal_points(m, path);
    manifest.mode = describe_path(path, base);
  }

  fs::create_directories(a.out);
  for (std::size_t k = 0; k < points.size(); ++k) {
    GeneratedSample sample;
    try {
      sample = preimage(m, points[k], manifest.S);
    } catch (const Error& e) {
      throw Error(e.kind(), "step " + std::to_string(k) + ": " + e.what());
    }
    const std::string file = step_file(k, bundle.kind);
    write_text_file(fs::path(a.out) / file, render_sample(sample.x_hat, bundle.kind));
    manifest.steps.push_back({points[k], file});
  }
  write_text_file(fs::path(a.out) / "manifest.json", dump(to_json(manifest)));
  std::cout << "wrote " << points.size() << " samples and manifest.json to " << a.out << "\n";
  return 0;
}

int cmd_novelty(const NoveltyArgs& a) {
  const ModelBundle bundle = load_model(a.model);
  NoveltyReport report;
  if (a.csv.empty()) {
    report = training_novelty_report(bundle.model, a.quantile);
  } else {
    const Dataset ds = load_csv(resolve_data_path(a.csv), {.has_labels = a.csv_labels, .has_header = a.csv_header});
    report = novelty_report(bundle.model, ds.X, a.quantile);
  }
  write_text_file(a.out, novelty_csv(report));
  std::cout << "threshold=" << format_double(report.threshold) << " flagged=" << report.flagged_count() << "/"
            << report.scores.size() << "\n";
  return 0;
}

int cmd_epochs(const EpochsArgs& a) {
  if (!a.labels.empty() && a.labels.size() != a.ecg.size()) fail(ErrorKind::Input, "ecg labels must match the number of records");
  std::vector<EcgRecord> records;
  for (std::size_t r = 0; r < a.ecg.size(); ++r)
    records.push_back({load_signal_text(resolve_data_path(a.ecg[r])), a.labels.empty() ? 0 : a.labels[r]});
  const Dataset ds = ecg_dataset(records, EcgConfig{});
  std::ostringstream out;
  write_csv(out, ds.X, ds.labels);
  write_text_file(a.out, out.str());
  std::cout << "wrote " << ds.size() << " epochs of " << ds.X.cols() << " samples to " << a.out << "\n";
  return 0;
}

int cmd_serve(const ServeArgs& a) {
  Service service;
  for (const auto& path : a.models) {
    const std::string id = service.registry().add(load_model(resolve_data_path(path)));
    std::cout << "registered " << path << " as " << id << "\n";
  }
  std::cout << "listening on http://" << a.host << ":" << a.port << "\n" << std::flush;
  run_server(service, {a.host, a.port, a.static_dir});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generative kernel PCA toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value configuration file; [fit], [traverse] and [novelty] sections");

  RunConfig fit_cfg;
  std::string fit_out = "model.gkpca";
  auto* fit = app.add_subcommand("fit", "Fit a model and write it to disk");
  fit->fallthrough();
  add_data_options(*fit, fit_cfg);
  fit->add_option("--kernel", fit_cfg.kernel, "gaussian or laplace")->check(CLI::IsMember({"gaussian", "rbf", "laplace"}));
  auto* bw = fit->add_option("--sigma2,--bandwidth", fit_cfg.bandwidth, "Kernel bandwidth (sigma^2 for gaussian)")->check(CLI::PositiveNumber);
  fit->add_option("--sigma", fit_cfg.bandwidth, "Kernel bandwidth (sigma for laplace)")->check(CLI::PositiveNumber)->excludes(bw);
  fit->add_option("--d", fit_cfg.d, "Number of components")->check(at_least_one);
  fit->add_option("--out", fit_out, "Model file");

  TraverseArgs trav;
  auto* traverse_cmd = app.add_subcommand("traverse", "Generate samples along a latent path");
  traverse_cmd->fallthrough();
  traverse_cmd->add_option("--model", trav.model, "Model file")->required();
  traverse_cmd->add_option("--component", trav.component, "Component to sweep (1-based)")->check(at_least_one);
  traverse_cmd->add_option("--from", trav.from, "Sweep start value");
  traverse_cmd->add_option("--to", trav.to, "Sweep end value");
  traverse_cmd->add_option("--base", trav.base, "Training point whose hidden unit starts the sweep");
  traverse_cmd->add_option("--interpolate", trav.interpolate, "Interpolate between hidden units i,j")->delimiter(',');
  traverse_cmd->add_option("--replay", trav.replay, "Replay a traversal manifest");
  traverse_cmd->add_option("--steps", trav.steps, "Number of steps")->check(CLI::Range(2L, 100000L));
  traverse_cmd->add_option("--S", trav.S, "Neighbours in the pre-image")->check(at_least_one);
  traverse_cmd->add_option("--out", trav.out, "Output directory");

  NoveltyArgs nov;
  auto* novelty_cmd = app.add_subcommand("novelty", "Score novelty and flag the top quantile");
  novelty_cmd->fallthrough();
  novelty_cmd->add_option("--model", nov.model, "Model file")->required();
  novelty_cmd->add_option("--quantile", nov.quantile, "Fraction flagged as novel")->check(open_unit_interval);
  novelty_cmd->add_option("--out", nov.out, "CSV report");
  novelty_cmd->add_option("--csv", nov.csv, "Score these points instead of the training set");
  novelty_cmd->add_flag("--csv-labels", nov.csv_labels, "Last CSV column holds labels");
  novelty_cmd->add_flag("--csv-header", nov.csv_header, "Skip the first CSV line");

  EpochsArgs ep;
  auto* epochs_cmd = app.add_subcommand("epochs", "Filter ECG records and cut beat-centred epochs");
  epochs_cmd->add_option("--ecg", ep.ecg, "ECG records")->required()->delimiter(',');
  epochs_cmd->add_option("--labels", ep.labels, "Label per record")->delimiter(',');
  epochs_cmd->add_option("--out", ep.out, "CSV output");

  ServeArgs srv;
  auto* serve_cmd = app.add_subcommand("serve", "Serve models over HTTP");
  serve_cmd->add_option("--host", srv.host, "Bind address");
  serve_cmd->add_option("--port", srv.port, "Port")->check(CLI::Range(1, 65535));
  serve_cmd->add_option("--static", srv.static_dir, "Directory served at /");
  serve_cmd->add_option("--model", srv.models, "Model files to preload");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error:usage: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*fit) return cmd_fit(fit_cfg, fit_out);
    if (*traverse_cmd) return cmd_traverse(trav);
    if (*novelty_cmd) return cmd_novelty(nov);
    if (*epochs_cmd) return cmd_epochs(ep);
    if (*serve_cmd) return cmd_serve(srv);
  } catch (const Error& e) {
    std::cerr << "error:" << to_string(e.kind()) << ": " << e.what() << "\n";
    return e.kind() == ErrorKind::Usage ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error:internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
