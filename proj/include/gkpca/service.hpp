#pragma once

// JSON API over fitted models. `Service::handle` is transport-free so it can
// be exercised directly; http_server.hpp binds it to cpp-httplib.
//
//   GET  /models                          list registered models
//   POST /models                          {"model_path": ...}, {"config": {...}} or a multipart
//                                         "model" file holding a serialized model -> 201
//   GET  /models/{id}                     metadata and eigenvalues
//   GET  /models/{id}/latent?cx=&cy=      hidden units on two components + novelty overlay
//   GET  /models/{id}/hidden/{i}          full hidden unit i
//   GET  /models/{id}/training/{i}        training point i (for base-point overlays)
//   POST /models/{id}/generate            {"h_star": [...], "S": n}
//   POST /models/{id}/traverse            {"mode": "component"|"interpolate", ..., "steps", "S"}

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gkpca/artifacts.hpp"
#include "gkpca/error.hpp"
#include "gkpca/generator.hpp"
#include "gkpca/model_io.hpp"
#include "gkpca/novelty.hpp"
#include "gkpca/run_config.hpp"

namespace gkpca {

struct HttpRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
  std::map<std::string, std::string> files;  // multipart uploads by field name
};

struct HttpResponse {
  int status = 200;
  json body = json::object();
};

inline int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Degenerate: return 409;
    case ErrorKind::Numeric: return 422;
    default: return 400;
  }
}

/// Registered models. Entries are immutable once added; the novelty overlay
/// is computed on first use and then shared.
class ModelRegistry {
 public:
  class Entry {
   public:
    Entry(std::string id, ModelBundle bundle) : id_(std::move(id)), bundle_(std::move(bundle)) {}

    const std::string& id() const { return id_; }
    const ModelBundle& bundle() const { return bundle_; }
    const KpcaModel& model() const { return bundle_.model; }

    const NoveltyReport& novelty() const {
      std::call_once(novelty_once_, [this] { novelty_ = training_novelty_report(bundle_.model, 0.2); });
      return novelty_;
    }

   private:
    std::string id_;
    ModelBundle bundle_;
    mutable std::once_flag novelty_once_;
    mutable NoveltyReport novelty_;
  };

  std::string add(ModelBundle bundle) {
    std::unique_lock lock(mutex_);
    std::string id = "m" + std::to_string(++counter_);
    entries_.emplace(id, std::make_shared<const Entry>(id, std::move(bundle)));
    return id;
  }

  std::shared_ptr<const Entry> find(const std::string& id) const {
    std::shared_lock lock(mutex_);
    const auto it = entries_.find(id);
    return it == entries_.end() ? nullptr : it->second;
  }

  std::vector<std::shared_ptr<const Entry>> all() const {
    std::shared_lock lock(mutex_);
    std::vector<std::shared_ptr<const Entry>> out;
    for (const auto& [id, e] : entries_) out.push_back(e);
    return out;
  }

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<const Entry>> entries_;
  std::uint64_t counter_ = 0;
};

class Service {
 public:
  ModelRegistry& registry() { return registry_; }
  const ModelRegistry& registry() const { return registry_; }

  HttpResponse handle(const HttpRequest& req) {
    try {
      return route(req);
    } catch (const Error& e) {
      return error(http_status(e.kind()), std::string(to_string(e.kind())), e.what());
    } catch (const json::exception& e) {
      return error(400, "input", std::string("malformed request: ") + e.what());
    }
  }

 private:
  static HttpResponse error(int status, const std::string& category, const std::string& message) {
    return {status, {{"error", {{"category", category}, {"message", message}}}}};
  }

  static json model_summary(const ModelRegistry::Entry& e) {
    const KpcaModel& m = e.model();
    return {{"id", e.id()},
            {"n", m.n()},
            {"d", m.components()},
            {"input_dim", m.input_dim()},
            {"kernel", {{"family", to_string(m.kernel.family)}, {"bandwidth", m.kernel.bandwidth}}},
            {"eigenvalues", to_json(m.eigenvalues)},
            {"render_hint", render_hint(e.bundle().kind)},
            {"has_labels", e.bundle().labels.has_value()}};
  }

  static json parse_body(const std::string& body) {
    if (body.empty()) return json::object();
    try {
      return json::parse(body);
    } catch (const json::parse_error& e) {
      fail(ErrorKind::Input, std::string("request body is not valid JSON: ") + e.what());
    }
  }

  static long int_field(const json& j, const char* key, std::optional<long> fallback = std::nullopt) {
    if (!j.contains(key)) {
      if (fallback) return *fallback;
      fail(ErrorKind::Input, std::string("missing field '") + key + "'");
    }
    if (!j[key].is_number_integer()) fail(ErrorKind::Input, std::string("field '") + key + "' must be an integer");
    return j[key].get<long>();
  }

  static double number_field(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number()) fail(ErrorKind::Input, std::string("field '") + key + "' must be a number");
    return j[key].get<double>();
  }

  static Eigen::Index parse_index(const std::string& text, Eigen::Index n, const char* what) {
    try {
      std::size_t used = 0;
      const long v = std::stol(text, &used);
      if (used == text.size() && v >= 0 && v < n) return v;
    } catch (const std::exception&) {
    }
    fail(ErrorKind::Index, std::string(what) + " '" + text + "' outside [0, " + std::to_string(n) + ")");
  }

  HttpResponse route(const HttpRequest& req) {
    static const std::regex model_re(R"(^/models/([A-Za-z0-9_-]+)(/([a-z]+)(/([^/]+))?)?/?$)");

    if (req.path == "/models" || req.path == "/models/") {
      if (req.method == "GET") {
        json list = json::array();
        for (const auto& e : registry_.all()) list.push_back(model_summary(*e));
        return {200, {{"models", std::move(list)}}};
      }
      if (req.method == "POST") {
        if (const auto it = req.files.find("model"); it != req.files.end()) {
          const std::vector<std::uint8_t> bytes(it->second.begin(), it->second.end());
          const std::string id = registry_.add(deserialize_model(bytes));
          return {201, model_summary(*registry_.find(id))};
        }
        return create_model(parse_body(req.body));
      }
      return error(405, "input", "method not allowed");
    }

    std::smatch m;
    if (!std::regex_match(req.path, m, model_re)) return error(404, "not_found", "no route for " + req.path);
    const auto entry = registry_.find(m[1].str());
    if (!entry) return error(404, "not_found", "unknown model id '" + m[1].str() + "'");
    const std::string action = m[3].str();
    const std::string arg = m[5].str();

    if (action.empty() && arg.empty() && req.method == "GET") return {200, model_summary(*entry)};
    if (action == "latent" && arg.empty() && req.method == "GET") return latent(*entry, req.query);
    if (action == "hidden" && !arg.empty() && req.method == "GET") {
      const Eigen::Index i = parse_index(arg, entry->model().n(), "hidden unit index");
      return {200, {{"i", i}, {"h", to_json(hidden_unit(entry->model(), i).coords)}}};
    }
    if (action == "training" && !arg.empty() && req.method == "GET") {
      const Eigen::Index i = parse_index(arg, entry->model().n(), "training index");
      json out = {{"i", i}, {"x", to_json(entry->model().X.row(i).transpose())}, {"render_hint", render_hint(entry->bundle().kind)}};
      if (entry->bundle().labels) out["label"] = (*entry->bundle().labels)[static_cast<std::size_t>(i)];
      return {200, out};
    }
    if (action == "generate" && arg.empty() && req.method == "POST") return generate(*entry, parse_body(req.body));
    if (action == "traverse" && arg.empty() && req.method == "POST") return traverse_route(*entry, parse_body(req.body));
    return error(404, "not_found", "no route for " + req.method + " " + req.path);
  }

  HttpResponse create_model(const json& body) {
    if (!body.is_object()) fail(ErrorKind::Input, "request body must be a JSON object");
    ModelBundle bundle;
    if (body.contains("model_path")) {
      if (!body["model_path"].is_string()) fail(ErrorKind::Input, "model_path must be a string");
      bundle = load_model(resolve_data_path(body["model_path"].get<std::string>()));
    } else {
      const RunConfig cfg = run_config_from_json(body.contains("config") ? body["config"] : body);
      Dataset ds = load_dataset(cfg);
      if (cfg.d > ds.size())
        fail(ErrorKind::Input, "d=" + std::to_string(cfg.d) + " exceeds the number of data points N=" + std::to_string(ds.size()));
      bundle = fit_bundle(std::move(ds), cfg);
    }
    const std::string id = registry_.add(std::move(bundle));
    return {201, model_summary(*registry_.find(id))};
  }

  static HttpResponse latent(const ModelRegistry::Entry& e, const std::map<std::string, std::string>& query) {
    const KpcaModel& m = e.model();
    const auto component = [&](const char* key, long fallback) -> Eigen::Index {
      const auto it = query.find(key);
      long v = fallback;
      if (it != query.end()) {
        try {
          std::size_t used = 0;
          v = std::stol(it->second, &used);
          if (used != it->second.size()) v = 0;
        } catch (const std::exception&) {
          v = 0;
        }
      }
      if (v < 1 || v > m.components())
        fail(ErrorKind::Input, std::string(key) + " must lie in [1, " + std::to_string(m.components()) + "]");
      return v - 1;
    };
    const Eigen::Index cx = component("cx", 1);
    const Eigen::Index cy = component("cy", m.components() >= 2 ? 2 : 1);
    const NoveltyReport& nov = e.novelty();

    json points = json::array();
    for (Eigen::Index i = 0; i < m.n(); ++i) {
      json p = {{"i", i},
                {"x", m.hidden(cx, i)},
                {"y", m.hidden(cy, i)},
                {"novelty_score", nov.scores[static_cast<std::size_t>(i)]},
                {"flagged", static_cast<bool>(nov.flags[static_cast<std::size_t>(i)])}};
      if (e.bundle().labels) p["label"] = (*e.bundle().labels)[static_cast<std::size_t>(i)];
      points.push_back(std::move(p));
    }
    return {200,
            {{"cx", cx + 1},
             {"cy", cy + 1},
             {"novelty", {{"quantile", nov.quantile}, {"threshold", nov.threshold}, {"flagged", nov.flagged_count()}}},
             {"points", std::move(points)}}};
  }

  static HttpResponse generate(const ModelRegistry::Entry& e, const json& body) {
    if (!body.is_object() || !body.contains("h_star")) fail(ErrorKind::Input, "generate needs h_star");
    const LatentPoint h{vector_from_json(body["h_star"], "h_star")};
    const long S = int_field(body, "S");
    return {200, to_json(preimage(e.model(), h, S), e.bundle().kind)};
  }

  static HttpResponse traverse_route(const ModelRegistry::Entry& e, const json& body) {
    const KpcaModel& m = e.model();
    if (!body.is_object()) fail(ErrorKind::Input, "request body must be a JSON object");
    const long steps = int_field(body, "steps");
    const long S = int_field(body, "S");
    if (steps < 2) fail(ErrorKind::Input, "steps must be at least 2");

    const auto latent_arg = [&](const char* index_key, const char* vector_key) -> LatentPoint {
      if (body.contains(vector_key)) return {vector_from_json(body[vector_key], vector_key)};
      const long i = int_field(body, index_key, 0L);
      return hidden_unit(m, i);
    };

    TraversalPath path;
    path.steps = steps;
    const std::string mode = body.value("mode", std::string("component"));
    std::optional<Eigen::Index> base;
    if (mode == "component") {
      path.start = latent_arg("base", "start");
      if (!body.contains("start")) base = int_field(body, "base", 0L);
      path.mode = AlongComponent{int_field(body, "component") - 1, number_field(body, "from"), number_field(body, "to")};
    } else if (mode == "interpolate") {
      path.mode = Interpolate{latent_arg("a", "h_a"), latent_arg("b", "h_b")};
    } else {
      fail(ErrorKind::Input, "mode must be 'component' or 'interpolate'");
    }

    const auto samples = traverse(m, path, S);
    json out = json::array();
    for (std::size_t k = 0; k < samples.size(); ++k) {
      json s = to_json(samples[k], e.bundle().kind);
      s["step"] = k;
      out.push_back(std::move(s));
    }
    return {200, {{"S", S}, {"mode", describe_path(path, base)}, {"steps", std::move(out)}}};
  }

  ModelRegistry registry_;
};

}  // namespace gkpca
