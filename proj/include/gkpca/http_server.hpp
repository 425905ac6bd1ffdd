#pragma once

// Binds gkpca::Service to a cpp-httplib server.

#include <filesystem>
#include <string>

#include "gkpca/service.hpp"

#include <httplib.h>

namespace gkpca {

inline constexpr int kDefaultPort = 8642;

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = kDefaultPort;
  std::string static_dir;  // served at / when non-empty
};

inline void add_cors_headers(httplib::Response& res) {
  res.set_header("Access-Control-Allow-Origin", "*");
  res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
  res.set_header("Access-Control-Allow-Headers", "Content-Type");
}

inline void bind_service(httplib::Server& server, Service& service) {
  const auto forward = [&service](const httplib::Request& req, httplib::Response& res) {
    HttpRequest r{req.method, req.path, {}, req.body};
    for (const auto& [key, value] : req.params) r.query.emplace(key, value);
    for (const auto& [key, file] : req.files) r.files.emplace(key, file.content);
    if (req.is_multipart_form_data()) r.body.clear();
    const HttpResponse out = service.handle(r);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json");
    add_cors_headers(res);
  };
  server.Get(R"(/models.*)", forward);
  server.Post(R"(/models.*)", forward);
  server.Options(R"(/models.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
    add_cors_headers(res);
  });
}

inline void configure_server(httplib::Server& server, Service& service, const ServerOptions& opt) {
  bind_service(server, service);
  if (!opt.static_dir.empty()) {
    if (!std::filesystem::is_directory(opt.static_dir)) fail(ErrorKind::Io, "static directory not found: " + opt.static_dir);
    server.set_mount_point("/", opt.static_dir);
  }
}

/// Blocks until the server stops.
inline void run_server(Service& service, const ServerOptions& opt) {
  httplib::Server server;
  configure_server(server, service, opt);
  if (!server.bind_to_port(opt.host, opt.port)) fail(ErrorKind::Io, "cannot bind " + opt.host + ":" + std::to_string(opt.port));
  server.listen_after_bind();
}

}  // namespace gkpca
