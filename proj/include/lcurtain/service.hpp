#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "lcurtain/json_io.hpp"

namespace lcurtain {

struct ServiceOptions {
  /// Builds running longer than this answer 202 with a polling URL.
  std::chrono::milliseconds async_threshold{2000};
  /// Directory for binary graph caches; empty disables caching.
  std::filesystem::path cache_dir;
  int threads = 1;  ///< Monte Carlo workers per request
  std::uint64_t max_mc_samples = 10'000'000;
  int max_sample_count = 1000;
};

struct ServiceResponse {
  int status = 200;
  Json body;
  std::map<std::string, std::string> headers;
};

/// Graph registry and request handlers, independent of the transport.
/// Thread-safe; registered graphs are immutable.
class Service {
 public:
  explicit Service(ServiceOptions options = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Registers an already built graph; returns its id (the config hash).
  std::string register_graph(ConstraintGraph graph);

  ServiceResponse handle(const std::string& method, const std::string& path, const std::string& body);

 private:
  struct Entry;
  ServiceResponse create_graph(const std::string& body);
  ServiceResponse get_graph(const std::string& id);
  ServiceResponse certify(const std::string& id, const std::string& body);
  ServiceResponse sample(const std::string& id, const std::string& body);
  std::shared_ptr<Entry> find(const std::string& id);

  ServiceOptions options_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Entry>> graphs_;
};

Json error_body(const std::string& code, const std::string& message, const Json& detail = Json::object());

/// HTTP front end for a Service.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();

  /// Binds host:port (port 0 picks a free port). Returns the bound port or -1.
  int bind(const std::string& host, int port);
  /// Blocks until stop() is called.
  bool listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace lcurtain
