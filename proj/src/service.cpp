#include "lcurtain/service.hpp"

#include <ctime>
#include <future>
#include <sstream>

#include <httplib.h>

#include "lcurtain/graph_cache.hpp"

namespace lcurtain {

struct Service::Entry {
  std::string id;
  DeviceConfig config;
  std::shared_future<void> done;

  // Written by the builder before `done` becomes ready; read-only afterwards.
  std::shared_ptr<const ConstraintGraph> graph;
  GraphStats stats;
  std::string built_at;
  int failure_status = 0;
  Json failure;

  std::mutex model_mu;
  std::map<ModelKind, std::shared_ptr<const TransitionModel>> models;

  bool ready() const { return done.wait_for(std::chrono::seconds(0)) == std::future_status::ready; }

  std::shared_ptr<const TransitionModel> model(ModelKind kind) {
    std::lock_guard lock(model_mu);
    auto& m = models[kind];
    if (!m) m = std::make_shared<const TransitionModel>(make_model(*graph, kind));
    return m;
  }
};

namespace {

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ServiceResponse error(int status, const std::string& code, const std::string& message,
                      const Json& detail = Json::object()) {
  return {status, error_body(code, message, detail), {}};
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '/')) {
    if (!part.empty()) parts.push_back(part);
  }
  return parts;
}

Json parse_body(const std::string& body) {
  if (body.empty()) return Json::object();
  return Json::parse(body);
}

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const char* what) {
  if (!j.is_object()) throw InvalidArgument(std::string(what) + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) == allowed.end()) {
      throw InvalidArgument(std::string(what) + ": unknown field '" + key + "'");
    }
  }
}

std::uint64_t unsigned_field(const Json& j, const char* key, std::uint64_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw InvalidArgument(std::string("field '") + key + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

Json graph_summary(const std::string& id, const GraphStats& stats) {
  return Json{{"graph_id", id}, {"status", "ready"}, {"stats", to_json(stats)}};
}

}  // namespace

Json error_body(const std::string& code, const std::string& message, const Json& detail) {
  return Json{{"code", code}, {"message", message}, {"detail", detail}};
}

Service::Service(ServiceOptions options) : options_(std::move(options)) {}

Service::~Service() {
  std::lock_guard lock(mu_);
  for (auto& [_, e] : graphs_) {
    if (e->done.valid()) e->done.wait();
  }
}

std::string Service::register_graph(ConstraintGraph graph) {
  auto e = std::make_shared<Entry>();
  e->config = graph.config();
  e->id = config_hash_hex(e->config);
  e->stats = graph_stats(graph);
  e->graph = std::make_shared<const ConstraintGraph>(std::move(graph));
  e->built_at = utc_now();
  std::promise<void> p;
  p.set_value();
  e->done = p.get_future().share();
  std::lock_guard lock(mu_);
  graphs_.insert_or_assign(e->id, e);
  return e->id;
}

std::shared_ptr<Service::Entry> Service::find(const std::string& id) {
  std::lock_guard lock(mu_);
  auto it = graphs_.find(id);
  return it == graphs_.end() ? nullptr : it->second;
}

ServiceResponse Service::handle(const std::string& method, const std::string& path, const std::string& body) {
  const auto parts = split_path(path);
  try {
    if (parts.size() >= 2 && parts[0] == "api") {
      if (method == "GET" && parts.size() == 2 && parts[1] == "health") {
        return {200, Json{{"status", "ok"}, {"version", LCURTAIN_VERSION}}, {}};
      }
      if (method == "GET" && parts.size() == 2 && parts[1] == "defaults") {
        return {200, to_json(default_config()), {}};
      }
      if (parts[1] == "graphs") {
        if (method == "POST" && parts.size() == 2) return create_graph(body);
        if (method == "GET" && parts.size() == 3) return get_graph(parts[2]);
        if (method == "POST" && parts.size() == 4 && parts[3] == "certify") return certify(parts[2], body);
        if (method == "POST" && parts.size() == 4 && parts[3] == "sample") return sample(parts[2], body);
      }
    }
    return error(404, "not_found", "no route for " + method + " " + path);
  } catch (const Json::parse_error& e) {
    return error(400, "bad_json", "request body is not valid JSON", Json{{"reason", e.what()}});
  } catch (const Json::exception& e) {
    return error(400, "invalid_argument", e.what());
  } catch (const InvalidArgument& e) {
    return error(400, "invalid_argument", e.what());
  } catch (const Mismatch& e) {
    return error(400, "mismatch", e.what());
  } catch (const ResourceCap& e) {
    return error(400, "resource_cap", e.what());
  } catch (const InfeasibleGraph& e) {
    return error(422, "infeasible_graph", e.what());
  } catch (const std::exception& e) {
    return error(500, "internal", e.what());
  }
}

ServiceResponse Service::create_graph(const std::string& body) {
  const DeviceConfig config = config_from_json(parse_body(body));
  const std::string id = config_hash_hex(config);

  std::shared_ptr<Entry> entry;
  bool created = false;
  {
    std::lock_guard lock(mu_);
    auto& slot = graphs_[id];
    if (!slot) {
      slot = std::make_shared<Entry>();
      slot->id = id;
      slot->config = config;
      auto e = slot;
      const auto cache_dir = options_.cache_dir;
      // One in-flight build per config; later requests share the future.
      slot->done = std::async(std::launch::async, [e, cache_dir] {
                     try {
                       ConstraintGraph g = cache_dir.empty() ? build_graph(e->config)
                                                             : load_or_build(e->config, cache_dir / (e->id + ".lcg"));
                       e->stats = graph_stats(g);
                       e->graph = std::make_shared<const ConstraintGraph>(std::move(g));
                       e->built_at = utc_now();
                     } catch (const InfeasibleGraph& ex) {
                       e->failure_status = 422;
                       e->failure = error_body("infeasible_graph", ex.what());
                     } catch (const std::exception& ex) {
                       e->failure_status = 500;
                       e->failure = error_body("internal", ex.what());
                     }
                   }).share();
      created = true;
    }
    entry = slot;
  }

  if (entry->done.wait_for(options_.async_threshold) != std::future_status::ready) {
    Json b{{"graph_id", id}, {"status", "building"}, {"poll", "/api/graphs/" + id}};
    return {202, b, {{"Location", "/api/graphs/" + id}}};
  }
  if (entry->failure_status) return {entry->failure_status, entry->failure, {}};
  return {created ? 201 : 200, graph_summary(id, entry->stats), {{"Location", "/api/graphs/" + id}}};
}

ServiceResponse Service::get_graph(const std::string& id) {
  auto e = find(id);
  if (!e) return error(404, "not_found", "unknown graph '" + id + "'");
  if (!e->ready()) return {202, Json{{"graph_id", id}, {"status", "building"}, {"poll", "/api/graphs/" + id}}, {}};
  if (e->failure_status) return {e->failure_status, e->failure, {}};
  Json b = graph_summary(id, e->stats);
  b["config"] = to_json(e->config);
  b["built_at"] = e->built_at;
  return {200, b, {}};
}

ServiceResponse Service::certify(const std::string& id, const std::string& body) {
  auto e = find(id);
  if (!e) return error(404, "not_found", "unknown graph '" + id + "'");
  if (!e->ready()) return error(409, "graph_building", "graph '" + id + "' is still being built");
  if (e->failure_status) return {e->failure_status, e->failure, {}};

  const Json req = parse_body(body);
  check_keys(req, {"shape", "shapes", "model", "mc", "n_max"}, "certify request");
  std::vector<Shape> shapes;
  if (req.contains("shape")) shapes.push_back(shape_from_json(req.at("shape")));
  if (req.contains("shapes")) {
    if (!req.at("shapes").is_array()) throw InvalidArgument("'shapes' must be an array");
    for (const auto& s : req.at("shapes")) shapes.push_back(shape_from_json(s));
  }
  const ModelKind kind = parse_model_kind(req.value("model", std::string("area")));
  const std::uint64_t n_max = unsigned_field(req, "n_max", 10);
  if (n_max < 1 || n_max > 1000) throw InvalidArgument("'n_max' must lie in [1, 1000]");

  const auto model = e->model(kind);
  const auto profile = raycast_profile(shapes, e->config);
  const auto dp = dp_detection_probability(*e->graph, *model, profile);
  Json out{{"graph_id", id}, {"dp", to_json(dp)}};
  if (req.contains("mc") && !req.at("mc").is_null()) {
    const Json& mc = req.at("mc");
    check_keys(mc, {"samples", "seed"}, "mc");
    const std::uint64_t n = unsigned_field(mc, "samples", 10000);
    if (n < 1 || n > options_.max_mc_samples) {
      throw ResourceCap("mc samples must lie in [1, " + std::to_string(options_.max_mc_samples) + "]");
    }
    const std::uint64_t seed = unsigned_field(mc, "seed", 0);
    out["mc"] = to_json(monte_carlo_probability(*e->graph, *model, profile, n, seed, options_.threads));
  }
  Json curve = Json::array();
  for (int n = 1; n <= static_cast<int>(n_max); ++n) {
    curve.push_back({{"n", n}, {"probability", multi_curtain_probability(dp.probability, n)}});
  }
  out["curve"] = curve;
  return {200, out, {}};
}

ServiceResponse Service::sample(const std::string& id, const std::string& body) {
  auto e = find(id);
  if (!e) return error(404, "not_found", "unknown graph '" + id + "'");
  if (!e->ready()) return error(409, "graph_building", "graph '" + id + "' is still being built");
  if (e->failure_status) return {e->failure_status, e->failure, {}};

  const Json req = parse_body(body);
  check_keys(req, {"model", "count", "seed"}, "sample request");
  const ModelKind kind = parse_model_kind(req.value("model", std::string("area")));
  const std::uint64_t count = unsigned_field(req, "count", 1);
  if (count < 1 || count > static_cast<std::uint64_t>(options_.max_sample_count)) {
    throw ResourceCap("count must lie in [1, " + std::to_string(options_.max_sample_count) + "]");
  }
  const std::uint64_t seed = unsigned_field(req, "seed", 0);
  const auto model = e->model(kind);
  Json curtains = Json::array();
  for (std::uint64_t i = 0; i < count; ++i) {
    Rng rng = Rng::stream(seed, i);
    curtains.push_back(to_json(sample_curtain(*e->graph, *model, rng), e->config));
  }
  return {200, Json{{"graph_id", id}, {"model", to_string(kind)}, {"seed", seed}, {"curtains", curtains}}, {}};
}

struct HttpServer::Impl {
  explicit Impl(Service& s) : service(s) {}
  Service& service;
  httplib::Server server;
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    const auto r = impl_->service.handle(req.method, req.path, req.body);
    res.status = r.status;
    for (const auto& [k, v] : r.headers) res.set_header(k, v);
    res.set_content(r.body.dump(), "application/json");
  };
  auto& s = impl_->server;
  s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                         {"Access-Control-Allow-Headers", "Content-Type"},
                         {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  s.Get(R"(.*)", handler);
  s.Post(R"(.*)", handler);
  s.Put(R"(.*)", handler);
  s.Delete(R"(.*)", handler);
  s.Patch(R"(.*)", handler);
  s.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  // SO_REUSEPORT would let a second server share a busy port.
  s.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  auto& s = impl_->server;
  if (port == 0) return s.bind_to_any_port(host);
  return s.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace lcurtain
