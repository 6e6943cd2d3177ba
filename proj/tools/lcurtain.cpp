// lcurtain: command-line driver for graph building, certification, sweeps,
// multi-curtain curves, tracking episodes, and the HTTP service.

#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "lcurtain/certify.hpp"
#include "lcurtain/graph_cache.hpp"
#include "lcurtain/json_io.hpp"
#include "lcurtain/service.hpp"
#include "lcurtain/tracking.hpp"

using namespace lcurtain;

namespace {

constexpr int kExitOk = 0, kExitIo = 1, kExitInfeasible = 2, kExitCap = 3;

struct Manifest {
  std::string command;
  std::string config_hash;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  Json json() const {
    Json j{{"command", command},
           {"config_hash", config_hash},
           {"seed", seed ? Json(*seed) : Json(nullptr)},
           {"inputs", inputs},
           {"outputs", outputs},
           {"tool_version", LCURTAIN_VERSION},
           {"wall_clock_s", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()}};
    return j;
  }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out || !(out << text)) throw InvalidArgument("cannot write " + path);
}

/// JSON goes to `path` if given, else stdout.
void emit(const std::string& path, const Json& j) {
  if (path.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    write_text(path, j.dump(2) + "\n");
  }
}

void write_manifest(const std::string& artifact, const Manifest& m) {
  if (!artifact.empty()) write_text(artifact + ".manifest.json", m.json().dump(2) + "\n");
}

/// A graph cache file, or a device config JSON to build from.
ConstraintGraph open_graph(const std::string& path) {
  if (is_graph_cache(path)) {
    auto g = load_graph(path);
    if (!g) throw InvalidArgument(path + ": unreadable or outdated graph cache");
    return std::move(*g);
  }
  return build_graph(config_from_json(read_json_file(path)));
}

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidArgument(std::string("bad number '") + item + "' in " + what);
    }
  }
  if (out.empty()) throw InvalidArgument(std::string(what) + " is empty");
  return out;
}

Vec2 parse_point(const std::string& text) {
  const auto v = parse_list(text, "--center");
  if (v.size() != 2) throw InvalidArgument("--center expects x,z");
  return {v[0], v[1]};
}

std::atomic<HttpServer*> g_server{nullptr};

void on_signal(int) {
  if (auto* s = g_server.load()) s->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Programmable light curtain certification and simulation", "lcurtain"};
  app.require_subcommand(1);
  app.set_version_flag("--version", LCURTAIN_VERSION);
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  app.add_option("--threads", threads, "Worker threads (default: available cores)")->check(CLI::PositiveNumber);

  // build-graph
  std::string config_path, out_path;
  auto* build = app.add_subcommand("build-graph", "Build and prune the constraint graph; print its stats as JSON");
  build->add_option("--config", config_path, "Device config JSON")->required();
  build->add_option("--out", out_path, "Binary graph cache to write")->required();
  std::string stats_path;
  build->add_option("--stats", stats_path, "Write stats JSON here instead of stdout");

  // certify
  std::string graph_path, scene_path, model_name = "area", method_name = "dp", report_path;
  std::uint64_t samples = 100000, seed = 0;
  int frame = 0;
  double path_cap = kDefaultPathCap;
  auto* cert = app.add_subcommand("certify", "Detection probability of the scene's objects (frame --frame)");
  cert->add_option("--graph", graph_path, "Graph cache or device config JSON")->required();
  cert->add_option("--scene", scene_path, "Scene JSON")->required();
  cert->add_option("--model", model_name, "Transition model")->check(CLI::IsMember({"uniform", "linear", "area"}));
  cert->add_option("--method", method_name, "Estimator")->check(CLI::IsMember({"dp", "mc", "brute"}));
  cert->add_option("--samples", samples, "Monte Carlo sample count")->check(CLI::PositiveNumber);
  cert->add_option("--seed", seed, "Monte Carlo seed");
  cert->add_option("--frame", frame, "Scene frame to certify (0-based)");
  cert->add_option("--path-cap", path_cap, "Brute-force path cap");
  cert->add_option("--out", report_path, "Write the report here instead of stdout");
  std::string csv_path;
  cert->add_option("--csv", csv_path, "Append a runtime_s,estimate,ci_lo,ci_hi row to this CSV");

  // sweep
  std::string shape_kind = "box", areas_text, orients_text, center_text = "0,10";
  double aspect = 1.0;
  auto* sweep = app.add_subcommand(
      "sweep", "Mean DP probability vs object area.\nCSV columns: area,mean_p,orientations");
  sweep->add_option("--graph", graph_path, "Graph cache or device config JSON")->required();
  sweep->add_option("--shape", shape_kind, "Shape family")->check(CLI::IsMember({"box"}));
  sweep->add_option("--areas", areas_text, "Comma-separated areas in m^2")->required();
  sweep->add_option("--orients", orients_text, "Comma-separated yaw angles in degrees")->required();
  sweep->add_option("--center", center_text, "Box center x,z in meters");
  sweep->add_option("--aspect", aspect, "width / depth")->check(CLI::PositiveNumber);
  sweep->add_option("--model", model_name, "Transition model")->check(CLI::IsMember({"uniform", "linear", "area"}));
  sweep->add_option("--out", out_path, "Write CSV here instead of stdout");

  // multi
  std::optional<double> p_value;
  std::string from_report;
  int max_n = 10;
  std::optional<double> target;
  auto* multi = app.add_subcommand(
      "multi",
      "Detection probability of n independent curtains.\nCSV columns: n,probability. With --target the "
      "minimal n is printed to stderr as 'curtains_needed,<n>'");
  auto* p_opt = multi->add_option("--p", p_value, "Single-curtain probability");
  auto* r_opt = multi->add_option("--from-report", from_report, "Take p from a DetectionReport JSON");
  p_opt->excludes(r_opt);
  multi->add_option("--max-n", max_n, "Largest n")->check(CLI::PositiveNumber);
  multi->add_option("--target", target, "Target probability for curtains_needed");
  multi->add_option("--out", out_path, "Write CSV here instead of stdout");

  // track
  std::string policy_name = "handcrafted+random", trace_path;
  int horizon = 50, k_random = 2;
  double delta_near = 0.3, delta_far = 0.3;
  auto* track = app.add_subcommand("track", "Closed-loop safety-envelope tracking; summary metrics JSON on stdout");
  track->add_option("--graph", graph_path, "Graph cache or device config JSON")->required();
  track->add_option("--scene", scene_path, "Scene JSON")->required();
  track->add_option("--policy", policy_name, "handcrafted | handcrafted+random | random_only");
  track->add_option("--horizon", horizon, "Frames to simulate")->check(CLI::PositiveNumber);
  track->add_option("--seed", seed, "Random-curtain seed");
  track->add_option("--out", trace_path, "JSON-lines trace")->required();
  track->add_option("--model", model_name, "Transition model")->check(CLI::IsMember({"uniform", "linear", "area"}));
  track->add_option("--delta-near", delta_near, "Step towards the sensor on detection (m)");
  track->add_option("--delta-far", delta_far, "Step away from the sensor otherwise (m)");
  track->add_option("--random-curtains", k_random, "Random curtains per frame");

  // serve
  std::string bind_addr = "127.0.0.1:8080", cache_dir;
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  serve->add_option("--graph", graph_path, "Graph cache or device config JSON to preload");
  serve->add_option("--bind", bind_addr, "host:port");
  serve->add_option("--cache-dir", cache_dir, "Directory for graph caches");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitIo;
  }

  Manifest manifest;
  try {
    if (*build) {
      manifest.command = "build-graph";
      manifest.inputs = {config_path};
      manifest.outputs = {out_path};
      const DeviceConfig config = config_from_json(read_json_file(config_path));
      manifest.config_hash = config_hash_hex(config);
      if (config.omega_max == 0.0) {
        std::cerr << "warning: omega_max = 0 admits only curtains with one constant laser angle\n";
      }
      if (config.alpha_max == 0.0) {
        std::cerr << "warning: alpha_max = 0 admits only curtains with constant angular velocity\n";
      }
      const auto g = build_graph(config);
      save_graph(g, out_path);
      Json j = to_json(graph_stats(g));
      j["config_hash"] = manifest.config_hash;
      if (!stats_path.empty()) manifest.outputs.push_back(stats_path);
      j["manifest"] = manifest.json();
      emit(stats_path, j);
      return kExitOk;
    }

    if (*cert) {
      manifest.command = "certify";
      manifest.inputs = {graph_path, scene_path};
      const auto g = open_graph(graph_path);
      manifest.config_hash = config_hash_hex(g.config());
      const Scene scene = scene_from_json(read_json_file(scene_path));
      const auto start = std::chrono::steady_clock::now();
      const auto shapes = scene.shapes_at(frame);
      const auto profile = raycast_profile(shapes, g.config());
      const auto model = make_model(g, parse_model_kind(model_name));
      DetectionReport report;
      switch (parse_method(method_name)) {
        case Method::dp: report = dp_detection_probability(g, model, profile); break;
        case Method::brute_force: report = brute_force_probability(g, model, profile, path_cap); break;
        case Method::monte_carlo:
          report = monte_carlo_probability(g, model, profile, samples, seed, threads);
          manifest.seed = seed;
          break;
      }
      Json j = to_json(report);
      j["total_duration_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (!report_path.empty()) manifest.outputs.push_back(report_path);
      if (!csv_path.empty()) {
        manifest.outputs.push_back(csv_path);
        const bool fresh = !std::filesystem::exists(csv_path);
        std::string rows = detection_csv(std::span<const DetectionReport>(&report, 1));
        if (!fresh) rows = rows.substr(rows.find('\n') + 1);
        std::ofstream out(csv_path, std::ios::app);
        if (!out || !(out << rows)) throw InvalidArgument("cannot write " + csv_path);
        write_manifest(csv_path, manifest);
      }
      j["manifest"] = manifest.json();
      emit(report_path, j);
      return kExitOk;
    }

    if (*sweep) {
      manifest.command = "sweep";
      manifest.inputs = {graph_path};
      const auto g = open_graph(graph_path);
      manifest.config_hash = config_hash_hex(g.config());
      const auto areas = parse_list(areas_text, "--areas");
      auto yaws = parse_list(orients_text, "--orients");
      for (auto& y : yaws) y = deg_to_rad(y);
      const auto model = make_model(g, parse_model_kind(model_name));
      const auto curve = area_sweep(g, model, parse_point(center_text), aspect, areas, yaws);
      const std::string csv = sweep_csv(curve);
      if (out_path.empty()) {
        std::cout << csv;
      } else {
        manifest.outputs = {out_path};
        write_text(out_path, csv);
        write_manifest(out_path, manifest);
      }
      return kExitOk;
    }

    if (*multi) {
      manifest.command = "multi";
      double p = 0.0;
      if (!from_report.empty()) {
        manifest.inputs = {from_report};
        const Json r = read_json_file(from_report);
        if (!r.contains("probability") || !r.at("probability").is_number()) {
          throw InvalidArgument(from_report + ": no numeric 'probability'");
        }
        p = r.at("probability").get<double>();
        manifest.config_hash = r.value("config_hash", "");
      } else if (p_value) {
        p = *p_value;
      } else {
        throw InvalidArgument("multi needs --p or --from-report");
      }
      const std::string csv = multi_curve_csv(p, max_n);
      if (out_path.empty()) {
        std::cout << csv;
      } else {
        manifest.outputs = {out_path};
        write_text(out_path, csv);
        write_manifest(out_path, manifest);
      }
      if (target) std::cerr << "curtains_needed," << curtains_needed(p, *target) << '\n';
      return kExitOk;
    }

    if (*track) {
      manifest.command = "track";
      manifest.inputs = {graph_path, scene_path};
      manifest.outputs = {trace_path};
      manifest.seed = seed;
      const auto g = open_graph(graph_path);
      manifest.config_hash = config_hash_hex(g.config());
      const Scene scene = scene_from_json(read_json_file(scene_path));
      const auto model = make_model(g, parse_model_kind(model_name));
      EpisodeOptions opts;
      opts.policy = parse_policy(policy_name);
      opts.horizon = horizon;
      opts.seed = seed;
      opts.params = {delta_near, delta_far, k_random};
      const auto result = run_episode(g, model, scene, opts);

      std::ofstream trace(trace_path);
      if (!trace) throw InvalidArgument("cannot write " + trace_path);
      for (const auto& f : result.frames) {
        Json curtains = Json::array();
        for (const auto& c : f.curtains) curtains.push_back(to_json(c, g.config()));
        Json rec{{"frame", f.frame},       {"curtains", curtains}, {"returns", f.returns},
                 {"estimate", f.estimate}, {"gt", f.gt},           {"metrics", to_json(f.metrics)}};
        trace << rec.dump() << '\n';
      }
      if (!trace) throw InvalidArgument("failed writing " + trace_path);
      write_manifest(trace_path, manifest);
      Json summary = to_json(result.summary);
      summary["policy"] = to_string(opts.policy);
      summary["frames"] = result.frames.size();
      summary["manifest"] = manifest.json();
      std::cout << summary.dump(2) << '\n';
      return kExitOk;
    }

    if (*serve) {
      const auto colon = bind_addr.rfind(':');
      if (colon == std::string::npos) throw InvalidArgument("--bind expects host:port");
      const std::string host = bind_addr.substr(0, colon);
      int port = 0;
      try {
        port = std::stoi(bind_addr.substr(colon + 1));
      } catch (const std::exception&) {
        throw InvalidArgument("--bind expects host:port");
      }
      ServiceOptions opts;
      opts.threads = threads;
      opts.cache_dir = cache_dir;
      Service service(opts);
      if (!graph_path.empty()) {
        const std::string id = service.register_graph(open_graph(graph_path));
        std::cerr << "graph_id " << id << '\n';
      }
      HttpServer server(service);
      const int bound = server.bind(host, port);
      if (bound < 0) {
        std::cerr << "error: cannot bind " << bind_addr << '\n';
        return kExitIo;
      }
      std::cerr << "listening on " << host << ':' << bound << '\n';
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      server.listen();
      g_server = nullptr;
      return kExitOk;
    }
  } catch (const InfeasibleGraph& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const ResourceCap& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCap;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitOk;
}
