#include "lcurtain/json_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace lcurtain {

namespace {

void reject_unknown(const Json& j, std::initializer_list<const char*> allowed, const char* what) {
  if (!j.is_object()) throw InvalidArgument(std::string(what) + " must be a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.count(key)) throw InvalidArgument(std::string(what) + ": unknown field '" + key + "'");
  }
}

double number(const Json& j, const std::string& key) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw InvalidArgument("field '" + key + "' must be a number");
  return v.get<double>();
}

int integer(const Json& j, const std::string& key) {
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw InvalidArgument("field '" + key + "' must be an integer");
  const auto n = v.get<long long>();
  if (n < std::numeric_limits<int>::min() || n > std::numeric_limits<int>::max()) {
    throw InvalidArgument("field '" + key + "' out of range");
  }
  return static_cast<int>(n);
}

Json limit(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double limit_from(const Json& j, const std::string& key) {
  if (j.at(key).is_null()) return std::numeric_limits<double>::infinity();
  return number(j, key);
}

Vec2 point_from(const Json& j) {
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  if (j.is_object() && j.contains("x") && j.contains("z")) {
    reject_unknown(j, {"x", "z"}, "point");
    return {number(j, "x"), number(j, "z")};
  }
  throw InvalidArgument("point must be [x, z]");
}

Json point_json(Vec2 p) { return Json::array({p.x, p.z}); }

// Shortest text that parses back to the same double.
std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

}  // namespace

Json to_json(const DeviceConfig& c) {
  return Json{{"baseline", c.baseline},
              {"ray_count", c.ray_count},
              {"fov", Json::array({c.fov[0], c.fov[1]})},
              {"range_min", c.range_min},
              {"range_max", c.range_max},
              {"range_bins", c.range_bins},
              {"dt", c.dt},
              {"omega_max", limit(c.omega_max)},
              {"alpha_max", limit(c.alpha_max)},
              {"curtain_rate", c.curtain_rate},
              {"intensity_sigma", c.intensity_sigma},
              {"intensity_peak", c.intensity_peak},
              {"tau", c.tau},
              {"intensity_attenuation", c.intensity_attenuation}};
}

DeviceConfig config_from_json(const Json& j) {
  reject_unknown(j,
                 {"baseline", "ray_count", "fov", "range_min", "range_max", "range_bins", "dt", "omega_max",
                  "alpha_max", "curtain_rate", "intensity_sigma", "intensity_peak", "tau", "intensity_attenuation"},
                 "device config");
  DeviceConfig c;
  if (j.contains("baseline")) c.baseline = number(j, "baseline");
  if (j.contains("ray_count")) c.ray_count = integer(j, "ray_count");
  if (j.contains("fov")) {
    const auto& f = j.at("fov");
    if (!f.is_array() || f.size() != 2 || !f[0].is_number() || !f[1].is_number()) {
      throw InvalidArgument("field 'fov' must be [first, last] in radians");
    }
    c.fov = {f[0].get<double>(), f[1].get<double>()};
  }
  if (j.contains("range_min")) c.range_min = number(j, "range_min");
  if (j.contains("range_max")) c.range_max = number(j, "range_max");
  if (j.contains("range_bins")) c.range_bins = integer(j, "range_bins");
  if (j.contains("omega_max")) c.omega_max = limit_from(j, "omega_max");
  if (j.contains("alpha_max")) c.alpha_max = limit_from(j, "alpha_max");
  if (j.contains("curtain_rate")) c.curtain_rate = number(j, "curtain_rate");
  if (j.contains("intensity_sigma")) c.intensity_sigma = number(j, "intensity_sigma");
  if (j.contains("intensity_peak")) c.intensity_peak = number(j, "intensity_peak");
  if (j.contains("tau")) c.tau = number(j, "tau");
  if (j.contains("intensity_attenuation")) {
    if (!j.at("intensity_attenuation").is_boolean()) throw InvalidArgument("field 'intensity_attenuation' must be a boolean");
    c.intensity_attenuation = j.at("intensity_attenuation").get<bool>();
  }
  if (j.contains("dt")) {
    c.dt = number(j, "dt");
  } else if (c.ray_count > 0 && c.curtain_rate > 0.0) {
    c.dt = (1.0 / c.curtain_rate) / c.ray_count;
  }
  c.validate();
  return c;
}

Json to_json(const Curtain& curtain, const DeviceConfig& config) {
  Json out = Json::array();
  for (const auto& p : curtain.points) {
    out.push_back({{"t", p.ray + 1}, {"range", p.range}, {"x", p.x}, {"z", p.z}, {"theta", laser_angle(config, p)}});
  }
  return out;
}

Json to_json(const Shape& shape) {
  Json j = std::visit(
      [](const auto& g) -> Json {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, Polygon>) {
          Json v = Json::array();
          for (auto p : g.vertices) v.push_back(point_json(p));
          return {{"kind", "polygon"}, {"vertices", v}};
        } else if constexpr (std::is_same_v<G, Disc>) {
          return {{"kind", "disc"}, {"center", point_json(g.center)}, {"radius", g.radius}};
        } else {
          return {{"kind", "box"}, {"center", point_json(g.center)}, {"width", g.width}, {"depth", g.depth}, {"yaw", g.yaw}};
        }
      },
      shape.geometry);
  if (!shape.trajectory.empty()) {
    Json traj = Json::array();
    for (const auto& k : shape.trajectory) traj.push_back({{"frame", k.frame}, {"offset", point_json(k.offset)}});
    j["trajectory"] = traj;
  }
  if (shape.first_frame != 0) j["first_frame"] = shape.first_frame;
  if (shape.last_frame >= 0) j["last_frame"] = shape.last_frame;
  return j;
}

Shape shape_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    throw InvalidArgument("shape must be an object with a string 'kind'");
  }
  const std::string kind = j.at("kind").get<std::string>();
  Shape s;
  try {
    if (kind == "polygon") {
      reject_unknown(j, {"kind", "vertices", "trajectory", "first_frame", "last_frame"}, "polygon");
      if (!j.at("vertices").is_array()) throw InvalidArgument("polygon 'vertices' must be an array");
      Polygon p;
      for (const auto& v : j.at("vertices")) p.vertices.push_back(point_from(v));
      s.geometry = std::move(p);
    } else if (kind == "disc") {
      reject_unknown(j, {"kind", "center", "radius", "trajectory", "first_frame", "last_frame"}, "disc");
      s.geometry = Disc{point_from(j.at("center")), number(j, "radius")};
    } else if (kind == "box") {
      reject_unknown(j, {"kind", "center", "width", "depth", "yaw", "trajectory", "first_frame", "last_frame"}, "box");
      s.geometry = Box{point_from(j.at("center")), number(j, "width"), number(j, "depth"),
                       j.contains("yaw") ? number(j, "yaw") : 0.0};
    } else {
      throw InvalidArgument("unknown shape kind '" + kind + "'");
    }
    if (j.contains("trajectory")) {
      if (!j.at("trajectory").is_array()) throw InvalidArgument("'trajectory' must be an array");
      for (const auto& k : j.at("trajectory")) {
        reject_unknown(k, {"frame", "offset"}, "keyframe");
        s.trajectory.push_back({integer(k, "frame"), point_from(k.at("offset"))});
      }
    }
    if (j.contains("first_frame")) s.first_frame = integer(j, "first_frame");
    if (j.contains("last_frame")) s.last_frame = integer(j, "last_frame");
  } catch (const Json::out_of_range& e) {
    throw InvalidArgument(kind + ": missing field (" + e.what() + ")");
  }
  s.validate();
  return s;
}

Json to_json(const Scene& scene) {
  Json j = Json::object();
  if (!scene.config_ref.empty()) j["config_ref"] = scene.config_ref;
  j["background_depth"] = scene.background_depth ? Json(*scene.background_depth) : Json(nullptr);
  if (!scene.explicit_frames.empty()) {
    Json frames = Json::array();
    for (const auto& f : scene.explicit_frames) {
      Json shapes = Json::array();
      for (const auto& s : f) shapes.push_back(to_json(s));
      frames.push_back(shapes);
    }
    j["frames"] = frames;
  } else {
    j["num_frames"] = scene.num_frames;
    Json shapes = Json::array();
    for (const auto& s : scene.shapes) shapes.push_back(to_json(s));
    j["shapes"] = shapes;
  }
  return j;
}

Scene scene_from_json(const Json& j) {
  reject_unknown(j, {"config_ref", "background_depth", "num_frames", "shapes", "frames"}, "scene");
  Scene scene;
  if (j.contains("config_ref")) {
    if (!j.at("config_ref").is_string()) throw InvalidArgument("'config_ref' must be a string");
    scene.config_ref = j.at("config_ref").get<std::string>();
  }
  if (j.contains("background_depth") && !j.at("background_depth").is_null()) {
    scene.background_depth = number(j, "background_depth");
    if (!(*scene.background_depth > 0.0)) throw InvalidArgument("'background_depth' must be positive");
  }
  if (j.contains("frames") && j.contains("shapes")) {
    throw InvalidArgument("scene: give either 'frames' or 'shapes', not both");
  }
  if (j.contains("frames")) {
    if (!j.at("frames").is_array() || j.at("frames").empty()) throw InvalidArgument("'frames' must be a non-empty array");
    for (const auto& f : j.at("frames")) {
      if (!f.is_array()) throw InvalidArgument("each frame must be an array of shapes");
      std::vector<Shape> shapes;
      for (const auto& s : f) shapes.push_back(shape_from_json(s));
      scene.explicit_frames.push_back(std::move(shapes));
    }
    if (j.contains("num_frames") && integer(j, "num_frames") != static_cast<int>(scene.explicit_frames.size())) {
      throw InvalidArgument("'num_frames' disagrees with the length of 'frames'");
    }
    scene.num_frames = static_cast<int>(scene.explicit_frames.size());
  } else {
    if (j.contains("shapes")) {
      if (!j.at("shapes").is_array()) throw InvalidArgument("'shapes' must be an array");
      for (const auto& s : j.at("shapes")) scene.shapes.push_back(shape_from_json(s));
    }
    if (j.contains("num_frames")) scene.num_frames = integer(j, "num_frames");
    if (scene.num_frames < 1) throw InvalidArgument("'num_frames' must be >= 1");
  }
  return scene;
}

Json to_json(const DetectionReport& r) {
  Json j{{"method", to_string(r.method)},
         {"probability", r.probability},
         {"duration_s", r.duration_s},
         {"config_hash", r.config_hash},
         {"model", to_string(r.model)}};
  if (r.samples) j["samples"] = *r.samples;
  if (r.detections) j["detections"] = *r.detections;
  if (r.seed) j["seed"] = *r.seed;
  if (r.ci_lo) j["ci_lo"] = *r.ci_lo;
  if (r.ci_hi) j["ci_hi"] = *r.ci_hi;
  return j;
}

Json to_json(const MetricReport& m) {
  return Json{{"huber", m.huber},       {"rmse_linear", m.rmse_linear},
              {"rmse_log", m.rmse_log}, {"rmse_log_scale_inv", m.rmse_log_scale_inv},
              {"abs_rel", m.abs_rel},   {"sq_rel", m.sq_rel},
              {"thresh_1.25", m.thresh_1}, {"thresh_1.25^2", m.thresh_2},
              {"thresh_1.25^3", m.thresh_3}};
}

Json to_json(const GraphStats& s) {
  return Json{{"nodes_per_ray", s.nodes_per_ray},
              {"edges_per_ray", s.edges_per_ray},
              {"total_nodes", s.total_nodes},
              {"total_edges", s.total_edges},
              {"memory_bytes", s.memory_bytes}};
}

Json to_json(const SweepPoint& p) {
  return Json{{"area", p.area}, {"mean_probability", p.mean_probability}, {"orientations", p.orientations}};
}

std::map<std::string, std::pair<double, double>> dims_table_from_json(const Json& j) {
  if (!j.is_object()) throw InvalidArgument("dimension table must be an object");
  std::map<std::string, std::pair<double, double>> out;
  for (const auto& [name, dims] : j.items()) {
    reject_unknown(dims, {"width", "depth"}, "dimension entry");
    const double w = number(dims, "width"), d = number(dims, "depth");
    if (!(w > 0.0) || !(d > 0.0)) throw InvalidArgument("dimensions of '" + name + "' must be positive");
    out[name] = {w, d};
  }
  return out;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

std::string detection_csv(std::span<const DetectionReport> reports) {
  std::ostringstream out;
  out << "runtime_s,estimate,ci_lo,ci_hi\n";
  for (const auto& r : reports) {
    out << fmt(r.duration_s) << ',' << fmt(r.probability) << ',' << fmt(r.ci_lo.value_or(r.probability)) << ','
        << fmt(r.ci_hi.value_or(r.probability)) << '\n';
  }
  return out.str();
}

std::string multi_curve_csv(double p, int max_n) {
  if (max_n < 1) throw InvalidArgument("max_n must be >= 1");
  std::ostringstream out;
  out << "n,probability\n";
  for (int n = 1; n <= max_n; ++n) out << n << ',' << fmt(multi_curtain_probability(p, n)) << '\n';
  return out.str();
}

std::string sweep_csv(std::span<const SweepPoint> curve) {
  std::ostringstream out;
  out << "area,mean_p,orientations\n";
  for (const auto& p : curve) out << fmt(p.area) << ',' << fmt(p.mean_probability) << ',' << p.orientations << '\n';
  return out.str();
}

}  // namespace lcurtain
