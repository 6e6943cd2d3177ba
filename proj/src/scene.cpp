#include "lcurtain/scene.hpp"

#include <algorithm>
#include <cmath>

namespace lcurtain {

namespace {

double cross(Vec2 a, Vec2 b) { return a.x * b.z - a.z * b.x; }
Vec2 sub(Vec2 a, Vec2 b) { return {a.x - b.x, a.z - b.z}; }

int orientation(Vec2 a, Vec2 b, Vec2 c) {
  const double v = cross(sub(b, a), sub(c, a));
  return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0);
}

bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.z, b.z) <= p.z &&
         p.z <= std::max(a.z, b.z);
}

bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const int o1 = orientation(a, b, c), o2 = orientation(a, b, d);
  const int o3 = orientation(c, d, a), o4 = orientation(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

bool contains_origin(std::span<const Vec2> poly) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2 a = poly[i], b = poly[j];
    if ((a.z > 0.0) != (b.z > 0.0)) {
      const double x_at = a.x + (0.0 - a.z) * (b.x - a.x) / (b.z - a.z);
      if (x_at > 0.0) inside = !inside;
    }
  }
  return inside;
}

std::optional<double> ray_hit_polygon(std::span<const Vec2> poly, Vec2 dir) {
  if (contains_origin(poly)) return 0.0;
  std::optional<double> best;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 p = poly[i];
    const Vec2 e = sub(poly[(i + 1) % poly.size()], p);
    const double denom = cross(dir, e);
    if (denom == 0.0) continue;  // parallel; neighbouring edges report the hit
    const double t = cross(p, e) / denom;
    const double s = cross(p, dir) / denom;
    if (t >= 0.0 && s >= 0.0 && s <= 1.0 && (!best || t < *best)) best = t;
  }
  return best;
}

std::optional<double> ray_hit_disc(const Disc& disc, Vec2 dir) {
  const double cc = disc.center.x * disc.center.x + disc.center.z * disc.center.z;
  const double r2 = disc.radius * disc.radius;
  if (cc < r2) return 0.0;
  const double b = dir.x * disc.center.x + dir.z * disc.center.z;
  const double disc_term = b * b - (cc - r2);
  if (disc_term < 0.0) return std::nullopt;
  const double t = b - std::sqrt(disc_term);
  if (t < 0.0) return std::nullopt;
  return t;
}

void require(bool ok, const char* what) {
  if (!ok) throw InvalidArgument(std::string("invalid shape: ") + what);
}

}  // namespace

bool is_simple_polygon(std::span<const Vec2> v) {
  const std::size_t n = v.size();
  if (n < 3) return false;
  double area2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) area2 += cross(v[i], v[(i + 1) % n]);
  if (area2 == 0.0) return false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) {
        if (v[i] == v[(i + 1) % n] || v[j] == v[(j + 1) % n]) return false;
        continue;
      }
      if (segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n])) return false;
    }
  }
  return true;
}

std::vector<Vec2> box_corners(const Box& box) {
  const double c = std::cos(box.yaw), s = std::sin(box.yaw);
  const double hw = box.width / 2, hd = box.depth / 2;
  const double local[4][2] = {{-hw, -hd}, {hw, -hd}, {hw, hd}, {-hw, hd}};
  std::vector<Vec2> out;
  out.reserve(4);
  for (const auto& l : local) {
    out.push_back({box.center.x + l[0] * c - l[1] * s, box.center.z + l[0] * s + l[1] * c});
  }
  return out;
}

Vec2 Shape::offset_at(int frame) const {
  if (trajectory.empty()) return {};
  if (frame <= trajectory.front().frame) return trajectory.front().offset;
  if (frame >= trajectory.back().frame) return trajectory.back().offset;
  for (std::size_t i = 1; i < trajectory.size(); ++i) {
    const auto& a = trajectory[i - 1];
    const auto& b = trajectory[i];
    if (frame <= b.frame) {
      const double w = static_cast<double>(frame - a.frame) / static_cast<double>(b.frame - a.frame);
      return {a.offset.x + w * (b.offset.x - a.offset.x), a.offset.z + w * (b.offset.z - a.offset.z)};
    }
  }
  return trajectory.back().offset;
}

Shape Shape::posed(int frame) const {
  const Vec2 d = offset_at(frame);
  Shape out = *this;
  out.trajectory.clear();
  std::visit(
      [&](auto& g) {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, Polygon>) {
          for (auto& v : g.vertices) v = {v.x + d.x, v.z + d.z};
        } else {
          g.center = {g.center.x + d.x, g.center.z + d.z};
        }
      },
      out.geometry);
  return out;
}

void Shape::validate() const {
  std::visit(
      [](const auto& g) {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, Polygon>) {
          for (const auto& v : g.vertices) require(std::isfinite(v.x) && std::isfinite(v.z), "non-finite vertex");
          require(is_simple_polygon(g.vertices), "polygon must have >= 3 vertices, non-zero area and no self-intersections");
        } else if constexpr (std::is_same_v<G, Disc>) {
          require(std::isfinite(g.center.x) && std::isfinite(g.center.z), "non-finite disc center");
          require(g.radius > 0.0 && std::isfinite(g.radius), "disc radius must be positive");
        } else {
          require(std::isfinite(g.center.x) && std::isfinite(g.center.z) && std::isfinite(g.yaw),
                  "non-finite box pose");
          require(g.width > 0.0 && g.depth > 0.0 && std::isfinite(g.width) && std::isfinite(g.depth),
                  "box dimensions must be positive");
        }
      },
      geometry);
  for (std::size_t i = 1; i < trajectory.size(); ++i) {
    require(trajectory[i].frame > trajectory[i - 1].frame, "trajectory keyframes must be strictly increasing");
  }
}

Shape make_polygon(std::vector<Vec2> vertices) {
  Shape s{Polygon{std::move(vertices)}, {}, 0, -1};
  s.validate();
  return s;
}

Shape make_disc(Vec2 center, double radius) {
  Shape s{Disc{center, radius}, {}, 0, -1};
  s.validate();
  return s;
}

Shape make_box(Vec2 center, double width, double depth, double yaw) {
  Shape s{Box{center, width, depth, yaw}, {}, 0, -1};
  s.validate();
  return s;
}

Shape canonical_object(double width, double depth, Vec2 center, double yaw) {
  if (!(width > 0.0) || !(depth > 0.0)) throw InvalidArgument("canonical_object: dimensions must be positive");
  return make_box(center, width, depth, yaw);
}

bool ObjectProfile::any() const {
  return std::any_of(surface.begin(), surface.end(), [](const auto& o) { return o.has_value(); });
}

ObjectProfile empty_profile(const DeviceConfig& config) {
  return ObjectProfile{std::vector<std::optional<double>>(static_cast<std::size_t>(config.ray_count))};
}

std::optional<double> ray_hit(const Shape& shape, Vec2 dir) {
  return std::visit(
      [&](const auto& g) -> std::optional<double> {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, Polygon>) {
          return ray_hit_polygon(g.vertices, dir);
        } else if constexpr (std::is_same_v<G, Disc>) {
          return ray_hit_disc(g, dir);
        } else {
          const auto corners = box_corners(g);
          return ray_hit_polygon(corners, dir);
        }
      },
      shape.geometry);
}

ObjectProfile raycast_profile(std::span<const Shape> shapes, const DeviceConfig& config) {
  for (const auto& s : shapes) s.validate();
  ObjectProfile profile = empty_profile(config);
  for (int t = 0; t < config.ray_count; ++t) {
    const Vec2 dir = ray_direction(config, t);
    std::optional<double> best;
    for (const auto& s : shapes) {
      const auto hit = ray_hit(s, dir);
      if (hit && (!best || *hit < *best)) best = hit;
    }
    if (best && *best <= config.range_max) {
      profile.surface[static_cast<std::size_t>(t)] = std::max(*best, config.range_min);
    }
  }
  return profile;
}

IntensityModel IntensityModel::from_config(const DeviceConfig& config) {
  return {config.intensity_peak, config.intensity_sigma, config.tau, config.intensity_attenuation,
          config.range_min};
}

double IntensityModel::detection_radius() const {
  if (tau >= peak) return 0.0;
  return sigma * std::sqrt(2.0 * std::log(peak / tau));
}

double intensity(const IntensityModel& model, double range, std::optional<double> surface) {
  if (!surface) return 0.0;
  const double d = range - *surface;
  double value = model.peak * std::exp(-(d * d) / (2.0 * model.sigma * model.sigma));
  if (model.attenuation) {
    const double ratio = model.range_min / range;
    value *= ratio * ratio;
  }
  return value;
}

double intensity(const DeviceConfig& config, const ControlPoint& x, std::optional<double> surface) {
  return intensity(IntensityModel::from_config(config), x.range, surface);
}

bool detect(const IntensityModel& model, double range, std::optional<double> surface) {
  return intensity(model, range, surface) > model.tau;
}

bool detect(const DeviceConfig& config, const ControlPoint& x, std::optional<double> surface) {
  return detect(IntensityModel::from_config(config), x.range, surface);
}

CurtainReturn curtain_return(const DeviceConfig& config, const Curtain& curtain, const ObjectProfile& profile) {
  const std::size_t T = static_cast<std::size_t>(config.ray_count);
  if (curtain.size() != T || profile.size() != T) throw Mismatch("curtain_return: ray count mismatch");
  const auto model = IntensityModel::from_config(config);
  CurtainReturn out;
  out.intensity.resize(T);
  out.detected.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    const double i = intensity(model, curtain.points[t].range, profile.surface[t]);
    out.intensity[t] = i;
    out.detected[t] = i > model.tau ? 1 : 0;
    out.any_detection = out.any_detection || out.detected[t];
  }
  return out;
}

std::vector<Shape> Scene::shapes_at(int frame) const {
  if (frame < 0 || frame >= frame_count()) {
    throw InvalidArgument("frame " + std::to_string(frame) + " outside scene of " + std::to_string(frame_count()) +
                          " frames");
  }
  if (!explicit_frames.empty()) return explicit_frames[static_cast<std::size_t>(frame)];
  std::vector<Shape> out;
  for (const auto& s : shapes) {
    if (s.visible_at(frame)) out.push_back(s.posed(frame));
  }
  return out;
}

SceneFrame scene_frame(const Scene& scene, const DeviceConfig& config, int frame) {
  SceneFrame f;
  f.frame = frame;
  f.shapes = scene.shapes_at(frame);
  f.profile = raycast_profile(f.shapes, config);
  const double bg = std::clamp(scene.background(config), config.range_min, config.range_max);
  f.envelope.resize(f.profile.size());
  for (std::size_t t = 0; t < f.profile.size(); ++t) f.envelope[t] = f.profile.surface[t].value_or(bg);
  return f;
}

}  // namespace lcurtain
