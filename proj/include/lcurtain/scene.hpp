#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lcurtain/device.hpp"
#include "lcurtain/sampling.hpp"

namespace lcurtain {

struct Polygon {
  std::vector<Vec2> vertices;
};

struct Disc {
  Vec2 center;
  double radius = 0.0;
};

/// Rectangle of size width (x) × depth (z) at yaw 0, rotated by `yaw` about
/// its center.
struct Box {
  Vec2 center;
  double width = 0.0;
  double depth = 0.0;
  double yaw = 0.0;
};

/// Translation of a shape at a given frame; linearly interpolated between
/// keyframes and held constant outside them.
struct Keyframe {
  int frame = 0;
  Vec2 offset;
};

struct Shape {
  std::variant<Polygon, Disc, Box> geometry;
  std::vector<Keyframe> trajectory;
  int first_frame = 0;   ///< inclusive
  int last_frame = -1;   ///< inclusive; negative means "forever"

  bool visible_at(int frame) const { return frame >= first_frame && (last_frame < 0 || frame <= last_frame); }
  Vec2 offset_at(int frame) const;
  /// Copy with the trajectory offset for `frame` applied and the trajectory dropped.
  Shape posed(int frame) const;

  /// Throws InvalidArgument for non-simple polygons, non-positive sizes, etc.
  void validate() const;
};

Shape make_polygon(std::vector<Vec2> vertices);
Shape make_disc(Vec2 center, double radius);
Shape make_box(Vec2 center, double width, double depth, double yaw = 0.0);

/// Box with the given footprint; dimensions must be positive.
Shape canonical_object(double width, double depth, Vec2 center, double yaw = 0.0);

/// Box corners in counter-clockwise order.
std::vector<Vec2> box_corners(const Box& box);

bool is_simple_polygon(std::span<const Vec2> vertices);

/// Per-ray object surface range; nullopt where no shape is hit.
struct ObjectProfile {
  std::vector<std::optional<double>> surface;

  std::size_t size() const { return surface.size(); }
  bool any() const;
};

ObjectProfile empty_profile(const DeviceConfig& config);

/// Nearest range along `dir` from the camera origin at which the ray enters
/// `shape`; 0 when the origin is inside. nullopt on a miss.
std::optional<double> ray_hit(const Shape& shape, Vec2 dir);

/// O_t = nearest hit over all shapes. Hits closer than range_min are clipped
/// to range_min; hits beyond range_max are outside the sensing range and
/// count as absent.
ObjectProfile raycast_profile(std::span<const Shape> shapes, const DeviceConfig& config);

/// Parameters of the curtain return model I = A·exp(−d²/2σ²), d measured
/// along the ray, optionally scaled by (range_min/r)².
struct IntensityModel {
  double peak = 1.0;
  double sigma = 0.25;
  double tau = 0.5;
  bool attenuation = false;
  double range_min = 1.0;

  static IntensityModel from_config(const DeviceConfig& config);
  /// Miss distance below which detection happens (without attenuation);
  /// 0 when tau >= peak.
  double detection_radius() const;
};

double intensity(const IntensityModel& model, double range, std::optional<double> surface);
double intensity(const DeviceConfig& config, const ControlPoint& x, std::optional<double> surface);

/// D = [I > τ].
bool detect(const IntensityModel& model, double range, std::optional<double> surface);
bool detect(const DeviceConfig& config, const ControlPoint& x, std::optional<double> surface);

struct CurtainReturn {
  std::vector<double> intensity;
  std::vector<char> detected;
  bool any_detection = false;
};

CurtainReturn curtain_return(const DeviceConfig& config, const Curtain& curtain, const ObjectProfile& profile);

/// Top-down scene sequence. Frames are 0-based.
struct Scene {
  std::string config_ref;
  std::optional<double> background_depth;
  int num_frames = 1;
  std::vector<Shape> shapes;                            ///< shapes + trajectories form
  std::vector<std::vector<Shape>> explicit_frames;      ///< frames form; used when non-empty

  int frame_count() const { return explicit_frames.empty() ? num_frames : static_cast<int>(explicit_frames.size()); }
  std::vector<Shape> shapes_at(int frame) const;
  double background(const DeviceConfig& config) const {
    return background_depth.value_or(config.range_max);
  }
};

struct SceneFrame {
  int frame = 0;
  std::vector<Shape> shapes;
  ObjectProfile profile;
  std::vector<double> envelope;  ///< ground-truth safety envelope
};

SceneFrame scene_frame(const Scene& scene, const DeviceConfig& config, int frame);

}  // namespace lcurtain
