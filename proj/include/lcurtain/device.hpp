#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "lcurtain/errors.hpp"

namespace lcurtain {

inline constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

struct Vec2 {
  double x = 0.0;
  double z = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

/// Top-down model of a light-curtain device.
///
/// Frame: camera at the origin, z forward, x to the right, laser at
/// (baseline, 0). Rays are numbered left to right, 0-based in the C++ API.
/// `fov` holds the angles of the first and last ray, measured from +z
/// towards +x.
struct DeviceConfig {
  double baseline = 0.20;
  int ray_count = 512;
  std::array<double, 2> fov = {deg_to_rad(-20.44), deg_to_rad(20.44)};
  double range_min = 1.0;
  double range_max = 20.0;
  int range_bins = 64;
  double dt = (1.0 / 60.0) / 512.0;
  double omega_max = 2.5e4;
  double alpha_max = 1.5e7;
  double curtain_rate = 60.0;
  double intensity_sigma = 0.25;
  double intensity_peak = 1.0;
  double tau = 0.5;
  bool intensity_attenuation = false;

  /// Throws InvalidArgument when an invariant is violated.
  void validate() const;

  /// Largest admissible |Δθ| between consecutive rays.
  double velocity_bound() const { return omega_max * dt; }
  /// Largest admissible |second difference of θ| over three consecutive rays.
  double acceleration_bound() const { return alpha_max * dt * dt; }

  friend bool operator==(const DeviceConfig&, const DeviceConfig&) = default;
};

/// The built-in defaults: 20 cm baseline, galvo limits 2.5e4 rad/s and
/// 1.5e7 rad/s², 20 m range, 512 rays at 0.08° spacing, 60 Hz sweeps.
DeviceConfig default_config();

/// A discretized curtain location on one camera ray.
struct ControlPoint {
  int ray = 0;  ///< 0-based ray index
  int bin = 0;  ///< 0-based range-bin index
  double range = 0.0;
  double x = 0.0;
  double z = 0.0;

  friend bool operator==(const ControlPoint&, const ControlPoint&) = default;
};

/// Angle of ray `ray` (0-based) measured from +z towards +x.
double ray_angle(const DeviceConfig& config, int ray);

/// Unit top-down direction (x, z) of ray `ray`.
Vec2 ray_direction(const DeviceConfig& config, int ray);

/// Laser-sheet angle needed to hit `p`: atan2(z, x - baseline), i.e. measured
/// from the +x axis at the laser. Throws InvalidArgument if `p` coincides with
/// the laser.
double laser_angle(const DeviceConfig& config, const ControlPoint& p);

/// Control-point ranges, uniform over [range_min, range_max] inclusive.
std::vector<double> range_grid(const DeviceConfig& config);

/// Point on ray `ray` at distance `range` from the camera.
ControlPoint make_control_point(const DeviceConfig& config, int ray, int bin, double range);

/// Row-major T×K grid of control points; entry [t*K + k].
class ControlGrid {
 public:
  explicit ControlGrid(const DeviceConfig& config);

  int ray_count() const { return rays_; }
  int range_bins() const { return bins_; }
  std::size_t size() const { return points_.size(); }

  const ControlPoint& at(int ray, int bin) const {
    return points_[static_cast<std::size_t>(ray) * static_cast<std::size_t>(bins_) +
                   static_cast<std::size_t>(bin)];
  }
  double laser_angle(int ray, int bin) const {
    return angles_[static_cast<std::size_t>(ray) * static_cast<std::size_t>(bins_) +
                   static_cast<std::size_t>(bin)];
  }
  const std::vector<double>& ranges() const { return ranges_; }
  const std::vector<double>& angles() const { return angles_; }

 private:
  int rays_;
  int bins_;
  std::vector<double> ranges_;
  std::vector<ControlPoint> points_;
  std::vector<double> angles_;
};

ControlGrid control_grid(const DeviceConfig& config);

/// Stable 64-bit hash of the canonical JSON form of `config`.
std::uint64_t config_hash(const DeviceConfig& config);
std::string config_hash_hex(const DeviceConfig& config);

}  // namespace lcurtain
