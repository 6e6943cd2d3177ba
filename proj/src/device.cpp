#include "lcurtain/device.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "lcurtain/json_io.hpp"

namespace lcurtain {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw InvalidArgument(std::string("invalid device config: ") + what);
}

}  // namespace

void DeviceConfig::validate() const {
  require(std::isfinite(baseline), "baseline must be finite");
  require(ray_count >= 3, "ray_count must be >= 3");
  require(range_bins >= 2, "range_bins must be >= 2");
  require(range_bins <= 65535, "range_bins must be <= 65535");
  require(std::isfinite(fov[0]) && std::isfinite(fov[1]) && fov[0] < fov[1],
          "fov must be an increasing pair of angles");
  require(fov[0] > -std::numbers::pi / 2 && fov[1] < std::numbers::pi / 2,
          "fov must lie strictly within (-90°, 90°)");
  require(range_min > 0.0 && range_min < range_max && std::isfinite(range_max),
          "ranges must satisfy 0 < range_min < range_max");
  require(dt > 0.0 && std::isfinite(dt), "dt must be positive");
  // Zero limits are admitted as the degenerate frozen-galvo modes.
  require(omega_max >= 0.0, "omega_max must be non-negative");
  require(alpha_max >= 0.0, "alpha_max must be non-negative");
  require(curtain_rate > 0.0 && std::isfinite(curtain_rate), "curtain_rate must be positive");
  require(ray_count * dt <= (1.0 / curtain_rate) * (1.0 + 1e-12),
          "ray_count * dt must not exceed the sweep period 1/curtain_rate");
  require(intensity_sigma > 0.0 && std::isfinite(intensity_sigma), "intensity_sigma must be positive");
  require(intensity_peak > 0.0 && std::isfinite(intensity_peak), "intensity_peak must be positive");
  require(tau > 0.0 && tau < intensity_peak, "tau must satisfy 0 < tau < intensity_peak");

  // Every ray must miss the laser so that laser_angle is defined on the grid.
  const ControlGrid grid(*this);
  for (int t = 0; t < ray_count; ++t) {
    const auto& p = grid.at(t, 0);
    require(std::hypot(p.x - baseline, p.z) > 0.0, "a control point coincides with the laser");
  }
}

DeviceConfig default_config() { return DeviceConfig{}; }

double ray_angle(const DeviceConfig& config, int ray) {
  if (ray < 0 || ray >= config.ray_count) {
    throw InvalidArgument("ray index " + std::to_string(ray) + " out of range [0, " +
                          std::to_string(config.ray_count) + ")");
  }
  const double span = config.fov[1] - config.fov[0];
  return config.fov[0] + span * static_cast<double>(ray) / static_cast<double>(config.ray_count - 1);
}

Vec2 ray_direction(const DeviceConfig& config, int ray) {
  const double phi = ray_angle(config, ray);
  return {std::sin(phi), std::cos(phi)};
}

double laser_angle(const DeviceConfig& config, const ControlPoint& p) {
  const double dx = p.x - config.baseline;
  if (dx == 0.0 && p.z == 0.0) {
    throw InvalidArgument("laser_angle: control point coincides with the laser");
  }
  return std::atan2(p.z, dx);
}

std::vector<double> range_grid(const DeviceConfig& config) {
  const int k = config.range_bins;
  std::vector<double> ranges(static_cast<std::size_t>(k));
  const double step = (config.range_max - config.range_min) / static_cast<double>(k - 1);
  for (int i = 0; i < k; ++i) ranges[static_cast<std::size_t>(i)] = config.range_min + step * i;
  ranges.back() = config.range_max;
  return ranges;
}

ControlPoint make_control_point(const DeviceConfig& config, int ray, int bin, double range) {
  const Vec2 dir = ray_direction(config, ray);
  return {ray, bin, range, range * dir.x, range * dir.z};
}

ControlGrid::ControlGrid(const DeviceConfig& config)
    : rays_(config.ray_count), bins_(config.range_bins), ranges_(range_grid(config)) {
  points_.reserve(static_cast<std::size_t>(rays_) * static_cast<std::size_t>(bins_));
  angles_.reserve(points_.capacity());
  for (int t = 0; t < rays_; ++t) {
    for (int k = 0; k < bins_; ++k) {
      points_.push_back(make_control_point(config, t, k, ranges_[static_cast<std::size_t>(k)]));
      const auto& p = points_.back();
      const double dx = p.x - config.baseline;
      angles_.push_back(dx == 0.0 && p.z == 0.0 ? std::numeric_limits<double>::quiet_NaN()
                                                : std::atan2(p.z, dx));
    }
  }
}

ControlGrid control_grid(const DeviceConfig& config) {
  config.validate();
  return ControlGrid(config);
}

std::uint64_t config_hash(const DeviceConfig& config) {
  // FNV-1a over the canonical serialization.
  const std::string text = to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash_hex(const DeviceConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(config_hash(config)));
  return buf;
}

}  // namespace lcurtain
