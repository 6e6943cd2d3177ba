#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>

#include <json.hpp>

#include "lcurtain/certify.hpp"
#include "lcurtain/device.hpp"
#include "lcurtain/graph.hpp"
#include "lcurtain/sampling.hpp"
#include "lcurtain/scene.hpp"
#include "lcurtain/tracking.hpp"

namespace lcurtain {

using Json = nlohmann::json;

/// Infinite galvo limits are written as null.
Json to_json(const DeviceConfig& config);
/// Missing fields take their defaults (dt defaults to 1/(curtain_rate·T));
/// unknown fields and wrong types throw InvalidArgument. The result is validated.
DeviceConfig config_from_json(const Json& j);

/// [{t, range, x, z, theta}], t 1-based.
Json to_json(const Curtain& curtain, const DeviceConfig& config);

Json to_json(const Shape& shape);
Shape shape_from_json(const Json& j);

Json to_json(const Scene& scene);
Scene scene_from_json(const Json& j);

Json to_json(const DetectionReport& report);
Json to_json(const MetricReport& report);
Json to_json(const GraphStats& stats);
Json to_json(const SweepPoint& point);

/// {class: {width, depth}}.
std::map<std::string, std::pair<double, double>> dims_table_from_json(const Json& j);

/// Parses a file; throws InvalidArgument with the path on I/O or syntax errors.
Json read_json_file(const std::filesystem::path& path);

/// runtime_s,estimate,ci_lo,ci_hi
std::string detection_csv(std::span<const DetectionReport> reports);
/// n,probability for n = 1..max_n
std::string multi_curve_csv(double p, int max_n);
/// area,mean_p,orientations
std::string sweep_csv(std::span<const SweepPoint> curve);

}  // namespace lcurtain
