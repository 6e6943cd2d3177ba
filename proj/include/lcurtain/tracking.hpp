#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "lcurtain/graph.hpp"
#include "lcurtain/sampling.hpp"
#include "lcurtain/scene.hpp"

namespace lcurtain {

/// One depth per camera ray, within [range_min, range_max].
using SafetyEnvelope = std::vector<double>;

/// Row-major depth image with one column per ray. `height` holds the height
/// above ground of every pixel's 3D point.
struct DepthMap {
  int rows = 0;
  int cols = 0;
  std::vector<double> depth;
  std::vector<double> height;

  double depth_at(int r, int c) const { return depth[static_cast<std::size_t>(r * cols + c)]; }
  double height_at(int r, int c) const { return height[static_cast<std::size_t>(r * cols + c)]; }
};

/// Points at or below `ground_clearance` or above `max_height` are ignored.
struct MaskParams {
  double ground_clearance = 0.1;
  double max_height = 2.5;
  std::optional<double> background;  ///< default range_max
};

SafetyEnvelope envelope_from_depthmap(const DepthMap& map, const MaskParams& mask, const DeviceConfig& config);

SafetyEnvelope ground_truth_envelope(const SceneFrame& frame);

struct PolicyParams {
  double delta_near = 0.3;
  double delta_far = 0.3;
  int random_curtains = 2;  ///< per frame, when random curtains are used
};

struct TrackerState {
  SafetyEnvelope estimate;
  std::vector<double> last_return;
  int frame = 0;
  PolicyParams params;
  double tau = 0.5;
};

/// e'_t = e_t − δ_near where I_t > τ, e_t + δ_far elsewhere; clamped to the
/// sensing range.
SafetyEnvelope handcrafted_forecast(const TrackerState& state, const DeviceConfig& config);

/// Graph path minimizing Σ_t |range(X_t) − e_t|. Among equal-cost paths the
/// choice is made ray by ray from the left, preferring smaller ranges.
Curtain feasibilize(const ConstraintGraph& graph, std::span<const double> envelope);

/// Sum of |range − e_t| along a curtain.
double envelope_cost(const Curtain& curtain, std::span<const double> envelope);

struct CurtainReading {
  Curtain curtain;
  std::vector<double> intensity;
};

/// On each ray where some random curtain's I_t > τ, take that curtain's
/// control point (later readings win); then feasibilize.
Curtain random_override(const ConstraintGraph& graph, const Curtain& forecast,
                        std::span<const CurtainReading> random_returns, double tau);

enum class Policy { handcrafted, handcrafted_random, random_only };

std::string_view to_string(Policy policy);
/// Accepts "handcrafted", "handcrafted+random" (or "handcrafted_random"), "random_only" (or "random").
Policy parse_policy(std::string_view text);

struct MetricReport {
  double huber = 0.0;
  double rmse_linear = 0.0;
  double rmse_log = 0.0;
  double rmse_log_scale_inv = 0.0;
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double thresh_1 = 1.0;  ///< δ < 1.25
  double thresh_2 = 1.0;  ///< δ < 1.25²
  double thresh_3 = 1.0;  ///< δ < 1.25³
};

inline constexpr double kHuberDelta = 1.0;

/// Throws InvalidArgument on length mismatch or non-positive depths.
MetricReport depth_metrics(std::span<const double> pred, std::span<const double> gt);

MetricReport mean_metrics(std::span<const MetricReport> reports);

struct FrameRecord {
  int frame = 0;
  std::vector<Curtain> curtains;               ///< random curtains first, the imaged curtain last
  std::vector<std::vector<double>> returns;    ///< aligned with `curtains`
  SafetyEnvelope estimate;
  SafetyEnvelope gt;
  MetricReport metrics;
};

struct EpisodeOptions {
  Policy policy = Policy::handcrafted_random;
  int horizon = 50;
  std::uint64_t seed = 0;
  PolicyParams params;
};

struct EpisodeResult {
  std::vector<FrameRecord> frames;
  MetricReport summary;
};

/// Closed-loop tracking over the first `horizon` frames of `scene`.
///
/// The estimate at frame 0 is the ground truth. Each frame the forecast
/// envelope is feasibilized, random curtains (stream seed, frame·k + i) are
/// imaged, the override is applied, the resulting curtain is imaged, and the
/// next estimate is the handcrafted update of that curtain. random_only keeps
/// the last estimate, moves it out by δ_far, and snaps rays where a random
/// curtain fired to that curtain's range.
EpisodeResult run_episode(const ConstraintGraph& graph, const TransitionModel& model, const Scene& scene,
                          const EpisodeOptions& options);

}  // namespace lcurtain
