#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lcurtain/graph.hpp"
#include "lcurtain/sampling.hpp"
#include "lcurtain/scene.hpp"

namespace lcurtain {

enum class Method { dp, monte_carlo, brute_force };

std::string_view to_string(Method method);
/// Accepts "dp", "mc"/"monte_carlo", "brute"/"brute_force".
Method parse_method(std::string_view text);

/// Probability that one random curtain detects the object.
struct DetectionReport {
  Method method = Method::dp;
  double probability = 0.0;
  std::optional<std::uint64_t> samples;     ///< Monte Carlo only
  std::optional<std::uint64_t> detections;  ///< Monte Carlo only
  std::optional<std::uint64_t> seed;        ///< Monte Carlo only
  std::optional<double> ci_lo;              ///< 95% interval, Monte Carlo only
  std::optional<double> ci_hi;
  double duration_s = 0.0;
  std::string config_hash;
  ModelKind model = ModelKind::area_setpoint;
};

/// P_det for every node: table[t][local node], rays 1..T-1.
struct SubCurtainTable {
  std::vector<std::vector<double>> per_ray;
};

/// det[t][k]: a curtain at bin k of ray t detects the object.
std::vector<std::vector<char>> detection_flags(const ConstraintGraph& graph, const ObjectProfile& profile);

/// Backward sweep over the graph; exact up to floating-point summation in
/// successor-list order.
DetectionReport dp_detection_probability(const ConstraintGraph& graph, const TransitionModel& model,
                                         const ObjectProfile& profile, SubCurtainTable* table = nullptr);

inline constexpr double kDefaultPathCap = 1e7;

/// Number of ray-1 → ray-(T-1) paths (as a double; may be astronomically large).
double path_count(const ConstraintGraph& graph);

/// Exhaustive sum over all paths of P(path)·[path detects]. Throws ResourceCap
/// when the path count exceeds `path_cap`.
DetectionReport brute_force_probability(const ConstraintGraph& graph, const TransitionModel& model,
                                         const ObjectProfile& profile, double path_cap = kDefaultPathCap);

/// Fraction of `samples` sampled curtains whose rendered return crosses τ on
/// some ray. Sample i draws from Rng::stream(seed, i), so the estimate does
/// not depend on `threads`.
DetectionReport monte_carlo_probability(const ConstraintGraph& graph, const TransitionModel& model,
                                        const ObjectProfile& profile, std::uint64_t samples, std::uint64_t seed,
                                        int threads = 1);

/// Normal-approximation 95% interval, Wilson interval when p̂ ∈ {0, 1};
/// clipped to [0, 1].
std::pair<double, double> confidence_interval_95(std::uint64_t detections, std::uint64_t samples);

/// 1 − (1 − p)^n.
double multi_curtain_probability(double p, int n);

/// Smallest n with 1 − (1 − p)^n ≥ target.
int curtains_needed(double p, double target);

struct SweepPoint {
  double area = 0.0;
  double mean_probability = 0.0;
  std::size_t orientations = 0;
};

/// Mean DP probability over `yaws` for boxes of each area centred at `center`;
/// width/depth = aspect. A non-positive area contributes p = 0.
std::vector<SweepPoint> area_sweep(const ConstraintGraph& graph, const TransitionModel& model, Vec2 center,
                                   double aspect, std::span<const double> areas, std::span<const double> yaws);

}  // namespace lcurtain
