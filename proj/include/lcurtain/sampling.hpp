#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lcurtain/graph.hpp"
#include "lcurtain/rng.hpp"

namespace lcurtain {

enum class ModelKind { uniform_neighbor, linear_setpoint, area_setpoint };

std::string_view to_string(ModelKind kind);
/// Accepts the full names and the short forms "uniform", "linear", "area".
ModelKind parse_model_kind(std::string_view text);

/// Initial and transition distributions attached to one ConstraintGraph.
/// transition[t] is aligned with graph.layer(t).succ.
struct TransitionModel {
  ModelKind kind = ModelKind::area_setpoint;
  std::uint64_t config_hash = 0;
  std::vector<double> initial;
  std::vector<std::vector<double>> transition;

  /// Throws Mismatch unless every vector lines up with `graph`.
  void check_aligned(const ConstraintGraph& graph) const;
  std::span<const double> successors(const ConstraintGraph& graph, int ray, std::size_t node) const {
    const auto& l = graph.layer(ray);
    return {transition[static_cast<std::size_t>(ray)].data() + l.offsets[node],
            transition[static_cast<std::size_t>(ray)].data() + l.offsets[node + 1]};
  }
};

/// Probability mass each candidate receives when a setpoint drawn over
/// [0, r_max] is snapped to the nearest candidate range. `ranges` must be
/// strictly ascending. Uniform-neighbor kind gives equal mass.
std::vector<double> setpoint_partition(std::span<const double> ranges, double r_max, ModelKind kind);

/// Raw setpoint: Uniform[0, r_max] (linear) or density 2r/r_max² (area).
double draw_setpoint(ModelKind kind, double r_max, Rng& rng);

/// Index of the candidate nearest to `setpoint`; equidistant ties go to the
/// lower range.
std::size_t nearest_candidate(std::span<const double> ranges, double setpoint);

TransitionModel uniform_neighbor_model(const ConstraintGraph& graph);
TransitionModel linear_setpoint_model(const ConstraintGraph& graph);
TransitionModel area_setpoint_model(const ConstraintGraph& graph);
TransitionModel make_model(const ConstraintGraph& graph, ModelKind kind);

/// Distribution over the nodes of ray 1, i.e. over (X_1, X_2).
///
/// Uniform kind: uniform over the surviving nodes. Setpoint kinds: X_1 is
/// snapped from a setpoint among the first-ray bins that start some surviving
/// node, then X_2 from a second setpoint among that bin's surviving partners.
std::vector<double> initial_distribution(const ConstraintGraph& graph, ModelKind kind);

/// One control point per ray; a path of the constraint graph.
struct Curtain {
  std::vector<ControlPoint> points;

  std::vector<int> bins() const;
  std::vector<double> ranges() const;
  std::size_t size() const { return points.size(); }

  friend bool operator==(const Curtain&, const Curtain&) = default;
};

Curtain make_curtain(const ConstraintGraph& graph, std::span<const int> bins);

/// Index drawn from `probs` by inverse CDF with a single uniform `u`;
/// never returns a zero-probability entry.
std::size_t sample_index(std::span<const double> probs, double u);

/// Random walk through the graph; writes one bin per ray.
void sample_path(const ConstraintGraph& graph, const TransitionModel& model, Rng& rng, std::span<int> bins);

Curtain sample_curtain(const ConstraintGraph& graph, const TransitionModel& model, Rng& rng);
Curtain sample_curtain(const ConstraintGraph& graph, const TransitionModel& model, std::uint64_t seed);

/// True iff every adjacent pair and triple passes check_velocity and
/// check_acceleration.
bool satisfies_limits(const DeviceConfig& config, const Curtain& curtain);

}  // namespace lcurtain
