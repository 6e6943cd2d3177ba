#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lcurtain/device.hpp"

namespace lcurtain {

// The raw inequalities. Graph construction and the public checks share these
// so that "is a graph path" and "satisfies the limits" agree bit for bit.
inline bool within_velocity(double theta_a, double theta_b, double bound) {
  return std::abs(theta_b - theta_a) <= bound;
}
inline bool within_acceleration(double theta_a, double theta_b, double theta_c, double bound) {
  return std::abs(theta_c + theta_a - 2.0 * theta_b) <= bound;
}

/// |θ(b) − θ(a)| ≤ ω_max·Δt. `a` and `b` must be on adjacent rays.
bool check_velocity(const DeviceConfig& config, const ControlPoint& a, const ControlPoint& b);

/// |θ(c) + θ(a) − 2θ(b)| ≤ α_max·Δt². The rays of a, b, c must be consecutive
/// (ascending or descending).
bool check_acceleration(const DeviceConfig& config, const ControlPoint& a, const ControlPoint& b,
                        const ControlPoint& c);

/// Laser angle for every (ray, bin), row-major.
struct AngleTable {
  int rays = 0;
  int bins = 0;
  std::vector<double> theta;

  double at(int ray, int bin) const {
    return theta[static_cast<std::size_t>(ray) * static_cast<std::size_t>(bins) +
                 static_cast<std::size_t>(bin)];
  }
  static AngleTable from_config(const DeviceConfig& config);

  friend bool operator==(const AngleTable&, const AngleTable&) = default;
};

/// Extended node (X_{t-1}, X_t), identified by its two range bins.
struct GraphNode {
  std::uint16_t prev_bin = 0;
  std::uint16_t cur_bin = 0;

  friend bool operator==(const GraphNode&, const GraphNode&) = default;
};

/// Nodes of one ray and their outgoing edges in CSR form. Nodes are sorted by
/// (prev_bin, cur_bin); successor lists hold indices into the next ray's
/// nodes, sorted by successor range.
struct RayLayer {
  std::vector<GraphNode> nodes;
  std::vector<std::uint32_t> offsets{0};
  std::vector<std::uint32_t> succ;

  std::size_t size() const { return nodes.size(); }
  std::span<const std::uint32_t> successors(std::size_t node) const {
    return {succ.data() + offsets[node], succ.data() + offsets[node + 1]};
  }

  friend bool operator==(const RayLayer&, const RayLayer&) = default;
};

/// Layered DAG whose ray-1 → ray-(T-1) paths (0-based) are exactly the grid
/// curtains satisfying the velocity and acceleration limits. Immutable once
/// built.
class ConstraintGraph {
 public:
  ConstraintGraph() = default;

  const DeviceConfig& config() const { return config_; }
  int ray_count() const { return config_.ray_count; }
  int range_bins() const { return config_.range_bins; }
  const std::vector<double>& ranges() const { return ranges_; }
  const AngleTable& angles() const { return angles_; }
  bool is_pruned() const { return pruned_; }

  /// Layer for ray t, 1 <= t <= T-1. Layer 0 exists but is always empty.
  const RayLayer& layer(int ray) const { return layers_[static_cast<std::size_t>(ray)]; }
  std::size_t node_count(int ray) const { return layer(ray).size(); }
  std::size_t total_nodes() const;
  std::size_t total_edges() const;
  bool empty() const { return total_nodes() == 0; }

  /// Dense global node id: nodes numbered ray by ray.
  std::uint32_t node_id(int ray, std::uint32_t local) const {
    return static_cast<std::uint32_t>(first_id_[static_cast<std::size_t>(ray)]) + local;
  }
  std::optional<std::uint32_t> find_node(int ray, int prev_bin, int cur_bin) const;

  ControlPoint point(int ray, int bin) const;

  /// True iff `bins` (one per ray) traces a path of this graph.
  bool is_path(std::span<const int> bins) const;

  friend bool operator==(const ConstraintGraph&, const ConstraintGraph&) = default;

 private:
  friend ConstraintGraph build_unpruned(const DeviceConfig&, const AngleTable&);
  friend ConstraintGraph build_graph(const DeviceConfig&, const AngleTable&);
  friend ConstraintGraph prune_graph(const ConstraintGraph&);
  friend ConstraintGraph assemble_graph(DeviceConfig, AngleTable, std::vector<RayLayer>, bool);

  void finalize();

  DeviceConfig config_;
  AngleTable angles_;
  std::vector<double> ranges_;
  std::vector<RayLayer> layers_;
  std::vector<std::size_t> first_id_;
  bool pruned_ = false;
};

/// Every velocity-feasible node and every edge allowed by both limits, without
/// pruning. Intended for inspection and tests; build_graph is the normal path.
ConstraintGraph build_unpruned(const DeviceConfig& config, const AngleTable& angles);
ConstraintGraph build_unpruned(const DeviceConfig& config);

/// Removes, to fixpoint, nodes with no successor (rays < T-1) or no
/// predecessor (rays > 1). May return an empty graph.
ConstraintGraph prune_graph(const ConstraintGraph& graph);

/// Builds and prunes. Throws InfeasibleGraph if nothing survives.
ConstraintGraph build_graph(const DeviceConfig& config, const AngleTable& angles);
ConstraintGraph build_graph(const DeviceConfig& config);

/// Reassembles a graph from stored layers (used by the cache reader).
ConstraintGraph assemble_graph(DeviceConfig config, AngleTable angles, std::vector<RayLayer> layers,
                               bool pruned);

struct GraphStats {
  std::vector<std::size_t> nodes_per_ray;  ///< index = ray; entry 0 is always 0
  std::vector<std::size_t> edges_per_ray;  ///< edges leaving each ray
  std::size_t total_nodes = 0;
  std::size_t total_edges = 0;
  std::size_t memory_bytes = 0;
};

GraphStats graph_stats(const ConstraintGraph& graph);

}  // namespace lcurtain
