#include "lcurtain/graph.hpp"

#include <algorithm>
#include <numeric>

namespace lcurtain {

namespace {

std::size_t pair_index(int i, int j, int bins) {
  return static_cast<std::size_t>(i) * static_cast<std::size_t>(bins) + static_cast<std::size_t>(j);
}

void check_table(const DeviceConfig& config, const AngleTable& angles) {
  config.validate();
  if (angles.rays != config.ray_count || angles.bins != config.range_bins ||
      angles.theta.size() != static_cast<std::size_t>(angles.rays) * static_cast<std::size_t>(angles.bins)) {
    throw Mismatch("angle table does not match the device grid");
  }
}

// alive[t][i*K + j]: node (i, j) on ray t is present. alive[0] is unused.
using AliveSets = std::vector<std::vector<char>>;

AliveSets velocity_feasible_nodes(const DeviceConfig& config, const AngleTable& angles) {
  const int T = config.ray_count;
  const int K = config.range_bins;
  const double vb = config.velocity_bound();
  AliveSets alive(static_cast<std::size_t>(T));
  for (int t = 1; t < T; ++t) {
    auto& a = alive[static_cast<std::size_t>(t)];
    a.assign(static_cast<std::size_t>(K) * static_cast<std::size_t>(K), 0);
    for (int i = 0; i < K; ++i) {
      for (int j = 0; j < K; ++j) {
        a[pair_index(i, j, K)] = within_velocity(angles.at(t - 1, i), angles.at(t, j), vb) ? 1 : 0;
      }
    }
  }
  return alive;
}

bool has_successor(const AngleTable& angles, const std::vector<char>& next_alive, int t, int i, int j,
                   int K, double ab) {
  const double a = angles.at(t - 1, i);
  const double b = angles.at(t, j);
  for (int k = 0; k < K; ++k) {
    if (next_alive[pair_index(j, k, K)] && within_acceleration(a, b, angles.at(t + 1, k), ab)) return true;
  }
  return false;
}

bool has_predecessor(const AngleTable& angles, const std::vector<char>& prev_alive, int t, int j, int k,
                     int K, double ab) {
  // Node (j, k) on ray t; predecessors are (i, j) on ray t-1.
  const double b = angles.at(t - 1, j);
  const double c = angles.at(t, k);
  for (int i = 0; i < K; ++i) {
    if (prev_alive[pair_index(i, j, K)] && within_acceleration(angles.at(t - 2, i), b, c, ab)) return true;
  }
  return false;
}

// Alternating backward/forward sweeps until nothing changes.
void prune_alive(const DeviceConfig& config, const AngleTable& angles, AliveSets& alive) {
  const int T = config.ray_count;
  const int K = config.range_bins;
  const double ab = config.acceleration_bound();
  bool changed = true;
  while (changed) {
    changed = false;
    for (int t = T - 2; t >= 1; --t) {
      auto& cur = alive[static_cast<std::size_t>(t)];
      const auto& next = alive[static_cast<std::size_t>(t + 1)];
      for (int i = 0; i < K; ++i) {
        for (int j = 0; j < K; ++j) {
          char& flag = cur[pair_index(i, j, K)];
          if (flag && !has_successor(angles, next, t, i, j, K, ab)) {
            flag = 0;
            changed = true;
          }
        }
      }
    }
    for (int t = 2; t < T; ++t) {
      auto& cur = alive[static_cast<std::size_t>(t)];
      const auto& prev = alive[static_cast<std::size_t>(t - 1)];
      for (int j = 0; j < K; ++j) {
        for (int k = 0; k < K; ++k) {
          char& flag = cur[pair_index(j, k, K)];
          if (flag && !has_predecessor(angles, prev, t, j, k, K, ab)) {
            flag = 0;
            changed = true;
          }
        }
      }
    }
  }
}

// CSR layers over the alive nodes with every admissible edge between them.
std::vector<RayLayer> materialize(const DeviceConfig& config, const AngleTable& angles,
                                  const AliveSets& alive) {
  const int T = config.ray_count;
  const int K = config.range_bins;
  const double ab = config.acceleration_bound();
  constexpr std::uint32_t kAbsent = UINT32_MAX;

  std::vector<RayLayer> layers(static_cast<std::size_t>(T));
  std::vector<std::vector<std::uint32_t>> local(static_cast<std::size_t>(T));
  for (int t = 1; t < T; ++t) {
    auto& layer = layers[static_cast<std::size_t>(t)];
    auto& index = local[static_cast<std::size_t>(t)];
    index.assign(static_cast<std::size_t>(K) * static_cast<std::size_t>(K), kAbsent);
    const auto& a = alive[static_cast<std::size_t>(t)];
    for (int i = 0; i < K; ++i) {
      for (int j = 0; j < K; ++j) {
        if (!a[pair_index(i, j, K)]) continue;
        index[pair_index(i, j, K)] = static_cast<std::uint32_t>(layer.nodes.size());
        layer.nodes.push_back({static_cast<std::uint16_t>(i), static_cast<std::uint16_t>(j)});
      }
    }
  }
  for (int t = 1; t < T; ++t) {
    auto& layer = layers[static_cast<std::size_t>(t)];
    layer.offsets.assign(1, 0);
    layer.offsets.reserve(layer.nodes.size() + 1);
    if (t + 1 < T) {
      const auto& next_index = local[static_cast<std::size_t>(t + 1)];
      for (const auto& node : layer.nodes) {
        const double a = angles.at(t - 1, node.prev_bin);
        const double b = angles.at(t, node.cur_bin);
        for (int k = 0; k < K; ++k) {
          const std::uint32_t s = next_index[pair_index(node.cur_bin, k, K)];
          if (s != kAbsent && within_acceleration(a, b, angles.at(t + 1, k), ab)) layer.succ.push_back(s);
        }
        layer.offsets.push_back(static_cast<std::uint32_t>(layer.succ.size()));
      }
    } else {
      layer.offsets.resize(layer.nodes.size() + 1, 0);
    }
    layer.succ.shrink_to_fit();
  }
  return layers;
}

}  // namespace

bool check_velocity(const DeviceConfig& config, const ControlPoint& a, const ControlPoint& b) {
  if (std::abs(a.ray - b.ray) != 1) {
    throw InvalidArgument("check_velocity: control points are not on consecutive rays");
  }
  return within_velocity(laser_angle(config, a), laser_angle(config, b), config.velocity_bound());
}

bool check_acceleration(const DeviceConfig& config, const ControlPoint& a, const ControlPoint& b,
                        const ControlPoint& c) {
  const bool ascending = b.ray - a.ray == 1 && c.ray - b.ray == 1;
  const bool descending = a.ray - b.ray == 1 && b.ray - c.ray == 1;
  if (!ascending && !descending) {
    throw InvalidArgument("check_acceleration: control points are not on consecutive rays");
  }
  return within_acceleration(laser_angle(config, a), laser_angle(config, b), laser_angle(config, c),
                             config.acceleration_bound());
}

AngleTable AngleTable::from_config(const DeviceConfig& config) {
  const ControlGrid grid(config);
  return {config.ray_count, config.range_bins, grid.angles()};
}

std::size_t ConstraintGraph::total_nodes() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.size();
  return n;
}

std::size_t ConstraintGraph::total_edges() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.succ.size();
  return n;
}

std::optional<std::uint32_t> ConstraintGraph::find_node(int ray, int prev_bin, int cur_bin) const {
  if (ray < 1 || ray >= ray_count()) return std::nullopt;
  const auto& nodes = layer(ray).nodes;
  const GraphNode key{static_cast<std::uint16_t>(prev_bin), static_cast<std::uint16_t>(cur_bin)};
  auto less = [](const GraphNode& x, const GraphNode& y) {
    return x.prev_bin != y.prev_bin ? x.prev_bin < y.prev_bin : x.cur_bin < y.cur_bin;
  };
  auto it = std::lower_bound(nodes.begin(), nodes.end(), key, less);
  if (it == nodes.end() || !(*it == key)) return std::nullopt;
  return static_cast<std::uint32_t>(it - nodes.begin());
}

ControlPoint ConstraintGraph::point(int ray, int bin) const {
  return make_control_point(config_, ray, bin, ranges_[static_cast<std::size_t>(bin)]);
}

bool ConstraintGraph::is_path(std::span<const int> bins) const {
  const int T = ray_count();
  if (static_cast<int>(bins.size()) != T) return false;
  auto node = find_node(1, bins[0], bins[1]);
  if (!node) return false;
  for (int t = 1; t + 1 < T; ++t) {
    auto next = find_node(t + 1, bins[static_cast<std::size_t>(t)], bins[static_cast<std::size_t>(t + 1)]);
    if (!next) return false;
    auto succ = layer(t).successors(*node);
    if (std::find(succ.begin(), succ.end(), *next) == succ.end()) return false;
    node = next;
  }
  return true;
}

void ConstraintGraph::finalize() {
  first_id_.assign(layers_.size() + 1, 0);
  for (std::size_t t = 0; t < layers_.size(); ++t) first_id_[t + 1] = first_id_[t] + layers_[t].size();
}

ConstraintGraph assemble_graph(DeviceConfig config, AngleTable angles, std::vector<RayLayer> layers,
                               bool pruned) {
  check_table(config, angles);
  if (layers.size() != static_cast<std::size_t>(config.ray_count)) throw Mismatch("layer count != ray_count");
  ConstraintGraph g;
  g.ranges_ = range_grid(config);
  g.config_ = std::move(config);
  g.angles_ = std::move(angles);
  g.layers_ = std::move(layers);
  g.pruned_ = pruned;
  g.finalize();
  return g;
}

ConstraintGraph build_unpruned(const DeviceConfig& config, const AngleTable& angles) {
  check_table(config, angles);
  auto alive = velocity_feasible_nodes(config, angles);
  return assemble_graph(config, angles, materialize(config, angles, alive), false);
}

ConstraintGraph build_unpruned(const DeviceConfig& config) {
  config.validate();
  return build_unpruned(config, AngleTable::from_config(config));
}

ConstraintGraph prune_graph(const ConstraintGraph& graph) {
  const int T = graph.ray_count();
  std::vector<std::vector<char>> keep(static_cast<std::size_t>(T));
  for (int t = 1; t < T; ++t) keep[static_cast<std::size_t>(t)].assign(graph.node_count(t), 1);

  bool changed = true;
  while (changed) {
    changed = false;
    for (int t = T - 2; t >= 1; --t) {
      const auto& layer = graph.layer(t);
      auto& k = keep[static_cast<std::size_t>(t)];
      const auto& next = keep[static_cast<std::size_t>(t + 1)];
      for (std::size_t n = 0; n < layer.size(); ++n) {
        if (!k[n]) continue;
        auto succ = layer.successors(n);
        if (std::none_of(succ.begin(), succ.end(), [&](std::uint32_t s) { return next[s] != 0; })) {
          k[n] = 0;
          changed = true;
        }
      }
    }
    for (int t = 2; t < T; ++t) {
      const auto& prev_layer = graph.layer(t - 1);
      const auto& prev = keep[static_cast<std::size_t>(t - 1)];
      std::vector<char> reached(graph.node_count(t), 0);
      for (std::size_t n = 0; n < prev_layer.size(); ++n) {
        if (!prev[n]) continue;
        for (std::uint32_t s : prev_layer.successors(n)) reached[s] = 1;
      }
      auto& k = keep[static_cast<std::size_t>(t)];
      for (std::size_t n = 0; n < k.size(); ++n) {
        if (k[n] && !reached[n]) {
          k[n] = 0;
          changed = true;
        }
      }
    }
  }

  // Renumber survivors, keeping relative order.
  std::vector<std::vector<std::uint32_t>> remap(static_cast<std::size_t>(T));
  std::vector<RayLayer> layers(static_cast<std::size_t>(T));
  for (int t = 1; t < T; ++t) {
    const auto& src = graph.layer(t);
    auto& m = remap[static_cast<std::size_t>(t)];
    m.assign(src.size(), UINT32_MAX);
    for (std::size_t n = 0; n < src.size(); ++n) {
      if (!keep[static_cast<std::size_t>(t)][n]) continue;
      m[n] = static_cast<std::uint32_t>(layers[static_cast<std::size_t>(t)].nodes.size());
      layers[static_cast<std::size_t>(t)].nodes.push_back(src.nodes[n]);
    }
  }
  for (int t = 1; t < T; ++t) {
    const auto& src = graph.layer(t);
    auto& dst = layers[static_cast<std::size_t>(t)];
    for (std::size_t n = 0; n < src.size(); ++n) {
      if (!keep[static_cast<std::size_t>(t)][n]) continue;
      if (t + 1 < T) {
        for (std::uint32_t s : src.successors(n)) {
          const std::uint32_t r = remap[static_cast<std::size_t>(t + 1)][s];
          if (r != UINT32_MAX) dst.succ.push_back(r);
        }
      }
      dst.offsets.push_back(static_cast<std::uint32_t>(dst.succ.size()));
    }
  }
  return assemble_graph(graph.config(), graph.angles(), std::move(layers), true);
}

ConstraintGraph build_graph(const DeviceConfig& config, const AngleTable& angles) {
  check_table(config, angles);
  auto alive = velocity_feasible_nodes(config, angles);
  prune_alive(config, angles, alive);
  auto g = assemble_graph(config, angles, materialize(config, angles, alive), true);
  if (g.empty()) {
    throw InfeasibleGraph("no curtain on the " + std::to_string(config.ray_count) + "x" +
                          std::to_string(config.range_bins) +
                          " grid satisfies the velocity and acceleration limits");
  }
  return g;
}

ConstraintGraph build_graph(const DeviceConfig& config) {
  config.validate();
  return build_graph(config, AngleTable::from_config(config));
}

GraphStats graph_stats(const ConstraintGraph& graph) {
  GraphStats s;
  const int T = graph.ray_count();
  s.nodes_per_ray.assign(static_cast<std::size_t>(std::max(T, 0)), 0);
  s.edges_per_ray.assign(static_cast<std::size_t>(std::max(T, 0)), 0);
  for (int t = 1; t < T; ++t) {
    const auto& l = graph.layer(t);
    s.nodes_per_ray[static_cast<std::size_t>(t)] = l.size();
    s.edges_per_ray[static_cast<std::size_t>(t)] = l.succ.size();
    s.total_nodes += l.size();
    s.total_edges += l.succ.size();
    s.memory_bytes += l.nodes.size() * sizeof(GraphNode) + l.offsets.size() * sizeof(std::uint32_t) +
                      l.succ.size() * sizeof(std::uint32_t);
  }
  s.memory_bytes += graph.angles().theta.size() * sizeof(double);
  return s;
}

}  // namespace lcurtain
