#include "lcurtain/sampling.hpp"

#include <algorithm>
#include <cmath>

namespace lcurtain {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::uniform_neighbor: return "uniform_neighbor";
    case ModelKind::linear_setpoint: return "linear_setpoint";
    case ModelKind::area_setpoint: return "area_setpoint";
  }
  return "area_setpoint";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "uniform" || text == "uniform_neighbor") return ModelKind::uniform_neighbor;
  if (text == "linear" || text == "linear_setpoint") return ModelKind::linear_setpoint;
  if (text == "area" || text == "area_setpoint") return ModelKind::area_setpoint;
  throw InvalidArgument("unknown transition model '" + std::string(text) + "'");
}

void TransitionModel::check_aligned(const ConstraintGraph& graph) const {
  if (config_hash != lcurtain::config_hash(graph.config())) {
    throw Mismatch("transition model was built for a different device config");
  }
  const int T = graph.ray_count();
  bool ok = initial.size() == graph.node_count(1) && transition.size() == static_cast<std::size_t>(T);
  for (int t = 1; ok && t < T; ++t) ok = transition[static_cast<std::size_t>(t)].size() == graph.layer(t).succ.size();
  if (!ok) throw Mismatch("transition model is not aligned with the graph");
}

std::vector<double> setpoint_partition(std::span<const double> ranges, double r_max, ModelKind kind) {
  const std::size_t m = ranges.size();
  std::vector<double> p(m, 0.0);
  if (m == 0) return p;
  if (kind == ModelKind::uniform_neighbor || m == 1) {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(m));
    return p;
  }
  // Candidate i owns [lo_i, hi_i] with boundaries at midpoints.
  double lo = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double hi = i + 1 < m ? 0.5 * (ranges[i] + ranges[i + 1]) : r_max;
    if (kind == ModelKind::linear_setpoint) {
      p[i] = (hi - lo) / r_max;
    } else {
      p[i] = (hi * hi - lo * lo) / (r_max * r_max);
    }
    lo = hi;
  }
  return p;
}

double draw_setpoint(ModelKind kind, double r_max, Rng& rng) {
  const double u = rng.uniform();
  if (kind == ModelKind::area_setpoint) return std::sqrt(u * r_max * r_max);
  return u * r_max;
}

std::size_t nearest_candidate(std::span<const double> ranges, double setpoint) {
  std::size_t best = 0;
  double best_d = std::abs(ranges[0] - setpoint);
  for (std::size_t i = 1; i < ranges.size(); ++i) {
    const double d = std::abs(ranges[i] - setpoint);
    if (d < best_d) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

std::vector<double> initial_distribution(const ConstraintGraph& graph, ModelKind kind) {
  const auto& nodes = graph.layer(1).nodes;
  if (nodes.empty()) throw InfeasibleGraph("initial_distribution: no surviving nodes on the second ray");
  std::vector<double> p(nodes.size(), 0.0);
  if (kind == ModelKind::uniform_neighbor) {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(nodes.size()));
    return p;
  }
  const auto& r = graph.ranges();
  const double r_max = graph.config().range_max;

  // Nodes are sorted by prev_bin, so each first-ray bin owns a contiguous block.
  std::vector<std::size_t> block_start;
  std::vector<double> first_ranges;
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    if (n == 0 || nodes[n].prev_bin != nodes[n - 1].prev_bin) {
      block_start.push_back(n);
      first_ranges.push_back(r[nodes[n].prev_bin]);
    }
  }
  block_start.push_back(nodes.size());
  const auto first = setpoint_partition(first_ranges, r_max, kind);
  for (std::size_t b = 0; b + 1 < block_start.size(); ++b) {
    std::vector<double> second_ranges;
    for (std::size_t n = block_start[b]; n < block_start[b + 1]; ++n) second_ranges.push_back(r[nodes[n].cur_bin]);
    const auto second = setpoint_partition(second_ranges, r_max, kind);
    for (std::size_t n = block_start[b]; n < block_start[b + 1]; ++n) p[n] = first[b] * second[n - block_start[b]];
  }
  return p;
}

TransitionModel make_model(const ConstraintGraph& graph, ModelKind kind) {
  TransitionModel model;
  model.kind = kind;
  model.config_hash = config_hash(graph.config());
  model.initial = initial_distribution(graph, kind);
  const int T = graph.ray_count();
  const auto& r = graph.ranges();
  const double r_max = graph.config().range_max;
  model.transition.resize(static_cast<std::size_t>(T));
  std::vector<double> succ_ranges;
  for (int t = 1; t + 1 < T; ++t) {
    const auto& layer = graph.layer(t);
    const auto& next = graph.layer(t + 1);
    auto& probs = model.transition[static_cast<std::size_t>(t)];
    probs.resize(layer.succ.size());
    for (std::size_t n = 0; n < layer.size(); ++n) {
      auto succ = layer.successors(n);
      succ_ranges.clear();
      for (std::uint32_t s : succ) succ_ranges.push_back(r[next.nodes[s].cur_bin]);
      const auto p = setpoint_partition(succ_ranges, r_max, kind);
      std::copy(p.begin(), p.end(), probs.begin() + layer.offsets[n]);
    }
  }
  return model;
}

TransitionModel uniform_neighbor_model(const ConstraintGraph& graph) {
  return make_model(graph, ModelKind::uniform_neighbor);
}
TransitionModel linear_setpoint_model(const ConstraintGraph& graph) {
  return make_model(graph, ModelKind::linear_setpoint);
}
TransitionModel area_setpoint_model(const ConstraintGraph& graph) {
  return make_model(graph, ModelKind::area_setpoint);
}

std::vector<int> Curtain::bins() const {
  std::vector<int> b;
  b.reserve(points.size());
  for (const auto& p : points) b.push_back(p.bin);
  return b;
}

std::vector<double> Curtain::ranges() const {
  std::vector<double> r;
  r.reserve(points.size());
  for (const auto& p : points) r.push_back(p.range);
  return r;
}

Curtain make_curtain(const ConstraintGraph& graph, std::span<const int> bins) {
  if (static_cast<int>(bins.size()) != graph.ray_count()) throw Mismatch("curtain length != ray_count");
  Curtain c;
  c.points.reserve(bins.size());
  for (std::size_t t = 0; t < bins.size(); ++t) {
    if (bins[t] < 0 || bins[t] >= graph.range_bins()) throw InvalidArgument("range bin out of range");
    c.points.push_back(graph.point(static_cast<int>(t), bins[t]));
  }
  return c;
}

std::size_t sample_index(std::span<const double> probs, double u) {
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last_positive = i;
    if (u < acc) return i;
  }
  return last_positive;
}

void sample_path(const ConstraintGraph& graph, const TransitionModel& model, Rng& rng, std::span<int> bins) {
  const int T = graph.ray_count();
  std::size_t node = sample_index(model.initial, rng.uniform());
  const auto& first = graph.layer(1).nodes[node];
  bins[0] = first.prev_bin;
  bins[1] = first.cur_bin;
  for (int t = 1; t + 1 < T; ++t) {
    const auto& layer = graph.layer(t);
    const std::size_t choice = sample_index(model.successors(graph, t, node), rng.uniform());
    node = layer.succ[layer.offsets[node] + choice];
    bins[static_cast<std::size_t>(t + 1)] = graph.layer(t + 1).nodes[node].cur_bin;
  }
}

Curtain sample_curtain(const ConstraintGraph& graph, const TransitionModel& model, Rng& rng) {
  std::vector<int> bins(static_cast<std::size_t>(graph.ray_count()));
  sample_path(graph, model, rng, bins);
  return make_curtain(graph, bins);
}

Curtain sample_curtain(const ConstraintGraph& graph, const TransitionModel& model, std::uint64_t seed) {
  model.check_aligned(graph);
  Rng rng(seed);
  return sample_curtain(graph, model, rng);
}

bool satisfies_limits(const DeviceConfig& config, const Curtain& curtain) {
  const auto& p = curtain.points;
  for (std::size_t t = 1; t < p.size(); ++t) {
    if (!check_velocity(config, p[t - 1], p[t])) return false;
    if (t + 1 < p.size() && !check_acceleration(config, p[t - 1], p[t], p[t + 1])) return false;
  }
  return true;
}

}  // namespace lcurtain
