#include "lcurtain/certify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

namespace lcurtain {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_inputs(const ConstraintGraph& graph, const TransitionModel& model, const ObjectProfile& profile) {
  if (graph.empty()) throw InfeasibleGraph("graph has no nodes");
  model.check_aligned(graph);
  if (profile.size() != static_cast<std::size_t>(graph.ray_count())) {
    throw Mismatch("object profile has " + std::to_string(profile.size()) + " rays, graph has " +
                   std::to_string(graph.ray_count()));
  }
}

DetectionReport base_report(const ConstraintGraph& graph, const TransitionModel& model, Method method) {
  DetectionReport r;
  r.method = method;
  r.model = model.kind;
  r.config_hash = config_hash_hex(graph.config());
  return r;
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::dp: return "dp";
    case Method::monte_carlo: return "monte_carlo";
    case Method::brute_force: return "brute_force";
  }
  return "dp";
}

Method parse_method(std::string_view text) {
  if (text == "dp") return Method::dp;
  if (text == "mc" || text == "monte_carlo") return Method::monte_carlo;
  if (text == "brute" || text == "brute_force") return Method::brute_force;
  throw InvalidArgument("unknown method '" + std::string(text) + "'");
}

std::vector<std::vector<char>> detection_flags(const ConstraintGraph& graph, const ObjectProfile& profile) {
  const auto model = IntensityModel::from_config(graph.config());
  const auto& ranges = graph.ranges();
  std::vector<std::vector<char>> det(static_cast<std::size_t>(graph.ray_count()));
  for (std::size_t t = 0; t < det.size(); ++t) {
    det[t].assign(ranges.size(), 0);
    if (!profile.surface[t]) continue;
    for (std::size_t k = 0; k < ranges.size(); ++k) det[t][k] = detect(model, ranges[k], profile.surface[t]) ? 1 : 0;
  }
  return det;
}

DetectionReport dp_detection_probability(const ConstraintGraph& graph, const TransitionModel& model,
                                         const ObjectProfile& profile, SubCurtainTable* table) {
  const auto start = Clock::now();
  check_inputs(graph, model, profile);
  const int T = graph.ray_count();
  const auto det = detection_flags(graph, profile);

  // Past the last ray that can detect, every P_det is exactly zero.
  int last = -1;
  for (int t = T - 1; t >= 0 && last < 0; --t) {
    const auto& d = det[static_cast<std::size_t>(t)];
    if (std::find(d.begin(), d.end(), 1) != d.end()) last = t;
  }

  if (table) {
    table->per_ray.assign(static_cast<std::size_t>(T), {});
    for (int t = 1; t < T; ++t) table->per_ray[static_cast<std::size_t>(t)].assign(graph.node_count(t), 0.0);
  }

  std::vector<double> next;
  std::vector<double> cur;
  const int top = std::min(T - 1, std::max(last, 1));
  if (last >= 1) {
    const auto& l = graph.layer(top);
    const auto& d = det[static_cast<std::size_t>(top)];
    next.assign(l.size(), 0.0);
    if (top == T - 1) {
      for (std::size_t n = 0; n < l.size(); ++n) next[n] = d[l.nodes[n].cur_bin] ? 1.0 : 0.0;
    } else {
      // Successors of `top` are all zero, so only local detections count.
      for (std::size_t n = 0; n < l.size(); ++n) next[n] = d[l.nodes[n].cur_bin] ? 1.0 : 0.0;
    }
    if (table) table->per_ray[static_cast<std::size_t>(top)] = next;
    for (int t = top - 1; t >= 1; --t) {
      const auto& layer = graph.layer(t);
      const auto& dt = det[static_cast<std::size_t>(t)];
      const auto& probs = model.transition[static_cast<std::size_t>(t)];
      cur.assign(layer.size(), 0.0);
      for (std::size_t n = 0; n < layer.size(); ++n) {
        if (dt[layer.nodes[n].cur_bin]) {
          cur[n] = 1.0;
          continue;
        }
        double acc = 0.0;
        for (std::uint32_t e = layer.offsets[n]; e < layer.offsets[n + 1]; ++e) acc += probs[e] * next[layer.succ[e]];
        cur[n] = std::clamp(acc, 0.0, 1.0);
      }
      if (table) table->per_ray[static_cast<std::size_t>(t)] = cur;
      std::swap(cur, next);
    }
  } else if (last == 0) {
    // Only the first ray detects: P_det on ray 1 is the local flag of X_2 (zero).
    next.assign(graph.node_count(1), 0.0);
  } else {
    next.assign(graph.node_count(1), 0.0);
  }

  double p = 0.0;
  const auto& first = graph.layer(1).nodes;
  const auto& d0 = det[0];
  for (std::size_t n = 0; n < first.size(); ++n) {
    // X_1 itself is imaged too; a detection there makes the whole curtain detect.
    const double pdet = d0[first[n].prev_bin] ? 1.0 : next[n];
    p += model.initial[n] * pdet;
  }

  auto report = base_report(graph, model, Method::dp);
  report.probability = std::clamp(p, 0.0, 1.0);
  report.duration_s = seconds_since(start);
  return report;
}

double path_count(const ConstraintGraph& graph) {
  const int T = graph.ray_count();
  if (graph.empty()) return 0.0;
  std::vector<double> next(graph.node_count(T - 1), 1.0);
  for (int t = T - 2; t >= 1; --t) {
    const auto& layer = graph.layer(t);
    std::vector<double> cur(layer.size(), 0.0);
    for (std::size_t n = 0; n < layer.size(); ++n) {
      for (std::uint32_t s : layer.successors(n)) cur[n] += next[s];
    }
    next = std::move(cur);
  }
  double total = 0.0;
  for (double v : next) total += v;
  return total;
}

DetectionReport brute_force_probability(const ConstraintGraph& graph, const TransitionModel& model,
                                         const ObjectProfile& profile, double path_cap) {
  const auto start = Clock::now();
  check_inputs(graph, model, profile);
  const double paths = path_count(graph);
  if (paths > path_cap) {
    throw ResourceCap("brute force over " + std::to_string(paths) + " paths exceeds the cap of " +
                      std::to_string(path_cap));
  }
  const int T = graph.ray_count();
  const auto det = detection_flags(graph, profile);

  struct Frame {
    int ray;
    std::uint32_t node;
    std::uint32_t next_edge;
    double prob;
    bool detected;
  };
  double total = 0.0;
  std::vector<Frame> stack;
  const auto& first = graph.layer(1);
  for (std::uint32_t n = 0; n < first.size(); ++n) {
    const bool d = det[0][first.nodes[n].prev_bin] || det[1][first.nodes[n].cur_bin];
    stack.push_back({1, n, first.offsets[n], model.initial[n], d});
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.ray == T - 1) {
        if (f.detected) total += f.prob;
        stack.pop_back();
        continue;
      }
      const auto& layer = graph.layer(f.ray);
      if (f.next_edge == layer.offsets[f.node + 1]) {
        stack.pop_back();
        continue;
      }
      const std::uint32_t e = f.next_edge++;
      const std::uint32_t s = layer.succ[e];
      const auto& next_layer = graph.layer(f.ray + 1);
      const bool d = f.detected || det[static_cast<std::size_t>(f.ray + 1)][next_layer.nodes[s].cur_bin];
      const double prob = f.prob * model.transition[static_cast<std::size_t>(f.ray)][e];
      stack.push_back({f.ray + 1, s, next_layer.offsets[s], prob, d});
    }
  }
  auto report = base_report(graph, model, Method::brute_force);
  report.probability = std::clamp(total, 0.0, 1.0);
  report.duration_s = seconds_since(start);
  return report;
}

std::pair<double, double> confidence_interval_95(std::uint64_t detections, std::uint64_t samples) {
  constexpr double z = 1.96;
  const double n = static_cast<double>(samples);
  const double p = static_cast<double>(detections) / n;
  // Wilson interval at the boundary reduces to these closed forms.
  if (detections == 0) return {0.0, z * z / (n + z * z)};
  if (detections == samples) return {n / (n + z * z), 1.0};
  const double half = z * std::sqrt(p * (1.0 - p) / n);
  return {std::max(0.0, p - half), std::min(1.0, p + half)};
}

DetectionReport monte_carlo_probability(const ConstraintGraph& graph, const TransitionModel& model,
                                        const ObjectProfile& profile, std::uint64_t samples, std::uint64_t seed,
                                        int threads) {
  const auto start = Clock::now();
  if (samples == 0) throw InvalidArgument("monte_carlo_probability: samples must be >= 1");
  check_inputs(graph, model, profile);
  const auto intensity_model = IntensityModel::from_config(graph.config());
  const auto& ranges = graph.ranges();
  const std::size_t T = static_cast<std::size_t>(graph.ray_count());

  auto run = [&](std::uint64_t begin, std::uint64_t end) {
    std::vector<int> bins(T);
    std::uint64_t hits = 0;
    for (std::uint64_t i = begin; i < end; ++i) {
      Rng rng = Rng::stream(seed, i);
      sample_path(graph, model, rng, bins);
      // Render the whole return; detection is the OR over rays.
      bool detected = false;
      for (std::size_t t = 0; t < T; ++t) {
        const double value = intensity(intensity_model, ranges[static_cast<std::size_t>(bins[t])], profile.surface[t]);
        detected = detected || value > intensity_model.tau;
      }
      hits += detected ? 1 : 0;
    }
    return hits;
  };

  const std::uint64_t workers =
      std::clamp<std::uint64_t>(static_cast<std::uint64_t>(std::max(threads, 1)), 1, samples);
  std::uint64_t detections = 0;
  if (workers == 1) {
    detections = run(0, samples);
  } else {
    std::vector<std::uint64_t> partial(workers, 0);
    std::vector<std::thread> pool;
    for (std::uint64_t w = 0; w < workers; ++w) {
      const std::uint64_t b = samples * w / workers, e = samples * (w + 1) / workers;
      pool.emplace_back([&, w, b, e] { partial[w] = run(b, e); });
    }
    for (auto& th : pool) th.join();
    for (auto v : partial) detections += v;
  }

  auto report = base_report(graph, model, Method::monte_carlo);
  report.probability = static_cast<double>(detections) / static_cast<double>(samples);
  report.samples = samples;
  report.detections = detections;
  report.seed = seed;
  const auto [lo, hi] = confidence_interval_95(detections, samples);
  report.ci_lo = lo;
  report.ci_hi = hi;
  report.duration_s = seconds_since(start);
  return report;
}

double multi_curtain_probability(double p, int n) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("multi_curtain_probability: p must lie in [0, 1]");
  if (n < 1) throw InvalidArgument("multi_curtain_probability: n must be >= 1");
  return 1.0 - std::pow(1.0 - p, n);
}

int curtains_needed(double p, double target) {
  if (!(p > 0.0 && p <= 1.0)) throw InvalidArgument("curtains_needed: p must lie in (0, 1]");
  if (!(target > 0.0 && target < 1.0)) throw InvalidArgument("curtains_needed: target must lie in (0, 1)");
  if (p == 1.0) return 1;
  int n = std::max(1, static_cast<int>(std::ceil(std::log1p(-target) / std::log1p(-p))));
  // The logarithm can land one off at exact boundaries; settle by evaluation.
  while (n > 1 && multi_curtain_probability(p, n - 1) >= target) --n;
  while (multi_curtain_probability(p, n) < target) ++n;
  return n;
}

std::vector<SweepPoint> area_sweep(const ConstraintGraph& graph, const TransitionModel& model, Vec2 center,
                                   double aspect, std::span<const double> areas, std::span<const double> yaws) {
  if (areas.empty()) throw InvalidArgument("area_sweep: no areas given");
  if (yaws.empty()) throw InvalidArgument("area_sweep: no orientations given");
  if (!(aspect > 0.0)) throw InvalidArgument("area_sweep: aspect must be positive");
  std::vector<SweepPoint> curve;
  for (double area : areas) {
    SweepPoint point{area, 0.0, yaws.size()};
    if (area > 0.0) {
      const double width = std::sqrt(area * aspect);
      const double depth = std::sqrt(area / aspect);
      double sum = 0.0;
      for (double yaw : yaws) {
        const Shape box = make_box(center, width, depth, yaw);
        const auto profile = raycast_profile(std::span<const Shape>(&box, 1), graph.config());
        sum += dp_detection_probability(graph, model, profile).probability;
      }
      point.mean_probability = sum / static_cast<double>(yaws.size());
    }
    curve.push_back(point);
  }
  return curve;
}

}  // namespace lcurtain
