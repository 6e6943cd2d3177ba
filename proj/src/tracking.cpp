#include "lcurtain/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lcurtain {

SafetyEnvelope envelope_from_depthmap(const DepthMap& map, const MaskParams& mask, const DeviceConfig& config) {
  if (map.cols != config.ray_count) {
    throw Mismatch("depth map has " + std::to_string(map.cols) + " columns, device has " +
                   std::to_string(config.ray_count) + " rays");
  }
  const std::size_t n = static_cast<std::size_t>(map.rows) * static_cast<std::size_t>(map.cols);
  if (map.rows < 0 || map.depth.size() != n || map.height.size() != n) {
    throw InvalidArgument("depth map buffers do not match rows x cols");
  }
  const double bg = std::clamp(mask.background.value_or(config.range_max), config.range_min, config.range_max);
  SafetyEnvelope e(static_cast<std::size_t>(map.cols), bg);
  for (int c = 0; c < map.cols; ++c) {
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < map.rows; ++r) {
      const double h = map.height_at(r, c);
      const double d = map.depth_at(r, c);
      if (h <= mask.ground_clearance || h > mask.max_height) continue;
      if (!(d > 0.0) || !std::isfinite(d)) continue;
      best = std::min(best, d);
    }
    if (std::isfinite(best)) e[static_cast<std::size_t>(c)] = std::clamp(best, config.range_min, config.range_max);
  }
  return e;
}

SafetyEnvelope ground_truth_envelope(const SceneFrame& frame) { return frame.envelope; }

SafetyEnvelope handcrafted_forecast(const TrackerState& state, const DeviceConfig& config) {
  if (state.estimate.size() != state.last_return.size()) throw Mismatch("estimate and return lengths differ");
  SafetyEnvelope out(state.estimate.size());
  for (std::size_t t = 0; t < out.size(); ++t) {
    const double e = state.last_return[t] > state.tau ? state.estimate[t] - state.params.delta_near
                                                      : state.estimate[t] + state.params.delta_far;
    out[t] = std::clamp(e, config.range_min, config.range_max);
  }
  return out;
}

Curtain feasibilize(const ConstraintGraph& graph, std::span<const double> envelope) {
  if (graph.empty()) throw InfeasibleGraph("feasibilize: empty graph");
  const int T = graph.ray_count();
  if (envelope.size() != static_cast<std::size_t>(T)) throw Mismatch("feasibilize: envelope length != ray_count");
  const auto& r = graph.ranges();

  // cost_to_go[t][n]: cheapest cost of rays t..T-1 from node n; choice[t][n]: successor edge taken.
  std::vector<std::vector<double>> cost_to_go(static_cast<std::size_t>(T));
  std::vector<std::vector<std::uint32_t>> choice(static_cast<std::size_t>(T));
  {
    const auto& last = graph.layer(T - 1);
    auto& c = cost_to_go[static_cast<std::size_t>(T - 1)];
    c.resize(last.size());
    for (std::size_t n = 0; n < last.size(); ++n) c[n] = std::abs(r[last.nodes[n].cur_bin] - envelope[T - 1]);
  }
  for (int t = T - 2; t >= 1; --t) {
    const auto& layer = graph.layer(t);
    const auto& next = cost_to_go[static_cast<std::size_t>(t + 1)];
    auto& c = cost_to_go[static_cast<std::size_t>(t)];
    auto& ch = choice[static_cast<std::size_t>(t)];
    c.resize(layer.size());
    ch.resize(layer.size());
    for (std::size_t n = 0; n < layer.size(); ++n) {
      double best = std::numeric_limits<double>::infinity();
      std::uint32_t arg = 0;
      for (std::uint32_t e = layer.offsets[n]; e < layer.offsets[n + 1]; ++e) {
        if (next[layer.succ[e]] < best) {
          best = next[layer.succ[e]];
          arg = e;
        }
      }
      c[n] = std::abs(r[layer.nodes[n].cur_bin] - envelope[static_cast<std::size_t>(t)]) + best;
      ch[n] = arg;
    }
  }

  const auto& first = graph.layer(1);
  const auto& c1 = cost_to_go[1];
  double best = std::numeric_limits<double>::infinity();
  std::uint32_t node = 0;
  for (std::uint32_t n = 0; n < first.size(); ++n) {
    const double total = std::abs(r[first.nodes[n].prev_bin] - envelope[0]) + c1[n];
    if (total < best) {
      best = total;
      node = n;
    }
  }
  std::vector<int> bins(static_cast<std::size_t>(T));
  bins[0] = first.nodes[node].prev_bin;
  bins[1] = first.nodes[node].cur_bin;
  for (int t = 1; t + 1 < T; ++t) {
    node = graph.layer(t).succ[choice[static_cast<std::size_t>(t)][node]];
    bins[static_cast<std::size_t>(t + 1)] = graph.layer(t + 1).nodes[node].cur_bin;
  }
  return make_curtain(graph, bins);
}

double envelope_cost(const Curtain& curtain, std::span<const double> envelope) {
  if (curtain.size() != envelope.size()) throw Mismatch("envelope_cost: length mismatch");
  double s = 0.0;
  for (std::size_t t = 0; t < envelope.size(); ++t) s += std::abs(curtain.points[t].range - envelope[t]);
  return s;
}

Curtain random_override(const ConstraintGraph& graph, const Curtain& forecast,
                        std::span<const CurtainReading> random_returns, double tau) {
  const std::size_t T = static_cast<std::size_t>(graph.ray_count());
  if (forecast.size() != T) throw Mismatch("random_override: forecast length != ray_count");
  std::vector<double> target = forecast.ranges();
  for (const auto& reading : random_returns) {
    if (reading.curtain.size() != T || reading.intensity.size() != T) {
      throw Mismatch("random_override: random curtain length != ray_count");
    }
    for (std::size_t t = 0; t < T; ++t) {
      if (reading.intensity[t] > tau) target[t] = reading.curtain.points[t].range;
    }
  }
  return feasibilize(graph, target);
}

std::string_view to_string(Policy policy) {
  switch (policy) {
    case Policy::handcrafted: return "handcrafted";
    case Policy::handcrafted_random: return "handcrafted+random";
    case Policy::random_only: return "random_only";
  }
  return "handcrafted";
}

Policy parse_policy(std::string_view text) {
  if (text == "handcrafted") return Policy::handcrafted;
  if (text == "handcrafted+random" || text == "handcrafted_random") return Policy::handcrafted_random;
  if (text == "random_only" || text == "random") return Policy::random_only;
  throw InvalidArgument("unknown policy '" + std::string(text) + "'");
}

MetricReport depth_metrics(std::span<const double> pred, std::span<const double> gt) {
  if (pred.size() != gt.size() || pred.empty()) throw InvalidArgument("depth_metrics: length mismatch or empty");
  const double n = static_cast<double>(pred.size());
  double huber = 0, sq = 0, log_sq = 0, u_sum = 0, abs_rel = 0, sq_rel = 0;
  double t1 = 0, t2 = 0, t3 = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = pred[i], g = gt[i];
    if (!(p > 0.0) || !(g > 0.0)) throw InvalidArgument("depth_metrics: depths must be positive");
    const double diff = p - g;
    const double a = std::abs(diff);
    huber += a <= kHuberDelta ? 0.5 * diff * diff : kHuberDelta * (a - 0.5 * kHuberDelta);
    sq += diff * diff;
    const double u = std::log(p) - std::log(g);
    log_sq += u * u;
    u_sum += u;
    abs_rel += a / g;
    sq_rel += diff * diff / g;
    const double ratio = std::max(p / g, g / p);
    t1 += ratio < 1.25 ? 1 : 0;
    t2 += ratio < 1.25 * 1.25 ? 1 : 0;
    t3 += ratio < 1.25 * 1.25 * 1.25 ? 1 : 0;
  }
  MetricReport m;
  m.huber = huber / n;
  m.rmse_linear = std::sqrt(sq / n);
  m.rmse_log = std::sqrt(log_sq / n);
  // Centered second pass: E[u²] − E[u]² cancels badly when u is nearly constant.
  const double mean_u = u_sum / n;
  double centered = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double u = std::log(pred[i]) - std::log(gt[i]) - mean_u;
    centered += u * u;
  }
  m.rmse_log_scale_inv = std::sqrt(centered / n);
  m.abs_rel = abs_rel / n;
  m.sq_rel = sq_rel / n;
  m.thresh_1 = t1 / n;
  m.thresh_2 = t2 / n;
  m.thresh_3 = t3 / n;
  return m;
}

MetricReport mean_metrics(std::span<const MetricReport> reports) {
  if (reports.empty()) throw InvalidArgument("mean_metrics: no reports");
  MetricReport m{0, 0, 0, 0, 0, 0, 0, 0, 0};
  for (const auto& r : reports) {
    m.huber += r.huber;
    m.rmse_linear += r.rmse_linear;
    m.rmse_log += r.rmse_log;
    m.rmse_log_scale_inv += r.rmse_log_scale_inv;
    m.abs_rel += r.abs_rel;
    m.sq_rel += r.sq_rel;
    m.thresh_1 += r.thresh_1;
    m.thresh_2 += r.thresh_2;
    m.thresh_3 += r.thresh_3;
  }
  const double n = static_cast<double>(reports.size());
  for (double* v : {&m.huber, &m.rmse_linear, &m.rmse_log, &m.rmse_log_scale_inv, &m.abs_rel, &m.sq_rel,
                    &m.thresh_1, &m.thresh_2, &m.thresh_3}) {
    *v /= n;
  }
  return m;
}

namespace {

CurtainReading image(const DeviceConfig& config, Curtain curtain, const ObjectProfile& profile) {
  auto ret = curtain_return(config, curtain, profile);
  return {std::move(curtain), std::move(ret.intensity)};
}

}  // namespace

EpisodeResult run_episode(const ConstraintGraph& graph, const TransitionModel& model, const Scene& scene,
                          const EpisodeOptions& options) {
  const auto& config = graph.config();
  if (options.horizon < 1) throw InvalidArgument("run_episode: horizon must be >= 1");
  if (options.horizon > scene.frame_count()) {
    throw InvalidArgument("run_episode: horizon " + std::to_string(options.horizon) + " exceeds the scene's " +
                          std::to_string(scene.frame_count()) + " frames");
  }
  model.check_aligned(graph);
  const auto& params = options.params;
  const int k = options.policy == Policy::handcrafted ? 0 : std::max(0, params.random_curtains);

  EpisodeResult result;
  SafetyEnvelope estimate;
  std::vector<MetricReport> per_frame;
  for (int f = 0; f < options.horizon; ++f) {
    const SceneFrame frame = scene_frame(scene, config, f);
    if (f == 0) estimate = frame.envelope;

    FrameRecord rec;
    rec.frame = f;
    rec.estimate = estimate;
    rec.gt = frame.envelope;
    rec.metrics = depth_metrics(rec.estimate, rec.gt);

    std::vector<CurtainReading> randoms;
    for (int i = 0; i < k; ++i) {
      Rng rng = Rng::stream(options.seed, static_cast<std::uint64_t>(f) * static_cast<std::uint64_t>(k) +
                                              static_cast<std::uint64_t>(i));
      randoms.push_back(image(config, sample_curtain(graph, model, rng), frame.profile));
    }

    SafetyEnvelope next(estimate.size());
    if (options.policy == Policy::random_only) {
      for (std::size_t t = 0; t < next.size(); ++t) {
        next[t] = std::clamp(estimate[t] + params.delta_far, config.range_min, config.range_max);
      }
      for (const auto& r : randoms) {
        for (std::size_t t = 0; t < next.size(); ++t) {
          if (r.intensity[t] > config.tau) next[t] = r.curtain.points[t].range;
        }
      }
      for (auto& r : randoms) {
        rec.curtains.push_back(std::move(r.curtain));
        rec.returns.push_back(std::move(r.intensity));
      }
    } else {
      Curtain placed = feasibilize(graph, estimate);
      if (!randoms.empty()) placed = random_override(graph, placed, randoms, config.tau);
      const CurtainReading imaged = image(config, std::move(placed), frame.profile);
      TrackerState state{imaged.curtain.ranges(), imaged.intensity, f, params, config.tau};
      next = handcrafted_forecast(state, config);
      for (auto& r : randoms) {
        rec.curtains.push_back(std::move(r.curtain));
        rec.returns.push_back(std::move(r.intensity));
      }
      rec.curtains.push_back(imaged.curtain);
      rec.returns.push_back(imaged.intensity);
    }
    per_frame.push_back(rec.metrics);
    result.frames.push_back(std::move(rec));
    estimate = std::move(next);
  }
  result.summary = mean_metrics(per_frame);
  return result;
}

}  // namespace lcurtain
