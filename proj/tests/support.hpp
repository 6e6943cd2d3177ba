#pragma once

// Test-side oracles. Everything here is computed independently of the code
// under test: exhaustive enumeration over the raw grid, a marching raycaster,
// closed-form statistics.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "lcurtain/certify.hpp"
#include "lcurtain/device.hpp"
#include "lcurtain/graph.hpp"
#include "lcurtain/sampling.hpp"
#include "lcurtain/scene.hpp"

namespace lctest {

using namespace lcurtain;

/// Small device with the galvo limits set to fractions of the largest
/// velocity/acceleration the grid can demand, so the constraints bind
/// partially. Fractions >= 1 leave the graph complete.
inline DeviceConfig small_config(int T, int K, double vel_frac, double acc_frac, double sigma = 0.5) {
  DeviceConfig c;
  c.ray_count = T;
  c.range_bins = K;
  c.fov = {deg_to_rad(-30.0), deg_to_rad(30.0)};
  c.range_min = 1.0;
  c.range_max = 1.0 + 1.5 * (K - 1);
  c.curtain_rate = 60.0;
  c.dt = (1.0 / 60.0) / T;
  c.intensity_sigma = sigma;
  c.omega_max = 1e30;
  c.alpha_max = 1e30;
  const auto angles = AngleTable::from_config(c);
  double max_v = 0.0, max_a = 0.0;
  for (int t = 1; t < T; ++t) {
    for (int i = 0; i < K; ++i) {
      for (int j = 0; j < K; ++j) {
        max_v = std::max(max_v, std::abs(angles.at(t, j) - angles.at(t - 1, i)));
        if (t + 1 < T) {
          for (int k = 0; k < K; ++k) {
            max_a = std::max(max_a, std::abs(angles.at(t + 1, k) + angles.at(t - 1, i) - 2 * angles.at(t, j)));
          }
        }
      }
    }
  }
  c.omega_max = vel_frac * max_v / c.dt;
  c.alpha_max = acc_frac * max_a / (c.dt * c.dt);
  return c;
}

/// Every bin sequence (one per ray) over the raw grid, K^T of them.
inline void for_each_sequence(int T, int K, const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> seq(static_cast<std::size_t>(T), 0);
  while (true) {
    fn(seq);
    int t = T - 1;
    while (t >= 0 && ++seq[static_cast<std::size_t>(t)] == K) seq[static_cast<std::size_t>(t--)] = 0;
    if (t < 0) return;
  }
}

/// Laser angle recomputed from scratch: laser at (baseline, 0).
inline double oracle_theta(const DeviceConfig& c, int ray, int bin) {
  const double phi = c.fov[0] + (c.fov[1] - c.fov[0]) * ray / (c.ray_count - 1);
  const double r = c.range_min + (c.range_max - c.range_min) * bin / (c.range_bins - 1);
  return std::atan2(r * std::cos(phi), r * std::sin(phi) - c.baseline);
}

/// Velocity and acceleration limits checked directly from control points.
inline bool oracle_feasible(const DeviceConfig& c, const std::vector<ControlPoint>& p) {
  auto th = [&](const ControlPoint& q) { return std::atan2(q.z, q.x - c.baseline); };
  for (std::size_t t = 1; t < p.size(); ++t) {
    if (!(std::abs(th(p[t]) - th(p[t - 1])) <= c.omega_max * c.dt)) return false;
    if (t + 1 < p.size() &&
        !(std::abs(th(p[t + 1]) + th(p[t - 1]) - 2.0 * th(p[t])) <= c.alpha_max * c.dt * c.dt)) {
      return false;
    }
  }
  return true;
}

inline bool sequence_feasible(const DeviceConfig& c, const std::vector<int>& seq) {
  std::vector<ControlPoint> pts;
  const auto ranges = range_grid(c);
  for (std::size_t t = 0; t < seq.size(); ++t) {
    pts.push_back(make_control_point(c, static_cast<int>(t), seq[t], ranges[static_cast<std::size_t>(seq[t])]));
  }
  return oracle_feasible(c, pts);
}

/// Probability of a bin sequence under a model, read edge by edge; 0 if the
/// sequence is not a graph path.
inline double sequence_probability(const ConstraintGraph& g, const TransitionModel& m, const std::vector<int>& seq) {
  auto node = g.find_node(1, seq[0], seq[1]);
  if (!node) return 0.0;
  double p = m.initial[*node];
  for (int t = 1; t + 1 < g.ray_count(); ++t) {
    auto next = g.find_node(t + 1, seq[static_cast<std::size_t>(t)], seq[static_cast<std::size_t>(t + 1)]);
    if (!next) return 0.0;
    const auto succ = g.layer(t).successors(*node);
    const auto it = std::find(succ.begin(), succ.end(), *next);
    if (it == succ.end()) return 0.0;
    p *= m.successors(g, t, *node)[static_cast<std::size_t>(it - succ.begin())];
    node = next;
  }
  return p;
}

inline bool oracle_detects(const DeviceConfig& c, double range, std::optional<double> surface) {
  if (!surface) return false;
  const double d = range - *surface;
  double i = c.intensity_peak * std::exp(-d * d / (2 * c.intensity_sigma * c.intensity_sigma));
  if (c.intensity_attenuation) i *= (c.range_min / range) * (c.range_min / range);
  return i > c.tau;
}

/// Σ over all K^T sequences of P(sequence)·[sequence detects].
inline double enumerate_probability(const ConstraintGraph& g, const TransitionModel& m, const ObjectProfile& prof) {
  const auto& c = g.config();
  const auto ranges = range_grid(c);
  double total = 0.0;
  for_each_sequence(c.ray_count, c.range_bins, [&](const std::vector<int>& seq) {
    const double p = sequence_probability(g, m, seq);
    if (p == 0.0) return;
    bool hit = false;
    for (std::size_t t = 0; t < seq.size(); ++t) hit = hit || oracle_detects(c, ranges[static_cast<std::size_t>(seq[t])], prof.surface[t]);
    if (hit) total += p;
  });
  return total;
}

inline bool point_in_polygon(const std::vector<Vec2>& poly, Vec2 p) {
  // Winding number.
  int wn = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 a = poly[i], b = poly[(i + 1) % poly.size()];
    const double side = (b.x - a.x) * (p.z - a.z) - (p.x - a.x) * (b.z - a.z);
    if (a.z <= p.z) {
      if (b.z > p.z && side > 0) ++wn;
    } else if (b.z <= p.z && side < 0) {
      --wn;
    }
  }
  return wn != 0;
}

/// First entry of the ray at angle phi into `poly`: march in small steps,
/// then bisect the bracketing step.
inline std::optional<double> march_hit(const std::vector<Vec2>& poly, double phi, double r_max, double step = 1e-3) {
  const Vec2 d{std::sin(phi), std::cos(phi)};
  auto inside = [&](double r) { return point_in_polygon(poly, {r * d.x, r * d.z}); };
  if (inside(0.0)) return 0.0;
  for (double r = step; r <= r_max + step; r += step) {
    if (inside(r)) {
      double lo = r - step, hi = r;
      for (int i = 0; i < 200 && hi - lo > 1e-14; ++i) {
        const double mid = 0.5 * (lo + hi);
        (inside(mid) ? hi : lo) = mid;
      }
      return hi;
    }
  }
  return std::nullopt;
}

/// Asymptotic Kolmogorov–Smirnov p-value for a one-sample statistic D on n draws.
inline double ks_pvalue(double D, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * D;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// One-sample KS statistic of `u` against Uniform[0, 1].
inline double ks_uniform(std::vector<double> u) {
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double D = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    D = std::max(D, std::max((i + 1) / n - u[i], u[i] - i / n));
  }
  return D;
}

/// Random shapes placed somewhere in front of the device.
inline std::vector<Shape> random_scene(const DeviceConfig& c, std::mt19937_64& gen) {
  std::uniform_int_distribution<int> count(0, 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Shape> shapes;
  const int n = count(gen);
  for (int i = 0; i < n; ++i) {
    const double phi = c.fov[0] + (c.fov[1] - c.fov[0]) * u(gen);
    const double r = c.range_min + (c.range_max - c.range_min) * u(gen);
    const Vec2 center{r * std::sin(phi), r * std::cos(phi)};
    if (u(gen) < 0.5) {
      shapes.push_back(make_box(center, 0.2 + 3.0 * u(gen), 0.2 + 3.0 * u(gen), 2 * std::numbers::pi * u(gen)));
    } else {
      shapes.push_back(make_disc(center, 0.1 + 1.5 * u(gen)));
    }
  }
  return shapes;
}

}  // namespace lctest
