#include <doctest.h>

#include <random>
#include <set>

#include "lcurtain/graph.hpp"
#include "support.hpp"

using namespace lcurtain;
using lctest::small_config;

namespace {

AngleTable table(int T, int K, const std::function<double(int, int)>& theta) {
  AngleTable a{T, K, {}};
  for (int t = 0; t < T; ++t) {
    for (int k = 0; k < K; ++k) a.theta.push_back(theta(t, k));
  }
  return a;
}

std::set<std::vector<int>> graph_paths(const ConstraintGraph& g) {
  std::set<std::vector<int>> out;
  const int T = g.ray_count();
  std::vector<int> seq(static_cast<std::size_t>(T));
  std::function<void(int, std::uint32_t)> walk = [&](int t, std::uint32_t n) {
    seq[static_cast<std::size_t>(t)] = g.layer(t).nodes[n].cur_bin;
    if (t == T - 1) {
      out.insert(seq);
      return;
    }
    for (auto s : g.layer(t).successors(n)) walk(t + 1, s);
  };
  for (std::uint32_t n = 0; n < g.node_count(1); ++n) {
    seq[0] = g.layer(1).nodes[n].prev_bin;
    walk(1, n);
  }
  return out;
}

}  // namespace

TEST_CASE("velocity check arithmetic") {
  DeviceConfig c = default_config();
  c.dt = 3.2552e-5;
  const double bound = 2.5e4 * 3.2552e-5;
  CHECK(c.velocity_bound() == doctest::Approx(0.81380));
  CHECK(within_velocity(0.0, 0.8, bound));
  CHECK_FALSE(within_velocity(0.0, 0.82, bound));
  CHECK(within_velocity(1.0, 1.0, 0.0));
  CHECK(within_velocity(0.25, 0.25 + 0.5, 0.5));  // equality is feasible

  const auto p0 = make_control_point(c, 10, 0, 3.0);
  const auto p1 = make_control_point(c, 11, 0, 3.0);
  const auto p3 = make_control_point(c, 13, 0, 3.0);
  CHECK(check_velocity(c, p0, p1));
  CHECK_THROWS_AS(check_velocity(c, p0, p3), InvalidArgument);
}

TEST_CASE("acceleration check arithmetic") {
  DeviceConfig c = default_config();
  c.dt = 3.2552e-5;
  const double bound = 1.5e7 * 3.2552e-5 * 3.2552e-5;
  CHECK(c.acceleration_bound() == doctest::Approx(1.58948e-2).epsilon(1e-5));
  CHECK(within_acceleration(0.0, 0.0, 0.015, bound));
  CHECK_FALSE(within_acceleration(0.0, 0.0, 0.017, bound));
  CHECK(within_acceleration(0.1, 0.2, 0.3, 0.0));

  const auto a = make_control_point(c, 5, 3, 4.0);
  const auto b = make_control_point(c, 6, 9, 6.0);
  const auto d = make_control_point(c, 7, 20, 9.0);
  CHECK(check_acceleration(c, a, b, d) == check_acceleration(c, d, b, a));
  CHECK_THROWS_AS(check_acceleration(c, a, d, b), InvalidArgument);
}

TEST_CASE("unconstrained limits give the complete graph") {
  const auto c = small_config(4, 3, 2.0, 2.0);
  const auto g = build_graph(c);
  for (int t = 1; t < 4; ++t) CHECK(g.node_count(t) == 9);
  for (int t = 1; t < 3; ++t) {
    CHECK(g.layer(t).succ.size() == 27);
    for (std::size_t n = 0; n < 9; ++n) CHECK(g.layer(t).successors(n).size() == 3);
  }
  const auto s = graph_stats(g);
  CHECK(s.total_nodes == 27);
  CHECK(s.total_edges == 54);
  CHECK(prune_graph(g) == g);
}

TEST_CASE("frozen galvo keeps only constant-angle curtains") {
  DeviceConfig c = small_config(5, 4, 2.0, 2.0);
  c.omega_max = 0.0;
  // Every ray sees the same angle ladder, so constant-angle curtains exist.
  const auto angles = table(5, 4, [](int, int k) { return 1.0 + 0.1 * k; });
  const auto g = build_graph(c, angles);
  for (int t = 1; t < 5; ++t) {
    CHECK(g.node_count(t) == 4);
    for (std::size_t n = 0; n < g.node_count(t); ++n) {
      CHECK(g.layer(t).nodes[n].prev_bin == g.layer(t).nodes[n].cur_bin);
      if (t < 4) CHECK(g.layer(t).successors(n).size() == 1);
    }
  }
  // With the real geometry no two rays share an angle on the grid.
  CHECK_THROWS_AS(build_graph(c), InfeasibleGraph);
}

TEST_CASE("edge set matches an exhaustive triple check") {
  DeviceConfig c = small_config(4, 3, 2.0, 2.0);
  c.omega_max = 0.35 / c.dt;
  c.alpha_max = 0.2 / (c.dt * c.dt);
  // Hand-chosen angle grid with uneven spacing per ray.
  const double th[4][3] = {{0.0, 0.3, 0.7}, {0.1, 0.2, 0.6}, {0.0, 0.35, 0.5}, {0.2, 0.4, 0.45}};
  const auto angles = table(4, 3, [&](int t, int k) { return th[t][k]; });
  const auto g = build_unpruned(c, angles);
  const double vb = c.velocity_bound(), ab = c.acceleration_bound();
  for (int t = 1; t < 4; ++t) {
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const bool node = std::abs(th[t][j] - th[t - 1][i]) <= vb;
        CHECK(g.find_node(t, i, j).has_value() == node);
        if (!node || t == 3) continue;
        const auto n = *g.find_node(t, i, j);
        std::set<int> expected, actual;
        for (int k = 0; k < 3; ++k) {
          if (std::abs(th[t + 1][k] - th[t][j]) <= vb && std::abs(th[t + 1][k] + th[t - 1][i] - 2 * th[t][j]) <= ab) {
            expected.insert(k);
          }
        }
        for (auto s : g.layer(t).successors(n)) {
          CHECK(g.layer(t + 1).nodes[s].prev_bin == j);
          actual.insert(g.layer(t + 1).nodes[s].cur_bin);
        }
        CHECK(actual == expected);
      }
    }
  }
}

TEST_CASE("paths are exactly the feasible curtains") {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> frac(0.3, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int T = 3 + trial % 4;
    const int K = 2 + (trial / 4) % 4;
    const auto c = small_config(T, K, frac(gen), frac(gen));
    std::set<std::vector<int>> feasible;
    lctest::for_each_sequence(T, K, [&](const std::vector<int>& s) {
      if (lctest::sequence_feasible(c, s)) feasible.insert(s);
    });
    if (feasible.empty()) {
      CHECK_THROWS_AS(build_graph(c), InfeasibleGraph);
      continue;
    }
    ++checked;
    const auto g = build_graph(c);
    CHECK(graph_paths(g) == feasible);
    for (const auto& s : feasible) CHECK(g.is_path(s));

    // Pruned node set = nodes used by some full feasible curtain.
    std::set<std::tuple<int, int, int>> used;
    for (const auto& s : feasible) {
      for (int t = 1; t < T; ++t) used.insert({t, s[static_cast<std::size_t>(t - 1)], s[static_cast<std::size_t>(t)]});
    }
    std::set<std::tuple<int, int, int>> nodes;
    for (int t = 1; t < T; ++t) {
      for (const auto& n : g.layer(t).nodes) nodes.insert({t, n.prev_bin, n.cur_bin});
    }
    CHECK(nodes == used);

    // Pruning the unpruned graph reaches the same fixpoint.
    CHECK(prune_graph(build_unpruned(c)) == g);
  }
  CHECK(checked >= 25);
}

TEST_CASE("pruned graph invariants and determinism") {
  const auto c = small_config(6, 5, 0.6, 0.5);
  const auto g = build_graph(c);
  const int T = g.ray_count();
  for (int t = 1; t < T - 1; ++t) {
    for (std::size_t n = 0; n < g.node_count(t); ++n) CHECK(!g.layer(t).successors(n).empty());
  }
  for (int t = 2; t < T; ++t) {
    std::vector<int> indeg(g.node_count(t), 0);
    for (auto s : g.layer(t - 1).succ) ++indeg[s];
    for (int d : indeg) CHECK(d >= 1);
  }
  for (int t = 1; t < T; ++t) {
    const auto& l = g.layer(t);
    CHECK(std::is_sorted(l.nodes.begin(), l.nodes.end(), [](auto a, auto b) {
      return std::pair(a.prev_bin, a.cur_bin) < std::pair(b.prev_bin, b.cur_bin);
    }));
    if (t + 1 < T) {
      for (std::size_t n = 0; n < l.size(); ++n) {
        const auto succ = l.successors(n);
        for (std::size_t i = 1; i < succ.size(); ++i) {
          CHECK(g.layer(t + 1).nodes[succ[i - 1]].cur_bin < g.layer(t + 1).nodes[succ[i]].cur_bin);
        }
      }
    }
  }
  CHECK(build_graph(c) == g);
  CHECK(g.is_pruned());
}

TEST_CASE("graph stats") {
  const auto c = small_config(6, 5, 0.6, 0.6);
  const auto g = build_graph(c);
  const auto s = graph_stats(g);
  std::size_t nodes = 0, edges = 0;
  for (int t = 1; t < g.ray_count(); ++t) {
    CHECK(s.nodes_per_ray[static_cast<std::size_t>(t)] == g.layer(t).nodes.size());
    nodes += g.layer(t).nodes.size();
    for (std::size_t n = 0; n < g.node_count(t); ++n) edges += g.layer(t).successors(n).size();
  }
  CHECK(s.total_nodes == nodes);
  CHECK(s.total_edges == edges);
  CHECK(s.total_nodes == g.total_nodes());
  CHECK(s.total_nodes <= static_cast<std::size_t>((6 - 1) * 25));
  CHECK(s.memory_bytes > 0);

  // An unpruned graph with no surviving path prunes to nothing.
  DeviceConfig z = small_config(5, 3, 2.0, 2.0);
  z.omega_max = 0.0;
  const auto empty = prune_graph(build_unpruned(z));
  const auto e = graph_stats(empty);
  CHECK(empty.empty());
  CHECK(e.total_nodes == 0);
  CHECK(e.total_edges == 0);
}

TEST_CASE("default graph respects the complexity bounds") {
  const auto c = default_config();
  const auto g = build_graph(c);
  const auto s = graph_stats(g);
  const std::size_t K = 64, T = 512;
  for (std::size_t t = 1; t < T; ++t) CHECK(s.nodes_per_ray[t] <= K * K);
  CHECK(s.total_nodes <= (T - 1) * K * K);
  CHECK(s.total_edges <= (T - 2) * K * K * K);
  CHECK(s.total_nodes > 0);
}

TEST_CASE("node lookup") {
  const auto g = build_graph(small_config(5, 4, 0.6, 0.6));
  for (int t = 1; t < 5; ++t) {
    for (std::uint32_t n = 0; n < g.node_count(t); ++n) {
      const auto& node = g.layer(t).nodes[n];
      CHECK(g.find_node(t, node.prev_bin, node.cur_bin) == n);
    }
  }
  CHECK(g.node_id(1, 0) == 0);
  CHECK(g.node_id(2, 0) == g.node_count(1));
}
