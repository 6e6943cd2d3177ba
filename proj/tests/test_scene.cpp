#include <doctest.h>

#include <limits>

#include <cmath>
#include <numbers>
#include <random>

#include "lcurtain/certify.hpp"
#include "lcurtain/scene.hpp"
#include "support.hpp"

using namespace lcurtain;
using lctest::small_config;

namespace {

std::vector<Vec2> polygon_of(const Shape& s) {
  if (const auto* b = std::get_if<Box>(&s.geometry)) return box_corners(*b);
  if (const auto* p = std::get_if<Polygon>(&s.geometry)) return p->vertices;
  const auto& d = std::get<Disc>(s.geometry);
  std::vector<Vec2> out;
  for (int i = 0; i < 20000; ++i) {
    const double a = 2 * std::numbers::pi * i / 20000;
    out.push_back({d.center.x + d.radius * std::cos(a), d.center.z + d.radius * std::sin(a)});
  }
  return out;
}

IntensityModel unit_model(double sigma, double tau) {
  IntensityModel m;
  m.peak = 1.0;
  m.sigma = sigma;
  m.tau = tau;
  return m;
}

}  // namespace

TEST_CASE("empty scene gives an absent profile") {
  const auto c = small_config(7, 4, 2.0, 2.0);
  const auto p = raycast_profile({}, c);
  CHECK(p.size() == 7);
  CHECK_FALSE(p.any());
  CHECK_FALSE(empty_profile(c).any());
}

TEST_CASE("disc on the central ray") {
  auto c = small_config(3, 4, 2.0, 2.0);
  c.range_max = 20.0;
  const std::vector<Shape> shapes{make_disc({0.0, 10.0}, 1.0)};
  const auto p = raycast_profile(shapes, c);
  REQUIRE(p.surface[1].has_value());
  CHECK(*p.surface[1] == doctest::Approx(9.0).epsilon(1e-12));
  CHECK_FALSE(p.surface[0].has_value());
  CHECK_FALSE(p.surface[2].has_value());
}

TEST_CASE("box profile matches a marching raycaster") {
  const auto c = default_config();
  const std::vector<Shape> shapes{canonical_object(2.0, 2.0, {0.0, 10.0})};
  const auto p = raycast_profile(shapes, c);
  const auto poly = polygon_of(shapes[0]);
  int hits = 0;
  for (int t = 0; t < c.ray_count; ++t) {
    const auto oracle = lctest::march_hit(poly, ray_angle(c, t), c.range_max);
    REQUIRE(p.surface[static_cast<std::size_t>(t)].has_value() == oracle.has_value());
    if (!oracle) continue;
    ++hits;
    CHECK(std::abs(*p.surface[static_cast<std::size_t>(t)] - *oracle) <= 1e-9);
  }
  // Front face spans ±1 m at 9 m: about ±6.3°, i.e. ~160 rays at 0.08°.
  CHECK(hits > 150);
  CHECK(hits < 170);
}

TEST_CASE("random shapes match the marching raycaster") {
  auto c = small_config(41, 4, 2.0, 2.0);
  c.range_max = 20.0;
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 10; ++trial) {
    auto shapes = lctest::random_scene(c, gen);
    shapes.push_back(make_polygon({{-2.0, 6.0}, {1.0, 5.0}, {3.0, 9.0}, {0.5, 7.0}, {-1.0, 11.0}}));
    const auto p = raycast_profile(shapes, c);
    for (int t = 0; t < c.ray_count; ++t) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& s : shapes) {
        const auto h = lctest::march_hit(polygon_of(s), ray_angle(c, t), c.range_max, 2e-3);
        if (h) best = std::min(best, *h);
      }
      const bool hit = best <= c.range_max;
      const auto got = p.surface[static_cast<std::size_t>(t)];
      REQUIRE(got.has_value() == hit);
      // Discs are polygonized in the oracle; the chord error bounds the tolerance.
      if (hit) CHECK(std::abs(*got - std::max(best, c.range_min)) <= 1e-4);
    }
  }
}

TEST_CASE("occlusion only lowers the profile") {
  const auto c = default_config();
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 10; ++trial) {
    auto shapes = lctest::random_scene(c, gen);
    const auto before = raycast_profile(shapes, c);
    shapes.push_back(make_disc({0.5, 7.0}, 0.8));
    const auto after = raycast_profile(shapes, c);
    for (std::size_t t = 0; t < before.size(); ++t) {
      if (before.surface[t]) {
        REQUIRE(after.surface[t].has_value());
        CHECK(*after.surface[t] <= *before.surface[t]);
      }
    }
  }
}

TEST_CASE("hits closer than range_min are clipped") {
  const auto c = default_config();
  const std::vector<Shape> shapes{make_disc({0.0, 0.0}, 0.5)};
  const auto p = raycast_profile(shapes, c);
  for (const auto& s : p.surface) {
    REQUIRE(s.has_value());
    CHECK(*s == c.range_min);
  }
}

TEST_CASE("intensity model") {
  const auto m = unit_model(0.1, 0.5);
  CHECK(intensity(m, 5.0, 5.0) == 1.0);
  CHECK(intensity(m, 5.0, std::nullopt) == 0.0);
  CHECK(intensity(m, 5.1, 5.0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(intensity(m, 5.1, 5.0) == doctest::Approx(0.60653).epsilon(1e-5));
  CHECK(intensity(m, 4.9, 5.0) == doctest::Approx(intensity(m, 5.1, 5.0)).epsilon(1e-12));
  double prev = 1.0;
  for (int i = 1; i < 50; ++i) {
    const double v = intensity(m, 5.0 + 0.01 * i, 5.0);
    CHECK(v < prev);
    prev = v;
  }
  // Ray index does not matter, only the miss distance.
  const auto c = default_config();
  const auto a = make_control_point(c, 3, 10, range_grid(c)[10]);
  const auto b = make_control_point(c, 400, 10, range_grid(c)[10]);
  CHECK(intensity(c, a, a.range + 0.05) == intensity(c, b, b.range + 0.05));
}

TEST_CASE("detection threshold") {
  const auto m = unit_model(0.1, 0.5);
  CHECK(m.detection_radius() == doctest::Approx(0.1 * std::sqrt(2 * std::log(2.0))).epsilon(1e-12));
  CHECK(m.detection_radius() == doctest::Approx(0.11774).epsilon(1e-4));
  CHECK(detect(m, 5.11, 5.0));
  CHECK_FALSE(detect(m, 5.12, 5.0));
  CHECK_FALSE(detect(m, 5.0, std::nullopt));
  auto high = unit_model(0.1, 1.0);
  CHECK_FALSE(detect(high, 5.0, 5.0));
  CHECK(high.detection_radius() == 0.0);
  high.tau = 2.0;
  CHECK_FALSE(detect(high, 5.0, 5.0));

  // detect <=> |d| < d_det across a dense sweep.
  const double r = m.detection_radius();
  for (int i = -400; i <= 400; ++i) {
    const double d = 0.0005 * i;
    if (std::abs(std::abs(d) - r) < 1e-9) continue;
    CHECK(detect(m, 5.0 + d, 5.0) == (std::abs(d) < r));
  }
}

TEST_CASE("curtain return") {
  const auto c = small_config(8, 5, 2.0, 2.0);
  const auto g = build_graph(c);
  const auto ranges = range_grid(c);
  const std::vector<int> bins{0, 1, 2, 3, 4, 3, 2, 1};
  const auto curtain = make_curtain(g, bins);

  ObjectProfile on;
  for (std::size_t t = 0; t < 8; ++t) on.surface.push_back(t % 2 ? std::optional<double>(ranges[static_cast<std::size_t>(bins[t])]) : std::nullopt);
  const auto r = curtain_return(c, curtain, on);
  for (std::size_t t = 0; t < 8; ++t) {
    CHECK(static_cast<bool>(r.detected[t]) == static_cast<bool>(t % 2));
    CHECK(r.intensity[t] == (t % 2 ? c.intensity_peak : 0.0));
  }
  CHECK(r.any_detection);

  const auto none = curtain_return(c, curtain, empty_profile(c));
  CHECK_FALSE(none.any_detection);
  for (double v : none.intensity) CHECK(v == 0.0);

  ObjectProfile short_profile;
  short_profile.surface.resize(3);
  CHECK_THROWS_AS(curtain_return(c, curtain, short_profile), Mismatch);
}

TEST_CASE("random curtains against a box: detection flag matches the oracle") {
  const auto c = default_config();
  const auto g = build_graph(c);
  const auto m = area_setpoint_model(g);
  const std::vector<Shape> shapes{canonical_object(2.0, 2.0, {0.0, 10.0})};
  const auto poly = polygon_of(shapes[0]);
  std::vector<std::optional<double>> surface;
  for (int t = 0; t < c.ray_count; ++t) surface.push_back(lctest::march_hit(poly, ray_angle(c, t), c.range_max));
  const auto profile = raycast_profile(shapes, c);
  const double d_det = IntensityModel::from_config(c).detection_radius();
  int positives = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto curtain = sample_curtain(g, m, seed);
    bool expected = false;
    for (std::size_t t = 0; t < curtain.size(); ++t) {
      if (surface[t]) expected = expected || std::abs(curtain.points[t].range - *surface[t]) < d_det;
    }
    const bool got = curtain_return(c, curtain, profile).any_detection;
    CHECK(got == expected);
    positives += got;
  }
  CHECK(positives > 100);
}

TEST_CASE("canonical objects") {
  const auto s = canonical_object(2.0, 2.0, {0.0, 10.0});
  auto corners = box_corners(std::get<Box>(s.geometry));
  REQUIRE(corners.size() == 4);
  std::vector<std::pair<double, double>> got, want{{-1, 9}, {-1, 11}, {1, 9}, {1, 11}};
  for (const auto& v : corners) got.push_back({std::round(v.x * 1e9) / 1e9, std::round(v.z * 1e9) / 1e9});
  std::sort(got.begin(), got.end());
  CHECK(got == want);

  const auto c = default_config();
  const std::vector<Shape> a{canonical_object(2.0, 2.0, {0.0, 10.0})};
  const std::vector<Shape> b{canonical_object(2.0, 2.0, {0.0, 10.0}, std::numbers::pi / 2)};
  const auto pa = raycast_profile(a, c), pb = raycast_profile(b, c);
  for (std::size_t t = 0; t < pa.size(); ++t) {
    REQUIRE(pa.surface[t].has_value() == pb.surface[t].has_value());
    if (pa.surface[t]) CHECK(*pa.surface[t] == doctest::Approx(*pb.surface[t]).epsilon(1e-12));
  }

  CHECK_THROWS_AS(canonical_object(0.0, 1.0, {0.0, 5.0}), InvalidArgument);
  CHECK_THROWS_AS(canonical_object(1.0, -1.0, {0.0, 5.0}), InvalidArgument);
}

TEST_CASE("pedestrian-sized box is detected less often than a car-sized box") {
  const auto c = default_config();
  const auto g = build_graph(c);
  const auto m = area_setpoint_model(g);
  const std::vector<Shape> ped{canonical_object(0.6, 0.6, {0.0, 10.0})};
  const std::vector<Shape> car{canonical_object(1.8, 4.2, {0.0, 10.0})};
  const double p_ped = dp_detection_probability(g, m, raycast_profile(ped, c)).probability;
  const double p_car = dp_detection_probability(g, m, raycast_profile(car, c)).probability;
  MESSAGE("pedestrian " << p_ped << " car " << p_car);
  CHECK(p_ped < p_car);
}

TEST_CASE("shape validation") {
  CHECK_THROWS_AS(make_polygon({{0, 1}, {1, 1}}).validate(), InvalidArgument);
  // Bow tie.
  CHECK_THROWS_AS(make_polygon({{0, 0}, {1, 1}, {1, 0}, {0, 1}}).validate(), InvalidArgument);
  CHECK_NOTHROW(make_polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}}).validate());
  CHECK_THROWS_AS(make_disc({0, 5}, 0.0).validate(), InvalidArgument);
  CHECK_THROWS_AS(make_box({0, 5}, 1.0, 0.0).validate(), InvalidArgument);
  CHECK(is_simple_polygon(std::vector<Vec2>{{0, 0}, {2, 0}, {1, 2}}));
  CHECK_FALSE(is_simple_polygon(std::vector<Vec2>{{0, 0}, {2, 2}, {2, 0}, {0, 2}}));
}

TEST_CASE("trajectories interpolate linearly and hold at the ends") {
  Shape s = make_disc({0.0, 10.0}, 0.5);
  s.trajectory = {{10, {0.0, 0.0}}, {20, {2.0, -4.0}}};
  CHECK(s.offset_at(0) == Vec2{0.0, 0.0});
  CHECK(s.offset_at(15).x == doctest::Approx(1.0));
  CHECK(s.offset_at(15).z == doctest::Approx(-2.0));
  CHECK(s.offset_at(30) == Vec2{2.0, -4.0});
  const auto posed = s.posed(20);
  CHECK(posed.trajectory.empty());
  CHECK(std::get<Disc>(posed.geometry).center == Vec2{2.0, 6.0});
}

TEST_CASE("scene frames and ground-truth envelopes") {
  const auto c = default_config();
  Scene scene;
  scene.num_frames = 30;
  Shape late = make_disc({0.0, 8.0}, 1.0);
  late.first_frame = 20;
  scene.shapes = {late};

  const auto f0 = scene_frame(scene, c, 0);
  CHECK(f0.shapes.empty());
  for (double e : f0.envelope) CHECK(e == c.range_max);

  const auto f25 = scene_frame(scene, c, 25);
  REQUIRE(f25.shapes.size() == 1);
  for (std::size_t t = 0; t < f25.envelope.size(); ++t) {
    CHECK(f25.envelope[t] == f25.profile.surface[t].value_or(c.range_max));
  }
  CHECK(*std::min_element(f25.envelope.begin(), f25.envelope.end()) < 7.1);

  scene.background_depth = 12.0;
  for (double e : scene_frame(scene, c, 0).envelope) CHECK(e == 12.0);

  CHECK_THROWS_AS(scene_frame(scene, c, 30), InvalidArgument);
  CHECK_THROWS_AS(scene_frame(scene, c, -1), InvalidArgument);

  Scene explicit_scene;
  explicit_scene.explicit_frames = {{}, {make_disc({0.0, 5.0}, 0.5)}};
  CHECK(explicit_scene.frame_count() == 2);
  CHECK(scene_frame(explicit_scene, c, 1).profile.any());
  CHECK_FALSE(scene_frame(explicit_scene, c, 0).profile.any());
}
