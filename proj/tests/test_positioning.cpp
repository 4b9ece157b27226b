#include <doctest.h>

#include <cmath>
#include <numbers>

#include "vlp/error.hpp"
#include "vlp/io.hpp"
#include "vlp/positioning.hpp"
#include "vlp/rng.hpp"

using namespace vlp;

namespace {

RangingParams default_params() { return RangingParams::from_scenario(default_bundle().scenario); }

// Coaxial-orientation forward power model, written out independently.
double forward_power(double distance, const RangingParams& p) {
  const double cos_angle = p.height_gap / distance;
  return (p.lambertian_order + 1) * p.area / (2 * std::numbers::pi * distance * distance) *
         std::pow(cos_angle, p.lambertian_order) * p.filter_gain * p.concentrator_gain *
         cos_angle * p.transmit_power;
}

Anchor anchor_at(double x, double y, double range, int id = 0) {
  Anchor a;
  a.luminaire_id = id;
  a.x = x;
  a.y = y;
  a.power = 1.0;
  a.range = range;
  return a;
}

std::vector<Anchor> ranged_anchors(const std::vector<Vec3>& sites, double px, double py) {
  std::vector<Anchor> anchors;
  int id = 1;
  for (const auto& s : sites)
    anchors.push_back(anchor_at(s.x, s.y, std::hypot(s.x - px, s.y - py), id++));
  return anchors;
}

}  // namespace

TEST_CASE("estimate_distance round trips the forward model") {
  const RangingParams p = default_params();
  for (double d : {2.1, 2.5, 3.0, 4.2, 6.0}) {
    CHECK(estimate_distance(forward_power(d, p), p) == doctest::Approx(d).epsilon(1e-12));
  }
  CHECK_THROWS_AS(estimate_distance(0.0, p), NoSignal);
  CHECK_THROWS_AS(estimate_distance(-1e-6, p), NoSignal);
}

TEST_CASE("estimate_distance fourth-root power scaling") {
  const RangingParams p = default_params();
  const double d = estimate_distance(1e-5, p);
  CHECK(estimate_distance(1e-5 / 16.0, p) == doctest::Approx(2.0 * d).epsilon(1e-12));
}

TEST_CASE("horizontal_range and clamping") {
  const auto r = horizontal_range(std::sqrt(2.1 * 2.1 + 1.0), 2.1);
  CHECK(r.range == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(!r.clamped);

  const auto clamped = horizontal_range(2.0, 2.1);
  CHECK(clamped.range == 0.0);
  CHECK(clamped.clamped);

  const auto exact = horizontal_range(2.1, 2.1);
  CHECK(exact.range == 0.0);
  CHECK(!exact.clamped);
}

TEST_CASE("linear_least_squares recovers exact-range positions") {
  const std::vector<Vec3> sites{{1, 1, 0}, {7, 1, 0}, {1, 7, 0}, {7, 7, 0}};
  const auto anchors = ranged_anchors(sites, 1.7, 2.4);
  const auto est = linear_least_squares(anchors);
  CHECK(est.x == doctest::Approx(1.7).epsilon(1e-9));
  CHECK(est.y == doctest::Approx(2.4).epsilon(1e-9));
  CHECK(est.method == EstimationMethod::Linear);
  CHECK(est.anchors_used == 4);
  CHECK(!est.used_centroid_fallback);
}

TEST_CASE("linear_least_squares matches a brute-force normal-equation oracle") {
  SeededRng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const double px = 0.5 + 7.0 * rng.next_double();
    const double py = 0.5 + 7.0 * rng.next_double();
    std::vector<Vec3> sites;
    for (int i = 0; i < 4; ++i)
      sites.push_back({8.0 * rng.next_double(), 8.0 * rng.next_double(), 0});
    auto anchors = ranged_anchors(sites, px, py);
    for (auto& a : anchors) a.range += 0.05 * rng.next_normal();  // noisy ranges

    // Oracle: explicit 2x2 normal equations for the differenced system.
    double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;
    const Anchor& ref = anchors[0];
    for (std::size_t i = 1; i < anchors.size(); ++i) {
      const Anchor& ai = anchors[i];
      const double gx = 2 * (ai.x - ref.x);
      const double gy = 2 * (ai.y - ref.y);
      const double rhs = ref.range * ref.range - ai.range * ai.range + ai.x * ai.x -
                         ref.x * ref.x + ai.y * ai.y - ref.y * ref.y;
      a11 += gx * gx;
      a12 += gx * gy;
      a22 += gy * gy;
      b1 += gx * rhs;
      b2 += gy * rhs;
    }
    const double det = a11 * a22 - a12 * a12;
    if (std::abs(det) < 1e-9) continue;
    const double ox = (a22 * b1 - a12 * b2) / det;
    const double oy = (a11 * b2 - a12 * b1) / det;

    const auto est = linear_least_squares(anchors);
    CHECK(est.x == doctest::Approx(ox).epsilon(1e-9));
    CHECK(est.y == doctest::Approx(oy).epsilon(1e-9));
  }
}

TEST_CASE("linear_least_squares degenerate cases") {
  // Collinear anchors are rank deficient.
  const std::vector<Anchor> collinear{anchor_at(1, 1, 1.0), anchor_at(3, 3, 1.5),
                                      anchor_at(5, 5, 2.0)};
  CHECK_THROWS_AS(linear_least_squares(collinear), SingularGeometry);

  const std::vector<Anchor> two{anchor_at(1, 1, 1.0), anchor_at(3, 3, 1.5)};
  CHECK_THROWS_AS(linear_least_squares(two), InsufficientAnchors);
}

TEST_CASE("nonlinear_least_squares converges from the truth in one step") {
  const std::vector<Vec3> sites{{1, 1, 0}, {7, 1, 0}, {1, 7, 0}, {7, 7, 0}};
  const auto anchors = ranged_anchors(sites, 2.25, 5.5);
  const Bounds2D bounds{0, 8, 0, 8};
  const auto est = nonlinear_least_squares(anchors, 2.25, 5.5, bounds);
  CHECK(est.x == doctest::Approx(2.25).epsilon(1e-9));
  CHECK(est.y == doctest::Approx(5.5).epsilon(1e-9));
  CHECK(est.final_residual <= 1e-18);
}

TEST_CASE("nonlinear_least_squares recovers from a distant start") {
  const std::vector<Vec3> sites{{1, 1, 0}, {7, 1, 0}, {1, 7, 0}, {7, 7, 0}};
  const auto anchors = ranged_anchors(sites, 0.9, 6.8);
  const auto est = nonlinear_least_squares(anchors, 4.0, 4.0, {0, 8, 0, 8});
  CHECK(est.x == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(est.y == doctest::Approx(6.8).epsilon(1e-6));
  CHECK(est.method == EstimationMethod::Nonlinear);
}

TEST_CASE("nonlinear objective never exceeds the initial objective") {
  SeededRng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Vec3> sites;
    for (int i = 0; i < 4; ++i)
      sites.push_back({8.0 * rng.next_double(), 8.0 * rng.next_double(), 0});
    auto anchors = ranged_anchors(sites, 4.0 * rng.next_double(), 4.0 * rng.next_double());
    for (auto& a : anchors) a.range = std::max(0.0, a.range + 0.2 * rng.next_normal());
    const double ix = 8.0 * rng.next_double();
    const double iy = 8.0 * rng.next_double();
    const auto est = nonlinear_least_squares(anchors, ix, iy, {0, 8, 0, 8});
    CHECK(est.final_residual <= range_residual(anchors, ix, iy) + 1e-15);
    CHECK(est.final_residual == doctest::Approx(range_residual(anchors, est.x, est.y)));
  }
}

TEST_CASE("select_strongest ordering and tie breaking") {
  const RoomScenario room = default_bundle().scenario;
  PowerReport report;
  report.rows = {{1, {}, 2e-5}, {2, {}, 5e-5}, {3, {}, 5e-5}, {4, {}, 1e-5}, {5, {}, 0.0}};
  const auto top3 = select_strongest(report, room, 3);
  REQUIRE(top3.size() == 3);
  CHECK(top3[0].luminaire_id == 2);  // tie with 3 keeps the smaller id
  CHECK(top3[1].luminaire_id == 3);
  CHECK(top3[2].luminaire_id == 1);
  CHECK(top3[0].x == room.luminaires[1].position.x);
  CHECK(top3[0].y == room.luminaires[1].position.y);

  const auto all = all_detectable(report, room);
  CHECK(all.size() == 4);  // zero-power row is not detectable

  CHECK_THROWS_AS(select_strongest(report, room, 2), InvalidArgument);
  report.rows.resize(2);
  CHECK_THROWS_AS(select_strongest(report, room, 3), InsufficientAnchors);
}

TEST_CASE("centroid_fallback") {
  const std::vector<Anchor> anchors{anchor_at(1, 1, 0), anchor_at(7, 1, 0), anchor_at(1, 2.5, 0)};
  const auto c = centroid_fallback(anchors);
  CHECK(c.x == doctest::Approx(3.0));
  CHECK(c.y == doctest::Approx(1.5));
}

TEST_CASE("locate is exact on LOS-only powers") {
  ScenarioBundle b = default_bundle();
  b.channel.max_order = 0;
  const Vec3 truth{2.6, 5.3, 1.2};
  const auto report = simulate_power_report(b.scenario, truth, b.channel, 1);

  for (const auto method : {EstimationMethod::Linear, EstimationMethod::Nonlinear}) {
    const auto est = locate(report, b.scenario, {method, std::nullopt, true});
    CHECK(est.x == doctest::Approx(truth.x).epsilon(1e-7));
    CHECK(est.y == doctest::Approx(truth.y).epsilon(1e-7));
  }
}

TEST_CASE("locate is invariant under transmit-power scaling") {
  ScenarioBundle b = default_bundle();
  b.channel.max_order = 0;
  const Vec3 truth{5.1, 1.9, 1.2};
  const auto est1 =
      locate(simulate_power_report(b.scenario, truth, b.channel, 1), b.scenario, {});

  for (auto& lum : b.scenario.luminaires) lum.transmit_power *= 2.0;
  const auto est2 =
      locate(simulate_power_report(b.scenario, truth, b.channel, 1), b.scenario, {});
  CHECK(est1.x == doctest::Approx(est2.x).epsilon(1e-12));
  CHECK(est1.y == doctest::Approx(est2.y).epsilon(1e-12));
}

TEST_CASE("multipath inflates ranges and biases the estimate") {
  // With reflections the received power exceeds the LOS-only value, so every
  // inverted range is shorter than the true horizontal distance.
  const ScenarioBundle b = default_bundle();
  ChannelConfig coarse = b.channel;
  coarse.patch_area = 0.64;
  coarse.rays_per_patch = 2;
  const Vec3 truth{2.0, 2.0, 1.2};
  const auto report = simulate_power_report(b.scenario, truth, coarse, 3);
  const auto anchors = select_strongest(report, b.scenario, 4);
  for (const auto& a : anchors) {
    const double true_r = std::hypot(a.x - truth.x, a.y - truth.y);
    CHECK(a.range <= true_r + 1e-12);
  }
}

TEST_CASE("locate honors the centroid fallback switch") {
  // Scenario whose luminaires are collinear: the linear system is singular.
  ScenarioBundle b = default_bundle();
  b.scenario.luminaires = {{1, {1, 4, 3.3}, {0, 0, -1}, 1.0, 4.0},
                           {2, {3, 4, 3.3}, {0, 0, -1}, 1.0, 4.0},
                           {3, {5, 4, 3.3}, {0, 0, -1}, 1.0, 4.0},
                           {4, {7, 4, 3.3}, {0, 0, -1}, 1.0, 4.0}};
  b.channel.max_order = 0;
  const auto report = simulate_power_report(b.scenario, {4, 4, 1.2}, b.channel, 1);

  LocateOptions opts;
  opts.allow_centroid_fallback = false;
  CHECK_THROWS_AS(locate(report, b.scenario, opts), SingularGeometry);

  opts.allow_centroid_fallback = true;
  const auto est = locate(report, b.scenario, opts);
  CHECK(est.used_centroid_fallback);
  CHECK(est.y == doctest::Approx(4.0));
}
