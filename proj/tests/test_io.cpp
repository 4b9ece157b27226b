#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "vlp/error.hpp"
#include "vlp/io.hpp"

using namespace vlp;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("vlp_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

ScenarioBundle fast_bundle() {
  ScenarioBundle b = default_bundle();
  b.channel.patch_area = 0.64;
  b.channel.rays_per_patch = 2;
  b.channel.max_order = 2;
  return b;
}

}  // namespace

TEST_CASE("empty document yields the default bundle") {
  const ScenarioBundle b = parse_scenario_text("{}");
  const ScenarioBundle d = default_bundle();
  CHECK(b.scenario.length == d.scenario.length);
  CHECK(b.scenario.luminaires.size() == 16);
  CHECK(b.scenario.luminaires[0].position == Vec3{1, 1, 3.3});
  CHECK(b.scenario.receiver.concentrator_gain == d.scenario.receiver.concentrator_gain);
  CHECK(b.channel.patch_area == d.channel.patch_area);
  CHECK(b.seed == d.seed);
  CHECK(!b.noise.enabled);
}

TEST_CASE("partial documents override only what they mention") {
  const ScenarioBundle b = parse_scenario_text(R"({
    "room": {"height": 3.6},
    "channel": {"max_order": 2, "time_bin_ns": 0.5, "seed": 42},
    "noise": {"enabled": true, "sigma": 0.01}
  })");
  CHECK(b.scenario.height == 3.6);
  CHECK(b.scenario.length == 8.0);
  CHECK(b.channel.max_order == 2);
  CHECK(b.channel.time_bin == doctest::Approx(0.5e-9).scale(0.0));
  CHECK(b.seed == 42);
  CHECK(b.noise.enabled);
  CHECK(b.noise.sigma == 0.01);
  CHECK(b.noise.relative);
}

TEST_CASE("luminaire list parsing") {
  const ScenarioBundle b = parse_scenario_text(R"({
    "luminaires": [
      {"x": 1, "y": 1},
      {"id": 9, "x": 7, "y": 1, "z": 3.0, "m": 2, "power": 6},
      {"x": 4, "y": 7}
    ]
  })");
  REQUIRE(b.scenario.luminaires.size() == 3);
  CHECK(b.scenario.luminaires[0].id == 1);  // positional default
  CHECK(b.scenario.luminaires[0].position.z == 3.3);
  CHECK(b.scenario.luminaires[1].id == 9);
  CHECK(b.scenario.luminaires[1].lambertian_order == 2.0);
  CHECK(b.scenario.luminaires[1].transmit_power == 6.0);
}

TEST_CASE("parser rejects bad documents") {
  CHECK_THROWS_AS(parse_scenario_text("not json"), ParseError);
  CHECK_THROWS_AS(parse_scenario_text(R"({"rooom": {}})"), ParseError);
  CHECK_THROWS_AS(parse_scenario_text(R"({"room": {"depth": 3}})"), ParseError);
  CHECK_THROWS_AS(parse_scenario_text(R"({"room": {"length": "8"}})"), ParseError);
  CHECK_THROWS_AS(parse_scenario_text(R"({"receiver": {"fov_deg": 190}})"), ParseError);
  CHECK_THROWS_AS(parse_scenario_text(R"({"luminaires": [{"x": 12, "y": 1}]})"), ParseError);
  CHECK_THROWS_AS(parse_scenario_text(R"({"luminaires": [{"y": 1}]})"), ParseError);
  CHECK_THROWS_AS(parse_scenario_text(R"({"noise": {"sigma": -1}})"), ParseError);
  CHECK_THROWS_AS(parse_scenario_text(R"({"channel": {"rays_per_patch": 0}})"), ParseError);
  CHECK_THROWS_AS(parse_scenario_text("{}{}"), ParseError);

  // The error message names the offending key.
  try {
    parse_scenario_text(R"({"room": {"depth": 3}})");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("room.depth") != std::string::npos);
  }
}

TEST_CASE("serialize/parse round trip is exact") {
  ScenarioBundle b = dense_bundle();
  b.channel.patch_area = 0.04;
  b.channel.time_bin = 0.3e-9;
  b.seed = 123456789;
  b.noise = {true, 0.0123, false};
  b.scenario.rho_wall = 1.0 / 3.0;  // not exactly representable in decimal

  const std::string text = serialize_scenario(b);
  const ScenarioBundle back = parse_scenario_text(text);
  CHECK(back.scenario.rho_wall == b.scenario.rho_wall);
  CHECK(back.scenario.luminaires.size() == b.scenario.luminaires.size());
  for (std::size_t i = 0; i < b.scenario.luminaires.size(); ++i) {
    CHECK(back.scenario.luminaires[i].position == b.scenario.luminaires[i].position);
    CHECK(back.scenario.luminaires[i].id == b.scenario.luminaires[i].id);
  }
  CHECK(back.channel.time_bin == b.channel.time_bin);
  CHECK(back.seed == b.seed);
  CHECK(back.noise.sigma == b.noise.sigma);
  CHECK(serialize_scenario(back) == text);
}

TEST_CASE("scenario files on disk") {
  TempDir dir;
  const fs::path file = dir.path / "scene.scenario";
  std::ofstream(file) << serialize_scenario(default_bundle());
  const ScenarioBundle b = parse_scenario(file);
  CHECK(b.scenario.luminaires.size() == 16);
  CHECK_THROWS_AS(parse_scenario(dir.path / "missing.scenario"), ParseError);
}

TEST_CASE("error map round trip") {
  ErrorMap map;
  for (int i = 0; i < 5; ++i) {
    ErrorMapEntry e;
    e.true_position = {i * 0.3, 8.0 - i * 0.7, 1.2};
    e.estimate.x = e.true_position.x + 0.01 * i;
    e.estimate.y = e.true_position.y - 0.02 * i;
    e.estimate.method = i % 2 ? EstimationMethod::Nonlinear : EstimationMethod::Linear;
    e.estimate.anchors_used = 4 + i;
    e.estimate.used_centroid_fallback = (i == 3);
    e.error = std::hypot(0.01 * i, 0.02 * i);
    e.failed = (i == 4);
    map.entries.push_back(e);
  }

  TempDir dir;
  const fs::path file = dir.path / "map.csv";
  write_error_map(map, file);
  const ErrorMap back = read_error_map(file);
  REQUIRE(back.entries.size() == map.entries.size());
  for (std::size_t i = 0; i < map.entries.size(); ++i) {
    CHECK(back.entries[i].true_position.x == map.entries[i].true_position.x);
    CHECK(back.entries[i].estimate.x == map.entries[i].estimate.x);
    CHECK(back.entries[i].estimate.y == map.entries[i].estimate.y);
    CHECK(back.entries[i].error == map.entries[i].error);
    CHECK(back.entries[i].estimate.method == map.entries[i].estimate.method);
    CHECK(back.entries[i].estimate.anchors_used == map.entries[i].estimate.anchors_used);
    CHECK(back.entries[i].estimate.used_centroid_fallback ==
          map.entries[i].estimate.used_centroid_fallback);
    CHECK(back.entries[i].failed == map.entries[i].failed);
  }

  // Empty maps still produce a parseable header-only file.
  const fs::path empty = dir.path / "empty.csv";
  write_error_map({}, empty);
  CHECK(read_error_map(empty).entries.empty());
}

TEST_CASE("stats and suite writers produce the documented fields") {
  ErrorStats stats;
  stats.rms_outer = 0.8;
  stats.rms_entire = 0.5;
  stats.n_inner = 10;
  stats.n_outer = 20;
  stats.failures = 2;
  stats.histogram_bin_width = 0.05;
  stats.histogram = {3, 4};

  TempDir dir;
  write_stats(stats, dir.path / "stats.json");
  std::ifstream in(dir.path / "stats.json");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(text.find("\"inner_rms\": null") != std::string::npos);
  CHECK(text.find("\"outer_rms\": 0.8") != std::string::npos);
  CHECK(text.find("\"failures\": 2") != std::string::npos);

  std::vector<SuiteRow> rows(2);
  rows[0] = {"linear-4", std::nullopt, std::nullopt, std::nullopt, 12};
  rows[1] = {"nonlinear-all", 0.5, 0.2, 0.4, 0};
  write_suite_rows(rows, dir.path / "suite.csv");
  std::ifstream sin(dir.path / "suite.csv");
  std::string header, r0, r1;
  std::getline(sin, header);
  std::getline(sin, r0);
  std::getline(sin, r1);
  CHECK(header == "label,outer_rms,inner_rms,entire_rms,failures");
  CHECK(r0 == "linear-4,NA,NA,NA,12");
  CHECK(r1.substr(0, 14) == "nonlinear-all,");
}

TEST_CASE("power cache hit, miss, corruption and transparency") {
  const ScenarioBundle b = fast_bundle();
  const Vec3 rx{3, 3, 1.2};

  TempDir dir;
  PowerCache cache(dir.path);
  REQUIRE(cache.enabled());

  const PowerReport fresh = cached_power_report(b, rx, b.seed, cache);
  CHECK(cache.computes() == 16);
  const PowerReport again = cached_power_report(b, rx, b.seed, cache);
  CHECK(cache.computes() == 16);  // all hits

  // Cached values are bit-identical to the direct computation.
  const PowerReport direct = simulate_power_report(b.scenario, rx, b.channel, b.seed);
  REQUIRE(again.rows.size() == direct.rows.size());
  for (std::size_t i = 0; i < direct.rows.size(); ++i) {
    CHECK(again.rows[i].total == direct.rows[i].total);
    CHECK(fresh.rows[i].total == direct.rows[i].total);
  }

  // Different seed, receiver, or scenario means different keys.
  cached_power_report(b, rx, b.seed + 1, cache);
  CHECK(cache.computes() == 32);
  CHECK(PowerCache::key_for(b, 1, rx, 1) != PowerCache::key_for(b, 2, rx, 1));
  CHECK(PowerCache::key_for(b, 1, rx, 1) != PowerCache::key_for(b, 1, {3, 3.1, 1.2}, 1));
  ScenarioBundle other = b;
  other.scenario.rho_wall = 0.5;
  CHECK(PowerCache::key_for(b, 1, rx, 1) != PowerCache::key_for(other, 1, rx, 1));

  // A corrupt entry is recomputed, not served.
  const std::string key = PowerCache::key_for(b, b.scenario.luminaires[0].id, rx, b.seed);
  std::ofstream(dir.path / (key + ".json")) << "garbage";
  const PowerReport healed = cached_power_report(b, rx, b.seed, cache);
  CHECK(cache.computes() == 33);
  CHECK(healed.rows[0].total == direct.rows[0].total);

  // Disabled cache always computes.
  PowerCache disabled({});
  CHECK(!disabled.enabled());
  cached_power_report(b, rx, b.seed, disabled);
  cached_power_report(b, rx, b.seed, disabled);
  CHECK(disabled.computes() == 32);
}
