#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "vlp/channel.hpp"
#include "vlp/experiment.hpp"
#include "vlp/geometry.hpp"

namespace vlp {

struct ScenarioBundle {
  RoomScenario scenario;
  ChannelConfig channel;
  NoiseModel noise;
  std::uint64_t seed{1};
};

// Square luminaire layout with `per_axis` bulbs per side at `spacing`,
// centered in the room footprint.
std::vector<Luminaire> luminaire_grid(const RoomScenario& scenario, int per_axis, double spacing,
                                      double z, double lambertian_order, double power);

// Reference configuration: 8 m x 8 m x 3.5 m room, 16 bulbs on a 2 m grid at
// z = 3.3 m, photodiode plane at 1.2 m.
ScenarioBundle default_bundle();

// Same room with 25 bulbs on a 1.5 m grid.
ScenarioBundle dense_bundle();

// Strict JSON scenario document. Unknown keys are rejected; omitted optional
// keys fall back to default_bundle() values. Throws ParseError naming the
// offending key.
ScenarioBundle parse_scenario(const std::filesystem::path& path);
ScenarioBundle parse_scenario_text(const std::string& text);

// Canonical sorted-key, full-precision rendering; parse_scenario_text of the
// result reproduces every field bit-exactly. Also the cache key input.
std::string serialize_scenario(const ScenarioBundle& bundle);

void write_error_map(const ErrorMap& map, const std::filesystem::path& path);
ErrorMap read_error_map(const std::filesystem::path& path);

void write_stats(const ErrorStats& stats, const std::filesystem::path& path);

void write_suite_rows(const std::vector<SuiteRow>& rows, const std::filesystem::path& path);

void write_impulse_response(const ImpulseResponse& ir, const std::filesystem::path& path);

void write_power_report(const PowerReport& report, const std::filesystem::path& path);

// Directory-backed store of per-order power totals keyed by the full channel
// computation inputs. Entries are replaced atomically, so concurrent writers
// for one key leave a single valid file. A corrupt entry is recomputed and
// overwritten with a warning on stderr. Disabled when constructed with an
// empty path; resolve_dir() honors the VLP_CACHE_DIR environment variable.
class PowerCache {
 public:
  explicit PowerCache(std::filesystem::path dir);

  static std::filesystem::path resolve_dir();

  bool enabled() const { return !dir_.empty(); }
  int computes() const { return computes_; }

  static std::string key_for(const ScenarioBundle& bundle, int luminaire_id,
                             const Vec3& receiver_position, std::uint64_t seed);

  std::vector<double> get_or_compute(const std::string& key,
                                     const std::function<std::vector<double>()>& compute);

 private:
  std::filesystem::path dir_;
  int computes_{0};
};

// Per-luminaire order totals at one receiver position, served from `cache`
// when possible. Numerically identical to simulate_power_report.
PowerReport cached_power_report(const ScenarioBundle& bundle, const Vec3& receiver_position,
                                std::uint64_t seed, PowerCache& cache);

}  // namespace vlp
