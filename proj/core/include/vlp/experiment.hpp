#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vlp/channel.hpp"
#include "vlp/positioning.hpp"

namespace vlp {

struct GridSpec {
  double step{0.25};   // meters, x and y
  double z{1.2};       // receiver plane height
  double margin{0.0};  // distance kept from the walls

  GridPoints points(const RoomScenario& scenario) const;
};

struct RegionPartition {
  double x_min{0}, x_max{0};
  double y_min{0}, y_max{0};

  bool inner_contains(double x, double y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }

  // Axis-aligned bounding box of the luminaire layout (the outer ring).
  static RegionPartition from_luminaires(const RoomScenario& scenario);
};

struct ErrorMapEntry {
  Vec3 true_position;
  PositionEstimate estimate;
  double error{0};  // horizontal Euclidean distance, meters
  bool failed{false};
};

struct ErrorMap {
  std::vector<ErrorMapEntry> entries;
};

struct ErrorStats {
  std::optional<double> rms_inner;
  std::optional<double> rms_outer;
  std::optional<double> rms_entire;
  int n_inner{0}, n_outer{0};
  int failures{0};
  double histogram_bin_width{0};
  std::vector<int> histogram;
};

struct NoiseModel {
  bool enabled{false};
  double sigma{0};       // watts, or fraction of signal in relative mode
  bool relative{true};
};

// Per-luminaire, per-order received power for every grid point; the expensive
// part of a sweep, shared by every estimator configuration run on top of it.
struct GridPowers {
  GridPoints grid;
  std::vector<int> luminaire_ids;
  // [point][luminaire][order], flattened
  std::vector<double> totals;
  int orders{0};

  PowerReport report_at(int point_index) const;
};

GridPowers simulate_grid_powers(const RoomScenario& scenario, const GridSpec& grid,
                                const ChannelConfig& config, std::uint64_t seed);

// Zero-mean Gaussian perturbation of each luminaire's total power, clamped at
// zero. Identity when disabled or sigma == 0.
PowerReport apply_noise(const PowerReport& report, const NoiseModel& model, SeededRng& rng);

// Locates every grid point of precomputed powers. Noise draws come from
// substream(seed, point_index), so the map is schedule independent.
ErrorMap locate_grid(const GridPowers& powers, const RoomScenario& scenario,
                     const LocateOptions& options, const NoiseModel& noise, std::uint64_t seed);

// simulate_grid_powers + locate_grid.
ErrorMap evaluate_grid(const RoomScenario& scenario, const GridSpec& grid,
                       const ChannelConfig& config, const LocateOptions& options,
                       const NoiseModel& noise, std::uint64_t seed);

// RMS per region; failed points are counted but excluded from every RMS.
ErrorStats region_stats(const ErrorMap& map, const RegionPartition& partition,
                        double histogram_bin_width = 0.05);

std::vector<int> error_histogram(const ErrorMap& map, double bin_width);

struct SuiteCase {
  std::string label;
  EstimationMethod method{EstimationMethod::Linear};
  std::optional<int> k_select;  // nullopt = all anchors
};

struct SuiteConfig {
  std::vector<SuiteCase> cases;
  GridSpec grid;
  ChannelConfig channel;
  NoiseModel noise;
  std::vector<std::uint64_t> seeds{1};
};

struct SuiteRow {
  std::string label;
  std::optional<double> rms_inner;   // absent = NA (every seed failed there)
  std::optional<double> rms_outer;
  std::optional<double> rms_entire;
  int failures{0};  // locate failures summed over seeds
};

// One summary row per case; RMS values are means over the configured seeds.
// A region whose RMS is unavailable for any seed (singular geometry without
// fallback at some location) is reported absent, mirroring an NA table cell.
std::vector<SuiteRow> run_scenario_suite(const RoomScenario& scenario,
                                         const SuiteConfig& config);

}  // namespace vlp
