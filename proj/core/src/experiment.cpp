#include "vlp/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vlp/error.hpp"

namespace vlp {

GridPoints GridSpec::points(const RoomScenario& scenario) const {
  if (!(step > 0)) throw InvalidArgument("grid step must be > 0");
  if (margin < 0 || 2 * margin >= scenario.length || 2 * margin >= scenario.width)
    throw InvalidArgument("grid margin leaves no points inside the room");
  if (!(z > 0 && z < scenario.height))
    throw InvalidArgument("grid z outside the room");
  GridPoints g;
  g.x0 = margin;
  g.y0 = margin;
  g.dx = step;
  g.dy = step;
  g.nx = static_cast<int>(std::floor((scenario.length - 2 * margin) / step + 1e-9)) + 1;
  g.ny = static_cast<int>(std::floor((scenario.width - 2 * margin) / step + 1e-9)) + 1;
  g.z = z;
  return g;
}

RegionPartition RegionPartition::from_luminaires(const RoomScenario& scenario) {
  if (scenario.luminaires.empty())
    throw InvalidArgument("cannot derive region partition without luminaires");
  RegionPartition p;
  p.x_min = p.y_min = std::numeric_limits<double>::max();
  p.x_max = p.y_max = std::numeric_limits<double>::lowest();
  for (const auto& lum : scenario.luminaires) {
    p.x_min = std::min(p.x_min, lum.position.x);
    p.x_max = std::max(p.x_max, lum.position.x);
    p.y_min = std::min(p.y_min, lum.position.y);
    p.y_max = std::max(p.y_max, lum.position.y);
  }
  return p;
}

PowerReport GridPowers::report_at(int point_index) const {
  PowerReport report;
  const std::size_t nlum = luminaire_ids.size();
  for (std::size_t l = 0; l < nlum; ++l) {
    PowerReportRow row;
    row.luminaire_id = luminaire_ids[l];
    const std::size_t base = (static_cast<std::size_t>(point_index) * nlum + l) *
                             static_cast<std::size_t>(orders);
    row.per_order.assign(totals.begin() + base, totals.begin() + base + orders);
    for (double v : row.per_order) row.total += v;
    report.rows.push_back(std::move(row));
  }
  return report;
}

GridPowers simulate_grid_powers(const RoomScenario& scenario, const GridSpec& grid,
                                const ChannelConfig& config, std::uint64_t seed) {
  scenario.validate();
  config.validate(scenario);

  GridPowers out;
  out.grid = grid.points(scenario);
  out.orders = config.max_order + 1;
  const std::size_t npoints = static_cast<std::size_t>(out.grid.count());
  const std::size_t nlum = scenario.luminaires.size();
  out.luminaire_ids.reserve(nlum);
  out.totals.assign(npoints * nlum * static_cast<std::size_t>(out.orders), 0.0);

  std::vector<SurfacePatch> patches;
  if (config.max_order >= 1) patches = partition_surfaces(scenario, config.patch_area);

  std::vector<double> per_lum(npoints * static_cast<std::size_t>(out.orders));
  for (std::size_t l = 0; l < nlum; ++l) {
    const Luminaire& lum = scenario.luminaires[l];
    out.luminaire_ids.push_back(lum.id);
    std::fill(per_lum.begin(), per_lum.end(), 0.0);

    if (config.max_order >= 1) {
      const auto emitters = build_emitters(scenario, lum, patches, config, seed);
      accumulate_grid(emitters, out.grid, scenario.receiver, config.max_order, per_lum);
    }
    for (std::size_t p = 0; p < npoints; ++p) {
      const OrientedPoint rx{out.grid.point(static_cast<int>(p)),
                             scenario.receiver.orientation};
      per_lum[p * out.orders] = los_contribution(lum, rx, scenario.receiver, config).power;
    }
    for (std::size_t p = 0; p < npoints; ++p) {
      const std::size_t src = p * out.orders;
      const std::size_t dst = (p * nlum + l) * out.orders;
      for (int k = 0; k < out.orders; ++k) out.totals[dst + k] = per_lum[src + k];
    }
  }
  return out;
}

PowerReport apply_noise(const PowerReport& report, const NoiseModel& model, SeededRng& rng) {
  if (model.sigma < 0) throw InvalidArgument("noise sigma must be >= 0");
  PowerReport out = report;
  if (!model.enabled || model.sigma == 0) return out;
  for (auto& row : out.rows) {
    const double sigma = model.relative ? model.sigma * row.total : model.sigma;
    row.total = std::max(0.0, row.total + sigma * rng.next_normal());
  }
  return out;
}

ErrorMap locate_grid(const GridPowers& powers, const RoomScenario& scenario,
                     const LocateOptions& options, const NoiseModel& noise,
                     std::uint64_t seed) {
  ErrorMap map;
  const int npoints = powers.grid.count();
  map.entries.reserve(static_cast<std::size_t>(npoints));
  for (int p = 0; p < npoints; ++p) {
    ErrorMapEntry entry;
    entry.true_position = powers.grid.point(p);
    SeededRng rng = SeededRng::substream(seed, static_cast<std::uint64_t>(p));
    const PowerReport report = apply_noise(powers.report_at(p), noise, rng);
    try {
      entry.estimate = locate(report, scenario, options);
      entry.error = std::hypot(entry.estimate.x - entry.true_position.x,
                               entry.estimate.y - entry.true_position.y);
    } catch (const Error&) {
      entry.failed = true;  // recorded, the sweep continues
    }
    map.entries.push_back(entry);
  }
  return map;
}

ErrorMap evaluate_grid(const RoomScenario& scenario, const GridSpec& grid,
                       const ChannelConfig& config, const LocateOptions& options,
                       const NoiseModel& noise, std::uint64_t seed) {
  const GridPowers powers = simulate_grid_powers(scenario, grid, config, seed);
  return locate_grid(powers, scenario, options, noise, seed);
}

ErrorStats region_stats(const ErrorMap& map, const RegionPartition& partition,
                        double histogram_bin_width) {
  if (map.entries.empty()) throw InvalidArgument("region_stats: empty error map");
  double sq_inner = 0, sq_outer = 0;
  int n_inner = 0, n_outer = 0, failures = 0;
  for (const auto& e : map.entries) {
    if (e.failed) {
      ++failures;
      continue;
    }
    if (partition.inner_contains(e.true_position.x, e.true_position.y)) {
      sq_inner += e.error * e.error;
      ++n_inner;
    } else {
      sq_outer += e.error * e.error;
      ++n_outer;
    }
  }
  ErrorStats stats;
  stats.n_inner = n_inner;
  stats.n_outer = n_outer;
  stats.failures = failures;
  if (n_inner > 0) stats.rms_inner = std::sqrt(sq_inner / n_inner);
  if (n_outer > 0) stats.rms_outer = std::sqrt(sq_outer / n_outer);
  if (n_inner + n_outer > 0)
    stats.rms_entire = std::sqrt((sq_inner + sq_outer) / (n_inner + n_outer));
  if (histogram_bin_width > 0) {
    stats.histogram_bin_width = histogram_bin_width;
    stats.histogram = error_histogram(map, histogram_bin_width);
  }
  return stats;
}

std::vector<int> error_histogram(const ErrorMap& map, double bin_width) {
  if (!(bin_width > 0)) throw InvalidArgument("histogram bin width must be > 0");
  double max_error = 0;
  for (const auto& e : map.entries)
    if (!e.failed) max_error = std::max(max_error, e.error);
  std::vector<int> bins(static_cast<std::size_t>(std::floor(max_error / bin_width)) + 1, 0);
  for (const auto& e : map.entries) {
    if (e.failed) continue;
    auto idx = static_cast<std::size_t>(e.error / bin_width);
    idx = std::min(idx, bins.size() - 1);
    ++bins[idx];
  }
  return bins;
}

std::vector<SuiteRow> run_scenario_suite(const RoomScenario& scenario,
                                         const SuiteConfig& config) {
  if (config.cases.empty()) throw InvalidArgument("suite has no cases");
  if (config.seeds.empty()) throw InvalidArgument("suite needs at least one seed");

  const RegionPartition partition = RegionPartition::from_luminaires(scenario);
  struct Accum {
    double inner = 0, outer = 0, entire = 0;
    int inner_n = 0, outer_n = 0, entire_n = 0;
    int failures_inner = 0, failures_outer = 0;
  };
  std::vector<Accum> accum(config.cases.size());

  for (const std::uint64_t seed : config.seeds) {
    const GridPowers powers = simulate_grid_powers(scenario, config.grid, config.channel, seed);
    for (std::size_t c = 0; c < config.cases.size(); ++c) {
      const SuiteCase& sc = config.cases[c];
      LocateOptions opts;
      opts.method = sc.method;
      opts.k_select = sc.k_select;
      // The paper's linear rows have no fallback; its nonlinear rows seed the
      // solver with the centroid when the linear init is unavailable.
      opts.allow_centroid_fallback = sc.method == EstimationMethod::Nonlinear;
      const ErrorMap map = locate_grid(powers, scenario, opts, config.noise, seed);
      const ErrorStats stats = region_stats(map, partition, 0);
      if (stats.rms_inner) {
        accum[c].inner += *stats.rms_inner;
        ++accum[c].inner_n;
      }
      if (stats.rms_outer) {
        accum[c].outer += *stats.rms_outer;
        ++accum[c].outer_n;
      }
      if (stats.rms_entire) {
        accum[c].entire += *stats.rms_entire;
        ++accum[c].entire_n;
      }
      for (const auto& e : map.entries) {
        if (!e.failed) continue;
        if (partition.inner_contains(e.true_position.x, e.true_position.y))
          ++accum[c].failures_inner;
        else
          ++accum[c].failures_outer;
      }
    }
  }

  std::vector<SuiteRow> rows;
  for (std::size_t c = 0; c < config.cases.size(); ++c) {
    const Accum& a = accum[c];
    SuiteRow row;
    row.label = config.cases[c].label;
    row.failures = a.failures_inner + a.failures_outer;
    // A region touched by any failure is reported NA, like the paper's table.
    if (a.failures_inner == 0 && a.inner_n > 0) row.rms_inner = a.inner / a.inner_n;
    if (a.failures_outer == 0 && a.outer_n > 0) row.rms_outer = a.outer / a.outer_n;
    if (row.failures == 0 && a.entire_n > 0) row.rms_entire = a.entire / a.entire_n;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace vlp
