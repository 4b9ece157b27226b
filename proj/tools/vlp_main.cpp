// Command-line front end: impulse responses, per-LED power decompositions,
// single-point location, full-room error sweeps and the summary-table suite.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "vlp/error.hpp"
#include "vlp/io.hpp"

namespace {

using namespace vlp;

struct CommonOpts {
  std::string scenario_path;
  bool dense = false;
  std::optional<double> patch_area;
  std::optional<int> rays;
  std::optional<int> max_order;
  std::optional<double> time_bin_ns;
  std::optional<std::uint64_t> seed;
  std::optional<double> noise_sigma;
  std::optional<bool> noise_enabled;
  std::string cache_dir;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--scenario", o.scenario_path, "Scenario file (JSON)");
  cmd->add_flag("--dense", o.dense, "Start from the 25-bulb 1.5 m layout instead of 16/2 m");
  cmd->add_option("--patch-area", o.patch_area, "Surface patch area [m^2]");
  cmd->add_option("--rays", o.rays, "Monte Carlo rays per patch");
  cmd->add_option("--max-order", o.max_order, "Highest reflection order K");
  cmd->add_option("--time-bin-ns", o.time_bin_ns, "Histogram bin width [ns]");
  cmd->add_option("--seed", o.seed, "RNG seed");
  cmd->add_option("--noise-sigma", o.noise_sigma, "Relative power noise sigma (enables noise)");
  cmd->add_option("--cache-dir", o.cache_dir,
                  "Impulse-response cache directory (default: $VLP_CACHE_DIR)");
}

// Precedence: flag > scenario file > built-in default.
ScenarioBundle load_bundle(const CommonOpts& o) {
  ScenarioBundle b = o.scenario_path.empty()
                         ? (o.dense ? dense_bundle() : default_bundle())
                         : parse_scenario(o.scenario_path);
  if (o.scenario_path.empty() == false && o.dense)
    throw ParseError("--dense cannot be combined with --scenario");
  if (o.patch_area) b.channel.patch_area = *o.patch_area;
  if (o.rays) b.channel.rays_per_patch = *o.rays;
  if (o.max_order) b.channel.max_order = *o.max_order;
  if (o.time_bin_ns) b.channel.time_bin = *o.time_bin_ns * 1e-9;
  if (o.seed) b.seed = *o.seed;
  if (o.noise_sigma) {
    b.noise.enabled = true;
    b.noise.relative = true;
    b.noise.sigma = *o.noise_sigma;
  }
  b.scenario.validate();
  b.channel.validate(b.scenario);
  return b;
}

PowerCache make_cache(const CommonOpts& o) {
  return PowerCache(o.cache_dir.empty() ? PowerCache::resolve_dir()
                                        : std::filesystem::path(o.cache_dir));
}

EstimationMethod parse_method(const std::string& m) {
  if (m == "linear") return EstimationMethod::Linear;
  if (m == "nonlinear") return EstimationMethod::Nonlinear;
  throw ParseError("method must be 'linear' or 'nonlinear'");
}

LocateOptions make_locate_options(const std::string& method, int k, bool no_fallback) {
  LocateOptions opts;
  opts.method = parse_method(method);
  if (k > 0) opts.k_select = k;
  opts.allow_centroid_fallback = !no_fallback;
  return opts;
}

std::vector<SuiteCase> standard_cases() {
  std::vector<SuiteCase> cases;
  for (const auto& [label, k] :
       std::initializer_list<std::pair<const char*, std::optional<int>>>{
           {"all", std::nullopt}, {"6", 6}, {"5", 5}, {"4", 4}}) {
    cases.push_back({std::string(label) + "-linear", EstimationMethod::Linear, k});
    cases.push_back({std::string(label) + "-nonlinear", EstimationMethod::Nonlinear, k});
  }
  return cases;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Indoor visible-light positioning simulator"};
  app.require_subcommand(1);

  CommonOpts common;
  double rx_x = 4, rx_y = 4;
  int lum_id = 1;
  std::string out_path, map_path, stats_path;
  std::string method = "linear";
  int k_select = 0;
  bool no_fallback = false;
  double step = 0.25, margin = 0.0;
  int n_seeds = 1;

  auto* ir = app.add_subcommand("ir", "Impulse response of one luminaire at one position");
  add_common(ir, common);
  ir->add_option("--lum", lum_id, "Luminaire id")->required();
  ir->add_option("-x", rx_x, "Receiver x [m]")->required();
  ir->add_option("-y", rx_y, "Receiver y [m]")->required();
  ir->add_option("--out", out_path, "Output CSV")->required();

  auto* powers = app.add_subcommand("powers", "Per-luminaire order power decomposition");
  add_common(powers, common);
  powers->add_option("-x", rx_x, "Receiver x [m]")->required();
  powers->add_option("-y", rx_y, "Receiver y [m]")->required();
  powers->add_option("--out", out_path, "Output CSV")->required();

  auto* locate_cmd = app.add_subcommand("locate", "Estimate the receiver position at one point");
  add_common(locate_cmd, common);
  locate_cmd->add_option("-x", rx_x, "True receiver x [m]")->required();
  locate_cmd->add_option("-y", rx_y, "True receiver y [m]")->required();
  locate_cmd->add_option("--method", method, "linear | nonlinear");
  locate_cmd->add_option("-k", k_select, "Use only the k strongest luminaires");
  locate_cmd->add_flag("--no-fallback", no_fallback, "Fail instead of centroid fallback");

  auto* sweep = app.add_subcommand("sweep", "Error map over a full-room receiver grid");
  add_common(sweep, common);
  sweep->add_option("--step", step, "Grid step [m]");
  sweep->add_option("--margin", margin, "Wall margin [m]");
  sweep->add_option("--method", method, "linear | nonlinear");
  sweep->add_option("-k", k_select, "Use only the k strongest luminaires");
  sweep->add_flag("--no-fallback", no_fallback, "Fail instead of centroid fallback");
  sweep->add_option("--out-map", map_path, "Error map CSV")->required();
  sweep->add_option("--out-stats", stats_path, "Region stats JSON");

  auto* suite = app.add_subcommand("suite", "Summary rows for every estimator/selection combo");
  add_common(suite, common);
  suite->add_option("--step", step, "Grid step [m]");
  suite->add_option("--seeds", n_seeds, "Number of seeds averaged (seed, seed+1, ...)");
  suite->add_option("--out", out_path, "Output CSV")->required();

  try {
    app.parse(argc, argv);

    if (ir->parsed()) {
      const ScenarioBundle b = load_bundle(common);
      const Vec3 rx{rx_x, rx_y, b.scenario.receiver_plane_height};
      const auto response = simulate_impulse_response(b.scenario, lum_id, rx, b.channel, b.seed);
      write_impulse_response(response, out_path);
    } else if (powers->parsed()) {
      const ScenarioBundle b = load_bundle(common);
      PowerCache cache = make_cache(common);
      const Vec3 rx{rx_x, rx_y, b.scenario.receiver_plane_height};
      write_power_report(cached_power_report(b, rx, b.seed, cache), out_path);
    } else if (locate_cmd->parsed()) {
      const ScenarioBundle b = load_bundle(common);
      PowerCache cache = make_cache(common);
      const Vec3 rx{rx_x, rx_y, b.scenario.receiver_plane_height};
      PowerReport report = cached_power_report(b, rx, b.seed, cache);
      if (b.noise.enabled) {
        SeededRng rng = SeededRng::substream(b.seed, 0);
        report = apply_noise(report, b.noise, rng);
      }
      const PositionEstimate est =
          locate(report, b.scenario, make_locate_options(method, k_select, no_fallback));
      std::printf("x_hat=%.6f y_hat=%.6f error=%.6f method=%s anchors=%d iterations=%d "
                  "residual=%.9g fallback=%d\n",
                  est.x, est.y, std::hypot(est.x - rx_x, est.y - rx_y),
                  est.method == EstimationMethod::Linear ? "linear" : "nonlinear",
                  est.anchors_used, est.iterations, est.final_residual,
                  est.used_centroid_fallback ? 1 : 0);
    } else if (sweep->parsed()) {
      const ScenarioBundle b = load_bundle(common);
      const GridSpec grid{step, b.scenario.receiver_plane_height, margin};
      const ErrorMap map =
          evaluate_grid(b.scenario, grid, b.channel,
                        make_locate_options(method, k_select, no_fallback), b.noise, b.seed);
      write_error_map(map, map_path);
      if (!stats_path.empty()) {
        const auto stats = region_stats(map, RegionPartition::from_luminaires(b.scenario));
        write_stats(stats, stats_path);
      }
    } else if (suite->parsed()) {
      const ScenarioBundle b = load_bundle(common);
      SuiteConfig cfg;
      cfg.cases = standard_cases();
      cfg.grid = GridSpec{step, b.scenario.receiver_plane_height, 0.0};
      cfg.channel = b.channel;
      cfg.noise = b.noise;
      cfg.seeds.clear();
      for (int i = 0; i < n_seeds; ++i) cfg.seeds.push_back(b.seed + i);
      write_suite_rows(run_scenario_suite(b.scenario, cfg), out_path);
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const ParseError& e) {
    std::cerr << "vlp: " << e.what() << '\n';
    return 1;
  } catch (const InvalidArgument& e) {
    std::cerr << "vlp: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "vlp: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
