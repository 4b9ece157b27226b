#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vlp/geometry.hpp"
#include "vlp/rng.hpp"

namespace vlp {

struct ChannelConfig {
  double patch_area{0.01};         // m^2
  int rays_per_patch{10};          // N, rays launched per patch into the cascade
  int max_order{3};                // K, highest reflection order simulated
  double time_bin{0.2e-9};         // s
  double max_delay{0};             // s; 0 = auto: room diagonal * (K+1) / c
  double speed_of_light{299792458.0};

  double resolved_max_delay(const RoomScenario& scenario) const;
  void validate(const RoomScenario& scenario) const;
};

// Time-binned received power, one histogram per reflection order (0 = LOS).
struct ImpulseResponse {
  double time_bin{0};
  std::vector<std::vector<double>> orders;  // [order][bin], watts per bin

  double total_power() const;
};

struct PowerReportRow {
  int luminaire_id{0};
  std::vector<double> per_order;  // watts, index = reflection order
  double total{0};
};

struct PowerReport {
  std::vector<PowerReportRow> rows;

  const PowerReportRow* find(int luminaire_id) const;
};

// A virtual Lambertian point source produced by the bounce cascade. Order-1
// emitters are the surface patches lit directly by the luminaire; order-k
// emitters (k >= 2) are Monte Carlo ray impact points. `power` is the source
// power re-emitted diffusely (m = 1) and `delay` the propagation time from the
// luminaire to this point. The receiver-side contribution of an emitter is
// dc_gain(emitter -> receiver) * power, which makes the cascade independent of
// the receiver and lets one cascade serve a whole grid of receiver positions.
struct Emitter {
  Vec3 position;
  Vec3 normal;
  double power{0};   // watts
  double delay{0};   // seconds, luminaire -> this point
  std::uint32_t order{0};
  std::uint32_t patch{0};  // originating patch index (RNG substream id)
};

// Receiver side of a DC-gain evaluation. A surface patch acting as receiver
// uses {patch.area, 1, 1, 0}.
struct ReceiverSpec {
  double effective_area{0};
  double filter_gain{1};
  double concentrator_gain{1};
  double cos_fov_min{0};  // cos of the FOV half angle; 0 = hemisphere

  static ReceiverSpec for_patch(const SurfacePatch& p) { return {p.area, 1, 1, 0}; }
  static ReceiverSpec for_optics(const ReceiverOptics& o);
};

// Lambertian line-of-sight channel DC gain; zero outside the emission
// hemisphere, behind the receiver, or beyond the receiver FOV.
double dc_gain(const OrientedPoint& src, double lambertian_order, const OrientedPoint& dst,
               const ReceiverSpec& rx);

struct LosContribution {
  double power{0};  // watts
  double delay{0};  // seconds
};

LosContribution los_contribution(const Luminaire& lum, const OrientedPoint& receiver,
                                 const ReceiverOptics& optics, const ChannelConfig& config);

// Deterministic first bounce: every patch lit by the luminaire becomes an
// order-1 emitter with source power dc_gain(lum -> patch) * P_t * rho.
std::vector<Emitter> first_bounce(const RoomScenario& scenario, const Luminaire& lum,
                                  std::span<const SurfacePatch> patches,
                                  const ChannelConfig& config);

// Direction with polar angle alpha = arccos(u^(1/(m+1))) about `normal` and
// uniform azimuth. Draw order per sample: polar first, then azimuth.
Vec3 sample_lambertian_direction(SeededRng& rng, double lambertian_order, const Vec3& normal);

// Monte Carlo continuation of the cascade: N rays per order-1 emitter, each
// carrying power/N; at every impact the carried power is scaled by the hit
// surface's reflectance and the impact point becomes an order-k emitter.
// Rays for patch i are drawn from substream(seed, i), so the result does not
// depend on iteration order.
std::vector<Emitter> higher_order_cascade(const RoomScenario& scenario,
                                          std::span<const Emitter> order1,
                                          const ChannelConfig& config, std::uint64_t seed);

// first_bounce + higher_order_cascade, orders 1..K.
std::vector<Emitter> build_emitters(const RoomScenario& scenario, const Luminaire& lum,
                                    std::span<const SurfacePatch> patches,
                                    const ChannelConfig& config, std::uint64_t seed);

// Per-order received power at a single receiver pose: totals[k] accumulates
// order-k emitters (k >= 1). totals must span max_order + 1 entries.
void accumulate_emitters(std::span<const Emitter> emitters, const OrientedPoint& receiver,
                         const ReceiverOptics& optics, std::span<double> totals);

ImpulseResponse simulate_impulse_response(const RoomScenario& scenario, int luminaire_id,
                                          const Vec3& receiver_position,
                                          const ChannelConfig& config, std::uint64_t seed);

std::vector<double> received_power_by_order(const ImpulseResponse& ir);

// Order totals (index = order) for one luminaire at one receiver position.
// `patches` must come from partition_surfaces(scenario, config.patch_area);
// ignored when max_order == 0.
std::vector<double> luminaire_order_totals(const RoomScenario& scenario, const Luminaire& lum,
                                           std::span<const SurfacePatch> patches,
                                           const Vec3& receiver_position,
                                           const ChannelConfig& config, std::uint64_t seed);

// Per-luminaire order decomposition at one receiver position (no histograms).
PowerReport simulate_power_report(const RoomScenario& scenario, const Vec3& receiver_position,
                                  const ChannelConfig& config, std::uint64_t seed);

// Regular horizontal grid of receiver positions at height z, receivers facing +z.
struct GridPoints {
  double x0{0}, y0{0};
  double dx{0}, dy{0};
  int nx{0}, ny{0};
  double z{0};

  int count() const { return nx * ny; }
  Vec3 point(int index) const {
    return {x0 + dx * (index % nx), y0 + dy * (index / nx), z};
  }
};

// Accumulates emitter contributions for every grid point into
// totals[point * (max_order + 1) + order]. Exact same per-term arithmetic as
// accumulate_emitters; out-of-FOV grid rows are skipped by construction.
void accumulate_grid(std::span<const Emitter> emitters, const GridPoints& grid,
                     const ReceiverOptics& optics, int max_order, std::span<double> totals);

}  // namespace vlp
