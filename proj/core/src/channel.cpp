#include "vlp/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "vlp/error.hpp"

namespace vlp {

namespace {

constexpr double kPi = std::numbers::pi;

// Shared per-term arithmetic for order >= 1 emitters (always m = 1). Written
// without sqrt: cos(phi) * d = dot(n_e, D), cos(psi) * d = -dot(n_r, D), so
// gain = C * dot(n_e, D) * (-dot(n_r, D)) / d^4 with C = A * Ts * g / pi.
// The FOV test compares squared cosines. Every caller iterates emitters in
// index order, so sums are bit-identical across the single-point, histogram
// and grid paths.
inline double emitter_gain(const Emitter& e, const Vec3& rx_pos, const Vec3& rx_normal,
                           double coeff, double cos2_fov, double& d2_out) {
  const Vec3 d = rx_pos - e.position;
  const double d2 = d.norm2();
  d2_out = d2;
  if (d2 <= 0.0) return 0.0;
  const double a = Vec3::dot(e.normal, d);
  const double b = -Vec3::dot(rx_normal, d);
  if (a <= 0.0 || b <= 0.0) return 0.0;
  if (b * b < cos2_fov * d2) return 0.0;
  return coeff * a * b / (d2 * d2);
}

inline double rx_coeff(const ReceiverOptics& o) {
  return o.area * o.filter_gain * o.concentrator_gain / kPi;
}

const Luminaire& find_luminaire(const RoomScenario& scenario, int id) {
  for (const auto& lum : scenario.luminaires)
    if (lum.id == id) return lum;
  throw InvalidArgument("unknown luminaire id " + std::to_string(id));
}

}  // namespace

double ChannelConfig::resolved_max_delay(const RoomScenario& scenario) const {
  if (max_delay > 0) return max_delay;
  const double needed = scenario.diagonal() * (max_order + 1) / speed_of_light;
  return std::ceil(needed / time_bin) * time_bin;
}

void ChannelConfig::validate(const RoomScenario& scenario) const {
  if (!(patch_area > 0)) throw InvalidArgument("patch_area must be > 0");
  if (rays_per_patch < 1) throw InvalidArgument("rays_per_patch must be >= 1");
  if (max_order < 0) throw InvalidArgument("max_order must be >= 0");
  if (!(time_bin > 0)) throw InvalidArgument("time_bin must be > 0");
  if (!(speed_of_light > 0)) throw InvalidArgument("speed_of_light must be > 0");
  if (max_delay > 0) {
    const double needed = scenario.diagonal() * (max_order + 1) / speed_of_light;
    if (max_delay < needed)
      throw InvalidArgument("max_delay shorter than the longest possible path delay");
  }
}

double ImpulseResponse::total_power() const {
  double total = 0;
  for (const auto& order : orders)
    for (double v : order) total += v;
  return total;
}

const PowerReportRow* PowerReport::find(int luminaire_id) const {
  for (const auto& row : rows)
    if (row.luminaire_id == luminaire_id) return &row;
  return nullptr;
}

ReceiverSpec ReceiverSpec::for_optics(const ReceiverOptics& o) {
  return {o.area, o.filter_gain, o.concentrator_gain, std::cos(o.fov_half_angle)};
}

double dc_gain(const OrientedPoint& src, double lambertian_order, const OrientedPoint& dst,
               const ReceiverSpec& rx) {
  const LinkGeometry g = link_geometry(src, dst);
  if (g.cos_phi <= 0.0 || g.cos_psi <= 0.0) return 0.0;
  if (g.cos_psi < rx.cos_fov_min) return 0.0;
  const double m = lambertian_order;
  return (m + 1.0) * rx.effective_area / (2.0 * kPi * g.distance * g.distance) *
         std::pow(g.cos_phi, m) * rx.filter_gain * rx.concentrator_gain * g.cos_psi;
}

LosContribution los_contribution(const Luminaire& lum, const OrientedPoint& receiver,
                                 const ReceiverOptics& optics, const ChannelConfig& config) {
  const double gain = dc_gain({lum.position, lum.orientation}, lum.lambertian_order, receiver,
                              ReceiverSpec::for_optics(optics));
  const double d = (receiver.position - lum.position).norm();
  return {gain * lum.transmit_power, d / config.speed_of_light};
}

std::vector<Emitter> first_bounce(const RoomScenario& scenario, const Luminaire& lum,
                                  std::span<const SurfacePatch> patches,
                                  const ChannelConfig& config) {
  std::vector<Emitter> emitters;
  emitters.reserve(patches.size() / 2);
  const OrientedPoint src{lum.position, lum.orientation};
  for (std::uint32_t i = 0; i < patches.size(); ++i) {
    const SurfacePatch& p = patches[i];
    const double gain =
        dc_gain(src, lum.lambertian_order, {p.center, p.normal}, ReceiverSpec::for_patch(p));
    const double received = gain * lum.transmit_power;
    if (received <= 0.0) continue;  // unlit patches never feed the cascade
    const double source = received * p.reflectance;
    const double d = (p.center - lum.position).norm();
    emitters.push_back({p.center, p.normal, source, d / config.speed_of_light, 1, i});
  }
  return emitters;
}

Vec3 sample_lambertian_direction(SeededRng& rng, double lambertian_order, const Vec3& normal) {
  const double u = rng.next_open_closed();
  const double cos_a = lambertian_order == 1.0 ? std::sqrt(u)
                                               : std::pow(u, 1.0 / (lambertian_order + 1.0));
  const double sin_a = std::sqrt(std::max(0.0, 1.0 - cos_a * cos_a));
  const double beta = 2.0 * kPi * rng.next_double();

  // Orthonormal frame with `normal` as local z.
  const Vec3 helper = std::abs(normal.z) < 0.999 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
  const Vec3 t1 = Vec3::cross(normal, helper).normalized();
  const Vec3 t2 = Vec3::cross(normal, t1);
  return t1 * (sin_a * std::cos(beta)) + t2 * (sin_a * std::sin(beta)) + normal * cos_a;
}

std::vector<Emitter> higher_order_cascade(const RoomScenario& scenario,
                                          std::span<const Emitter> order1,
                                          const ChannelConfig& config, std::uint64_t seed) {
  std::vector<Emitter> emitters;
  if (config.max_order < 2) return emitters;
  const int rays = config.rays_per_patch;
  emitters.reserve(order1.size() * static_cast<std::size_t>(rays) * (config.max_order - 1));

  for (const Emitter& source : order1) {
    SeededRng rng = SeededRng::substream(seed, source.patch);
    for (int ray = 0; ray < rays; ++ray) {
      Vec3 pos = source.position;
      Vec3 normal = source.normal;
      double carried = source.power / rays;
      double delay = source.delay;
      for (std::uint32_t order = 2; order <= static_cast<std::uint32_t>(config.max_order);
           ++order) {
        RayHit hit;
        int attempts = 0;
        for (;;) {
          const Vec3 dir = sample_lambertian_direction(rng, 1.0, normal);
          try {
            hit = ray_room_intersection(pos, dir, scenario);
            break;
          } catch (const DegenerateRay&) {
            if (++attempts > 100)
              throw Error("cascade: >100 degenerate rays from patch " +
                          std::to_string(source.patch) + " at order " + std::to_string(order));
          }
        }
        carried *= scenario.reflectance(hit.role);
        delay += hit.distance / config.speed_of_light;
        if (carried <= 0.0) break;
        emitters.push_back({hit.point, hit.normal, carried, delay, order, source.patch});
        pos = hit.point;
        normal = hit.normal;
      }
    }
  }
  return emitters;
}

std::vector<Emitter> build_emitters(const RoomScenario& scenario, const Luminaire& lum,
                                    std::span<const SurfacePatch> patches,
                                    const ChannelConfig& config, std::uint64_t seed) {
  std::vector<Emitter> emitters = first_bounce(scenario, lum, patches, config);
  std::vector<Emitter> higher = higher_order_cascade(scenario, emitters, config, seed);
  emitters.insert(emitters.end(), higher.begin(), higher.end());
  return emitters;
}

void accumulate_emitters(std::span<const Emitter> emitters, const OrientedPoint& receiver,
                         const ReceiverOptics& optics, std::span<double> totals) {
  const double coeff = rx_coeff(optics);
  const double cos_fov = std::cos(optics.fov_half_angle);
  const double cos2_fov = cos_fov * cos_fov;
  double d2 = 0;
  for (const Emitter& e : emitters) {
    const double gain =
        emitter_gain(e, receiver.position, receiver.normal, coeff, cos2_fov, d2);
    if (gain > 0.0) totals[e.order] += gain * e.power;
  }
}

ImpulseResponse simulate_impulse_response(const RoomScenario& scenario, int luminaire_id,
                                          const Vec3& receiver_position,
                                          const ChannelConfig& config, std::uint64_t seed) {
  config.validate(scenario);
  if (!scenario.contains(receiver_position))
    throw InvalidArgument("receiver position outside room");
  const Luminaire& lum = find_luminaire(scenario, luminaire_id);

  const double max_delay = config.resolved_max_delay(scenario);
  const auto nbins = static_cast<std::size_t>(std::ceil(max_delay / config.time_bin));
  ImpulseResponse ir;
  ir.time_bin = config.time_bin;
  ir.orders.assign(static_cast<std::size_t>(config.max_order) + 1,
                   std::vector<double>(nbins, 0.0));

  const auto deposit = [&](std::uint32_t order, double delay, double power) {
    auto bin = static_cast<std::size_t>(delay / config.time_bin);
    bin = std::min(bin, nbins - 1);
    ir.orders[order][bin] += power;
  };

  const OrientedPoint rx{receiver_position, scenario.receiver.orientation};
  const auto los = los_contribution(lum, rx, scenario.receiver, config);
  if (los.power > 0.0) deposit(0, los.delay, los.power);

  if (config.max_order >= 1) {
    const auto patches = partition_surfaces(scenario, config.patch_area);
    const auto emitters = build_emitters(scenario, lum, patches, config, seed);
    const double coeff = rx_coeff(scenario.receiver);
    const double cos_fov = std::cos(scenario.receiver.fov_half_angle);
    const double cos2_fov = cos_fov * cos_fov;
    double d2 = 0;
    for (const Emitter& e : emitters) {
      const double gain = emitter_gain(e, rx.position, rx.normal, coeff, cos2_fov, d2);
      if (gain > 0.0)
        deposit(e.order, e.delay + std::sqrt(d2) / config.speed_of_light, gain * e.power);
    }
  }
  return ir;
}

std::vector<double> received_power_by_order(const ImpulseResponse& ir) {
  std::vector<double> totals(ir.orders.size(), 0.0);
  for (std::size_t k = 0; k < ir.orders.size(); ++k)
    for (double v : ir.orders[k]) totals[k] += v;
  return totals;
}

std::vector<double> luminaire_order_totals(const RoomScenario& scenario, const Luminaire& lum,
                                           std::span<const SurfacePatch> patches,
                                           const Vec3& receiver_position,
                                           const ChannelConfig& config, std::uint64_t seed) {
  const OrientedPoint rx{receiver_position, scenario.receiver.orientation};
  std::vector<double> totals(static_cast<std::size_t>(config.max_order) + 1, 0.0);
  totals[0] = los_contribution(lum, rx, scenario.receiver, config).power;
  if (config.max_order >= 1) {
    const auto emitters = build_emitters(scenario, lum, patches, config, seed);
    accumulate_emitters(emitters, rx, scenario.receiver, totals);
  }
  return totals;
}

PowerReport simulate_power_report(const RoomScenario& scenario, const Vec3& receiver_position,
                                  const ChannelConfig& config, std::uint64_t seed) {
  config.validate(scenario);
  if (!scenario.contains(receiver_position))
    throw InvalidArgument("receiver position outside room");

  std::vector<SurfacePatch> patches;
  if (config.max_order >= 1) patches = partition_surfaces(scenario, config.patch_area);

  PowerReport report;
  for (const auto& lum : scenario.luminaires) {
    PowerReportRow row;
    row.luminaire_id = lum.id;
    row.per_order = luminaire_order_totals(scenario, lum, patches, receiver_position, config, seed);
    for (double v : row.per_order) row.total += v;
    report.rows.push_back(std::move(row));
  }
  return report;
}

void accumulate_grid(std::span<const Emitter> emitters, const GridPoints& grid,
                     const ReceiverOptics& optics, int max_order, std::span<double> totals) {
  const double coeff = rx_coeff(optics);
  const double cos_fov = std::cos(optics.fov_half_angle);
  const double cos2_fov = cos_fov * cos_fov;
  const std::size_t stride = static_cast<std::size_t>(max_order) + 1;
  const bool up = optics.orientation == Vec3{0, 0, 1};
  const double tan_fov = std::tan(optics.fov_half_angle);
  double d2 = 0;

  for (const Emitter& e : emitters) {
    int i0 = 0, i1 = grid.nx - 1, j0 = 0, j1 = grid.ny - 1;
    if (up) {
      // Receivers face +z: only emitters above the plane can contribute, and
      // only within the horizontal FOV radius around the emitter.
      const double dz = e.position.z - grid.z;
      if (dz <= 0.0) continue;
      const double radius = dz * tan_fov;
      i0 = std::max(i0, static_cast<int>(std::ceil((e.position.x - radius - grid.x0) / grid.dx)));
      i1 = std::min(i1, static_cast<int>(std::floor((e.position.x + radius - grid.x0) / grid.dx)));
      j0 = std::max(j0, static_cast<int>(std::ceil((e.position.y - radius - grid.y0) / grid.dy)));
      j1 = std::min(j1, static_cast<int>(std::floor((e.position.y + radius - grid.y0) / grid.dy)));
    }
    for (int j = j0; j <= j1; ++j) {
      const double y = grid.y0 + grid.dy * j;
      for (int i = i0; i <= i1; ++i) {
        const Vec3 rx{grid.x0 + grid.dx * i, y, grid.z};
        const double gain = emitter_gain(e, rx, optics.orientation, coeff, cos2_fov, d2);
        if (gain > 0.0)
          totals[static_cast<std::size_t>(j * grid.nx + i) * stride + e.order] += gain * e.power;
      }
    }
  }
}

}  // namespace vlp
