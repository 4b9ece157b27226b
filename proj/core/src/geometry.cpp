#include "vlp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vlp/error.hpp"

namespace vlp {

const char* to_string(SurfaceRole role) {
  switch (role) {
    case SurfaceRole::Wall: return "wall";
    case SurfaceRole::Ceiling: return "ceiling";
    case SurfaceRole::Floor: return "floor";
  }
  return "?";
}

double RoomScenario::reflectance(SurfaceRole role) const {
  switch (role) {
    case SurfaceRole::Wall: return rho_wall;
    case SurfaceRole::Ceiling: return rho_ceiling;
    case SurfaceRole::Floor: return rho_floor;
  }
  return 0.0;
}

double RoomScenario::diagonal() const {
  return std::sqrt(length * length + width * width + height * height);
}

double RoomScenario::total_surface_area() const {
  return 2.0 * (length * width + length * height + width * height);
}

bool RoomScenario::contains(const Vec3& p, double tol) const {
  return p.x >= -tol && p.x <= length + tol && p.y >= -tol && p.y <= width + tol &&
         p.z >= -tol && p.z <= height + tol;
}

void RoomScenario::validate() const {
  if (!(length > 0) || !(width > 0) || !(height > 0))
    throw InvalidArgument("room dimensions must be positive");
  for (auto [rho, name] : {std::pair{rho_wall, "rho_wall"},
                           {rho_ceiling, "rho_ceiling"},
                           {rho_floor, "rho_floor"}}) {
    if (!(rho >= 0.0 && rho <= 1.0))
      throw InvalidArgument(std::string(name) + " must be in [0,1]");
  }
  for (const auto& lum : luminaires) {
    if (!contains(lum.position))
      throw InvalidArgument("luminaire " + std::to_string(lum.id) + " outside room");
    if (!(lum.lambertian_order >= 1.0))
      throw InvalidArgument("luminaire " + std::to_string(lum.id) + " lambertian order < 1");
    if (!(lum.transmit_power > 0.0))
      throw InvalidArgument("luminaire " + std::to_string(lum.id) + " power must be > 0");
    if (!lum.orientation.is_unit())
      throw InvalidArgument("luminaire " + std::to_string(lum.id) + " orientation not unit");
  }
  if (!(receiver.area > 0)) throw InvalidArgument("receiver area must be > 0");
  if (!(receiver.fov_half_angle > 0 && receiver.fov_half_angle <= std::acos(-1.0) / 2))
    throw InvalidArgument("receiver fov_half_angle must be in (0, pi/2]");
  if (!(receiver.filter_gain > 0 && receiver.filter_gain <= 1.0))
    throw InvalidArgument("receiver filter_gain must be in (0,1]");
  if (!(receiver.concentrator_gain >= 1.0))
    throw InvalidArgument("receiver concentrator_gain must be >= 1");
  if (!receiver.orientation.is_unit())
    throw InvalidArgument("receiver orientation not unit");
  if (!(receiver_plane_height > 0 && receiver_plane_height < height))
    throw InvalidArgument("receiver_plane_height must be in (0, height)");
}

namespace {

struct SurfaceDef {
  SurfaceRole role;
  Vec3 origin;  // corner of the surface rectangle
  Vec3 u_axis;  // unit, first in-plane axis
  Vec3 v_axis;  // unit, second in-plane axis
  double u_len;
  double v_len;
  Vec3 normal;  // inward
};

std::vector<SurfaceDef> room_surfaces(const RoomScenario& s) {
  const double L = s.length, W = s.width, H = s.height;
  return {
      {SurfaceRole::Floor, {0, 0, 0}, {1, 0, 0}, {0, 1, 0}, L, W, {0, 0, 1}},
      {SurfaceRole::Ceiling, {0, 0, H}, {1, 0, 0}, {0, 1, 0}, L, W, {0, 0, -1}},
      {SurfaceRole::Wall, {0, 0, 0}, {0, 1, 0}, {0, 0, 1}, W, H, {1, 0, 0}},   // x = 0
      {SurfaceRole::Wall, {L, 0, 0}, {0, 1, 0}, {0, 0, 1}, W, H, {-1, 0, 0}},  // x = L
      {SurfaceRole::Wall, {0, 0, 0}, {1, 0, 0}, {0, 0, 1}, L, H, {0, 1, 0}},   // y = 0
      {SurfaceRole::Wall, {0, W, 0}, {1, 0, 0}, {0, 0, 1}, L, H, {0, -1, 0}},  // y = W
  };
}

// Full cells plus one shrunken trailing cell when `side` does not divide `len`.
void tile_axis(double len, double side, std::vector<std::pair<double, double>>& cells) {
  cells.clear();
  const auto n_full = static_cast<std::size_t>(std::floor(len / side + 1e-9));
  double covered = 0;
  for (std::size_t i = 0; i < n_full; ++i) {
    cells.emplace_back((static_cast<double>(i) + 0.5) * side, side);
    covered = static_cast<double>(i + 1) * side;
  }
  const double rem = len - covered;
  if (rem > 1e-9 * len) cells.emplace_back(covered + rem / 2, rem);
}

}  // namespace

std::vector<SurfacePatch> partition_surfaces(const RoomScenario& scenario, double patch_area) {
  if (!(patch_area > 0)) throw InvalidArgument("patch_area must be > 0");
  const auto surfaces = room_surfaces(scenario);
  double min_surface = std::numeric_limits<double>::max();
  for (const auto& s : surfaces) min_surface = std::min(min_surface, s.u_len * s.v_len);
  if (patch_area > min_surface)
    throw InvalidArgument("patch_area larger than the smallest room surface");

  const double side = std::sqrt(patch_area);
  std::vector<SurfacePatch> patches;
  std::vector<std::pair<double, double>> u_cells, v_cells;
  for (const auto& s : surfaces) {
    tile_axis(s.u_len, side, u_cells);
    tile_axis(s.v_len, side, v_cells);
    const double rho = scenario.reflectance(s.role);
    for (const auto& [vc, vw] : v_cells) {
      for (const auto& [uc, uw] : u_cells) {
        SurfacePatch p;
        p.center = s.origin + s.u_axis * uc + s.v_axis * vc;
        p.normal = s.normal;
        p.area = uw * vw;
        p.role = s.role;
        p.reflectance = rho;
        patches.push_back(p);
      }
    }
  }
  return patches;
}

RayHit ray_room_intersection(const Vec3& origin, const Vec3& direction,
                             const RoomScenario& scenario) {
  const double bounds[3] = {scenario.length, scenario.width, scenario.height};
  const double o[3] = {origin.x, origin.y, origin.z};
  const double d[3] = {direction.x, direction.y, direction.z};

  double best_t = std::numeric_limits<double>::max();
  int best_axis = -1;
  double best_plane = 0;
  for (int axis = 0; axis < 3; ++axis) {
    if (d[axis] == 0.0) continue;
    const double plane = d[axis] > 0 ? bounds[axis] : 0.0;
    const double t = (plane - o[axis]) / d[axis];
    if (t > 1e-12 && t < best_t) {
      best_t = t;
      best_axis = axis;
      best_plane = plane;
    }
  }
  if (best_axis < 0) throw DegenerateRay("no forward intersection with the room box");

  RayHit hit;
  hit.distance = best_t;
  hit.point = origin + direction * best_t;
  // Snap the hit coordinate exactly onto its plane.
  double p[3] = {hit.point.x, hit.point.y, hit.point.z};
  p[best_axis] = best_plane;
  hit.point = {p[0], p[1], p[2]};

  if (best_axis == 2) {
    hit.role = best_plane == 0.0 ? SurfaceRole::Floor : SurfaceRole::Ceiling;
  } else {
    hit.role = SurfaceRole::Wall;
  }
  double n[3] = {0, 0, 0};
  n[best_axis] = best_plane == 0.0 ? 1.0 : -1.0;
  hit.normal = {n[0], n[1], n[2]};
  return hit;
}

LinkGeometry link_geometry(const OrientedPoint& src, const OrientedPoint& dst) {
  const Vec3 delta = dst.position - src.position;
  const double d = delta.norm();
  if (d <= 0.0) throw InvalidArgument("link_geometry: coincident points");
  const Vec3 dir = delta / d;
  LinkGeometry g;
  g.distance = d;
  g.cos_phi = std::clamp(Vec3::dot(src.normal, dir), -1.0, 1.0);
  g.cos_psi = std::clamp(Vec3::dot(dst.normal, -dir), -1.0, 1.0);
  return g;
}

}  // namespace vlp
