#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vlp/vec3.hpp"

namespace vlp {

enum class SurfaceRole : std::uint8_t { Wall, Ceiling, Floor };

const char* to_string(SurfaceRole role);

struct Luminaire {
  int id{0};
  Vec3 position;                 // meters, z up, floor at z = 0
  Vec3 orientation{0, 0, -1};    // unit; default facing down
  double lambertian_order{1.0};  // m >= 1
  double transmit_power{4.0};    // watts
};

struct ReceiverOptics {
  double area{1e-4};             // m^2
  Vec3 orientation{0, 0, 1};     // unit; default facing up
  double fov_half_angle;         // radians, (0, pi/2]
  double filter_gain{1.0};       // T_s in (0, 1]
  double concentrator_gain{1.0}; // g >= 1
};

struct RoomScenario {
  double length{0};  // x extent, meters
  double width{0};   // y extent
  double height{0};  // z extent
  double rho_wall{0};
  double rho_ceiling{0};
  double rho_floor{0};
  std::vector<Luminaire> luminaires;
  ReceiverOptics receiver;
  double receiver_plane_height{0};

  double reflectance(SurfaceRole role) const;
  Vec3 center() const { return {length / 2, width / 2, height / 2}; }
  double diagonal() const;
  double total_surface_area() const;
  bool contains(const Vec3& p, double tol = 1e-9) const;

  // Throws InvalidArgument naming the offending field.
  void validate() const;
};

struct SurfacePatch {
  Vec3 center;
  Vec3 normal;  // unit, points into the room interior
  double area{0};
  SurfaceRole role{SurfaceRole::Wall};
  double reflectance{0};
};

struct OrientedPoint {
  Vec3 position;
  Vec3 normal;  // unit
};

struct LinkGeometry {
  double distance{0};  // meters
  double cos_phi{0};   // emission angle cosine at src, clamped to [-1, 1]
  double cos_psi{0};   // incidence angle cosine at dst, clamped to [-1, 1]
};

struct RayHit {
  Vec3 point;
  SurfaceRole role{SurfaceRole::Wall};
  double distance{0};
  Vec3 normal;  // inward surface normal at the hit point
};

// Tiles all six room surfaces with square patches of side sqrt(patch_area).
// When the side does not divide a surface dimension, the trailing row/column
// shrinks so the union tiles the surface exactly.
std::vector<SurfacePatch> partition_surfaces(const RoomScenario& scenario, double patch_area);

// Nearest forward intersection of a ray (origin inside or on the box) with the
// six room planes. A plane the origin lies on is never reported back.
// Throws DegenerateRay when no forward intersection exists.
RayHit ray_room_intersection(const Vec3& origin, const Vec3& direction,
                             const RoomScenario& scenario);

// Distance and emission / incidence cosines for a src -> dst link.
// Throws InvalidArgument on coincident points. Cosines keep their sign; a
// negative value means the other endpoint is behind the surface plane and the
// caller zeroes the gain.
LinkGeometry link_geometry(const OrientedPoint& src, const OrientedPoint& dst);

}  // namespace vlp
