#pragma once

#include <optional>
#include <span>
#include <vector>

#include "vlp/channel.hpp"
#include "vlp/geometry.hpp"

namespace vlp {

// Constants of the ranging inversion; h is the known vertical
// transmitter-receiver separation.
struct RangingParams {
  double lambertian_order{1.0};
  double area{1e-4};
  double filter_gain{1.0};
  double concentrator_gain{1.0};
  double transmit_power{4.0};
  double height_gap{2.1};  // h, meters

  static RangingParams from_scenario(const RoomScenario& scenario);
};

struct Anchor {
  int luminaire_id{0};
  double x{0}, y{0};
  double power{0};   // measured total received power, watts
  double range{0};   // estimated horizontal distance r_i, meters
  bool clamped{false};  // ranging produced d < h; r clamped to 0
};

enum class EstimationMethod { Linear, Nonlinear };

struct PositionEstimate {
  double x{0}, y{0};
  EstimationMethod method{EstimationMethod::Linear};
  int anchors_used{0};
  int iterations{1};
  double final_residual{0};  // m^2
  bool used_centroid_fallback{false};
};

// Inverse of the coaxial-orientation power law: power -> slant distance.
// Throws NoSignal for power <= 0.
double estimate_distance(double received_power, const RangingParams& params);

struct HorizontalRange {
  double range{0};
  bool clamped{false};
};

// r = sqrt(d^2 - h^2); d < h clamps to 0 with a flag (multipath can inflate
// the received power past the coaxial value).
HorizontalRange horizontal_range(double distance, double height_gap);

// Linearized lateration (differences against the first anchor) solved by
// normal equations. Throws SingularGeometry when the anchor geometry is rank
// deficient, InsufficientAnchors for fewer than 3 anchors.
PositionEstimate linear_least_squares(std::span<const Anchor> anchors);

struct Bounds2D {
  double x_min{0}, x_max{0};
  double y_min{0}, y_max{0};
};

// Trust-region Gauss-Newton minimization of sum_i (|x - a_i| - r_i)^2 inside
// box bounds. Always returns the best iterate; the objective never exceeds
// its value at `init`.
PositionEstimate nonlinear_least_squares(std::span<const Anchor> anchors, double init_x,
                                         double init_y, const Bounds2D& bounds);

// Objective of the nonlinear formulation, for diagnostics and tests.
double range_residual(std::span<const Anchor> anchors, double x, double y);

// k anchors with the largest total received power; ties keep the smaller
// luminaire id. Anchors with zero power are not detectable.
std::vector<Anchor> select_strongest(const PowerReport& report, const RoomScenario& scenario,
                                     int k);

// All detectable anchors, strongest first.
std::vector<Anchor> all_detectable(const PowerReport& report, const RoomScenario& scenario);

struct Centroid {
  double x{0}, y{0};
};

Centroid centroid_fallback(std::span<const Anchor> anchors);

struct LocateOptions {
  EstimationMethod method{EstimationMethod::Linear};
  std::optional<int> k_select;          // nullopt = use all detectable anchors
  bool allow_centroid_fallback{true};   // on singular linear geometry
};

// Full pipeline: select anchors, invert power to ranges, solve.
// Throws SingularGeometry if the linear solve fails and the centroid fallback
// is disabled; InsufficientAnchors propagates from selection.
PositionEstimate locate(const PowerReport& report, const RoomScenario& scenario,
                        const LocateOptions& options);

}  // namespace vlp
