#include "vlp/positioning.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vlp/error.hpp"

namespace vlp {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Descent {
  double x{0}, y{0};
  double objective{0};
  int iterations{0};
};

// Trust-region Gauss-Newton (Levenberg damping) on the 2-D range residual,
// iterates clamped to the box.
Descent descend(std::span<const Anchor> anchors, double x, double y, const Bounds2D& b) {
  constexpr int kMaxIter = 100;
  constexpr double kStepTol = 1e-9;
  constexpr double kDecreaseTol = 1e-12;

  const auto clamp_to = [&](double& px, double& py) {
    px = std::clamp(px, b.x_min, b.x_max);
    py = std::clamp(py, b.y_min, b.y_max);
  };
  clamp_to(x, y);

  Descent out{x, y, range_residual(anchors, x, y), 0};
  double lambda = 1e-3;
  while (out.iterations < kMaxIter) {
    ++out.iterations;
    // Gauss-Newton normal equations: J^T J delta = -J^T f.
    double a11 = 0, a12 = 0, a22 = 0, g1 = 0, g2 = 0;
    for (const Anchor& a : anchors) {
      const double ex = out.x - a.x, ey = out.y - a.y;
      const double dist = std::hypot(ex, ey);
      if (dist < 1e-12) continue;  // residual gradient undefined on top of an anchor
      const double jx = ex / dist, jy = ey / dist;
      const double f = dist - a.range;
      a11 += jx * jx;
      a12 += jx * jy;
      a22 += jy * jy;
      g1 += jx * f;
      g2 += jy * f;
    }

    bool moved = false;
    for (int tries = 0; tries < 20; ++tries) {
      const double d11 = a11 + lambda, d22 = a22 + lambda;
      const double det = d11 * d22 - a12 * a12;
      if (std::abs(det) < 1e-300) break;
      const double sx = (-g1 * d22 + g2 * a12) / det;
      const double sy = (-g2 * d11 + g1 * a12) / det;
      double nx = out.x + sx, ny = out.y + sy;
      clamp_to(nx, ny);
      const double step = std::hypot(nx - out.x, ny - out.y);
      const double trial = range_residual(anchors, nx, ny);
      if (trial < out.objective) {
        const double decrease = out.objective - trial;
        out.x = nx;
        out.y = ny;
        out.objective = trial;
        lambda = std::max(lambda / 3.0, 1e-12);
        moved = true;
        if (step < kStepTol || decrease < kDecreaseTol) return out;
        break;
      }
      lambda *= 9.0;
      if (step < kStepTol) return out;  // even an accepted step would be negligible
    }
    if (!moved) return out;
  }
  return out;
}

Anchor make_anchor(const PowerReportRow& row, const RoomScenario& scenario) {
  for (const auto& lum : scenario.luminaires) {
    if (lum.id == row.luminaire_id)
      return {row.luminaire_id, lum.position.x, lum.position.y, row.total, 0, false};
  }
  throw InvalidArgument("power report references unknown luminaire id " +
                        std::to_string(row.luminaire_id));
}

// Strongest first; equal powers keep the smaller luminaire id.
void sort_by_power(std::vector<Anchor>& anchors) {
  std::stable_sort(anchors.begin(), anchors.end(), [](const Anchor& a, const Anchor& b) {
    if (a.power != b.power) return a.power > b.power;
    return a.luminaire_id < b.luminaire_id;
  });
}

}  // namespace

RangingParams RangingParams::from_scenario(const RoomScenario& scenario) {
  RangingParams p;
  p.area = scenario.receiver.area;
  p.filter_gain = scenario.receiver.filter_gain;
  p.concentrator_gain = scenario.receiver.concentrator_gain;
  if (!scenario.luminaires.empty()) {
    p.lambertian_order = scenario.luminaires.front().lambertian_order;
    p.transmit_power = scenario.luminaires.front().transmit_power;
    p.height_gap = scenario.luminaires.front().position.z - scenario.receiver_plane_height;
  }
  return p;
}

double estimate_distance(double received_power, const RangingParams& params) {
  if (!(received_power > 0)) throw NoSignal("received power <= 0");
  const double num = (params.lambertian_order + 1.0) * params.area * params.filter_gain *
                     params.concentrator_gain * params.transmit_power * params.height_gap *
                     params.height_gap;
  return std::pow(num / (2.0 * kPi * received_power), 0.25);
}

HorizontalRange horizontal_range(double distance, double height_gap) {
  if (!(distance > 0) || !(height_gap > 0))
    throw InvalidArgument("horizontal_range: distance and height must be > 0");
  if (distance < height_gap) return {0.0, true};
  return {std::sqrt(distance * distance - height_gap * height_gap), false};
}

PositionEstimate linear_least_squares(std::span<const Anchor> anchors) {
  if (anchors.size() < 3) throw InsufficientAnchors("linear lateration needs >= 3 anchors");
  const Anchor& ref = anchors[0];
  const double c1 = ref.x * ref.x + ref.y * ref.y;
  // Normal equations of the (n-1) x 2 difference system.
  double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;
  std::vector<double> rows_ax, rows_ay, rows_b;
  rows_ax.reserve(anchors.size() - 1);
  rows_ay.reserve(anchors.size() - 1);
  rows_b.reserve(anchors.size() - 1);
  for (std::size_t i = 1; i < anchors.size(); ++i) {
    const Anchor& a = anchors[i];
    const double ax = a.x - ref.x;
    const double ay = a.y - ref.y;
    const double rhs =
        0.5 * ((ref.range * ref.range - a.range * a.range) + (a.x * a.x + a.y * a.y) - c1);
    a11 += ax * ax;
    a12 += ax * ay;
    a22 += ay * ay;
    b1 += ax * rhs;
    b2 += ay * rhs;
    rows_ax.push_back(ax);
    rows_ay.push_back(ay);
    rows_b.push_back(rhs);
  }
  const double det = a11 * a22 - a12 * a12;
  if (std::abs(det) < 1e-9) throw SingularGeometry("anchor geometry is rank deficient");

  PositionEstimate est;
  est.x = (b1 * a22 - b2 * a12) / det;
  est.y = (b2 * a11 - b1 * a12) / det;
  est.method = EstimationMethod::Linear;
  est.anchors_used = static_cast<int>(anchors.size());
  est.iterations = 1;
  for (std::size_t i = 0; i < rows_b.size(); ++i) {
    const double r = rows_ax[i] * est.x + rows_ay[i] * est.y - rows_b[i];
    est.final_residual += r * r;
  }
  return est;
}

double range_residual(std::span<const Anchor> anchors, double x, double y) {
  double s = 0;
  for (const Anchor& a : anchors) {
    const double f = std::hypot(x - a.x, y - a.y) - a.range;
    s += f * f;
  }
  return s;
}

PositionEstimate nonlinear_least_squares(std::span<const Anchor> anchors, double init_x,
                                         double init_y, const Bounds2D& bounds) {
  if (anchors.size() < 2) throw InsufficientAnchors("nonlinear lateration needs >= 2 anchors");

  Descent best = descend(anchors, init_x, init_y, bounds);
  int total_iterations = best.iterations;

  // The primary descent can stall in a secondary basin (mirror solutions of
  // near-collinear anchor sets). A perfectly consistent range set reaches an
  // objective near zero, so a non-trivial leftover triggers a coarse restart
  // sweep; the lowest objective wins.
  if (best.objective > 1e-14) {
    const Centroid c = centroid_fallback(anchors);
    std::vector<std::pair<double, double>> starts{{c.x, c.y}};
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 3; ++i)
        starts.emplace_back(bounds.x_min + (bounds.x_max - bounds.x_min) * (0.25 + 0.25 * i),
                            bounds.y_min + (bounds.y_max - bounds.y_min) * (0.25 + 0.25 * j));
    for (const auto& [sx, sy] : starts) {
      const Descent d = descend(anchors, sx, sy, bounds);
      total_iterations += d.iterations;
      if (d.objective < best.objective) best = d;
    }
  }

  PositionEstimate est;
  est.x = best.x;
  est.y = best.y;
  est.method = EstimationMethod::Nonlinear;
  est.anchors_used = static_cast<int>(anchors.size());
  est.iterations = total_iterations;
  est.final_residual = best.objective;
  return est;
}

std::vector<Anchor> all_detectable(const PowerReport& report, const RoomScenario& scenario) {
  std::vector<Anchor> anchors;
  for (const auto& row : report.rows) {
    if (row.total > 0) anchors.push_back(make_anchor(row, scenario));
  }
  sort_by_power(anchors);
  return anchors;
}

std::vector<Anchor> select_strongest(const PowerReport& report, const RoomScenario& scenario,
                                     int k) {
  if (k < 3) throw InvalidArgument("select_strongest: k must be >= 3");
  std::vector<Anchor> anchors = all_detectable(report, scenario);
  if (static_cast<int>(anchors.size()) < k)
    throw InsufficientAnchors("only " + std::to_string(anchors.size()) +
                              " detectable luminaires, need " + std::to_string(k));
  anchors.resize(static_cast<std::size_t>(k));
  return anchors;
}

Centroid centroid_fallback(std::span<const Anchor> anchors) {
  if (anchors.empty()) throw InsufficientAnchors("centroid of zero anchors");
  Centroid c;
  for (const Anchor& a : anchors) {
    c.x += a.x;
    c.y += a.y;
  }
  c.x /= static_cast<double>(anchors.size());
  c.y /= static_cast<double>(anchors.size());
  return c;
}

PositionEstimate locate(const PowerReport& report, const RoomScenario& scenario,
                        const LocateOptions& options) {
  std::vector<Anchor> anchors = options.k_select
                                    ? select_strongest(report, scenario, *options.k_select)
                                    : all_detectable(report, scenario);
  if (anchors.size() < 3) throw InsufficientAnchors("fewer than 3 detectable luminaires");

  const RangingParams params = RangingParams::from_scenario(scenario);
  for (Anchor& a : anchors) {
    const double d = estimate_distance(a.power, params);
    const HorizontalRange hr = horizontal_range(d, params.height_gap);
    a.range = hr.range;
    a.clamped = hr.clamped;
  }

  PositionEstimate linear;
  bool have_linear = false;
  bool used_centroid = false;
  try {
    linear = linear_least_squares(anchors);
    have_linear = true;
  } catch (const SingularGeometry&) {
    if (options.method == EstimationMethod::Linear && !options.allow_centroid_fallback) throw;
    used_centroid = true;
  }

  if (options.method == EstimationMethod::Linear) {
    if (have_linear) return linear;
    const Centroid c = centroid_fallback(anchors);
    PositionEstimate est;
    est.x = c.x;
    est.y = c.y;
    est.method = EstimationMethod::Linear;
    est.anchors_used = static_cast<int>(anchors.size());
    est.iterations = 1;
    est.final_residual = range_residual(anchors, c.x, c.y);
    est.used_centroid_fallback = true;
    return est;
  }

  double ix, iy;
  if (have_linear) {
    ix = linear.x;
    iy = linear.y;
  } else {
    const Centroid c = centroid_fallback(anchors);
    ix = c.x;
    iy = c.y;
  }
  const Bounds2D bounds{0, scenario.length, 0, scenario.width};
  PositionEstimate est = nonlinear_least_squares(anchors, ix, iy, bounds);
  est.used_centroid_fallback = used_centroid;
  return est;
}

}  // namespace vlp
