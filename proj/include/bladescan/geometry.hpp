// Core 3D types and robust model fitting.
//
// Points and directions are Eigen double vectors in the world frame (meters).
// Planes use Hessian normal form n·p + d = 0 with a unit normal oriented toward
// a viewpoint (the sensor), lines are anchor + unit direction.
//
// Example:
//   PlaneRansacOptions opts;
//   opts.inlier_tol = 0.3;
//   auto fit = fit_plane_ransac(cloud, opts);
//   double h = fit.plane.signed_distance(p);

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "bladescan/error.hpp"

namespace bladescan {

using Point3 = Eigen::Vector3d;
using Vector3 = Eigen::Vector3d;

inline constexpr double kDegPerRad = 180.0 / std::numbers::pi;
inline constexpr double kRadPerDeg = std::numbers::pi / 180.0;

inline double deg2rad(double deg) { return deg * kRadPerDeg; }
inline double rad2deg(double rad) { return rad * kDegPerRad; }

/// Plane {p : normal·p + offset = 0}, normal is unit length.
struct Plane {
  Vector3 normal{0.0, 0.0, 1.0};
  double offset{0.0};

  [[nodiscard]] double signed_distance(const Point3& p) const { return normal.dot(p) + offset; }
  [[nodiscard]] double distance(const Point3& p) const { return std::abs(signed_distance(p)); }
  [[nodiscard]] Point3 project(const Point3& p) const { return p - signed_distance(p) * normal; }

  static Plane through(const Point3& point, const Vector3& unit_normal) {
    return Plane{unit_normal, -unit_normal.dot(point)};
  }
};

/// Infinite line anchor + t·direction, direction is unit length.
struct Line3 {
  Point3 anchor{Point3::Zero()};
  Vector3 direction{0.0, 0.0, 1.0};

  [[nodiscard]] Point3 closest_point(const Point3& p) const {
    return anchor + (p - anchor).dot(direction) * direction;
  }
  [[nodiscard]] double distance(const Point3& p) const { return (p - closest_point(p)).norm(); }
};

/// Unordered world-frame point set. May be empty; callers check.
struct PointCloud {
  std::vector<Point3> points;

  [[nodiscard]] std::size_t size() const noexcept { return points.size(); }
  [[nodiscard]] bool empty() const noexcept { return points.empty(); }
  void push_back(const Point3& p) { points.push_back(p); }
  void append(const PointCloud& other) {
    points.insert(points.end(), other.points.begin(), other.points.end());
  }
};

// ---------------------------------------------------------------------------
// Small vector helpers
// ---------------------------------------------------------------------------

/// Angle between two nonzero vectors in degrees, [0, 180].
inline double angle_between_deg(const Vector3& u, const Vector3& v) {
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) throw Error(ErrorCode::ZeroVector, "angle_between_deg");
  const double c = std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
  return rad2deg(std::acos(c));
}

/// Right-handed orthonormal pair spanning the plane orthogonal to `n`.
/// When `preferred` has a usable in-plane component it becomes the first axis.
inline std::pair<Vector3, Vector3> orthonormal_basis(const Vector3& n,
                                                     const Vector3& preferred = Vector3(0, 0, -1)) {
  const Vector3 unit = n.normalized();
  Vector3 e1 = preferred - preferred.dot(unit) * unit;
  if (e1.norm() < 1e-6) {
    const Vector3 fallback = std::abs(unit.x()) < 0.9 ? Vector3::UnitX() : Vector3::UnitY();
    e1 = fallback - fallback.dot(unit) * unit;
  }
  e1.normalize();
  Vector3 e2 = unit.cross(e1);
  return {e1, e2.normalized()};
}

/// Smallest absolute difference between two angles on a circle of `period` degrees.
inline double circular_distance_deg(double a, double b, double period = 360.0) {
  double d = std::fmod(std::abs(a - b), period);
  return std::min(d, period - d);
}

/// Wrap an angle into [0, period).
inline double wrap_deg(double a, double period = 360.0) {
  double w = std::fmod(a, period);
  if (w < 0.0) w += period;
  if (w >= period) w -= period;
  return w;
}

// ---------------------------------------------------------------------------
// Perpendicular foot
// ---------------------------------------------------------------------------

struct PerpendicularFoot {
  Point3 foot;
  Vector3 direction;  ///< unit vector from the query point to the foot
};

/// Foot of the perpendicular from `p` onto `line`. Throws PointOnLine when `p`
/// lies on the line (direction undefined).
inline PerpendicularFoot perpendicular_foot(const Point3& p, const Line3& line) {
  const Point3 foot = line.closest_point(p);
  const Vector3 delta = foot - p;
  const double dist = delta.norm();
  if (dist < 1e-9) throw Error(ErrorCode::PointOnLine, "query point lies on the line");
  return {foot, delta / dist};
}

// ---------------------------------------------------------------------------
// RANSAC fitting
// ---------------------------------------------------------------------------

struct PlaneRansacOptions {
  double inlier_tol{0.3};
  int max_iters{500};
  std::uint64_t seed{0};
  double min_inlier_ratio{0.2};
  /// Normal is oriented so that the viewpoint lies on its positive side. When
  /// unset the normal is oriented toward -y (the sensor's default facing).
  std::optional<Point3> viewpoint;
  /// Least-squares polish on the consensus set, then inliers are recomputed.
  bool refine{false};
  /// When set, hypotheses whose normal is more than max_axis_angle_deg from
  /// this axis (either sign) are discarded.
  std::optional<Vector3> axis;
  double max_axis_angle_deg{90.0};
};

struct PlaneFit {
  Plane plane;
  std::vector<std::size_t> inliers;
};

struct LineRansacOptions {
  double inlier_tol{0.3};
  int max_iters{500};
  std::uint64_t seed{0};
  double min_inlier_ratio{0.2};
  bool refine{false};
};

struct LineFit {
  Line3 line;
  std::vector<std::size_t> inliers;
};

namespace detail {

inline Plane orient_plane(Plane plane, const std::optional<Point3>& viewpoint) {
  const double side = viewpoint ? plane.signed_distance(*viewpoint) : -plane.normal.y();
  if (side < 0.0) {
    plane.normal = -plane.normal;
    plane.offset = -plane.offset;
  }
  return plane;
}

inline Vector3 canonical_direction(Vector3 u) {
  if (std::abs(u.z()) > 1e-6) {
    if (u.z() < 0.0) u = -u;
  } else if (std::abs(u.x()) > 1e-6) {
    if (u.x() < 0.0) u = -u;
  } else if (u.y() < 0.0) {
    u = -u;
  }
  return u;
}

template <typename Pred>
std::vector<std::size_t> collect(const std::vector<Point3>& pts, Pred&& within) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (within(pts[i])) out.push_back(i);
  return out;
}

inline std::pair<Point3, Eigen::Matrix3d> centroid_and_scatter(const std::vector<Point3>& pts,
                                                               std::span<const std::size_t> idx) {
  Point3 c = Point3::Zero();
  for (auto i : idx) c += pts[i];
  c /= static_cast<double>(idx.size());
  Eigen::Matrix3d s = Eigen::Matrix3d::Zero();
  for (auto i : idx) {
    const Vector3 d = pts[i] - c;
    s += d * d.transpose();
  }
  return {c, s};
}

}  // namespace detail

/// RANSAC plane fit. Throws DegenerateCloud for < 3 points or a collinear cloud,
/// NoModel when the best consensus is below `min_inlier_ratio`.
inline PlaneFit fit_plane_ransac(const PointCloud& cloud, const PlaneRansacOptions& opts) {
  if (opts.inlier_tol <= 0.0) throw Error(ErrorCode::InvalidConfig, "inlier_tol must be > 0");
  const auto& pts = cloud.points;
  const std::size_t n = pts.size();
  if (n < 3) throw Error(ErrorCode::DegenerateCloud, "plane fit needs at least 3 points");

  // Collinearity check: everything within numerical noise of the line p0 -> p_far.
  {
    const Point3& p0 = pts[0];
    std::size_t far = 0;
    double best = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
      const double d = (pts[i] - p0).squaredNorm();
      if (d > best) best = d, far = i;
    }
    bool collinear = true;
    if (best > 0.0) {
      const Vector3 u = (pts[far] - p0).normalized();
      const double scale = std::sqrt(best);
      for (const auto& p : pts) {
        if ((p - p0).cross(u).norm() > 1e-9 * std::max(1.0, scale)) {
          collinear = false;
          break;
        }
      }
    }
    if (collinear) throw Error(ErrorCode::DegenerateCloud, "all points are collinear");
  }

  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::optional<Vector3> axis;
  if (opts.axis) {
    if (opts.axis->norm() < 1e-12) throw Error(ErrorCode::InvalidConfig, "plane axis must be nonzero");
    axis = opts.axis->normalized();
  }
  const double min_axis_cos = std::cos(deg2rad(opts.max_axis_angle_deg));

  Plane best_plane;
  std::size_t best_count = 0;
  for (int it = 0; it < opts.max_iters; ++it) {
    const std::size_t a = pick(rng), b = pick(rng), c = pick(rng);
    if (a == b || b == c || a == c) continue;
    const Vector3 normal = (pts[b] - pts[a]).cross(pts[c] - pts[a]);
    const double len = normal.norm();
    if (len < 1e-12) continue;
    const Plane h = Plane::through(pts[a], normal / len);
    if (axis && std::abs(h.normal.dot(*axis)) < min_axis_cos) continue;
    std::size_t count = 0;
    for (const auto& p : pts)
      if (h.distance(p) <= opts.inlier_tol) ++count;
    if (count > best_count) {
      best_count = count;
      best_plane = h;
    }
  }
  if (best_count == 0 ||
      static_cast<double>(best_count) < opts.min_inlier_ratio * static_cast<double>(n))
    throw Error(ErrorCode::NoModel, "plane consensus below minimum inlier ratio");

  auto within = [&](const Plane& pl) {
    return [&pl, tol = opts.inlier_tol](const Point3& p) { return pl.distance(p) <= tol; };
  };
  std::vector<std::size_t> inliers = detail::collect(pts, within(best_plane));
  if (opts.refine && inliers.size() >= 3) {
    auto [c, scatter] = detail::centroid_and_scatter(pts, inliers);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(scatter);
    const Vector3 normal = es.eigenvectors().col(0).normalized();
    const Plane refined = Plane::through(c, normal);
    auto refined_inliers = detail::collect(pts, within(refined));
    if (refined_inliers.size() >= 3) {
      best_plane = refined;
      inliers = std::move(refined_inliers);
    }
  }
  return {detail::orient_plane(best_plane, opts.viewpoint), std::move(inliers)};
}

/// RANSAC line fit. Direction sign is canonical (positive z, else positive x),
/// the anchor is the consensus centroid projected onto the line.
inline LineFit fit_line_ransac(const PointCloud& cloud, const LineRansacOptions& opts) {
  if (opts.inlier_tol <= 0.0) throw Error(ErrorCode::InvalidConfig, "inlier_tol must be > 0");
  const auto& pts = cloud.points;
  const std::size_t n = pts.size();
  if (n < 2) throw Error(ErrorCode::DegenerateCloud, "line fit needs at least 2 points");
  if (std::all_of(pts.begin(), pts.end(), [&](const Point3& p) { return (p - pts[0]).norm() < 1e-12; }))
    throw Error(ErrorCode::DegenerateCloud, "all points coincide");

  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);

  Line3 best_line;
  std::size_t best_count = 0;
  for (int it = 0; it < opts.max_iters; ++it) {
    const std::size_t a = pick(rng), b = pick(rng);
    const Vector3 d = pts[b] - pts[a];
    const double len = d.norm();
    if (a == b || len < 1e-12) continue;
    const Line3 h{pts[a], d / len};
    std::size_t count = 0;
    for (const auto& p : pts)
      if (h.distance(p) <= opts.inlier_tol) ++count;
    if (count > best_count) {
      best_count = count;
      best_line = h;
    }
  }
  if (best_count == 0 ||
      static_cast<double>(best_count) < opts.min_inlier_ratio * static_cast<double>(n))
    throw Error(ErrorCode::NoModel, "line consensus below minimum inlier ratio");

  auto within = [&](const Line3& l) {
    return [&l, tol = opts.inlier_tol](const Point3& p) { return l.distance(p) <= tol; };
  };
  std::vector<std::size_t> inliers = detail::collect(pts, within(best_line));
  if (opts.refine && inliers.size() >= 2) {
    auto [c, scatter] = detail::centroid_and_scatter(pts, inliers);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(scatter);
    const Line3 refined{c, es.eigenvectors().col(2).normalized()};
    auto refined_inliers = detail::collect(pts, within(refined));
    if (refined_inliers.size() >= 2) {
      best_line = refined;
      inliers = std::move(refined_inliers);
    }
  }

  Line3 out{best_line.anchor, detail::canonical_direction(best_line.direction)};
  auto [centroid, unused] = detail::centroid_and_scatter(pts, inliers);
  out.anchor = out.closest_point(centroid);
  return {out, std::move(inliers)};
}

}  // namespace bladescan
