// Blade stop angle estimation from a LiDAR cloud.
//
// Pipeline per iteration:
//   1. RANSAC the rotor plane from the whole cloud (normal toward the drone).
//   2. Walk from the drone position p_d = prior - (-n)·d_c along -n in steps of
//      Δd; at each step sample a ring of radius r_s parallel to the rotor plane.
//   3. Ring samples falling in occupied grid cells form the blade-ring
//      intersection (BRI) cells. DBSCAN groups the cells and the centroid of
//      the ring arc through each group is a BRI point.
//   4. With exactly three valid BRI points, the Fermat point of their triangle
//      is the hub; hub -> BRI point gives the blade directions and the stop
//      angle is the smallest blade bearing measured from the projected tower.
// The outer loop feeds each hub estimate back as the next prior until two
// successive stop angles agree within ε_a.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bladescan/clustering.hpp"
#include "bladescan/error.hpp"
#include "bladescan/geometry.hpp"
#include "bladescan/grid_map.hpp"

namespace bladescan {

struct EstimatorConfig {
  double standoff{10.0};        ///< d_c, desired drone-hub distance (m)
  double axial_step{0.5};       ///< Δd (m)
  int axial_steps{40};          ///< N
  double ring_radius{6.0};      ///< r_s (m), must exceed the hub radius
  double arc_step{0.25};        ///< Δl (m), chord between ring samples
  double convergence_deg{0.5};  ///< ε_a
  int max_iters{10};

  OccupancyParams grid{};
  Vector3 grid_extent{160.0, 160.0, 180.0};

  PlaneRansacOptions plane{.inlier_tol = 0.3,
                           .max_iters = 500,
                           .seed = 7,
                           .min_inlier_ratio = 0.2,
                           .viewpoint = std::nullopt,
                           .refine = true,
                           .axis = std::nullopt,
                           .max_axis_angle_deg = 90.0};

  /// Plane fitting only uses points within this distance of the prior hub
  /// (0 disables the crop). Keeps the tower and background from competing
  /// with the rotor in RANSAC.
  double plane_roi_radius{30.0};
  /// Stations farther than this from the fitted rotor plane are skipped; a
  /// ring there can only meet the tower or background (0 disables).
  double max_plane_offset{1.0};
  /// With a known sensor position the rotor normal must lie within this angle
  /// of the hub -> sensor direction.
  double max_normal_deviation_deg{15.0};

  double cluster_eps{1.0};
  int cluster_min_pts{2};
  int bri_arc_pad{2};    ///< ring samples added at each end of a BRI arc
  int min_bri_cells{3};  ///< thinner crossings (tower edges, poles) are not blades
  double ring_depth_tolerance{0.25};  ///< normal offset probed when a ring sample misses
  double min_center_separation_deg{60.0};
  Vector3 world_down{0.0, 0.0, -1.0};

  void validate() const {
    auto bad = [](const char* what) { throw Error(ErrorCode::InvalidConfig, what); };
    if (!(standoff > 0.0)) bad("standoff must be > 0");
    if (!(axial_step > 0.0)) bad("axial_step must be > 0");
    if (axial_steps < 1) bad("axial_steps must be >= 1");
    if (!(ring_radius > 0.0)) bad("ring_radius must be > 0");
    if (!(arc_step > 0.0) || arc_step > grid.resolution) bad("arc_step must be in (0, resolution]");
    if (!(convergence_deg > 0.0)) bad("convergence_deg must be > 0");
    if (max_iters < 1) bad("max_iters must be >= 1");
    if (!(cluster_eps > 0.0) || cluster_min_pts < 1) bad("invalid clustering parameters");
    if (plane_roi_radius < 0.0) bad("plane_roi_radius must be >= 0");
    if (bri_arc_pad < 0) bad("bri_arc_pad must be >= 0");
    if (min_bri_cells < 1) bad("min_bri_cells must be >= 1");
    if (!(ring_depth_tolerance >= 0.0)) bad("ring_depth_tolerance must be >= 0");
    if (max_plane_offset < 0.0) bad("max_plane_offset must be >= 0");
    if (!(max_normal_deviation_deg > 0.0 && max_normal_deviation_deg <= 90.0))
      bad("max_normal_deviation_deg must be in (0, 90]");
    if (world_down.norm() == 0.0) bad("world_down must be nonzero");
  }
};

// ---------------------------------------------------------------------------
// Search geometry
// ---------------------------------------------------------------------------

/// p_start + n·step·dir for n = 1..count.
inline std::vector<Point3> axial_search_points(const Point3& start, const Vector3& dir, double step,
                                               int count) {
  std::vector<Point3> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int n = 1; n <= count; ++n) out.push_back(start + (n * step) * dir);
  return out;
}

/// Number of ring samples whose consecutive chord equals `arc_step`.
inline int ring_point_count(double radius, double arc_step) {
  if (!(radius > 0.0) || !(arc_step > 0.0) || arc_step >= 2.0 * radius)
    throw Error(ErrorCode::InvalidStep, "arc step must be in (0, 2·radius)");
  const double chord_angle = 2.0 * std::asin(arc_step / (2.0 * radius));
  return static_cast<int>(std::floor(2.0 * std::numbers::pi / chord_angle));
}

/// Ring of radius `radius` around `center` in the plane with normal `normal`.
/// The first sample lies along `reference` projected into the plane.
inline std::vector<Point3> ring_points(const Point3& center, const Vector3& normal, double radius,
                                       double arc_step,
                                       const Vector3& reference = Vector3(0, 0, -1)) {
  const int count = ring_point_count(radius, arc_step);
  const double chord_angle = 2.0 * std::asin(arc_step / (2.0 * radius));
  const auto [e1, e2] = orthonormal_basis(normal, reference);
  std::vector<Point3> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int m = 0; m < count; ++m) {
    const double phi = m * chord_angle;
    out.push_back(center + radius * (std::cos(phi) * e1 + std::sin(phi) * e2));
  }
  return out;
}

/// Occupied cells hit by the ring, deduplicated, in ring order, plus the cell
/// slot of every ring sample (-1 when its cell is not occupied).
struct RingHits {
  std::vector<Point3> cells;
  std::vector<int> sample_cell;
};

/// Offsets along the normal probed for each ring sample: 0, then ±step,
/// ±2·step, ... up to `depth`.
inline std::vector<double> depth_probes(double depth, double step) {
  std::vector<double> out{0.0};
  for (double o = step; depth > 0.0 && o <= depth + 1e-12; o += step) {
    out.push_back(o);
    out.push_back(-o);
  }
  return out;
}

/// With depth > 0 a sample whose own cell is not occupied falls back to the
/// cells within ±depth along `normal`, nearest first, so a surface lying on a
/// cell boundary or slanted across the grid is still seen by the ring.
inline RingHits ring_hits(std::span<const Point3> ring, const OccupancyGrid& grid,
                          const Vector3& normal = Vector3::Zero(), double depth = 0.0) {
  RingHits out;
  out.sample_cell.assign(ring.size(), -1);
  std::vector<GridIndex> seen;
  const auto probes = depth_probes(depth, 0.5 * grid.resolution());
  for (std::size_t i = 0; i < ring.size(); ++i) {
    std::optional<GridIndex> idx;
    for (double o : probes) {
      idx = grid.try_cell(ring[i] + o * normal);
      if (idx && grid.state(*idx) == CellState::Occupied) break;
      idx.reset();
    }
    if (!idx) continue;
    auto it = std::find(seen.begin(), seen.end(), *idx);
    if (it == seen.end()) {
      seen.push_back(*idx);
      out.cells.push_back(grid.cell_to_center(*idx));
      it = seen.end() - 1;
    }
    out.sample_cell[i] = static_cast<int>(it - seen.begin());
  }
  return out;
}

/// Centers of occupied cells hit by the ring, deduplicated, in ring order.
inline std::vector<Point3> extract_bri(std::span<const Point3> ring, const OccupancyGrid& grid) {
  return ring_hits(ring, grid).cells;
}

// ---------------------------------------------------------------------------
// Fermat point
// ---------------------------------------------------------------------------

/// Interior angles at a, b, c in degrees.
inline std::array<double, 3> triangle_angles_deg(const Point3& a, const Point3& b, const Point3& c) {
  return {angle_between_deg(b - a, c - a), angle_between_deg(a - b, c - b),
          angle_between_deg(a - c, b - c)};
}

struct FermatResult {
  Point3 point;
  bool at_vertex{false};  ///< an interior angle is >= 120°, the point is that vertex
};

/// Fermat point (geometric median of the vertices) via the isogonic
/// construction: the lines joining each vertex to the apex of the outward
/// equilateral triangle on the opposite side meet at the Fermat point.
inline FermatResult fermat_point(const Point3& a, const Point3& b, const Point3& c) {
  const Vector3 m = (b - a).cross(c - a);
  const double scale = std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
  if (!(scale > 0.0) || m.norm() <= 1e-12 * scale * scale)
    throw Error(ErrorCode::DegenerateTriangle, "vertices are collinear");

  const auto angles = triangle_angles_deg(a, b, c);
  const std::array<const Point3*, 3> vertices{&a, &b, &c};
  for (int k = 0; k < 3; ++k)
    if (angles[k] >= 120.0) return {*vertices[k], true};

  auto outward_apex = [&](const Point3& p, const Point3& q, const Point3& opposite) {
    const Point3 mid = 0.5 * (p + q);
    Vector3 dir = m.cross(q - p).normalized();
    if (dir.dot(opposite - mid) > 0.0) dir = -dir;
    return Point3(mid + dir * (std::sqrt(3.0) / 2.0 * (q - p).norm()));
  };
  const Vector3 u = outward_apex(b, c, a) - a;
  const Vector3 w = outward_apex(c, a, b) - b;

  // a + s·u = b + t·w, solved in the least-squares sense (lines are coplanar).
  Eigen::Matrix<double, 3, 2> A;
  A.col(0) = u;
  A.col(1) = -w;
  const Eigen::Vector2d st = A.colPivHouseholderQr().solve(Vector3(b - a));
  const Point3 p1 = a + st(0) * u;
  const Point3 p2 = b + st(1) * w;
  return {0.5 * (p1 + p2), false};
}

// ---------------------------------------------------------------------------
// Blade directions and stop angle
// ---------------------------------------------------------------------------

using BladeDirections = std::array<Vector3, 3>;

inline BladeDirections blade_directions(const Point3& hub, std::span<const Point3, 3> bri_points) {
  BladeDirections out;
  for (std::size_t i = 0; i < 3; ++i) {
    const Vector3 d = bri_points[i] - hub;
    if (d.norm() < 1e-9) throw Error(ErrorCode::CoincidentPoints, "hub coincides with a BRI point");
    out[i] = d.normalized();
  }
  return out;
}

/// In-plane frame for bearings: `down` is world-down projected onto the plane,
/// `right` = normal × down. Viewed from the drone (normal points at it) the
/// bearing grows from the tower toward the viewer's right.
struct BearingFrame {
  Vector3 down;
  Vector3 right;
};

inline BearingFrame bearing_frame(const Plane& plane, const Vector3& world_down) {
  const Vector3 n = plane.normal.normalized();
  const Vector3 wd = world_down.normalized();
  const Vector3 t = wd - wd.dot(n) * n;
  if (t.norm() < std::sin(deg2rad(5.0)))
    throw Error(ErrorCode::DegenerateProjection, "rotor plane is nearly horizontal");
  const Vector3 down = t.normalized();
  return {down, n.cross(down).normalized()};
}

/// Bearing of `v` in [0, 360) degrees.
inline double blade_bearing_deg(const Vector3& v, const BearingFrame& frame) {
  return wrap_deg(rad2deg(std::atan2(v.dot(frame.right), v.dot(frame.down))));
}

/// Angle from the tower to the first blade on its right, in [0, 120).
inline double blade_stop_angle(const BladeDirections& blades, const Plane& plane,
                               const Vector3& world_down) {
  const BearingFrame frame = bearing_frame(plane, world_down);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& v : blades) best = std::min(best, blade_bearing_deg(v, frame));
  return wrap_deg(best, 120.0);
}

// ---------------------------------------------------------------------------
// Estimation
// ---------------------------------------------------------------------------

struct BriSet {
  std::vector<Point3> ring_cells;      ///< Q_tn, occupied cell centers on the ring
  std::array<Point3, 3> points;        ///< Q_b, centroids of the three ring arcs
  std::array<double, 3> triangle_angles_deg{};
};

struct SingleEstimate {
  double stop_angle_deg{0.0};
  Point3 hub{Point3::Zero()};
  BladeDirections blades{};
  BriSet bri;
  Plane plane;
  Point3 drone{Point3::Zero()};
  int axial_index{0};  ///< 1-based step n at which three clusters were found
};

namespace detail {

inline std::optional<SingleEstimate> try_ring(const Point3& center, const Plane& plane,
                                              const OccupancyGrid& grid,
                                              const EstimatorConfig& cfg) {
  const Vector3& n = plane.normal;
  const auto ring = ring_points(center, n, cfg.ring_radius, cfg.arc_step, cfg.world_down);
  RingHits hits = ring_hits(ring, grid, n, cfg.ring_depth_tolerance);
  if (hits.cells.size() < 3) return std::nullopt;
  const auto clusters = dbscan(hits.cells, cfg.cluster_eps, cfg.cluster_min_pts);
  if (clusters.k != 3) return std::nullopt;

  std::array<int, 3> members{};
  for (int l : clusters.labels)
    if (l >= 0) ++members[static_cast<std::size_t>(l)];
  for (int c : members)
    if (c < cfg.min_bri_cells) return std::nullopt;

  const double max_reach = cfg.ring_radius + 2.0 * grid.resolution();
  for (const auto& c : clusters.centers) {
    const Point3 in_plane = c - (c - center).dot(n) * n;
    if ((in_plane - center).norm() > max_reach) return std::nullopt;
  }

  // BRI point: centroid of the ring arc running through each cluster's cells,
  // widened by bri_arc_pad samples on both sides and weighted by the
  // interpolated occupancy, so the arc ends move smoothly with the ring.
  const std::size_t m = ring.size();
  std::vector<int> label(m, kNoise);
  for (std::size_t i = 0; i < m; ++i) {
    const int slot = hits.sample_cell[i];
    if (slot >= 0) label[i] = clusters.labels[static_cast<std::size_t>(slot)];
  }
  std::vector<int> grown = label;
  for (int step = 0; step < cfg.bri_arc_pad; ++step) {
    std::vector<int> next = grown;
    for (std::size_t i = 0; i < m; ++i) {
      if (grown[i] != kNoise) continue;
      const int l = grown[(i + m - 1) % m], r = grown[(i + 1) % m];
      if (l != kNoise && (r == kNoise || r == l))
        next[i] = l;
      else if (r != kNoise && l == kNoise)
        next[i] = r;
    }
    grown = std::move(next);
  }
  std::array<Point3, 3> q;
  std::array<double, 3> weight{};
  q.fill(Point3::Zero());
  const auto probes = depth_probes(cfg.ring_depth_tolerance, 0.5 * grid.resolution());
  for (std::size_t i = 0; i < m; ++i) {
    if (grown[i] < 0) continue;
    double w = 0.0;
    for (double o : probes) w = std::max(w, grid.interpolated_log_odds(ring[i] + o * n));
    q[grown[i]] += w * ring[i];
    weight[grown[i]] += w;
  }
  for (std::size_t i = 0; i < 3; ++i) {
    if (!(weight[i] > 0.0)) return std::nullopt;
    q[i] /= weight[i];
  }
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i + 1; j < 3; ++j) {
      const Vector3 a = q[i] - center, b = q[j] - center;
      if (a.norm() < 1e-9 || b.norm() < 1e-9) return std::nullopt;
      if (angle_between_deg(a, b) < cfg.min_center_separation_deg) return std::nullopt;
    }

  const Vector3 tri_normal = (q[1] - q[0]).cross(q[2] - q[0]);
  if (tri_normal.norm() < 1e-9) return std::nullopt;
  const auto angles = triangle_angles_deg(q[0], q[1], q[2]);
  if (std::any_of(angles.begin(), angles.end(), [](double a) { return a >= 120.0; }))
    return std::nullopt;

  const FermatResult fermat = fermat_point(q[0], q[1], q[2]);
  // Each blade crosses the ring exactly once only when the hub lies inside it.
  if ((fermat.point - center).norm() >= cfg.ring_radius) return std::nullopt;

  SingleEstimate est;
  est.blades = blade_directions(fermat.point, q);
  // The Fermat point sits on the station's ring plane; the hub lies on the
  // rotor plane itself.
  est.hub = plane.project(fermat.point);
  est.plane = plane;
  est.stop_angle_deg = blade_stop_angle(est.blades, plane, cfg.world_down);

  // Canonical order: ascending bearing.
  const BearingFrame frame = bearing_frame(plane, cfg.world_down);
  std::array<std::size_t, 3> order{0, 1, 2};
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return blade_bearing_deg(est.blades[x], frame) < blade_bearing_deg(est.blades[y], frame);
  });
  BladeDirections sorted_blades;
  for (std::size_t i = 0; i < 3; ++i) {
    sorted_blades[i] = est.blades[order[i]];
    est.bri.points[i] = q[order[i]];
  }
  est.blades = sorted_blades;
  est.bri.ring_cells = std::move(hits.cells);
  est.bri.triangle_angles_deg = triangle_angles_deg(est.bri.points[0], est.bri.points[1],
                                                    est.bri.points[2]);
  return est;
}

}  // namespace detail

/// One pass of plane extraction, axial/ring search and Fermat hub estimation.
/// `grid` must already hold `cloud`. `viewpoint` orients the plane normal.
/// Throws NoPlane or ClusterNeverThree.
inline SingleEstimate estimate_once(const PointCloud& cloud, const OccupancyGrid& grid,
                                    const Point3& prior_hub, const EstimatorConfig& cfg,
                                    const std::optional<Point3>& viewpoint = std::nullopt) {
  if (!prior_hub.allFinite()) throw Error(ErrorCode::InvalidConfig, "prior hub is not finite");
  PlaneRansacOptions popts = cfg.plane;
  popts.viewpoint = viewpoint;
  if (viewpoint && (*viewpoint - prior_hub).norm() > 1e-9) {
    popts.axis = *viewpoint - prior_hub;
    popts.max_axis_angle_deg = cfg.max_normal_deviation_deg;
  }
  PointCloud roi;
  const PointCloud* fit_cloud = &cloud;
  if (cfg.plane_roi_radius > 0.0) {
    const double r2 = cfg.plane_roi_radius * cfg.plane_roi_radius;
    for (const auto& p : cloud.points)
      if ((p - prior_hub).squaredNorm() <= r2) roi.push_back(p);
    fit_cloud = &roi;
  }
  Plane plane;
  try {
    plane = fit_plane_ransac(*fit_cloud, popts).plane;
  } catch (const Error& e) {
    throw Error(ErrorCode::NoPlane, e.what());
  }

  const Vector3 toward_drone = plane.normal;
  const Point3 drone = prior_hub + toward_drone * cfg.standoff;
  const auto stations = axial_search_points(drone, -toward_drone, cfg.axial_step, cfg.axial_steps);
  for (std::size_t i = 0; i < stations.size(); ++i) {
    if (cfg.max_plane_offset > 0.0 && plane.distance(stations[i]) > cfg.max_plane_offset) continue;
    auto est = detail::try_ring(stations[i], plane, grid, cfg);
    if (!est) continue;
    est->drone = drone;
    est->axial_index = static_cast<int>(i) + 1;
    return *est;
  }
  throw Error(ErrorCode::ClusterNeverThree,
              "no axial station produced three blade-ring intersections");
}

struct Scan {
  PointCloud cloud;
  std::optional<Point3> viewpoint;  ///< sensor position, orients the rotor-plane normal
};

/// Supplies one capture per estimation iteration.
class ScanSource {
 public:
  virtual ~ScanSource() = default;
  virtual Scan capture() = 0;
};

/// Returns the same scan on every capture.
class ReplayScanSource final : public ScanSource {
 public:
  explicit ReplayScanSource(Scan scan) : scan_(std::move(scan)) {}
  Scan capture() override { return scan_; }

 private:
  Scan scan_;
};

struct IterationRecord {
  int iteration{0};
  std::optional<double> stop_angle_deg;
  std::optional<Point3> hub;
  int axial_index{0};
  std::string error;  ///< empty on success
};

struct TurbineEstimate {
  Plane plane;
  Point3 hub{Point3::Zero()};
  BladeDirections blades{};
  std::array<Point3, 3> bri_points{};
  double stop_angle_deg{0.0};
  int iterations{0};
  bool converged{false};
  std::vector<IterationRecord> trace;
};

/// Raised when iterations succeed but never agree within ε_a; carries the last
/// estimate.
class EstimationFailure : public Error {
 public:
  EstimationFailure(ErrorCode code, const std::string& detail, TurbineEstimate partial)
      : Error(code, detail), partial_(std::move(partial)) {}
  [[nodiscard]] const TurbineEstimate& partial() const noexcept { return partial_; }

 private:
  TurbineEstimate partial_;
};

/// Iterative estimation loop. Each iteration captures a scan, rebuilds the
/// grid from it and runs estimate_once from the previous hub estimate. Failed
/// iterations are retried with a fresh capture. Converges when two successive
/// successful stop angles differ (modulo 120°) by less than ε_a.
/// Throws the last per-iteration error when no iteration succeeds, and
/// EstimationFailure(NoConvergence) when successes never agree.
inline TurbineEstimate estimate(ScanSource& source, const Point3& prior_hub,
                                const EstimatorConfig& cfg) {
  cfg.validate();
  OccupancyGrid grid = OccupancyGrid::centered(prior_hub, cfg.grid_extent, cfg.grid);
  TurbineEstimate result;
  std::optional<double> previous;
  Point3 prior = prior_hub;
  std::optional<Error> last_error;
  int successes = 0;

  for (int i = 1; i <= cfg.max_iters; ++i) {
    IterationRecord rec;
    rec.iteration = i;
    result.iterations = i;
    Scan scan = source.capture();
    grid.clear();
    grid.integrate(scan.cloud);
    try {
      const SingleEstimate est = estimate_once(scan.cloud, grid, prior, cfg, scan.viewpoint);
      rec.stop_angle_deg = est.stop_angle_deg;
      rec.hub = est.hub;
      rec.axial_index = est.axial_index;
      result.trace.push_back(rec);

      result.plane = est.plane;
      result.hub = est.hub;
      result.blades = est.blades;
      result.bri_points = est.bri.points;
      result.stop_angle_deg = est.stop_angle_deg;
      ++successes;
      if (previous &&
          circular_distance_deg(est.stop_angle_deg, *previous, 120.0) < cfg.convergence_deg) {
        result.converged = true;
        return result;
      }
      previous = est.stop_angle_deg;
      prior = est.hub;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ClusterNeverThree && e.code() != ErrorCode::NoPlane) throw;
      rec.error = to_string(e.code());
      result.trace.push_back(rec);
      last_error = e;
    }
  }
  // With at most one successful iteration there was never a pair of angles
  // to compare, so the per-iteration failure is the meaningful one.
  if (successes < 2) throw EstimationFailure(last_error->code(), last_error->detail(), result);
  throw EstimationFailure(ErrorCode::NoConvergence, "stop angle did not settle within max_iters",
                          result);
}

}  // namespace bladescan
