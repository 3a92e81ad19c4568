#include <gtest/gtest.h>

#include <random>

#include "bladescan/angle_estimator.hpp"
#include "bladescan/scene_sim.hpp"
#include "oracles.hpp"

using namespace bladescan;

namespace {

double estimate_scene(SceneSpec s, const Vector3& prior_offset, bool replay = false) {
  const Point3 prior = s.hub_center + prior_offset;
  SimulatedScanSource src(s, SweepSpec{}, prior, replay);
  return estimate(src, prior, EstimatorConfig{}).stop_angle_deg;
}

}  // namespace

TEST(SearchGeometry, AxialPoints) {
  const auto pts = axial_search_points({0, 10, 0}, {0, -1, 0}, 0.5, 4);
  ASSERT_EQ(pts.size(), 4u);
  EXPECT_TRUE(pts[0].isApprox(Point3(0, 9.5, 0)));
  EXPECT_TRUE(pts[3].isApprox(Point3(0, 8.0, 0)));
}

TEST(SearchGeometry, RingPointCountForDefaults) {
  EXPECT_EQ(ring_point_count(6.0, 0.25), 150);
  EXPECT_THROW((void)ring_point_count(1.0, 2.5), Error);
  EXPECT_THROW((void)ring_point_count(1.0, 0.0), Error);
}

TEST(SearchGeometry, RingPointsOnCircleInPlane) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const Point3 c(10 * u(rng), 10 * u(rng), 100 + 10 * u(rng));
    const Vector3 n = Vector3(u(rng), u(rng), u(rng)).normalized();
    const auto ring = ring_points(c, n, 6.0, 0.25);
    for (std::size_t m = 0; m < ring.size(); ++m) {
      ASSERT_NEAR((ring[m] - c).norm(), 6.0, 1e-9);
      ASSERT_NEAR((ring[m] - c).dot(n), 0.0, 1e-9);
      if (m + 1 < ring.size()) ASSERT_NEAR((ring[m + 1] - ring[m]).norm(), 0.25, 1e-9);
    }
  }
}

TEST(Fermat, EquilateralIsCentroid) {
  const Point3 a(0, 0, 0), b(2, 0, 0), c(1, std::sqrt(3.0), 0);
  const auto f = fermat_point(a, b, c);
  EXPECT_FALSE(f.at_vertex);
  EXPECT_NEAR((f.point - (a + b + c) / 3.0).norm(), 0.0, 1e-12);
}

TEST(Fermat, ObtuseReturnsVertex) {
  const Point3 a(0, 0, 0), b(10, 0, 0), c(5, 1, 0);  // angle at c ~ 157°
  const auto f = fermat_point(a, b, c);
  EXPECT_TRUE(f.at_vertex);
  EXPECT_EQ(f.point, c);
}

TEST(Fermat, CollinearThrows) {
  try {
    (void)fermat_point({0, 0, 0}, {1, 0, 0}, {2, 0, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateTriangle);
  }
}

TEST(Fermat, PropertyMatchesWeiszfeldIn3D) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  int checked = 0;
  while (checked < 500) {
    const Point3 a(u(rng), u(rng), u(rng)), b(u(rng), u(rng), u(rng)), c(u(rng), u(rng), u(rng));
    const auto ang = triangle_angles_deg(a, b, c);
    if (*std::max_element(ang.begin(), ang.end()) > 115.0) continue;
    const Point3 f = fermat_point(a, b, c).point;
    EXPECT_NEAR(angle_between_deg(a - f, b - f), 120.0, 1e-6);
    EXPECT_NEAR(angle_between_deg(b - f, c - f), 120.0, 1e-6);
    EXPECT_NEAR((f - oracle::weiszfeld(a, b, c)).norm(), 0.0, 1e-7);
    ++checked;
  }
}

TEST(StopAngle, BearingConvention) {
  // Rotor facing -y: down is -z and the drone's right hand is +x.
  const Plane plane = Plane::through({0, 0, 100}, {0, -1, 0});
  const BearingFrame f = bearing_frame(plane, {0, 0, -1});
  EXPECT_TRUE(f.down.isApprox(Vector3(0, 0, -1)));
  EXPECT_TRUE(f.right.isApprox(Vector3(1, 0, 0)));
  BladeDirections blades;
  for (int i = 0; i < 3; ++i) {
    const double th = deg2rad(39.0 + 120.0 * i);
    blades[i] = std::cos(th) * f.down + std::sin(th) * f.right;
  }
  EXPECT_NEAR(blade_stop_angle(blades, plane, {0, 0, -1}), 39.0, 1e-9);
  std::swap(blades[0], blades[2]);
  EXPECT_NEAR(blade_stop_angle(blades, plane, {0, 0, -1}), 39.0, 1e-9);
}

TEST(StopAngle, HorizontalPlaneIsDegenerate) {
  const Plane plane = Plane::through({0, 0, 0}, {0, 0, 1});
  try {
    (void)bearing_frame(plane, {0, 0, -1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateProjection);
  }
}

TEST(Bri, ThreeBladesGiveThreeClusters) {
  SceneSpec s;
  s.stop_angle_deg = 20.0;
  const GeneratedScene scene = generate_cloud(s);
  EstimatorConfig cfg;
  OccupancyGrid grid = OccupancyGrid::centered(s.hub_center, cfg.grid_extent, cfg.grid);
  grid.integrate(scene.cloud);
  const auto ring = ring_points(s.hub_center, s.normal(), cfg.ring_radius, cfg.arc_step);
  const auto cells = extract_bri(ring, grid);
  ASSERT_FALSE(cells.empty());
  for (const auto& c : cells) EXPECT_EQ(grid.state(c), CellState::Occupied);
  EXPECT_EQ(dbscan(cells, cfg.cluster_eps, cfg.cluster_min_pts).k, 3);
}

TEST(Bri, DepthProbesFindSheetOnCellBoundary) {
  // A one-cell-thick wall whose face sits just behind a ring drawn in front of
  // it: the ring's own cells are empty, the probe one half cell back is not.
  OccupancyGrid grid({0, 0, 0}, {40, 40, 40});
  PointCloud wall;
  for (double x = 0.05; x < 20.0; x += 0.1)
    for (double z = 0.05; z < 20.0; z += 0.1) wall.push_back({x, 10.1, z});
  grid.integrate(wall);
  const Vector3 n(0, -1, 0);
  const auto ring = ring_points({10, 9.9, 10}, n, 6.0, 0.25);
  EXPECT_TRUE(ring_hits(ring, grid).cells.empty());
  const RingHits hits = ring_hits(ring, grid, n, 0.25);
  EXPECT_EQ(std::count(hits.sample_cell.begin(), hits.sample_cell.end(), -1), 0);
  for (const auto& c : hits.cells) EXPECT_NEAR(c.y(), 10.25, 1e-12);
  EXPECT_EQ(depth_probes(0.5, 0.25), (std::vector<double>{0.0, 0.25, -0.25, 0.5, -0.5}));
  EXPECT_EQ(depth_probes(0.0, 0.25), std::vector<double>{0.0});
}

TEST(Estimate, Scenarios39And74) {
  for (double a : {39.0, 74.0}) {
    SceneSpec s;
    s.stop_angle_deg = a;
    s.seed = 21;
    const double est = estimate_scene(s, Vector3(1.0, -1.0, 0.5));
    EXPECT_LT(circular_distance_deg(est, a, 120.0), 1.5) << a;
  }
}

TEST(Estimate, RotationInvariance) {
  // Yawing the whole turbine about the tower must not change the stop angle.
  for (double yaw : {0.0, 30.0, -55.0, 140.0}) {
    SceneSpec s;
    s.stop_angle_deg = 57.0;
    s.seed = 4;
    const double r = deg2rad(yaw);
    s.rotor_normal = Vector3(std::sin(r), -std::cos(r), 0.0);
    const double est = estimate_scene(s, Vector3(0.5, 0.5, -0.5));
    EXPECT_LT(circular_distance_deg(est, 57.0, 120.0), 1.5) << yaw;
  }
}

TEST(Estimate, PriorTranslationRobustness) {
  SceneSpec s;
  s.stop_angle_deg = 101.0;
  s.seed = 8;
  std::mt19937_64 rng(12);
  for (int i = 0; i < 6; ++i) {
    const double est = estimate_scene(s, random_offset(0.0, 2.0, rng));
    EXPECT_LT(circular_distance_deg(est, 101.0, 120.0), 1.5);
  }
}

TEST(Estimate, PriorOffsetThreeMetresPerAxis) {
  SceneSpec s;
  s.stop_angle_deg = 60.0;
  s.seed = 2;
  for (int axis = 0; axis < 3; ++axis)
    for (double sign : {-1.0, 1.0}) {
      Vector3 offset = Vector3::Zero();
      offset[axis] = 3.0 * sign;
      const Point3 prior = s.hub_center + offset;
      SimulatedScanSource src(s, SweepSpec{}, prior, false);
      const TurbineEstimate est = estimate(src, prior, EstimatorConfig{});
      EXPECT_LT(circular_distance_deg(est.stop_angle_deg, 60.0, 120.0), 1.0) << offset.transpose();
      EXPECT_LT((est.hub - s.hub_center).norm(), 0.5) << offset.transpose();
    }
}

TEST(Estimate, LoneSuccessReportsIterationFailure) {
  // One good capture among empty ones never yields a pair of angles to
  // compare, so the failure is the per-iteration one rather than NoConvergence.
  SceneSpec s;
  s.stop_angle_deg = 45.0;
  s.density = 40.0;
  SimulatedScanSource sim(s, SweepSpec{}, s.hub_center, true);
  const Scan good = sim.capture();
  struct OneGood : ScanSource {
    Scan good;
    int n{0};
    Scan capture() override { return n++ == 0 ? good : Scan{}; }
  } src;
  src.good = good;
  try {
    (void)estimate(src, s.hub_center, EstimatorConfig{});
    FAIL();
  } catch (const EstimationFailure& e) {
    EXPECT_NE(e.code(), ErrorCode::NoConvergence);
    ASSERT_FALSE(e.partial().trace.empty());
    EXPECT_TRUE(e.partial().trace.front().stop_angle_deg.has_value());
  }
}

TEST(Estimate, HubAndPlaneRecovered) {
  SceneSpec s;
  s.stop_angle_deg = 10.0;
  const Point3 prior = s.hub_center + Vector3(1, 1, 1);
  SimulatedScanSource src(s, SweepSpec{}, prior, true);
  const TurbineEstimate est = estimate(src, prior, EstimatorConfig{});
  EXPECT_TRUE(est.converged);
  EXPECT_LT((est.hub - s.hub_center).norm(), 1.0);
  EXPECT_LT(angle_between_deg(est.plane.normal, s.normal()), 2.0);
  for (int i = 0; i < 3; ++i)
    EXPECT_NEAR(angle_between_deg(est.blades[i], est.blades[(i + 1) % 3]), 120.0, 3.0);
}

TEST(Estimate, FogFailsWithClusterNeverThree) {
  SceneSpec s;
  s.stop_angle_deg = 30.0;
  SweepSpec sweep;
  sweep.sensor.dropout = 0.97;
  SimulatedScanSource src(s, sweep, s.hub_center, false);
  try {
    (void)estimate(src, s.hub_center, EstimatorConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ClusterNeverThree);
  }
}

TEST(Estimate, EmptyCloudFailsCleanly) {
  ReplayScanSource src(Scan{});
  EXPECT_THROW((void)estimate(src, Point3(0, 0, 100), EstimatorConfig{}), Error);
}

TEST(EstimatorConfig, Validation) {
  EstimatorConfig c;
  c.arc_step = 1.0;  // coarser than the grid
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.max_iters = 0;
  EXPECT_THROW(c.validate(), Error);
}
