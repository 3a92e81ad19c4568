#include <gtest/gtest.h>

#include <random>

#include "bladescan/benchmark.hpp"
#include "bladescan/exposure.hpp"
#include "bladescan/scene_sim.hpp"
#include "oracles.hpp"

using namespace bladescan;

namespace {

CameraModel axis_camera() {
  CameraModel cam;
  cam.intrinsics = {.fx = 1000, .fy = 1000, .cx = 500, .cy = 500, .width = 1000, .height = 1000};
  return cam;
}

/// Scripted frames: a fixed image whose gray level tracks 2^γ, blade along x.
class ScriptedSource final : public FrameSource {
 public:
  explicit ScriptedSource(double base) : base_(base) {}
  std::optional<ExposureFrame> next(double gamma) override {
    ExposureFrame f;
    for (int i = 0; i < 50; ++i) f.blade_cloud.push_back({-5.0 + 0.2 * i, 0.0, 10.0});
    f.drone = Point3::Zero();
    f.camera = axis_camera();
    f.image = GrayImage(100, 100, exposure_response(base_, gamma));
    f.camera.intrinsics.cx = 50;
    f.camera.intrinsics.cy = 50;
    f.camera.intrinsics.width = f.camera.intrinsics.height = 100;
    return f;
  }

 private:
  double base_;
};

}  // namespace

TEST(Projection, OpticalAxisHitsPrincipalPoint) {
  const CameraModel cam = axis_camera();
  const auto p = project_point(cam, {0, 0, 7.5});
  EXPECT_EQ(p.pixel.x(), 500.0);
  EXPECT_EQ(p.pixel.y(), 500.0);
  EXPECT_TRUE(p.on_image);
  EXPECT_DOUBLE_EQ(p.depth, 7.5);
}

TEST(Projection, HandComputed) {
  const CameraModel cam = axis_camera();
  const auto p = project_point(cam, {1.0, -0.5, 10.0});
  EXPECT_NEAR(p.pixel.x(), 600.0, 1e-9);
  EXPECT_NEAR(p.pixel.y(), 450.0, 1e-9);
}

TEST(Projection, BehindCamera) {
  const CameraModel cam = axis_camera();
  for (const Point3 p : {Point3(0, 0, 0), Point3(1, 1, -3)}) {
    try {
      (void)project_point(cam, p);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::BehindCamera);
    }
  }
}

TEST(Projection, LookAtPutsTargetAtCenter) {
  const Intrinsics k{.fx = 800, .fy = 800, .cx = 320, .cy = 240, .width = 640, .height = 480};
  const CameraModel cam = CameraModel::look_at(k, {3, -20, 100}, {0, 0, 110});
  cam.validate();
  const auto p = project_point(cam, {0, 0, 110});
  EXPECT_NEAR(p.pixel.x(), 320.0, 1e-9);
  EXPECT_NEAR(p.pixel.y(), 240.0, 1e-9);
  // World up appears toward smaller v.
  EXPECT_LT(project_point(cam, {0, 0, 111}).pixel.y(), 240.0);
}

TEST(CameraModel, ValidateRejectsBadRotation) {
  CameraModel cam = axis_camera();
  cam.rotation(0, 0) = -1.0;  // reflection
  EXPECT_THROW(cam.validate(), Error);
  cam = axis_camera();
  cam.intrinsics.fx = 0.0;
  EXPECT_THROW(cam.validate(), Error);
}

TEST(RegionStats, UniformImage) {
  const GrayImage img(40, 30, 77);
  const auto s = region_stats(img, {20, 15}, 5.0);
  EXPECT_DOUBLE_EQ(s.mean, 77.0);
  EXPECT_DOUBLE_EQ(s.stddev, 0.0);
  EXPECT_DOUBLE_EQ(s.entropy, 0.0);
  EXPECT_EQ(s.pixel_count, 81u);  // lattice points in a radius-5 disk
}

TEST(RegionStats, TwoLevelsGiveOneBit) {
  GrayImage img(10, 10, 0);
  for (int y = 0; y < 10; ++y)
    for (int x = 5; x < 10; ++x) img.at(x, y) = 200;
  const auto s = region_stats(img, {4.5, 4.5}, 20.0);
  EXPECT_DOUBLE_EQ(s.mean, 100.0);
  EXPECT_DOUBLE_EQ(s.stddev, 100.0);
  EXPECT_DOUBLE_EQ(s.entropy, 1.0);
}

TEST(RegionStats, MatchesEnumerationOracle) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> px(0, 255);
  std::uniform_real_distribution<double> u(-10.0, 70.0), r(0.5, 30.0);
  for (int i = 0; i < 20; ++i) {
    GrayImage img(64, 48);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(px(rng));
    const double cx = u(rng), cy = u(rng), rad = r(rng);
    const auto ref = oracle::region_stats(img, cx, cy, rad);
    if (ref.pixel_count == 0) {
      EXPECT_THROW((void)region_stats(img, {cx, cy}, rad), Error);
      continue;
    }
    const auto s = region_stats(img, {cx, cy}, rad);
    EXPECT_EQ(s.pixel_count, ref.pixel_count);
    EXPECT_NEAR(s.mean, ref.mean, 1e-9);
    EXPECT_NEAR(s.stddev, ref.stddev, 1e-9);
    EXPECT_NEAR(s.entropy, ref.entropy, 1e-9);
  }
}

TEST(RegionStats, EmptyRegionThrows) {
  const GrayImage img(10, 10, 1);
  try {
    (void)region_stats(img, {-50, -50}, 3.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyRegion);
  }
}

TEST(AdjustStep, DeadBandAndClamp) {
  const ExposureConfig cfg;
  EXPECT_DOUBLE_EQ(adjust_step(0.0, 100.0, cfg), 0.3);
  EXPECT_DOUBLE_EQ(adjust_step(0.0, 170.0, cfg), -0.3);
  EXPECT_DOUBLE_EQ(adjust_step(1.0, 135.0, cfg), 1.0);
  EXPECT_DOUBLE_EQ(adjust_step(1.0, 110.0, cfg), 1.0);
  EXPECT_DOUBLE_EQ(adjust_step(5.0, 0.0, cfg), 5.0);
  EXPECT_DOUBLE_EQ(adjust_step(-4.9, 255.0, cfg), -5.0);
}

TEST(RgbToGray, Bt601) {
  const std::vector<std::uint8_t> rgb{255, 0, 0, 0, 255, 0, 0, 0, 255, 10, 10, 10};
  const GrayImage g = rgb_to_gray(rgb, 2, 2);
  EXPECT_EQ(g.at(0, 0), 76);
  EXPECT_EQ(g.at(1, 0), 150);
  EXPECT_EQ(g.at(0, 1), 29);
  EXPECT_EQ(g.at(1, 1), 10);
  EXPECT_THROW((void)rgb_to_gray(rgb, 3, 2), Error);
}

TEST(InspectionPoint, FootOnBladeLine) {
  PointCloud blade;
  for (int i = 0; i < 40; ++i) blade.push_back({0.0, 0.0, 100.0 + 0.5 * i});
  const auto ip = inspection_point(blade, {0, -8, 105}, {.inlier_tol = 0.3, .seed = 1});
  EXPECT_NEAR((ip.foot - Point3(0, 0, 105)).norm(), 0.0, 1e-9);
  EXPECT_TRUE(ip.direction.isApprox(Vector3(0, 1, 0)));
}

TEST(ExposureLoop, ScriptedConvergesFromBothSides) {
  const ExposureConfig cfg;
  for (double base : {20.0, 800.0}) {
    ScriptedSource src(base);
    const auto trace = run_exposure_loop(src, cfg, 0.0, 40);
    const auto s = summarize_exposure(trace, cfg);
    ASSERT_TRUE(s.converged_tick.has_value()) << base;
    EXPECT_TRUE(s.stayed_in_band);
  }
}

TEST(ExposureLoop, ZeroTicksEmptyTrace) {
  ScriptedSource src(100.0);
  const auto trace = run_exposure_loop(src, ExposureConfig{}, 1.0, 0);
  EXPECT_TRUE(trace.ticks.empty());
  EXPECT_DOUBLE_EQ(trace.final_gamma, 1.0);
}

TEST(ExposureLoop, TickErrorsKeepGamma) {
  SceneSpec scene;
  InspectionSpec insp;
  insp.corrupt_ticks = {1};
  SimulatedInspectionSource src(scene, insp, SunModel{});
  const auto trace = run_exposure_loop(src, ExposureConfig{}, -3.0, 3);
  ASSERT_EQ(trace.ticks.size(), 3u);
  EXPECT_TRUE(trace.ticks[0].error.empty());
  EXPECT_FALSE(trace.ticks[1].error.empty());
  EXPECT_DOUBLE_EQ(trace.ticks[1].gamma_ev, trace.ticks[2].gamma_ev);
}

TEST(ExposureLoop, SaturationFlagged) {
  ExposureConfig cfg;
  cfg.gamma_max = -2.0;
  ScriptedSource src(20.0);
  const auto trace = run_exposure_loop(src, cfg, -2.0, 2);
  EXPECT_TRUE(trace.ticks.back().saturated);
}
