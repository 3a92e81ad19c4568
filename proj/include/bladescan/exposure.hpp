// Blade-detail-prioritized exposure control.
//
// Each tick: fit the blade center line from the blade cloud, take the foot of
// the perpendicular from the drone as the inspection point, project it into
// the gimbal image, meter the mean gray level inside a disk of radius r_f
// around it and step the exposure offset γ (EV) by ±k_μ when the mean leaves
// [μ_min, μ_max].

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bladescan/error.hpp"
#include "bladescan/geometry.hpp"

namespace bladescan {

/// Row-major 8-bit grayscale image.
struct GrayImage {
  int width{0};
  int height{0};
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  [[nodiscard]] std::uint8_t at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

/// BT.601 luma from interleaved RGB.
inline GrayImage rgb_to_gray(std::span<const std::uint8_t> rgb, int width, int height) {
  if (rgb.size() != static_cast<std::size_t>(width) * height * 3)
    throw Error(ErrorCode::InvalidConfig, "rgb buffer size does not match dimensions");
  GrayImage out(width, height);
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    const double y = 0.299 * rgb[3 * i] + 0.587 * rgb[3 * i + 1] + 0.114 * rgb[3 * i + 2];
    out.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(y), 0L, 255L));
  }
  return out;
}

struct Intrinsics {
  double fx{1000.0}, fy{1000.0};
  double cx{500.0}, cy{500.0};
  int width{1000}, height{1000};
};

/// Pinhole camera: world -> camera by (R, t), camera -> pixels by K (zero skew).
struct CameraModel {
  Intrinsics intrinsics;
  Eigen::Matrix3d rotation{Eigen::Matrix3d::Identity()};  ///< cR_w
  Vector3 translation{Vector3::Zero()};                     ///< ct_w

  [[nodiscard]] Eigen::Matrix3d K() const {
    Eigen::Matrix3d k = Eigen::Matrix3d::Identity();
    k(0, 0) = intrinsics.fx;
    k(1, 1) = intrinsics.fy;
    k(0, 2) = intrinsics.cx;
    k(1, 2) = intrinsics.cy;
    return k;
  }

  [[nodiscard]] Point3 center() const { return -rotation.transpose() * translation; }

  /// Camera at `eye` looking at `target`; image x to the right, y down.
  static CameraModel look_at(const Intrinsics& intr, const Point3& eye, const Point3& target,
                             const Vector3& world_up = Vector3::UnitZ()) {
    const Vector3 forward = (target - eye).normalized();
    Vector3 right = forward.cross(world_up);
    if (right.norm() < 1e-9) right = forward.cross(Vector3::UnitX());
    right.normalize();
    const Vector3 down = forward.cross(right).normalized();
    CameraModel cam;
    cam.intrinsics = intr;
    cam.rotation.row(0) = right.transpose();
    cam.rotation.row(1) = down.transpose();
    cam.rotation.row(2) = forward.transpose();
    cam.translation = -cam.rotation * eye;
    return cam;
  }

  void validate() const {
    if (!(intrinsics.fx > 0.0) || !(intrinsics.fy > 0.0))
      throw Error(ErrorCode::InvalidConfig, "focal lengths must be positive");
    const Eigen::Matrix3d rrt = rotation * rotation.transpose();
    if (!rrt.isApprox(Eigen::Matrix3d::Identity(), 1e-9) || rotation.determinant() < 0.0)
      throw Error(ErrorCode::InvalidConfig, "rotation must be orthonormal with det +1");
  }
};

struct Projection {
  Eigen::Vector2d pixel;
  double depth{0.0};
  bool on_image{false};
};

/// z_c·[u v 1]^T = K·(R·p + t). Throws BehindCamera when z_c <= 0.
inline Projection project_point(const CameraModel& cam, const Point3& world) {
  const Vector3 pc = cam.rotation * world + cam.translation;
  if (!(pc.z() > 0.0)) throw Error(ErrorCode::BehindCamera, "point is not in front of the camera");
  const auto& k = cam.intrinsics;
  Projection out;
  out.pixel = {k.fx * pc.x() / pc.z() + k.cx, k.fy * pc.y() / pc.z() + k.cy};
  out.depth = pc.z();
  out.on_image = out.pixel.x() >= 0.0 && out.pixel.y() >= 0.0 && out.pixel.x() < k.width &&
                 out.pixel.y() < k.height;
  return out;
}

struct RegionStats {
  double mean{0.0};
  double stddev{0.0};   ///< population standard deviation
  double entropy{0.0};  ///< bits, 256-bin histogram
  std::size_t pixel_count{0};
};

/// Histogram statistics over pixels whose centers (integer coordinates) lie
/// within `radius` of `center`, clipped to the image. Throws EmptyRegion.
inline RegionStats region_stats(const GrayImage& img, const Eigen::Vector2d& center, double radius) {
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidConfig, "region radius must be > 0");
  std::array<std::size_t, 256> hist{};
  const int x0 = std::max(0, static_cast<int>(std::ceil(center.x() - radius)));
  const int x1 = std::min(img.width - 1, static_cast<int>(std::floor(center.x() + radius)));
  const int y0 = std::max(0, static_cast<int>(std::ceil(center.y() - radius)));
  const int y1 = std::min(img.height - 1, static_cast<int>(std::floor(center.y() + radius)));
  const double r2 = radius * radius;
  std::size_t count = 0;
  for (int y = y0; y <= y1; ++y) {
    const double dy = y - center.y();
    for (int x = x0; x <= x1; ++x) {
      const double dx = x - center.x();
      if (dx * dx + dy * dy > r2) continue;
      ++hist[img.at(x, y)];
      ++count;
    }
  }
  if (count == 0) throw Error(ErrorCode::EmptyRegion, "reference region has no pixels");

  RegionStats s;
  s.pixel_count = count;
  const double n = static_cast<double>(count);
  double sum = 0.0;
  for (int v = 0; v < 256; ++v) sum += static_cast<double>(v) * static_cast<double>(hist[v]);
  s.mean = sum / n;
  double var = 0.0;
  for (int v = 0; v < 256; ++v) {
    if (hist[v] == 0) continue;
    const double d = v - s.mean;
    var += d * d * static_cast<double>(hist[v]);
    const double p = static_cast<double>(hist[v]) / n;
    s.entropy -= p * std::log2(p);
  }
  s.stddev = std::sqrt(var / n);
  return s;
}

struct ExposureConfig {
  double mu_min{110.0};
  double mu_max{160.0};
  double step_ev{0.3};  ///< k_μ
  double gamma_min{-5.0};
  double gamma_max{5.0};
  double ref_radius{60.0};  ///< r_f, pixels
  /// Blade returns spread across the chord, so the tolerance is half the root
  /// chord rather than the generic 0.3 m.
  LineRansacOptions line{.inlier_tol = 1.5,
                         .max_iters = 500,
                         .seed = 11,
                         .min_inlier_ratio = 0.2,
                         .refine = true};

  void validate() const {
    if (!(0.0 <= mu_min && mu_min < mu_max && mu_max <= 255.0))
      throw Error(ErrorCode::InvalidConfig, "need 0 <= mu_min < mu_max <= 255");
    if (!(step_ev > 0.0)) throw Error(ErrorCode::InvalidConfig, "step_ev must be > 0");
    if (!(gamma_min <= gamma_max)) throw Error(ErrorCode::InvalidConfig, "gamma range is empty");
    if (!(ref_radius > 0.0)) throw Error(ErrorCode::InvalidConfig, "ref_radius must be > 0");
  }
};

/// Fixed-step update with dead band, clamped to the γ range.
inline double adjust_step(double gamma, double mean_gray, const ExposureConfig& cfg) {
  if (mean_gray > cfg.mu_max)
    gamma -= cfg.step_ev;
  else if (mean_gray < cfg.mu_min)
    gamma += cfg.step_ev;
  return std::clamp(gamma, cfg.gamma_min, cfg.gamma_max);
}

struct InspectionPoint {
  Point3 foot;
  Vector3 direction;  ///< unit, drone -> foot (gimbal pointing)
  Line3 blade_line;
};

inline InspectionPoint inspection_point(const PointCloud& blade_cloud, const Point3& drone,
                                        const LineRansacOptions& opts = {}) {
  const LineFit fit = fit_line_ransac(blade_cloud, opts);
  const PerpendicularFoot pf = perpendicular_foot(drone, fit.line);
  return {pf.foot, pf.direction, fit.line};
}

/// One capture: the blade cloud and drone position, plus the gimbal camera
/// (already aligned by the provider) and its image at the requested exposure.
struct ExposureFrame {
  PointCloud blade_cloud;
  Point3 drone{Point3::Zero()};
  CameraModel camera;
  GrayImage image;
};

class FrameSource {
 public:
  virtual ~FrameSource() = default;
  /// Next frame captured at exposure `gamma_ev`; nullopt once inspection ends.
  virtual std::optional<ExposureFrame> next(double gamma_ev) = 0;
};

struct TickRecord {
  int tick{0};
  double gamma_ev{0.0};  ///< exposure the frame was captured with
  std::optional<RegionStats> stats;
  std::optional<Eigen::Vector2d> reference_pixel;
  bool saturated{false};  ///< γ pinned at a bound while μ stays out of band
  std::string error;      ///< empty on success
};

struct ExposureTrace {
  std::vector<TickRecord> ticks;
  double final_gamma{0.0};
};

/// Per-tick errors (degenerate cloud, projection failure, empty region) are
/// recorded and leave γ unchanged; the loop continues.
inline ExposureTrace run_exposure_loop(FrameSource& source, const ExposureConfig& cfg,
                                       double gamma0, int max_ticks) {
  cfg.validate();
  ExposureTrace trace;
  double gamma = std::clamp(gamma0, cfg.gamma_min, cfg.gamma_max);
  for (int tick = 0; tick < max_ticks; ++tick) {
    auto frame = source.next(gamma);
    if (!frame) break;
    TickRecord rec;
    rec.tick = tick;
    rec.gamma_ev = gamma;
    try {
      const InspectionPoint ip = inspection_point(frame->blade_cloud, frame->drone, cfg.line);
      const Projection proj = project_point(frame->camera, ip.foot);
      rec.reference_pixel = proj.pixel;
      rec.stats = region_stats(frame->image, proj.pixel, cfg.ref_radius);
      const double next = adjust_step(gamma, rec.stats->mean, cfg);
      rec.saturated = (rec.stats->mean > cfg.mu_max && gamma <= cfg.gamma_min) ||
                      (rec.stats->mean < cfg.mu_min && gamma >= cfg.gamma_max);
      gamma = next;
    } catch (const Error& e) {
      rec.error = e.what();
    }
    trace.ticks.push_back(std::move(rec));
  }
  trace.final_gamma = gamma;
  return trace;
}

}  // namespace bladescan
