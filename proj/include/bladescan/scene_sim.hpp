// Synthetic wind-turbine scenes with ground truth.
//
// Turbine frame: `rotor_normal` n (horizontal, pointing at the drone), world
// up z. Blade i lies in the rotor plane at bearing a* + 120·i, measured from
// world-down projected onto the plane toward n × down (the same convention
// blade_stop_angle uses). Blades are tapered slabs, the tower is a vertical
// cylinder behind the rotor plane, the nacelle a box behind the hub.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "bladescan/angle_estimator.hpp"
#include "bladescan/error.hpp"
#include "bladescan/exposure.hpp"
#include "bladescan/geometry.hpp"

namespace bladescan {

struct ClutterSpec {
  bool enabled{false};
  bool ground{true};
  double ground_half_extent{100.0};
  double ground_density{0.5};
  int boxes{12};
  double box_min_size{3.0};
  double box_max_size{10.0};
  double box_density{2.0};
  double box_min_behind{20.0};  ///< distance behind the rotor plane
  double box_max_behind{45.0};
  int stray_points{300};
  double stray_half_extent{30.0};
  std::uint64_t layout_seed{99};
};

struct SceneSpec {
  double tower_height{130.0};
  double tower_radius{2.0};
  double blade_length{50.0};  ///< hub center to tip
  double blade_root_chord{3.0};
  double blade_tip_chord{1.0};
  double blade_thickness{0.4};
  Point3 hub_center{0.0, 0.0, 132.0};
  double hub_radius{2.5};
  double hub_depth{3.0};
  double overhang{5.0};  ///< tower axis behind the rotor plane
  double nacelle_length{10.0};
  double nacelle_width{4.0};
  double nacelle_height{4.0};
  double stop_angle_deg{0.0};
  Vector3 rotor_normal{0.0, -1.0, 0.0};
  double density{80.0};  ///< turbine surface points per m²
  double noise_sigma{0.0};
  ClutterSpec clutter;
  std::uint64_t seed{1};

  void validate() const {
    auto bad = [](const char* what) { throw Error(ErrorCode::InvalidSpec, what); };
    if (!(stop_angle_deg >= 0.0 && stop_angle_deg < 120.0)) bad("stop angle must be in [0, 120)");
    if (!(tower_height > 0.0 && tower_radius > 0.0)) bad("tower dimensions must be positive");
    if (!(blade_length > hub_radius && hub_radius > 0.0)) bad("blade must extend past the hub");
    if (!(blade_root_chord > 0.0 && blade_tip_chord > 0.0 && blade_thickness > 0.0))
      bad("blade profile must be positive");
    if (!(density > 0.0) || noise_sigma < 0.0) bad("density > 0 and noise >= 0 required");
    if (rotor_normal.norm() < 1e-9) bad("rotor normal must be nonzero");
    if (std::abs(rotor_normal.normalized().z()) > 0.5) bad("rotor normal must be near horizontal");
    if (!hub_center.allFinite()) bad("hub center must be finite");
  }

  [[nodiscard]] Vector3 normal() const { return rotor_normal.normalized(); }
  [[nodiscard]] double chord_at(double r) const {
    const double f = std::clamp((r - hub_radius) / (blade_length - hub_radius), 0.0, 1.0);
    return blade_root_chord + f * (blade_tip_chord - blade_root_chord);
  }
};

enum class SurfaceClass : std::uint8_t { Blade, Hub, Nacelle, Tower, Ground, Clutter };

struct GroundTruth {
  double stop_angle_deg{0.0};
  Point3 hub{Point3::Zero()};
  Vector3 normal{Vector3::UnitY()};
  std::array<double, 3> bearings_deg{};
  std::array<Vector3, 3> blade_directions{};
  std::array<Line3, 3> blade_lines{};
};

struct GeneratedScene {
  PointCloud cloud;
  std::vector<SurfaceClass> classes;  ///< per point
  std::vector<std::int8_t> blade_ids; ///< per point, -1 unless a blade
  std::vector<Vector3> normals;       ///< per point outward surface normal
  GroundTruth truth;
};

/// Rotor-plane frame shared by the generator and the renderer.
struct RotorFrame {
  Vector3 normal;
  Vector3 down;
  Vector3 right;
};

inline RotorFrame rotor_frame(const SceneSpec& spec) {
  const Plane plane = Plane::through(spec.hub_center, spec.normal());
  const BearingFrame f = bearing_frame(plane, Vector3(0, 0, -1));
  return {spec.normal(), f.down, f.right};
}

inline GroundTruth ground_truth(const SceneSpec& spec) {
  spec.validate();
  const RotorFrame f = rotor_frame(spec);
  GroundTruth gt;
  gt.stop_angle_deg = spec.stop_angle_deg;
  gt.hub = spec.hub_center;
  gt.normal = f.normal;
  for (int i = 0; i < 3; ++i) {
    gt.bearings_deg[i] = spec.stop_angle_deg + 120.0 * i;
    const double th = deg2rad(gt.bearings_deg[i]);
    gt.blade_directions[i] = std::cos(th) * f.down + std::sin(th) * f.right;
    gt.blade_lines[i] = Line3{spec.hub_center, gt.blade_directions[i]};
  }
  return gt;
}

namespace detail {

struct Sampler {
  GeneratedScene& out;
  std::mt19937_64& rng;
  double noise;
  std::normal_distribution<double> gauss{0.0, 1.0};
  std::uniform_real_distribution<double> unit{0.0, 1.0};

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(rng); }

  void add(const Point3& p, const Vector3& normal, SurfaceClass cls, int blade = -1) {
    Point3 q = p;
    if (noise > 0.0) q += noise * Vector3(gauss(rng), gauss(rng), gauss(rng));
    out.cloud.push_back(q);
    out.classes.push_back(cls);
    out.blade_ids.push_back(static_cast<std::int8_t>(blade));
    out.normals.push_back(normal);
  }

  static std::size_t count_for(double area, double density) {
    return static_cast<std::size_t>(std::llround(area * density));
  }

  /// Parallelogram origin + u·[0,1] + v·[0,1] facing `normal`.
  void patch(const Point3& origin, const Vector3& u, const Vector3& v, const Vector3& normal,
             double density, SurfaceClass cls) {
    const std::size_t n = count_for(u.cross(v).norm(), density);
    for (std::size_t k = 0; k < n; ++k) add(origin + unit(rng) * u + unit(rng) * v, normal, cls);
  }

  /// Box with edge vectors a, b, c from `corner`, outward-facing normals.
  void box(const Point3& corner, const Vector3& a, const Vector3& b, const Vector3& c,
           double density, SurfaceClass cls) {
    const Vector3 na = a.normalized(), nb = b.normalized(), nc = c.normalized();
    patch(corner, a, b, -nc, density, cls);
    patch(corner + c, a, b, nc, density, cls);
    patch(corner, a, c, -nb, density, cls);
    patch(corner + b, a, c, nb, density, cls);
    patch(corner, b, c, -na, density, cls);
    patch(corner + a, b, c, na, density, cls);
  }
};

}  // namespace detail

/// Samples the turbine surfaces (plus clutter when enabled). Deterministic in
/// spec.seed; the clutter layout depends only on clutter.layout_seed.
inline GeneratedScene generate_cloud(const SceneSpec& spec) {
  spec.validate();
  GeneratedScene scene;
  scene.truth = ground_truth(spec);
  const RotorFrame f = rotor_frame(spec);
  std::mt19937_64 rng(spec.seed);
  detail::Sampler s{scene, rng, spec.noise_sigma};
  const Point3& hub = spec.hub_center;
  const double half_t = 0.5 * spec.blade_thickness;

  // Blades: both faces by rejection sampling over the root chord, then the two edges.
  for (int i = 0; i < 3; ++i) {
    const Vector3 b = scene.truth.blade_directions[i];
    const Vector3 c = f.normal.cross(b);
    const double r0 = spec.hub_radius, r1 = spec.blade_length;
    const double cmax = std::max(spec.blade_root_chord, spec.blade_tip_chord);
    const double face_area = 0.5 * (spec.blade_root_chord + spec.blade_tip_chord) * (r1 - r0);
    for (double side : {-half_t, half_t}) {
      const std::size_t n = detail::Sampler::count_for(face_area, spec.density);
      for (std::size_t k = 0; k < n;) {
        const double r = s.uniform(r0, r1);
        const double w = s.uniform(-0.5 * cmax, 0.5 * cmax);
        if (std::abs(w) > 0.5 * spec.chord_at(r)) continue;
        s.add(hub + r * b + w * c + side * f.normal, side > 0.0 ? f.normal : Vector3(-f.normal),
              SurfaceClass::Blade, i);
        ++k;
      }
    }
    for (double edge : {-0.5, 0.5}) {
      const std::size_t n = detail::Sampler::count_for((r1 - r0) * spec.blade_thickness, spec.density);
      for (std::size_t k = 0; k < n; ++k) {
        const double r = s.uniform(r0, r1);
        s.add(hub + r * b + edge * spec.chord_at(r) * c + s.uniform(-half_t, half_t) * f.normal,
              edge > 0.0 ? c : Vector3(-c), SurfaceClass::Blade, i);
      }
    }
  }

  // Hub: front disk and cylindrical side running back into the nacelle.
  {
    const std::size_t n_disk = detail::Sampler::count_for(
        std::numbers::pi * spec.hub_radius * spec.hub_radius, spec.density);
    for (std::size_t k = 0; k < n_disk; ++k) {
      const double rr = spec.hub_radius * std::sqrt(s.unit(rng));
      const double th = s.uniform(0.0, 2.0 * std::numbers::pi);
      s.add(hub + half_t * f.normal + rr * (std::cos(th) * f.down + std::sin(th) * f.right),
            f.normal, SurfaceClass::Hub);
    }
    const std::size_t n_side = detail::Sampler::count_for(
        2.0 * std::numbers::pi * spec.hub_radius * (spec.hub_depth + half_t), spec.density);
    for (std::size_t k = 0; k < n_side; ++k) {
      const double th = s.uniform(0.0, 2.0 * std::numbers::pi);
      const double depth = s.uniform(-spec.hub_depth, half_t);
      const Vector3 radial = std::cos(th) * f.down + std::sin(th) * f.right;
      s.add(hub + depth * f.normal + spec.hub_radius * radial, radial, SurfaceClass::Hub);
    }
  }

  // Nacelle box behind the hub.
  {
    const Vector3 back = -f.normal * spec.nacelle_length;
    const Vector3 across = f.right * spec.nacelle_width;
    const Vector3 up = Vector3::UnitZ() * spec.nacelle_height;
    const Point3 corner = hub - f.normal * spec.hub_depth - 0.5 * across - 0.5 * up;
    s.box(corner, back, across, up, spec.density, SurfaceClass::Nacelle);
  }

  // Tower.
  {
    Point3 axis = hub - spec.overhang * f.normal;
    const std::size_t n = detail::Sampler::count_for(
        2.0 * std::numbers::pi * spec.tower_radius * spec.tower_height, spec.density);
    for (std::size_t k = 0; k < n; ++k) {
      const double th = s.uniform(0.0, 2.0 * std::numbers::pi);
      const Vector3 radial(std::cos(th), std::sin(th), 0.0);
      s.add(Point3(axis.x() + spec.tower_radius * radial.x(),
                   axis.y() + spec.tower_radius * radial.y(), s.uniform(0.0, spec.tower_height)),
            radial, SurfaceClass::Tower);
    }
  }

  if (spec.clutter.enabled) {
    const ClutterSpec& cl = spec.clutter;
    const Point3 base(hub.x(), hub.y(), 0.0);
    if (cl.ground) {
      const double e = cl.ground_half_extent;
      s.patch(base + Vector3(-e, -e, 0.0), Vector3(2 * e, 0, 0), Vector3(0, 2 * e, 0),
              Vector3::UnitZ(), cl.ground_density, SurfaceClass::Ground);
    }
    std::mt19937_64 layout(cl.layout_seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    auto lay = [&](double lo, double hi) { return lo + (hi - lo) * u01(layout); };
    for (int k = 0; k < cl.boxes; ++k) {
      const double behind = lay(cl.box_min_behind, cl.box_max_behind);
      const double lateral = lay(-40.0, 40.0);
      const double height = lay(hub.z() - 50.0, hub.z() + 10.0);
      const Vector3 a = -f.normal * lay(cl.box_min_size, cl.box_max_size);
      const Vector3 b = f.right * lay(cl.box_min_size, cl.box_max_size);
      const Vector3 c = Vector3::UnitZ() * lay(cl.box_min_size, cl.box_max_size);
      Point3 corner = hub - behind * f.normal + lateral * f.right;
      corner.z() = height;
      s.box(corner, a, b, c, cl.box_density, SurfaceClass::Clutter);
    }
    for (int k = 0; k < cl.stray_points; ++k) {
      const double e = cl.stray_half_extent;
      const Point3 p = hub + Vector3(s.uniform(-e, e), s.uniform(-e, e), s.uniform(-e, e));
      s.add(p, Vector3::Zero(), SurfaceClass::Clutter);
    }
  }
  return scene;
}

// ---------------------------------------------------------------------------
// LiDAR model
// ---------------------------------------------------------------------------

struct LidarSpec {
  Point3 position{Point3::Zero()};
  Vector3 forward{0.0, 1.0, 0.0};  ///< horizontal heading
  double pitch_deg{-23.0};
  double vertical_fov_deg{60.0};
  double horizontal_fov_deg{60.0};
  double max_range{70.0};
  double dropout{0.0};  ///< fraction of in-view returns discarded
  std::uint64_t seed{0};

  void validate() const {
    if (!(vertical_fov_deg > 0.0 && vertical_fov_deg <= 180.0 && horizontal_fov_deg > 0.0 &&
          horizontal_fov_deg <= 180.0))
      throw Error(ErrorCode::InvalidSpec, "fov must be in (0, 180]");
    if (!(max_range > 0.0)) throw Error(ErrorCode::InvalidSpec, "max range must be > 0");
    if (!(dropout >= 0.0 && dropout <= 1.0)) throw Error(ErrorCode::InvalidSpec, "dropout in [0,1]");
    Vector3 h = forward;
    h.z() = 0.0;
    if (h.norm() < 1e-9) throw Error(ErrorCode::InvalidSpec, "forward must have a horizontal part");
  }
};

/// True when `p` lies inside the pitched FOV pyramid and within range.
inline bool lidar_sees(const LidarSpec& lidar, const Point3& p) {
  Vector3 fwd = lidar.forward;
  fwd.z() = 0.0;
  fwd.normalize();
  const Vector3 right = fwd.cross(Vector3::UnitZ()).normalized();
  const double a = deg2rad(lidar.pitch_deg);
  const Vector3 bore = std::cos(a) * fwd + std::sin(a) * Vector3::UnitZ();
  const Vector3 up = right.cross(bore);
  const Vector3 d = p - lidar.position;
  if (d.norm() > lidar.max_range) return false;
  const double x = d.dot(bore);
  if (x <= 0.0) return false;
  const double horiz = std::atan2(d.dot(right), x);
  const double vert = std::atan2(d.dot(up), x);
  return std::abs(horiz) <= 0.5 * deg2rad(lidar.horizontal_fov_deg) &&
         std::abs(vert) <= 0.5 * deg2rad(lidar.vertical_fov_deg);
}

/// Points inside the FOV and range, then dropout.
inline PointCloud lidar_filter(const PointCloud& cloud, const LidarSpec& lidar) {
  lidar.validate();
  std::mt19937_64 rng(lidar.seed);
  std::bernoulli_distribution drop(lidar.dropout);
  PointCloud out;
  for (const auto& p : cloud.points) {
    if (!lidar_sees(lidar, p)) continue;
    if (lidar.dropout > 0.0 && drop(rng)) continue;
    out.push_back(p);
  }
  return out;
}

/// Ascent sweep: the drone climbs in front of the (prior) hub, scanning at
/// several heights. All poses face the rotor along -normal.
struct SweepSpec {
  double standoff{35.0};
  std::vector<double> heights{-20.0, -10.0, 0.0, 10.0};  ///< relative to the hub prior
  LidarSpec sensor;  ///< pitch, fov, range and dropout template
};

inline std::vector<LidarSpec> sweep_poses(const SweepSpec& sweep, const Point3& prior_hub,
                                          const Vector3& normal) {
  std::vector<LidarSpec> poses;
  for (double h : sweep.heights) {
    LidarSpec pose = sweep.sensor;
    pose.position = prior_hub + sweep.standoff * normal + h * Vector3::UnitZ();
    pose.forward = -normal;
    poses.push_back(pose);
  }
  return poses;
}

/// Union of everything the sweep sees, with dropout applied once per point.
/// With per-point surface normals, back-facing returns are culled per pose
/// (self-occlusion of convex parts; no inter-object occlusion).
inline PointCloud capture_sweep(const PointCloud& cloud, const SweepSpec& sweep,
                                const Point3& prior_hub, const Vector3& normal,
                                std::uint64_t seed, std::span<const Vector3> normals = {}) {
  const auto poses = sweep_poses(sweep, prior_hub, normal);
  for (const auto& p : poses) p.validate();
  if (!normals.empty() && normals.size() != cloud.size())
    throw Error(ErrorCode::InvalidSpec, "normals must match the cloud size");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution drop(sweep.sensor.dropout);
  PointCloud out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud.points[i];
    const bool seen = std::any_of(poses.begin(), poses.end(), [&](const LidarSpec& l) {
      if (!normals.empty() && normals[i].dot(l.position - p) < 0.0) return false;
      return lidar_sees(l, p);
    });
    if (!seen) continue;
    if (sweep.sensor.dropout > 0.0 && drop(rng)) continue;
    out.push_back(p);
  }
  return out;
}

/// Scan source over a static scene. Every capture is a fresh sweep: surface
/// sampling, noise and dropout are redrawn from a per-capture seed. With
/// `replay` the first capture is returned again on every call.
class SimulatedScanSource final : public ScanSource {
 public:
  SimulatedScanSource(SceneSpec spec, SweepSpec sweep, Point3 prior_hub, bool replay = false)
      : spec_(std::move(spec)), sweep_(std::move(sweep)), prior_(std::move(prior_hub)),
        replay_(replay) {
    spec_.validate();
  }

  Scan capture() override {
    if (replay_ && cached_) return *cached_;
    SceneSpec s = spec_;
    s.seed = spec_.seed + 0x9E3779B97F4A7C15ULL * captures_;
    const GeneratedScene scene = generate_cloud(s);
    Scan scan;
    scan.cloud = capture_sweep(scene.cloud, sweep_, prior_, spec_.normal(),
                               s.seed ^ 0xD1B54A32D192ED03ULL, scene.normals);
    scan.viewpoint = prior_ + sweep_.standoff * spec_.normal();
    ++captures_;
    if (replay_) cached_ = scan;
    return scan;
  }

  [[nodiscard]] int captures() const noexcept { return static_cast<int>(captures_); }

 private:
  SceneSpec spec_;
  SweepSpec sweep_;
  Point3 prior_;
  bool replay_;
  std::uint64_t captures_{0};
  std::optional<Scan> cached_;
};

// ---------------------------------------------------------------------------
// Hub prior
// ---------------------------------------------------------------------------

inline Point3 perturb_prior(const Point3& hub, const Vector3& offset) { return hub + offset; }

/// Isotropic Gaussian perturbation, reproducible from `seed`.
inline Point3 perturb_prior(const Point3& hub, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sigma);
  return hub + Vector3(g(rng), g(rng), g(rng));
}

/// Uniform direction, magnitude uniform in [min_norm, max_norm].
inline Vector3 random_offset(double min_norm, double max_norm, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector3 d;
  do d = Vector3(g(rng), g(rng), g(rng));
  while (d.norm() < 1e-9);
  std::uniform_real_distribution<double> mag(min_norm, max_norm);
  return d.normalized() * mag(rng);
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

/// Flat per-class radiance with a 2^γ exposure response.
struct SunModel {
  double blade{120.0};
  double tower{110.0};
  double ground{70.0};
  double sky{200.0};
  double blade_texture{0.15};  ///< relative amplitude of blade surface detail

  void validate() const {
    if (!(blade > 0.0 && tower > 0.0 && ground > 0.0 && sky > 0.0))
      throw Error(ErrorCode::InvalidSpec, "radiance levels must be positive");
    if (!(blade_texture >= 0.0 && blade_texture < 1.0))
      throw Error(ErrorCode::InvalidSpec, "blade texture must be in [0, 1)");
  }
};

inline std::uint8_t exposure_response(double radiance, double gamma_ev) {
  const double v = std::round(radiance * std::exp2(gamma_ev));
  return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

namespace detail {

inline double hash_noise(std::int64_t a, std::int64_t b, std::int64_t c) {
  std::uint64_t h = static_cast<std::uint64_t>(a) * 0x9E3779B97F4A7C15ULL;
  h ^= static_cast<std::uint64_t>(b) * 0xC2B2AE3D27D4EB4FULL;
  h ^= static_cast<std::uint64_t>(c) * 0x165667B19E3779F9ULL;
  h ^= h >> 31;
  h *= 0xBF58476D1CE4E5B9ULL;
  h ^= h >> 29;
  return static_cast<double>(h >> 11) * (2.0 / 9007199254740992.0) - 1.0;  // [-1, 1)
}

/// Surface detail in [-1, 1] from blade-local coordinates.
inline double blade_pattern(double r, double w, int blade) {
  const double tau = 2.0 * std::numbers::pi;
  const double waves = 0.35 * std::sin(tau * r / 0.9 + 1.3 * blade) * std::cos(tau * w / 0.6) +
                       0.25 * std::sin(tau * (r + w) / 0.37);
  const double grain = 0.4 * hash_noise(static_cast<std::int64_t>(std::floor(r / 0.04)),
                                        static_cast<std::int64_t>(std::floor(w / 0.04)), blade);
  return waves + grain;
}

}  // namespace detail

/// Ray-cast class renderer: blades and hub (blade radiance with surface detail),
/// tower, ground plane z = 0, sky.
inline GrayImage render_image(const SceneSpec& spec, const CameraModel& cam, const SunModel& sun,
                              double gamma_ev) {
  spec.validate();
  sun.validate();
  const auto& k = cam.intrinsics;
  const RotorFrame f = rotor_frame(spec);
  const GroundTruth gt = ground_truth(spec);
  const Point3 eye = cam.center();
  const Eigen::Matrix3d to_world = cam.rotation.transpose();
  const Point3 axis = spec.hub_center - spec.overhang * f.normal;

  const std::uint8_t sky = exposure_response(sun.sky, gamma_ev);
  const std::uint8_t tower = exposure_response(sun.tower, gamma_ev);
  const std::uint8_t ground = exposure_response(sun.ground, gamma_ev);

  GrayImage img(k.width, k.height);
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      const Vector3 dir =
          (to_world * Vector3((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0)).normalized();
      double best = std::numeric_limits<double>::infinity();
      std::uint8_t value = sky;

      // Rotor plane: blades and hub disk.
      const double denom = dir.dot(f.normal);
      if (std::abs(denom) > 1e-12) {
        const double t = (spec.hub_center - eye).dot(f.normal) / denom;
        if (t > 0.0) {
          const Vector3 q = eye + t * dir - spec.hub_center;
          if (q.norm() <= spec.hub_radius) {
            best = t;
            value = exposure_response(sun.blade, gamma_ev);
          } else {
            for (int i = 0; i < 3; ++i) {
              const Vector3 b = gt.blade_directions[i];
              const double r = q.dot(b);
              const double w = q.dot(f.normal.cross(b));
              if (r < spec.hub_radius || r > spec.blade_length) continue;
              if (std::abs(w) > 0.5 * spec.chord_at(r)) continue;
              best = t;
              const double detail = 1.0 + sun.blade_texture * detail::blade_pattern(r, w, i);
              value = exposure_response(sun.blade * detail, gamma_ev);
              break;
            }
          }
        }
      }

      // Tower: vertical cylinder.
      {
        const double ox = eye.x() - axis.x(), oy = eye.y() - axis.y();
        const double a = dir.x() * dir.x() + dir.y() * dir.y();
        const double b = 2.0 * (ox * dir.x() + oy * dir.y());
        const double c = ox * ox + oy * oy - spec.tower_radius * spec.tower_radius;
        const double disc = b * b - 4.0 * a * c;
        if (a > 1e-15 && disc >= 0.0) {
          const double t = (-b - std::sqrt(disc)) / (2.0 * a);
          const double z = eye.z() + t * dir.z();
          if (t > 0.0 && t < best && z >= 0.0 && z <= spec.tower_height) {
            best = t;
            value = tower;
          }
        }
      }

      if (dir.z() < -1e-12) {
        const double t = -eye.z() / dir.z();
        if (t > 0.0 && t < best) value = ground;
      }
      img.at(u, v) = value;
    }
  }
  return img;
}

// ---------------------------------------------------------------------------
// Inspection pass for the exposure loop
// ---------------------------------------------------------------------------

struct InspectionSpec {
  int blade{0};
  double standoff{8.0};        ///< drone distance in front of the blade
  double start_radius{10.0};   ///< along-blade position of the first tick
  double step_per_tick{0.3};   ///< along-blade advance per tick
  double end_radius{45.0};     ///< pass ends (provider exhausted) beyond this
  double cloud_radius{12.0};   ///< LiDAR blade returns kept around the drone
  Intrinsics intrinsics{.fx = 800.0, .fy = 800.0, .cx = 320.0, .cy = 240.0, .width = 640,
                        .height = 480};
  std::vector<int> corrupt_ticks;  ///< ticks delivering an empty blade cloud
};

/// Drone flies along one blade at fixed standoff; the gimbal is aimed at the
/// true perpendicular foot each tick, images are rendered at the requested γ.
class SimulatedInspectionSource final : public FrameSource {
 public:
  SimulatedInspectionSource(SceneSpec spec, InspectionSpec insp, SunModel sun)
      : spec_(std::move(spec)), insp_(std::move(insp)), sun_(sun) {
    spec_.validate();
    sun_.validate();
    if (insp_.blade < 0 || insp_.blade > 2) throw Error(ErrorCode::InvalidSpec, "blade index");
    SceneSpec s = spec_;
    s.clutter.enabled = false;
    scene_ = generate_cloud(s);
  }

  std::optional<ExposureFrame> next(double gamma_ev) override {
    const double r = insp_.start_radius + insp_.step_per_tick * tick_;
    if (r > insp_.end_radius) return std::nullopt;
    const GroundTruth& gt = scene_.truth;
    const Vector3 b = gt.blade_directions[insp_.blade];
    const Point3 foot = gt.hub + r * b;
    ExposureFrame frame;
    frame.drone = foot + insp_.standoff * gt.normal;
    frame.camera = CameraModel::look_at(insp_.intrinsics, frame.drone, foot);
    const bool corrupt = std::find(insp_.corrupt_ticks.begin(), insp_.corrupt_ticks.end(),
                                   static_cast<int>(tick_)) != insp_.corrupt_ticks.end();
    if (!corrupt) {
      for (std::size_t i = 0; i < scene_.cloud.size(); ++i) {
        if (scene_.blade_ids[i] != insp_.blade) continue;
        if ((scene_.cloud.points[i] - frame.drone).norm() <= insp_.cloud_radius)
          frame.blade_cloud.push_back(scene_.cloud.points[i]);
      }
    }
    frame.image = render_image(spec_, frame.camera, sun_, gamma_ev);
    ++tick_;
    return frame;
  }

  [[nodiscard]] const GroundTruth& truth() const noexcept { return scene_.truth; }

 private:
  SceneSpec spec_;
  InspectionSpec insp_;
  SunModel sun_;
  GeneratedScene scene_;
  std::uint64_t tick_{0};
};

}  // namespace bladescan
