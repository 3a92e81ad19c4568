// File formats: point clouds (CSV, binary PLY), 8-bit PGM images and the
// JSON documents used by the command-line tools.

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "bladescan/angle_estimator.hpp"
#include "bladescan/benchmark.hpp"
#include "bladescan/error.hpp"
#include "bladescan/exposure.hpp"
#include "bladescan/geometry.hpp"
#include "bladescan/scene_sim.hpp"
#include "json.hpp"

namespace bladescan::io {

using nlohmann::json;

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

/// Splits on commas (or whitespace when the line has no comma).
inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  if (line.find(',') != std::string_view::npos) {
    std::size_t start = 0;
    while (true) {
      const auto pos = line.find(',', start);
      out.push_back(trim(line.substr(start, pos - start)));
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
  } else {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      std::size_t j = i;
      while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
      if (j > i) out.push_back(line.substr(i, j - i));
      i = j;
    }
  }
  return out;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return in;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

inline std::string lower_ext(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Point clouds
// ---------------------------------------------------------------------------

/// `x,y,z` per line. A non-numeric first line is taken as a header; extra
/// columns are ignored; blank lines and '#' comments are skipped.
inline PointCloud read_cloud_csv(std::istream& in) {
  PointCloud cloud;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto fields = detail::split_fields(t);
    Point3 p;
    bool ok = fields.size() >= 3;
    for (int k = 0; ok && k < 3; ++k) ok = detail::parse_double(fields[k], p[k]);
    if (!ok) {
      if (first) {
        first = false;
        continue;
      }
      throw Error(ErrorCode::Io, "malformed cloud row at line " + std::to_string(lineno));
    }
    first = false;
    cloud.push_back(p);
  }
  return cloud;
}

inline void write_cloud_csv(std::ostream& out, const PointCloud& cloud) {
  out << "x,y,z\n";
  char buf[64];
  for (const auto& p : cloud.points) {
    for (int k = 0; k < 3; ++k) {
      const auto r = std::to_chars(buf, buf + sizeof buf, p[k]);
      out.write(buf, r.ptr - buf);
      out.put(k < 2 ? ',' : '\n');
    }
  }
}

namespace detail {

struct PlyProperty {
  std::string name;
  std::string type;
  bool is_list{false};
  std::string count_type;
};

inline std::size_t ply_type_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "float" || t == "int32" || t == "uint32" || t == "float32")
    return 4;
  if (t == "double" || t == "float64") return 8;
  throw Error(ErrorCode::Io, "unknown PLY property type " + t);
}

template <typename T>
T read_le(const unsigned char* p) {
  T v;
  std::memcpy(&v, p, sizeof v);
  if constexpr (std::endian::native == std::endian::big) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    std::reverse(b, b + sizeof v);
  }
  return v;
}

inline double ply_scalar(const unsigned char* p, const std::string& t) {
  if (t == "float" || t == "float32") return read_le<float>(p);
  if (t == "double" || t == "float64") return read_le<double>(p);
  if (t == "char" || t == "int8") return read_le<std::int8_t>(p);
  if (t == "uchar" || t == "uint8") return read_le<std::uint8_t>(p);
  if (t == "short" || t == "int16") return read_le<std::int16_t>(p);
  if (t == "ushort" || t == "uint16") return read_le<std::uint16_t>(p);
  if (t == "int" || t == "int32") return read_le<std::int32_t>(p);
  return read_le<std::uint32_t>(p);
}

}  // namespace detail

/// Binary little-endian PLY. Reads x/y/z from the vertex element (any scalar
/// type); other elements and properties are skipped.
inline PointCloud read_cloud_ply(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != "ply")
    throw Error(ErrorCode::Io, "missing PLY magic");

  struct Element {
    std::string name;
    std::size_t count{0};
    std::vector<detail::PlyProperty> props;
  };
  std::vector<Element> elements;
  bool binary_le = false;
  while (true) {
    if (!std::getline(in, line)) throw Error(ErrorCode::Io, "truncated PLY header");
    std::istringstream ss{std::string(detail::trim(line))};
    std::string word;
    ss >> word;
    if (word == "end_header") break;
    if (word == "format") {
      std::string fmt;
      ss >> fmt;
      binary_le = fmt == "binary_little_endian";
      if (!binary_le) throw Error(ErrorCode::Io, "only binary_little_endian PLY is supported");
    } else if (word == "element") {
      Element e;
      ss >> e.name >> e.count;
      elements.push_back(e);
    } else if (word == "property") {
      if (elements.empty()) throw Error(ErrorCode::Io, "PLY property before element");
      detail::PlyProperty p;
      std::string t;
      ss >> t;
      if (t == "list") {
        p.is_list = true;
        ss >> p.count_type >> p.type >> p.name;
      } else {
        p.type = t;
        ss >> p.name;
      }
      elements.back().props.push_back(p);
    }
  }
  if (!binary_le) throw Error(ErrorCode::Io, "PLY format line missing");

  PointCloud cloud;
  for (const auto& e : elements) {
    if (e.name != "vertex") {
      // Skip the element body.
      for (std::size_t i = 0; i < e.count; ++i)
        for (const auto& p : e.props) {
          if (p.is_list) {
            unsigned char cbuf[8];
            const std::size_t cs = detail::ply_type_size(p.count_type);
            if (!in.read(reinterpret_cast<char*>(cbuf), static_cast<std::streamsize>(cs)))
              throw Error(ErrorCode::Io, "truncated PLY body");
            const auto n = static_cast<std::size_t>(detail::ply_scalar(cbuf, p.count_type));
            in.ignore(static_cast<std::streamsize>(n * detail::ply_type_size(p.type)));
          } else {
            in.ignore(static_cast<std::streamsize>(detail::ply_type_size(p.type)));
          }
        }
      continue;
    }
    std::array<int, 3> slot{-1, -1, -1};
    std::vector<std::size_t> offset;
    std::size_t stride = 0;
    for (std::size_t k = 0; k < e.props.size(); ++k) {
      const auto& p = e.props[k];
      if (p.is_list) throw Error(ErrorCode::Io, "list properties on vertex are not supported");
      offset.push_back(stride);
      stride += detail::ply_type_size(p.type);
      if (p.name == "x") slot[0] = static_cast<int>(k);
      if (p.name == "y") slot[1] = static_cast<int>(k);
      if (p.name == "z") slot[2] = static_cast<int>(k);
    }
    if (slot[0] < 0 || slot[1] < 0 || slot[2] < 0)
      throw Error(ErrorCode::Io, "PLY vertex element lacks x/y/z");
    std::vector<unsigned char> row(stride);
    cloud.points.reserve(e.count);
    for (std::size_t i = 0; i < e.count; ++i) {
      if (!in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(stride)))
        throw Error(ErrorCode::Io, "truncated PLY body");
      Point3 q;
      for (int c = 0; c < 3; ++c) {
        const auto& p = e.props[static_cast<std::size_t>(slot[c])];
        q[c] = detail::ply_scalar(row.data() + offset[static_cast<std::size_t>(slot[c])], p.type);
      }
      cloud.push_back(q);
    }
  }
  return cloud;
}

/// Binary little-endian PLY with float32 x/y/z.
inline void write_cloud_ply(std::ostream& out, const PointCloud& cloud) {
  out << "ply\nformat binary_little_endian 1.0\nelement vertex " << cloud.size()
      << "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
  for (const auto& p : cloud.points) {
    for (int k = 0; k < 3; ++k) {
      float f = static_cast<float>(p[k]);
      if constexpr (std::endian::native == std::endian::big) {
        auto* b = reinterpret_cast<unsigned char*>(&f);
        std::reverse(b, b + sizeof f);
      }
      out.write(reinterpret_cast<const char*>(&f), sizeof f);
    }
  }
}

/// Dispatches on the extension: .ply, otherwise CSV.
inline PointCloud read_cloud(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return detail::lower_ext(path) == ".ply" ? read_cloud_ply(in) : read_cloud_csv(in);
}

inline void write_cloud(const std::filesystem::path& path, const PointCloud& cloud) {
  auto out = detail::open_out(path);
  if (detail::lower_ext(path) == ".ply")
    write_cloud_ply(out, cloud);
  else
    write_cloud_csv(out, cloud);
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// PGM (P5, maxval <= 255)
// ---------------------------------------------------------------------------

inline GrayImage read_pgm(std::istream& in) {
  auto token = [&in]() {
    std::string t;
    char c;
    while (in.get(c)) {
      if (c == '#') {
        std::string skip;
        std::getline(in, skip);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!t.empty()) break;
        continue;
      }
      t.push_back(c);
    }
    return t;
  };
  if (token() != "P5") throw Error(ErrorCode::Io, "not a binary PGM (P5)");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(token());
    h = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    throw Error(ErrorCode::Io, "malformed PGM header");
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255)
    throw Error(ErrorCode::Io, "unsupported PGM dimensions or maxval");
  GrayImage img(w, h);
  if (!in.read(reinterpret_cast<char*>(img.pixels.data()),
               static_cast<std::streamsize>(img.pixels.size())))
    throw Error(ErrorCode::Io, "truncated PGM data");
  return img;
}

inline void write_pgm(std::ostream& out, const GrayImage& img) {
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
}

inline GrayImage read_pgm(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return read_pgm(in);
}

inline void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  auto out = detail::open_out(path);
  write_pgm(out, img);
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline json to_json(const Vector3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline Vector3 vec3_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3)
    throw Error(ErrorCode::InvalidConfig, std::string(what) + " must be a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

namespace detail {

/// Assigns j[key] to `out` when present; type errors become InvalidConfig.
template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    if constexpr (std::is_same_v<T, Vector3>)
      out = vec3_from_json(*it, key);
    else
      out = it->template get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("bad value for '") + key + "': " + e.what());
  }
}

inline void require_object(const json& j, const char* what) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, std::string(what) + " must be an object");
}

}  // namespace detail

inline json parse_json(std::istream& in, const std::string& what) {
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, what + ": " + e.what());
  }
}

inline json load_json(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return parse_json(in, path.string());
}

// --- estimator config ---

inline json to_json(const EstimatorConfig& c) {
  return {{"standoff", c.standoff},
          {"axial_step", c.axial_step},
          {"axial_steps", c.axial_steps},
          {"ring_radius", c.ring_radius},
          {"arc_step", c.arc_step},
          {"convergence_deg", c.convergence_deg},
          {"max_iters", c.max_iters},
          {"resolution", c.grid.resolution},
          {"grid_extent", to_json(c.grid_extent)},
          {"plane_inlier_tol", c.plane.inlier_tol},
          {"plane_max_iters", c.plane.max_iters},
          {"plane_seed", c.plane.seed},
          {"plane_min_inlier_ratio", c.plane.min_inlier_ratio},
          {"plane_roi_radius", c.plane_roi_radius},
          {"max_plane_offset", c.max_plane_offset},
          {"max_normal_deviation_deg", c.max_normal_deviation_deg},
          {"bri_arc_pad", c.bri_arc_pad},
          {"min_bri_cells", c.min_bri_cells},
          {"ring_depth_tolerance", c.ring_depth_tolerance},
          {"cluster_eps", c.cluster_eps},
          {"cluster_min_pts", c.cluster_min_pts},
          {"min_center_separation_deg", c.min_center_separation_deg}};
}

inline void update_from_json(EstimatorConfig& c, const json& j) {
  detail::require_object(j, "estimator config");
  detail::read_opt(j, "standoff", c.standoff);
  detail::read_opt(j, "axial_step", c.axial_step);
  detail::read_opt(j, "axial_steps", c.axial_steps);
  detail::read_opt(j, "ring_radius", c.ring_radius);
  detail::read_opt(j, "arc_step", c.arc_step);
  detail::read_opt(j, "convergence_deg", c.convergence_deg);
  detail::read_opt(j, "max_iters", c.max_iters);
  detail::read_opt(j, "resolution", c.grid.resolution);
  detail::read_opt(j, "grid_extent", c.grid_extent);
  detail::read_opt(j, "plane_inlier_tol", c.plane.inlier_tol);
  detail::read_opt(j, "plane_max_iters", c.plane.max_iters);
  detail::read_opt(j, "plane_seed", c.plane.seed);
  detail::read_opt(j, "plane_min_inlier_ratio", c.plane.min_inlier_ratio);
  detail::read_opt(j, "plane_roi_radius", c.plane_roi_radius);
  detail::read_opt(j, "max_plane_offset", c.max_plane_offset);
  detail::read_opt(j, "max_normal_deviation_deg", c.max_normal_deviation_deg);
  detail::read_opt(j, "bri_arc_pad", c.bri_arc_pad);
  detail::read_opt(j, "min_bri_cells", c.min_bri_cells);
  detail::read_opt(j, "ring_depth_tolerance", c.ring_depth_tolerance);
  detail::read_opt(j, "cluster_eps", c.cluster_eps);
  detail::read_opt(j, "cluster_min_pts", c.cluster_min_pts);
  detail::read_opt(j, "min_center_separation_deg", c.min_center_separation_deg);
  c.validate();
}

// --- exposure config ---

inline json to_json(const ExposureConfig& c) {
  return {{"mu_min", c.mu_min},       {"mu_max", c.mu_max},         {"step_ev", c.step_ev},
          {"gamma_min", c.gamma_min}, {"gamma_max", c.gamma_max},   {"ref_radius", c.ref_radius},
          {"line_inlier_tol", c.line.inlier_tol}, {"line_min_inlier_ratio", c.line.min_inlier_ratio},
          {"line_seed", c.line.seed}};
}

inline void update_from_json(ExposureConfig& c, const json& j) {
  detail::require_object(j, "exposure config");
  detail::read_opt(j, "mu_min", c.mu_min);
  detail::read_opt(j, "mu_max", c.mu_max);
  detail::read_opt(j, "step_ev", c.step_ev);
  detail::read_opt(j, "gamma_min", c.gamma_min);
  detail::read_opt(j, "gamma_max", c.gamma_max);
  detail::read_opt(j, "ref_radius", c.ref_radius);
  detail::read_opt(j, "line_inlier_tol", c.line.inlier_tol);
  detail::read_opt(j, "line_min_inlier_ratio", c.line.min_inlier_ratio);
  detail::read_opt(j, "line_seed", c.line.seed);
  c.validate();
}

// --- scene ---

inline json to_json(const ClutterSpec& c) {
  return {{"enabled", c.enabled},
          {"ground", c.ground},
          {"ground_half_extent", c.ground_half_extent},
          {"ground_density", c.ground_density},
          {"boxes", c.boxes},
          {"box_min_size", c.box_min_size},
          {"box_max_size", c.box_max_size},
          {"box_density", c.box_density},
          {"box_min_behind", c.box_min_behind},
          {"box_max_behind", c.box_max_behind},
          {"stray_points", c.stray_points},
          {"stray_half_extent", c.stray_half_extent},
          {"layout_seed", c.layout_seed}};
}

inline void update_from_json(ClutterSpec& c, const json& j) {
  if (j.is_boolean()) {
    c.enabled = j.get<bool>();
    return;
  }
  detail::require_object(j, "clutter");
  c.enabled = true;
  detail::read_opt(j, "enabled", c.enabled);
  detail::read_opt(j, "ground", c.ground);
  detail::read_opt(j, "ground_half_extent", c.ground_half_extent);
  detail::read_opt(j, "ground_density", c.ground_density);
  detail::read_opt(j, "boxes", c.boxes);
  detail::read_opt(j, "box_min_size", c.box_min_size);
  detail::read_opt(j, "box_max_size", c.box_max_size);
  detail::read_opt(j, "box_density", c.box_density);
  detail::read_opt(j, "box_min_behind", c.box_min_behind);
  detail::read_opt(j, "box_max_behind", c.box_max_behind);
  detail::read_opt(j, "stray_points", c.stray_points);
  detail::read_opt(j, "stray_half_extent", c.stray_half_extent);
  detail::read_opt(j, "layout_seed", c.layout_seed);
}

inline json to_json(const SceneSpec& s) {
  return {{"tower_height", s.tower_height},
          {"tower_radius", s.tower_radius},
          {"blade_length", s.blade_length},
          {"blade_root_chord", s.blade_root_chord},
          {"blade_tip_chord", s.blade_tip_chord},
          {"blade_thickness", s.blade_thickness},
          {"hub_center", to_json(s.hub_center)},
          {"hub_radius", s.hub_radius},
          {"hub_depth", s.hub_depth},
          {"overhang", s.overhang},
          {"nacelle_length", s.nacelle_length},
          {"nacelle_width", s.nacelle_width},
          {"nacelle_height", s.nacelle_height},
          {"stop_angle_deg", s.stop_angle_deg},
          {"rotor_normal", to_json(s.rotor_normal)},
          {"density", s.density},
          {"noise_sigma", s.noise_sigma},
          {"clutter", to_json(s.clutter)},
          {"seed", s.seed}};
}

inline void update_from_json(SceneSpec& s, const json& j) {
  detail::require_object(j, "scene");
  detail::read_opt(j, "tower_height", s.tower_height);
  detail::read_opt(j, "tower_radius", s.tower_radius);
  detail::read_opt(j, "blade_length", s.blade_length);
  detail::read_opt(j, "blade_root_chord", s.blade_root_chord);
  detail::read_opt(j, "blade_tip_chord", s.blade_tip_chord);
  detail::read_opt(j, "blade_thickness", s.blade_thickness);
  detail::read_opt(j, "hub_center", s.hub_center);
  detail::read_opt(j, "hub_radius", s.hub_radius);
  detail::read_opt(j, "hub_depth", s.hub_depth);
  detail::read_opt(j, "overhang", s.overhang);
  detail::read_opt(j, "nacelle_length", s.nacelle_length);
  detail::read_opt(j, "nacelle_width", s.nacelle_width);
  detail::read_opt(j, "nacelle_height", s.nacelle_height);
  detail::read_opt(j, "stop_angle_deg", s.stop_angle_deg);
  detail::read_opt(j, "rotor_normal", s.rotor_normal);
  detail::read_opt(j, "density", s.density);
  detail::read_opt(j, "noise_sigma", s.noise_sigma);
  detail::read_opt(j, "seed", s.seed);
  if (auto it = j.find("clutter"); it != j.end()) update_from_json(s.clutter, *it);
  try {
    s.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
}

inline json to_json(const SweepSpec& s) {
  return {{"standoff", s.standoff},
          {"heights", s.heights},
          {"pitch_deg", s.sensor.pitch_deg},
          {"vertical_fov_deg", s.sensor.vertical_fov_deg},
          {"horizontal_fov_deg", s.sensor.horizontal_fov_deg},
          {"max_range", s.sensor.max_range},
          {"dropout", s.sensor.dropout}};
}

inline void update_from_json(SweepSpec& s, const json& j) {
  detail::require_object(j, "sweep");
  detail::read_opt(j, "standoff", s.standoff);
  detail::read_opt(j, "heights", s.heights);
  detail::read_opt(j, "pitch_deg", s.sensor.pitch_deg);
  detail::read_opt(j, "vertical_fov_deg", s.sensor.vertical_fov_deg);
  detail::read_opt(j, "horizontal_fov_deg", s.sensor.horizontal_fov_deg);
  detail::read_opt(j, "max_range", s.sensor.max_range);
  detail::read_opt(j, "dropout", s.sensor.dropout);
  try {
    s.sensor.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
}

inline json to_json(const SunModel& m) {
  return {{"blade", m.blade},   {"tower", m.tower}, {"ground", m.ground},
          {"sky", m.sky},       {"blade_texture", m.blade_texture}};
}

inline void update_from_json(SunModel& m, const json& j) {
  detail::require_object(j, "sun");
  detail::read_opt(j, "blade", m.blade);
  detail::read_opt(j, "tower", m.tower);
  detail::read_opt(j, "ground", m.ground);
  detail::read_opt(j, "sky", m.sky);
  detail::read_opt(j, "blade_texture", m.blade_texture);
  if (!(m.blade > 0.0 && m.tower > 0.0 && m.ground > 0.0 && m.sky > 0.0))
    throw Error(ErrorCode::InvalidConfig, "sun base levels must be > 0");
}

inline json to_json(const InspectionSpec& s) {
  return {{"blade", s.blade},
          {"standoff", s.standoff},
          {"start_radius", s.start_radius},
          {"step_per_tick", s.step_per_tick},
          {"end_radius", s.end_radius},
          {"cloud_radius", s.cloud_radius}};
}

inline void update_from_json(InspectionSpec& s, const json& j) {
  detail::require_object(j, "inspection");
  detail::read_opt(j, "blade", s.blade);
  detail::read_opt(j, "standoff", s.standoff);
  detail::read_opt(j, "start_radius", s.start_radius);
  detail::read_opt(j, "step_per_tick", s.step_per_tick);
  detail::read_opt(j, "end_radius", s.end_radius);
  detail::read_opt(j, "cloud_radius", s.cloud_radius);
}

// --- results ---

inline json to_json(const TurbineEstimate& e) {
  json blades = json::array();
  for (const auto& v : e.blades) blades.push_back(to_json(v));
  json bri = json::array();
  for (const auto& p : e.bri_points) bri.push_back(to_json(p));
  return {{"a_b_deg", e.stop_angle_deg}, {"p_h", to_json(e.hub)},
          {"V_b", blades},               {"iterations", e.iterations},
          {"converged", e.converged},    {"bri_points", bri}};
}

inline json to_json(const IterationRecord& r) {
  json j = {{"iteration", r.iteration}, {"axial_index", r.axial_index}};
  j["a_b_deg"] = r.stop_angle_deg ? json(*r.stop_angle_deg) : json(nullptr);
  j["p_h"] = r.hub ? to_json(*r.hub) : json(nullptr);
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

/// {tick, gamma_ev, mu_g, sigma, entropy, error?}
inline json to_json(const TickRecord& t) {
  json j = {{"tick", t.tick}, {"gamma_ev", t.gamma_ev}};
  if (t.stats) {
    j["mu_g"] = t.stats->mean;
    j["sigma"] = t.stats->stddev;
    j["entropy"] = t.stats->entropy;
  } else {
    j["mu_g"] = nullptr;
    j["sigma"] = nullptr;
    j["entropy"] = nullptr;
  }
  if (!t.error.empty()) j["error"] = t.error;
  return j;
}

/// One JSON object per line.
inline void write_trace_jsonl(std::ostream& out, const ExposureTrace& trace) {
  for (const auto& t : trace.ticks) out << to_json(t).dump() << '\n';
}

// --- benchmark ---

inline void update_from_json(BenchmarkSpec& b, const json& j) {
  detail::require_object(j, "benchmark");
  detail::read_opt(j, "trials", b.trials);
  detail::read_opt(j, "angles", b.angles);
  detail::read_opt(j, "seed", b.seed);
  detail::read_opt(j, "prior_error_min", b.prior_error_min);
  detail::read_opt(j, "prior_error_max", b.prior_error_max);
  detail::read_opt(j, "replay", b.replay);
  if (j.contains("scene")) update_from_json(b.scene, j["scene"]);
  if (j.contains("sweep")) update_from_json(b.sweep, j["sweep"]);
  if (j.contains("estimator")) update_from_json(b.estimator, j["estimator"]);
}

inline json to_json(const TrialResult& t) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json j = {{"index", t.index},
            {"seed", t.seed},
            {"true_angle_deg", t.true_angle_deg},
            {"estimated_angle_deg", opt(t.estimated_angle_deg)},
            {"abs_error_deg", opt(t.abs_error_deg)},
            {"success", t.success},
            {"iterations", t.iterations},
            {"error", t.error}};
  if (t.wall_ms) j["wall_ms"] = *t.wall_ms;
  return j;
}

inline json to_json(const BenchmarkReport& r) {
  json trials = json::array();
  for (const auto& t : r.trials) trials.push_back(to_json(t));
  return {{"seed", r.seed},
          {"trials", r.trials.size()},
          {"successes", r.successes},
          {"success_rate", r.success_rate},
          {"mean_error_deg", r.mean_error_deg ? json(*r.mean_error_deg) : json(nullptr)},
          {"mean_error_all_deg", r.mean_error_all_deg},
          {"results", trials}};
}

namespace detail {

inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), res.ptr};
}

inline std::string format_opt(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string{};
}

}  // namespace detail

/// Two tables separated by a blank line: one row per trial, then one summary
/// row. Missing values are empty fields.
inline void write_report_csv(std::ostream& out, const BenchmarkReport& r) {
  const bool timed = std::any_of(r.trials.begin(), r.trials.end(),
                                 [](const TrialResult& t) { return t.wall_ms.has_value(); });
  out << "index,seed,true_angle_deg,estimated_angle_deg,abs_error_deg,success,iterations,error";
  if (timed) out << ",wall_ms";
  out << '\n';
  for (const auto& t : r.trials) {
    out << t.index << ',' << t.seed << ',' << detail::format_double(t.true_angle_deg) << ','
        << detail::format_opt(t.estimated_angle_deg) << ',' << detail::format_opt(t.abs_error_deg)
        << ',' << (t.success ? "true" : "false") << ',' << t.iterations << ',' << t.error;
    if (timed) out << ',' << detail::format_opt(t.wall_ms);
    out << '\n';
  }
  out << "\nseed,trials,successes,success_rate,mean_error_deg,mean_error_all_deg\n"
      << r.seed << ',' << r.trials.size() << ',' << r.successes << ','
      << detail::format_double(r.success_rate) << ',' << detail::format_opt(r.mean_error_deg) << ','
      << detail::format_double(r.mean_error_all_deg) << '\n';
}

// --- exposure summary ---

inline json to_json(const RegionStats& s) {
  return {{"mu_g", s.mean}, {"sigma", s.stddev}, {"entropy", s.entropy}, {"pixels", s.pixel_count}};
}

inline json to_json(const ExposureSummary& s) {
  auto opt = [](const std::optional<RegionStats>& v) { return v ? to_json(*v) : json(nullptr); };
  return {{"original", opt(s.first)},
          {"adjusted", opt(s.adjusted)},
          {"converged_tick", s.converged_tick ? json(*s.converged_tick) : json(nullptr)},
          {"stayed_in_band", s.stayed_in_band},
          {"final_gamma_ev", s.final_gamma}};
}

}  // namespace bladescan::io
