// Independent reference implementations used only by the tests.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "bladescan/exposure.hpp"
#include "bladescan/geometry.hpp"

namespace oracle {

using bladescan::Point3;

/// Weiszfeld iteration for the geometric median of three points.
inline Point3 weiszfeld(const Point3& a, const Point3& b, const Point3& c, int max_iters = 200000,
                        double tol = 1e-14) {
  const std::array<Point3, 3> v{a, b, c};
  Point3 x = (a + b + c) / 3.0;
  for (int it = 0; it < max_iters; ++it) {
    Point3 num = Point3::Zero();
    double den = 0.0;
    for (const auto& p : v) {
      const double d = (p - x).norm();
      if (d < 1e-300) return p;
      num += p / d;
      den += 1.0 / d;
    }
    const Point3 next = num / den;
    const double step = (next - x).norm();
    x = next;
    if (step < tol) break;
  }
  return x;
}

/// Density-connectivity partition computed from scratch: core points joined by
/// union-find over eps-adjacency. Border points get the set of clusters whose
/// cores reach them.
struct DensityPartition {
  std::vector<bool> core;
  std::vector<int> core_component;           ///< component id for core points, -1 otherwise
  std::vector<std::vector<int>> reachable;   ///< components reaching each non-core point
};

inline DensityPartition density_partition(const std::vector<Point3>& pts, double eps, int min_pts) {
  const std::size_t n = pts.size();
  auto near = [&](std::size_t i, std::size_t j) { return (pts[i] - pts[j]).norm() <= eps; };
  DensityPartition out;
  out.core.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    int count = 0;
    for (std::size_t j = 0; j < n; ++j) count += near(i, j) ? 1 : 0;
    out.core[i] = count >= min_pts;
  }
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (out.core[i] && out.core[j] && near(i, j)) parent[find(i)] = find(j);
  std::map<std::size_t, int> ids;
  out.core_component.assign(n, -1);
  for (std::size_t i = 0; i < n; ++i)
    if (out.core[i]) {
      auto [it, fresh] = ids.emplace(find(i), static_cast<int>(ids.size()));
      out.core_component[i] = it->second;
    }
  out.reachable.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    if (out.core[i]) continue;
    for (std::size_t j = 0; j < n; ++j)
      if (out.core[j] && near(i, j)) out.reachable[i].push_back(out.core_component[j]);
    std::sort(out.reachable[i].begin(), out.reachable[i].end());
    out.reachable[i].erase(std::unique(out.reachable[i].begin(), out.reachable[i].end()),
                           out.reachable[i].end());
  }
  return out;
}

/// Full-image enumeration of the disk statistics; two-pass variance and a
/// map-based histogram.
inline bladescan::RegionStats region_stats(const bladescan::GrayImage& img, double cx, double cy,
                                           double radius) {
  std::vector<double> values;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double dx = x - cx, dy = y - cy;
      if (std::sqrt(dx * dx + dy * dy) <= radius) values.push_back(img.at(x, y));
    }
  bladescan::RegionStats s;
  s.pixel_count = values.size();
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(var / n);
  std::map<int, int> hist;
  for (double v : values) ++hist[static_cast<int>(v)];
  for (const auto& [v, c] : hist) {
    const double p = c / n;
    s.entropy -= p * std::log2(p);
  }
  return s;
}

/// Closest of `samples` evenly spaced points on the line within ±span of the anchor.
inline Point3 closest_sampled(const Point3& p, const bladescan::Line3& line, double span, int samples) {
  Point3 best = line.anchor;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    const double t = -span + 2.0 * span * i / (samples - 1);
    const Point3 q = line.anchor + t * line.direction;
    const double d = (q - p).norm();
    if (d < best_d) {
      best_d = d;
      best = q;
    }
  }
  return best;
}

}  // namespace oracle
