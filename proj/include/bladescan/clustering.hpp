#pragma once

#include <cstddef>
#include <deque>
#include <span>
#include <vector>

#include "bladescan/error.hpp"
#include "bladescan/geometry.hpp"

namespace bladescan {

inline constexpr int kNoise = -1;

struct ClusterResult {
  std::vector<int> labels;  ///< cluster id per input point, or kNoise
  int k{0};
  std::vector<Point3> centers;  ///< arithmetic mean of each cluster's members
};

/// DBSCAN with brute-force neighbor search. A point is core when at least
/// `min_pts` points (itself included) lie within `eps`. Border points join the
/// first cluster that reaches them; clusters are seeded in input order.
inline ClusterResult dbscan(std::span<const Point3> points, double eps, int min_pts) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidConfig, "dbscan eps must be > 0");
  if (min_pts < 1) throw Error(ErrorCode::InvalidConfig, "dbscan min_pts must be >= 1");

  constexpr int kUnvisited = -2;
  const std::size_t n = points.size();
  const double eps2 = eps * eps;
  ClusterResult out;
  out.labels.assign(n, kUnvisited);

  auto neighbors = [&](std::size_t i) {
    std::vector<std::size_t> nb;
    for (std::size_t j = 0; j < n; ++j)
      if ((points[i] - points[j]).squaredNorm() <= eps2) nb.push_back(j);
    return nb;
  };

  for (std::size_t i = 0; i < n; ++i) {
    if (out.labels[i] != kUnvisited) continue;
    auto nb = neighbors(i);
    if (static_cast<int>(nb.size()) < min_pts) {
      out.labels[i] = kNoise;
      continue;
    }
    const int cluster = out.k++;
    out.labels[i] = cluster;
    std::deque<std::size_t> queue(nb.begin(), nb.end());
    while (!queue.empty()) {
      const std::size_t q = queue.front();
      queue.pop_front();
      if (out.labels[q] == kNoise) out.labels[q] = cluster;  // border
      if (out.labels[q] != kUnvisited) continue;
      out.labels[q] = cluster;
      auto qn = neighbors(q);
      if (static_cast<int>(qn.size()) >= min_pts) queue.insert(queue.end(), qn.begin(), qn.end());
    }
  }

  out.centers.assign(static_cast<std::size_t>(out.k), Point3::Zero());
  std::vector<std::size_t> counts(static_cast<std::size_t>(out.k), 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (out.labels[i] < 0) continue;
    out.centers[out.labels[i]] += points[i];
    ++counts[out.labels[i]];
  }
  for (int c = 0; c < out.k; ++c) out.centers[c] /= static_cast<double>(counts[c]);
  return out;
}

}  // namespace bladescan
