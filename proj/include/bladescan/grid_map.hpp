// Dense log-odds occupancy grid.
//
// Cells are indexed by floor((p - origin) / resolution). Only hit updates are
// applied (no free-space ray casting); a cell's state is read from its
// log-odds with a single index computation.

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "bladescan/error.hpp"
#include "bladescan/geometry.hpp"

namespace bladescan {

enum class CellState { Occupied, Free, Unknown };

struct GridIndex {
  int x{0}, y{0}, z{0};
  friend bool operator==(const GridIndex&, const GridIndex&) = default;
};

struct OccupancyParams {
  double resolution{0.5};
  double l_hit{0.85};
  double l_min{-4.0};
  double l_max{4.0};
  double occ_prob{0.9};
  double free_prob{0.3};
};

struct IntegrationReport {
  std::size_t in_bounds{0};
  std::size_t out_of_bounds{0};
};

inline double log_odds_to_prob(double l) { return 1.0 / (1.0 + std::exp(-l)); }
inline double prob_to_log_odds(double p) { return std::log(p / (1.0 - p)); }

class OccupancyGrid {
 public:
  OccupancyGrid(const Point3& origin, std::array<int, 3> dims, OccupancyParams params = {})
      : origin_(origin), dims_(dims), params_(params) {
    if (!(params_.resolution > 0.0)) throw Error(ErrorCode::InvalidConfig, "resolution must be > 0");
    if (dims[0] <= 0 || dims[1] <= 0 || dims[2] <= 0)
      throw Error(ErrorCode::InvalidConfig, "grid dims must be positive");
    if (!(params_.free_prob < params_.occ_prob))
      throw Error(ErrorCode::InvalidConfig, "free_prob must be below occ_prob");
    cells_.assign(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], 0.0f);
    occ_threshold_ = prob_to_log_odds(params_.occ_prob);
    free_threshold_ = prob_to_log_odds(params_.free_prob);
  }

  /// Grid covering at least `extent` meters around `center`. Dims are odd so
  /// that `center` is the center of a cell.
  static OccupancyGrid centered(const Point3& center, const Vector3& extent,
                                OccupancyParams params = {}) {
    std::array<int, 3> dims{};
    for (int k = 0; k < 3; ++k)
      dims[k] = 2 * static_cast<int>(std::ceil(0.5 * extent[k] / params.resolution)) + 1;
    const Point3 origin =
        center - 0.5 * params.resolution * Vector3(dims[0], dims[1], dims[2]);
    return OccupancyGrid(origin, dims, params);
  }

  [[nodiscard]] const Point3& origin() const noexcept { return origin_; }
  [[nodiscard]] const std::array<int, 3>& dims() const noexcept { return dims_; }
  [[nodiscard]] double resolution() const noexcept { return params_.resolution; }
  [[nodiscard]] const OccupancyParams& params() const noexcept { return params_; }
  [[nodiscard]] std::size_t cell_count() const noexcept { return cells_.size(); }

  [[nodiscard]] std::optional<GridIndex> try_cell(const Point3& p) const {
    const double inv = 1.0 / params_.resolution;
    const double fx = std::floor((p.x() - origin_.x()) * inv);
    const double fy = std::floor((p.y() - origin_.y()) * inv);
    const double fz = std::floor((p.z() - origin_.z()) * inv);
    if (!(fx >= 0.0 && fy >= 0.0 && fz >= 0.0 && fx < dims_[0] && fy < dims_[1] && fz < dims_[2]))
      return std::nullopt;
    return GridIndex{static_cast<int>(fx), static_cast<int>(fy), static_cast<int>(fz)};
  }

  /// Throws OutOfBounds outside the grid box.
  [[nodiscard]] GridIndex world_to_cell(const Point3& p) const {
    auto idx = try_cell(p);
    if (!idx) throw Error(ErrorCode::OutOfBounds, "point outside grid bounds");
    return *idx;
  }

  [[nodiscard]] Point3 cell_to_center(const GridIndex& idx) const {
    return origin_ + params_.resolution * Vector3(idx.x + 0.5, idx.y + 0.5, idx.z + 0.5);
  }

  [[nodiscard]] bool contains(const GridIndex& idx) const noexcept {
    return idx.x >= 0 && idx.y >= 0 && idx.z >= 0 && idx.x < dims_[0] && idx.y < dims_[1] &&
           idx.z < dims_[2];
  }

  [[nodiscard]] double log_odds(const GridIndex& idx) const { return cells_[linear(idx)]; }
  [[nodiscard]] double probability(const GridIndex& idx) const {
    return log_odds_to_prob(log_odds(idx));
  }

  [[nodiscard]] CellState state(const GridIndex& idx) const {
    const double l = cells_[linear(idx)];
    if (l >= occ_threshold_) return CellState::Occupied;
    if (l <= free_threshold_) return CellState::Free;
    return CellState::Unknown;
  }

  /// Out-of-bounds queries are Unknown.
  [[nodiscard]] CellState state(const Point3& p) const {
    auto idx = try_cell(p);
    return idx ? state(*idx) : CellState::Unknown;
  }

  /// Trilinear interpolation of the non-negative part of the log-odds field
  /// between cell centers; cells outside the grid count as 0.
  [[nodiscard]] double interpolated_log_odds(const Point3& p) const {
    const Vector3 g = (p - origin_) / params_.resolution - Vector3::Constant(0.5);
    const Vector3 f = g.array().floor();
    const Vector3 t = g - f;
    double acc = 0.0;
    for (int c = 0; c < 8; ++c) {
      const GridIndex idx{static_cast<int>(f.x()) + (c & 1), static_cast<int>(f.y()) + ((c >> 1) & 1),
                          static_cast<int>(f.z()) + ((c >> 2) & 1)};
      if (!contains(idx)) continue;
      const double w = ((c & 1) ? t.x() : 1.0 - t.x()) * (((c >> 1) & 1) ? t.y() : 1.0 - t.y()) *
                       (((c >> 2) & 1) ? t.z() : 1.0 - t.z());
      acc += w * std::max(0.0, static_cast<double>(cells_[linear(idx)]));
    }
    return acc;
  }

  /// One hit update per point (a cell hit by k points receives k updates).
  IntegrationReport integrate(const PointCloud& cloud) {
    IntegrationReport report;
    const auto hit = static_cast<float>(params_.l_hit);
    const auto hi = static_cast<float>(params_.l_max);
    for (const auto& p : cloud.points) {
      auto idx = try_cell(p);
      if (!idx) {
        ++report.out_of_bounds;
        continue;
      }
      float& l = cells_[linear(*idx)];
      l = std::min(l + hit, hi);
      ++report.in_bounds;
    }
    return report;
  }

  void clear() { std::fill(cells_.begin(), cells_.end(), 0.0f); }

  /// Debug dump of occupied cells: "x,y,z,prob" with cell-center coordinates.
  void write_occupied_csv(std::ostream& os) const {
    os << "x,y,z,prob\n";
    for (int z = 0; z < dims_[2]; ++z)
      for (int y = 0; y < dims_[1]; ++y)
        for (int x = 0; x < dims_[0]; ++x) {
          const GridIndex idx{x, y, z};
          if (state(idx) != CellState::Occupied) continue;
          const Point3 c = cell_to_center(idx);
          os << c.x() << ',' << c.y() << ',' << c.z() << ',' << probability(idx) << '\n';
        }
  }

 private:
  [[nodiscard]] std::size_t linear(const GridIndex& idx) const {
    return (static_cast<std::size_t>(idx.z) * dims_[1] + idx.y) * dims_[0] + idx.x;
  }

  Point3 origin_;
  std::array<int, 3> dims_;
  OccupancyParams params_;
  std::vector<float> cells_;
  double occ_threshold_{0.0};
  double free_threshold_{0.0};
};

}  // namespace bladescan
