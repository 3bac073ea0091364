#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace photonvortex {

/// Position in the transverse plane, in units of the harmonic-oscillator length.
struct Point2 {
  double x{0.0};
  double y{0.0};

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline double norm(const Point2& p) { return std::hypot(p.x, p.y); }

inline Point2 rotate(const Point2& p, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * p.x - s * p.y, s * p.x + c * p.y};
}

/// Uniform square grid centred on the cavity axis.
///
/// Bins are cell-centred: x_i = -extent + (i + 1/2) * spacing, so the grid is
/// exactly symmetric under x -> -x. Flat bin index is j = iy * resolution + ix
/// (row-major image, x fastest).
class SpatialGrid {
 public:
  SpatialGrid() = default;

  SpatialGrid(double extent, int resolution) : extent_(extent), resolution_(resolution) {
    if (!(extent > 0.0) || !std::isfinite(extent))
      throw std::invalid_argument("grid extent must be positive, got " + std::to_string(extent));
    if (resolution < 8)
      throw std::invalid_argument("grid resolution must be >= 8, got " + std::to_string(resolution));
  }

  double extent() const { return extent_; }
  int resolution() const { return resolution_; }
  std::size_t size() const { return static_cast<std::size_t>(resolution_) * resolution_; }
  double spacing() const { return 2.0 * extent_ / resolution_; }
  double cell_area() const { return spacing() * spacing(); }

  // Upper half is the exact negation of the lower half.
  double coord(int i) const {
    const int mirror = resolution_ - 1 - i;
    if (mirror < i) return -coord(mirror);
    return -extent_ + (i + 0.5) * spacing();
  }

  std::size_t flat(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * resolution_ + static_cast<std::size_t>(ix);
  }
  int ix_of(std::size_t j) const { return static_cast<int>(j % resolution_); }
  int iy_of(std::size_t j) const { return static_cast<int>(j / resolution_); }
  Point2 position(std::size_t j) const { return {coord(ix_of(j)), coord(iy_of(j))}; }

  /// Fractional index coordinates of a point (bin centres land on integers).
  double fractional_index(double coordinate) const {
    return (coordinate + extent_) / spacing() - 0.5;
  }

  /// True when bilinear interpolation at p only touches bins inside the grid.
  bool interpolable(const Point2& p) const {
    const double fx = fractional_index(p.x), fy = fractional_index(p.y);
    return fx >= 0.0 && fy >= 0.0 && fx <= resolution_ - 1 && fy <= resolution_ - 1;
  }

  friend bool operator==(const SpatialGrid&, const SpatialGrid&) = default;

 private:
  double extent_{6.0};
  int resolution_{64};
};

}  // namespace photonvortex
