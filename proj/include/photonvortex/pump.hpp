#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>

#include "grid.hpp"

namespace photonvortex {

enum class PumpProfile { Gaussian, TopHat };

inline std::string to_string(PumpProfile p) { return p == PumpProfile::Gaussian ? "gaussian" : "tophat"; }

/// Incoherent pump spot orbiting the cavity axis.
///
/// Centre at time t: radius * (cos(nu t + phase_0), sin(nu t + phase_0)).
/// A negative orbital frequency reverses the sense of rotation.
struct PumpSpec {
  double radius{4.0};
  double width{0.5};  // 1/e^2 intensity radius for the Gaussian spot, disc radius for top-hat
  double orbital_frequency{0.2};
  double phase_0{0.0};
  double peak_rate{0.4};
  PumpProfile profile{PumpProfile::Gaussian};

  /// Commensurability z = omega_T / nu; infinite for a static spot.
  double z(double omega_t = 1.0) const {
    if (orbital_frequency == 0.0) return std::numeric_limits<double>::infinity();
    return omega_t / orbital_frequency;
  }

  double angle(double t) const { return orbital_frequency * t + phase_0; }

  Point2 center(double t) const {
    const double a = angle(t);
    return {radius * std::cos(a), radius * std::sin(a)};
  }

  double rate_at(const Point2& p, double t) const {
    const Point2 c = center(t);
    const double d2 = (p.x - c.x) * (p.x - c.x) + (p.y - c.y) * (p.y - c.y);
    if (profile == PumpProfile::TopHat) return d2 <= width * width ? peak_rate : 0.0;
    return peak_rate * std::exp(-2.0 * d2 / (width * width));
  }

  /// Pump rate on every grid bin at time t, written into out (length M).
  void sample(const SpatialGrid& grid, double t, Eigen::Ref<Eigen::VectorXd> out) const {
    const int R = grid.resolution();
    if (profile == PumpProfile::Gaussian) {
      // Separable: exp(-2|r-c|^2/w^2) = gx(x) gy(y).
      const Point2 c = center(t);
      const double s = -2.0 / (width * width);
      Eigen::VectorXd gx(R), gy(R);
      for (int i = 0; i < R; ++i) {
        const double dx = grid.coord(i) - c.x, dy = grid.coord(i) - c.y;
        gx(i) = std::exp(s * dx * dx);
        gy(i) = peak_rate * std::exp(s * dy * dy);
      }
      for (int iy = 0; iy < R; ++iy)
        out.segment(static_cast<Eigen::Index>(iy) * R, R) = gy(iy) * gx;
      return;
    }
    for (std::size_t j = 0; j < grid.size(); ++j)
      out(static_cast<Eigen::Index>(j)) = rate_at(grid.position(j), t);
  }
};

}  // namespace photonvortex
