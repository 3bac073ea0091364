#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid.hpp"
#include "hermite.hpp"

namespace photonvortex {

/// Cartesian quantum numbers of a transverse cavity mode plus its position in
/// the basis ordering.
struct ModeIndex {
  int qx{0};
  int qy{0};
  int flat_id{0};

  int manifold() const { return qx + qy; }
  friend bool operator==(const ModeIndex&, const ModeIndex&) = default;
};

inline constexpr int basis_size(int q_max) { return (q_max + 1) * (q_max + 2) / 2; }

/// Truncated 2D harmonic-oscillator eigenbasis sampled on a grid.
///
/// Modes are ordered by ascending manifold q = qx + qy, then ascending qx.
/// Amplitudes are real; the table is immutable after construction.
class ModeBasis {
 public:
  static constexpr int kDefaultModeCap = 5000;

  ModeBasis(int q_max, double l_ho, double omega_0, double omega_t, SpatialGrid grid,
            int mode_cap = kDefaultModeCap)
      : q_max_(q_max), l_ho_(l_ho), omega_0_(omega_0), omega_t_(omega_t), grid_(grid) {
    if (q_max < 0) throw std::invalid_argument("q_max must be >= 0");
    if (basis_size(q_max) > mode_cap)
      throw std::invalid_argument("basis size " + std::to_string(basis_size(q_max)) +
                                  " exceeds mode cap " + std::to_string(mode_cap));
    if (!(l_ho > 0.0) || !std::isfinite(l_ho))
      throw std::invalid_argument("l_HO must be positive");
    if (grid.resolution() < 8) throw std::invalid_argument("grid resolution must be >= 8");

    const int P = q_max + 1;
    index_.assign(static_cast<std::size_t>(P * P), -1);
    for (int q = 0; q <= q_max; ++q)
      for (int qx = 0; qx <= q; ++qx) {
        const int id = static_cast<int>(modes_.size());
        modes_.push_back({qx, q - qx, id});
        index_[static_cast<std::size_t>(qx * P + (q - qx))] = id;
      }

    // 1D table phi(n, i) = h_n(x_i / l) / sqrt(l); mirrored so parity holds bit-exactly.
    const int R = grid_.resolution();
    phi_.resize(P, R);
    std::vector<double> buf(static_cast<std::size_t>(P));
    const double scale = 1.0 / std::sqrt(l_ho_);
    for (int i = 0; i < R; ++i) {
      const int mirror = R - 1 - i;
      if (mirror < i) {
        for (int n = 0; n < P; ++n) phi_(n, i) = (n % 2 == 0 ? 1.0 : -1.0) * phi_(n, mirror);
        continue;
      }
      hermite_functions(grid_.coord(i) / l_ho_, buf);
      for (int n = 0; n < P; ++n) phi_(n, i) = scale * buf[static_cast<std::size_t>(n)];
    }

    const auto M = static_cast<Eigen::Index>(grid_.size());
    amplitudes_.resize(size(), M);
    for (const auto& mode : modes_)
      for (int iy = 0; iy < R; ++iy)
        for (int ix = 0; ix < R; ++ix)
          amplitudes_(mode.flat_id, static_cast<Eigen::Index>(grid_.flat(ix, iy))) =
              phi_(mode.qx, ix) * phi_(mode.qy, iy);
  }

  int q_max() const { return q_max_; }
  int size() const { return static_cast<int>(modes_.size()); }
  double l_ho() const { return l_ho_; }
  double omega_0() const { return omega_0_; }
  double omega_t() const { return omega_t_; }
  const SpatialGrid& grid() const { return grid_; }
  const std::vector<ModeIndex>& modes() const { return modes_; }
  const ModeIndex& mode(int flat_id) const { return modes_.at(static_cast<std::size_t>(flat_id)); }

  /// K x M table psi_k(r_j).
  const Eigen::MatrixXd& amplitudes() const { return amplitudes_; }
  /// (q_max+1) x resolution table of the 1D factors; psi_(a,b)(x_i, y_l) = phi(a,i) phi(b,l).
  const Eigen::MatrixXd& axis_factors() const { return phi_; }

  bool contains(int qx, int qy) const {
    return qx >= 0 && qy >= 0 && qx + qy <= q_max_;
  }
  /// Flat id of (qx, qy); throws if outside the truncation.
  int index_of(int qx, int qy) const {
    if (!contains(qx, qy))
      throw std::out_of_range("mode (" + std::to_string(qx) + "," + std::to_string(qy) +
                              ") not in basis");
    return index_[static_cast<std::size_t>(qx * (q_max_ + 1) + qy)];
  }

  friend bool operator==(const ModeBasis& a, const ModeBasis& b) {
    return a.q_max_ == b.q_max_ && a.l_ho_ == b.l_ho_ && a.omega_0_ == b.omega_0_ &&
           a.omega_t_ == b.omega_t_ && a.grid_ == b.grid_ && a.amplitudes_ == b.amplitudes_;
  }

 private:
  int q_max_;
  double l_ho_;
  double omega_0_;
  double omega_t_;
  SpatialGrid grid_;
  std::vector<ModeIndex> modes_;
  std::vector<int> index_;
  Eigen::MatrixXd phi_;
  Eigen::MatrixXd amplitudes_;
};

inline ModeBasis build_basis(int q_max, double l_ho, double omega_0, double omega_t,
                             const SpatialGrid& grid, int mode_cap = ModeBasis::kDefaultModeCap) {
  return ModeBasis(q_max, l_ho, omega_0, omega_t, grid, mode_cap);
}

inline double mode_energy(const ModeBasis& basis, const ModeIndex& k) {
  return basis.omega_0() + k.manifold() * basis.omega_t();
}

/// psi_k at an arbitrary point.
inline double eval_mode(const ModeBasis& basis, const ModeIndex& k, const Point2& point) {
  const double l = basis.l_ho();
  const int order = std::max(k.qx, k.qy);
  std::vector<double> hx(static_cast<std::size_t>(order) + 1), hy(hx.size());
  hermite_functions(point.x / l, hx);
  hermite_functions(point.y / l, hy);
  return hx[static_cast<std::size_t>(k.qx)] * hy[static_cast<std::size_t>(k.qy)] / l;
}

/// All K amplitudes psi_k(point) in basis order.
inline Eigen::VectorXd eval_modes(const ModeBasis& basis, const Point2& point) {
  const double l = basis.l_ho();
  const auto P = static_cast<std::size_t>(basis.q_max()) + 1;
  std::vector<double> hx(P), hy(P);
  hermite_functions(point.x / l, hx);
  hermite_functions(point.y / l, hy);
  Eigen::VectorXd out(basis.size());
  for (const auto& k : basis.modes())
    out(k.flat_id) = hx[static_cast<std::size_t>(k.qx)] * hy[static_cast<std::size_t>(k.qy)] / l;
  return out;
}

/// Manifold whose classical turning radius matches r: nearest integer to r^2/(2 l^2),
/// ties to even.
inline int dominant_manifold(double r, double l_ho) {
  if (r < 0.0) throw std::invalid_argument("radius must be non-negative");
  return static_cast<int>(std::nearbyint(r * r / (2.0 * l_ho * l_ho)));
}

}  // namespace photonvortex
