#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynamics.hpp"
#include "mode_basis.hpp"

namespace photonvortex {

enum class FieldKind { Density, G1, Phase, Molecular };

inline std::string to_string(FieldKind k) {
  switch (k) {
    case FieldKind::Density: return "density";
    case FieldKind::G1: return "g1";
    case FieldKind::Phase: return "phase";
    case FieldKind::Molecular: return "molecular";
  }
  return "unknown";
}

inline FieldKind field_kind_from_string(const std::string& s) {
  if (s == "density") return FieldKind::Density;
  if (s == "g1") return FieldKind::G1;
  if (s == "phase") return FieldKind::Phase;
  if (s == "molecular") return FieldKind::Molecular;
  throw std::invalid_argument("unknown field kind '" + s + "'");
}

/// Scalar field on the grid. Real-valued kinds carry zero imaginary parts;
/// samples that fell outside the grid after resampling are NaN.
struct FieldSnapshot {
  double time{0.0};
  SpatialGrid grid;
  FieldKind kind{FieldKind::Density};
  Eigen::VectorXcd values;

  bool is_real() const { return kind != FieldKind::G1; }
  double real(std::size_t j) const { return values(static_cast<Eigen::Index>(j)).real(); }
  Eigen::VectorXd real_values() const { return values.real(); }
};

inline FieldSnapshot make_real_field(double time, const SpatialGrid& grid, FieldKind kind,
                                     const Eigen::VectorXd& v) {
  return {time, grid, kind, v.cast<cplx>()};
}

/// I(r_j) = sum_{k,k'} psi_k(r_j) n_{k,k'} psi_k'(r_j).
inline FieldSnapshot photon_density(const CorrelationMatrix& n, const ModeProductKernel& kernel,
                                    const SpatialGrid& grid, double time = 0.0) {
  // Re n is symmetric for Hermitian n, so the transpose in trace_against is harmless.
  return make_real_field(time, grid, FieldKind::Density, kernel.trace_against(n.real()));
}

inline FieldSnapshot photon_density(const CorrelationMatrix& n, const ModeBasis& basis,
                                    double time = 0.0) {
  return photon_density(n, ModeProductKernel(basis), basis.grid(), time);
}

/// G1(r1, r2) = sum_{k,k'} psi_k(r1) psi_k'(r2) n_{k,k'} for a single pair.
inline cplx g1_at(const CorrelationMatrix& n, const ModeBasis& basis, const Point2& r1,
                  const Point2& r2) {
  const Eigen::VectorXd a = eval_modes(basis, r1), b = eval_modes(basis, r2);
  return (a.cast<cplx>().transpose() * n * b.cast<cplx>())(0, 0);
}

/// G1(r1, r_j) over the whole grid.
inline FieldSnapshot g1(const CorrelationMatrix& n, const ModeBasis& basis, const Point2& r1,
                        double time = 0.0) {
  const Eigen::VectorXd a = eval_modes(basis, r1);
  const Eigen::RowVectorXcd u = a.cast<cplx>().transpose() * n;
  FieldSnapshot out{time, basis.grid(), FieldKind::G1, {}};
  out.values = basis.amplitudes().cast<cplx>().transpose() * u.transpose();
  return out;
}

/// Bilinear interpolation at p; nullopt outside the grid or next to an absent sample.
inline std::optional<cplx> sample_bilinear(const FieldSnapshot& field, const Point2& p) {
  const auto& g = field.grid;
  if (!g.interpolable(p)) return std::nullopt;
  const int R = g.resolution();
  const double fx = g.fractional_index(p.x), fy = g.fractional_index(p.y);
  int ix = std::min(static_cast<int>(std::floor(fx)), R - 2);
  int iy = std::min(static_cast<int>(std::floor(fy)), R - 2);
  const double ax = fx - ix, ay = fy - iy;
  auto at = [&](int i, int j) { return field.values(static_cast<Eigen::Index>(g.flat(i, j))); };
  const cplx v = at(ix, iy) * ((1 - ax) * (1 - ay)) + at(ix + 1, iy) * (ax * (1 - ay)) +
                 at(ix, iy + 1) * ((1 - ax) * ay) + at(ix + 1, iy + 1) * (ax * ay);
  if (std::isnan(v.real()) || std::isnan(v.imag())) return std::nullopt;
  return v;
}

/// Resamples `field` into the frame rotated by angle nu * t: a feature at lab
/// angle theta appears at theta - nu t. `t` defaults to the snapshot time.
inline FieldSnapshot corotate(const FieldSnapshot& field, double nu,
                              std::optional<double> t = std::nullopt) {
  const double angle = nu * t.value_or(field.time);
  FieldSnapshot out = field;
  const auto& g = field.grid;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t j = 0; j < g.size(); ++j) {
    const auto v = sample_bilinear(field, rotate(g.position(j), angle));
    out.values(static_cast<Eigen::Index>(j)) = v ? *v : cplx(nan, nan);
  }
  return out;
}

/// Discrete angular Fourier coefficients c_m, m = 0..m_max, of the field sampled on
/// a circle, normalised so c_0 = 1.
inline std::vector<cplx> angular_spectrum(const FieldSnapshot& density, double radius, int n_theta,
                                          int m_max) {
  if (m_max < 1 || n_theta < 4 * m_max)
    throw std::invalid_argument("angular_spectrum needs n_theta >= 4 * m_max and m_max >= 1");
  std::vector<double> ring(static_cast<std::size_t>(n_theta));
  for (int i = 0; i < n_theta; ++i) {
    const double th = 2.0 * std::numbers::pi * i / n_theta;
    const auto v = sample_bilinear(density, {radius * std::cos(th), radius * std::sin(th)});
    if (!v) throw std::out_of_range("sampling circle of radius " + std::to_string(radius) +
                                    " leaves the grid");
    ring[static_cast<std::size_t>(i)] = v->real();
  }
  std::vector<cplx> c(static_cast<std::size_t>(m_max) + 1);
  for (int m = 0; m <= m_max; ++m) {
    cplx acc{0.0, 0.0};
    for (int i = 0; i < n_theta; ++i) {
      const double th = 2.0 * std::numbers::pi * i / n_theta;
      acc += ring[static_cast<std::size_t>(i)] * std::polar(1.0, -m * th);
    }
    c[static_cast<std::size_t>(m)] = acc / static_cast<double>(n_theta);
  }
  const cplx c0 = c[0];
  if (std::abs(c0) == 0.0) return c;
  for (auto& v : c) v /= c0;
  return c;
}

struct SymmetryResult {
  int order{0};
  double dominance{0.0};  // |c_order| / max_{m != order} |c_m|
  std::vector<double> magnitudes;  // |c_m|, m = 0..m_max
};

inline constexpr int kDefaultMaxOrder = 12;
inline constexpr int kDefaultRingSamples = 256;

inline SymmetryResult analyze_symmetry(const FieldSnapshot& density, double radius,
                                       int m_max = kDefaultMaxOrder,
                                       int n_theta = kDefaultRingSamples) {
  const auto c = angular_spectrum(density, radius, std::max(n_theta, 4 * m_max), m_max);
  SymmetryResult r;
  r.magnitudes.resize(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) r.magnitudes[i] = std::abs(c[i]);
  // argmax over m >= 1, ties towards smaller m
  int best = 1;
  for (int m = 2; m <= m_max; ++m)
    if (r.magnitudes[static_cast<std::size_t>(m)] > r.magnitudes[static_cast<std::size_t>(best)]) best = m;
  double runner_up = 0.0;
  for (int m = 1; m <= m_max; ++m)
    if (m != best) runner_up = std::max(runner_up, r.magnitudes[static_cast<std::size_t>(m)]);
  r.order = best;
  r.dominance = runner_up > 0.0 ? r.magnitudes[static_cast<std::size_t>(best)] / runner_up
                                : std::numeric_limits<double>::infinity();
  return r;
}

inline int symmetry_order(const FieldSnapshot& density, double radius, int m_max = kDefaultMaxOrder) {
  return analyze_symmetry(density, radius, m_max).order;
}

/// Re diag(n).
inline Eigen::VectorXd mode_populations(const CorrelationMatrix& n) { return n.diagonal().real(); }

/// Populations summed over each manifold q = 0..q_max.
inline Eigen::VectorXd manifold_populations(const CorrelationMatrix& n, const ModeBasis& basis) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(basis.q_max() + 1);
  for (const auto& k : basis.modes()) out(k.manifold()) += n(k.flat_id, k.flat_id).real();
  return out;
}

inline double total_photon_number(const CorrelationMatrix& n) { return n.trace().real(); }

/// Intensity-weighted centre of a real field.
inline Point2 field_centroid(const FieldSnapshot& field) {
  double w = 0.0, x = 0.0, y = 0.0;
  for (std::size_t j = 0; j < field.grid.size(); ++j) {
    const double v = field.real(j);
    if (std::isnan(v)) continue;
    const Point2 p = field.grid.position(j);
    w += v;
    x += v * p.x;
    y += v * p.y;
  }
  if (w == 0.0) return {};
  return {x / w, y / w};
}

/// Ratio of the largest to the smallest density on a circle, used as peak contrast.
inline double ring_contrast(const FieldSnapshot& density, double radius,
                            int n_theta = kDefaultRingSamples) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int i = 0; i < n_theta; ++i) {
    const double th = 2.0 * std::numbers::pi * i / n_theta;
    const auto v = sample_bilinear(density, {radius * std::cos(th), radius * std::sin(th)});
    if (!v) throw std::out_of_range("contrast circle leaves the grid");
    lo = std::min(lo, v->real());
    hi = std::max(hi, v->real());
  }
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

}  // namespace photonvortex
