#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "observables.hpp"
#include "pump.hpp"

namespace photonvortex {

enum class Frame { Lab, CoRotating };

struct Peak {
  Point2 position;
  double height{0.0};
  int label{0};
};

/// Peaks labelled 0, 1, 2, ... clockwise starting from the reference peak.
struct PeakSet {
  std::vector<Peak> peaks;
  Frame frame{Frame::Lab};

  std::size_t size() const { return peaks.size(); }
  bool empty() const { return peaks.empty(); }
};

struct PeakOptions {
  double threshold_fraction{0.3};
  /// A candidate must exceed every value on a circle of this radius around it by
  /// the prominence fraction; rejects flat ridges such as an unmodulated ring.
  double isolation_radius{1.0};
  double prominence{0.1};
  /// Only peaks with min_radius <= |r| <= max_radius are kept.
  double min_radius{0.0};
  double max_radius{std::numeric_limits<double>::infinity()};
  /// Label 0 goes to the peak closest to this angle; when unset, to the highest peak.
  std::optional<double> reference_angle;
};

inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

namespace detail {

/// Stationary point of the least-squares quadratic through a 3x3 neighbourhood,
/// as an offset in bins. Falls back to zero when the fit is not a maximum.
inline std::pair<double, double> quadratic_offset(const double v[3][3]) {
  // Separable finite-difference form of the 9-point least-squares quadratic.
  double gx = 0, gy = 0, hxx = 0, hyy = 0, hxy = 0;
  for (int j = 0; j < 3; ++j) {
    gx += (v[j][2] - v[j][0]) / 6.0;
    gy += (v[2][j] - v[0][j]) / 6.0;
    hxx += (v[j][0] - 2.0 * v[j][1] + v[j][2]) / 3.0;
    hyy += (v[0][j] - 2.0 * v[1][j] + v[2][j]) / 3.0;
  }
  hxy = (v[2][2] - v[2][0] - v[0][2] + v[0][0]) / 4.0;
  const double det = hxx * hyy - hxy * hxy;
  if (!(hxx < 0.0) || !(det > 0.0)) return {0.0, 0.0};
  double dx = -(hyy * gx - hxy * gy) / det;
  double dy = -(hxx * gy - hxy * gx) / det;
  dx = std::clamp(dx, -1.0, 1.0);
  dy = std::clamp(dy, -1.0, 1.0);
  return {dx, dy};
}

}  // namespace detail

/// Orders peaks clockwise (decreasing polar angle) starting from `first`.
inline void label_clockwise(std::vector<Peak>& peaks, std::size_t first) {
  if (peaks.empty()) return;
  const Point2 f = peaks[first].position;
  const double a0 = std::atan2(f.y, f.x);
  auto offset = [a0](const Peak& p) {
    double d = a0 - std::atan2(p.position.y, p.position.x);
    d = std::fmod(d, 2.0 * std::numbers::pi);
    if (d < 0) d += 2.0 * std::numbers::pi;
    return d;
  };
  std::stable_sort(peaks.begin(), peaks.end(), [&](const Peak& a, const Peak& b) {
    return offset(a) < offset(b);
  });
  for (std::size_t i = 0; i < peaks.size(); ++i) peaks[i].label = static_cast<int>(i);
}

inline PeakSet find_peaks(const FieldSnapshot& density, const PeakOptions& opt = {}) {
  if (!(opt.threshold_fraction > 0.0 && opt.threshold_fraction < 1.0))
    throw std::invalid_argument("threshold_fraction must lie in (0, 1)");
  const auto& g = density.grid;
  const int R = g.resolution();
  auto val = [&](int ix, int iy) { return density.real(g.flat(ix, iy)); };

  double global = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < g.size(); ++j)
    if (!std::isnan(density.real(j))) global = std::max(global, density.real(j));
  PeakSet out;
  if (!(global > 0.0)) return out;
  const double threshold = opt.threshold_fraction * global;

  for (int iy = 1; iy < R - 1; ++iy)
    for (int ix = 1; ix < R - 1; ++ix) {
      const double c = val(ix, iy);
      if (!(c >= threshold)) continue;
      double nb[3][3];
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const double v = val(ix + dx, iy + dy);
          nb[dy + 1][dx + 1] = v;
          if (dx == 0 && dy == 0) continue;
          // strict on one side so plateaus yield a single candidate
          const bool later = dy > 0 || (dy == 0 && dx > 0);
          if (std::isnan(v) || (later ? v >= c : v > c)) { is_max = false; break; }
        }
      if (!is_max) continue;

      const auto [ox, oy] = detail::quadratic_offset(nb);
      const Point2 pos{g.coord(ix) + ox * g.spacing(), g.coord(iy) + oy * g.spacing()};
      const double r = norm(pos);
      if (r < opt.min_radius || r > opt.max_radius) continue;

      bool isolated = true;
      const int n_ring = 32;
      for (int i = 0; i < n_ring && isolated; ++i) {
        const double th = 2.0 * std::numbers::pi * i / n_ring;
        const Point2 q{g.coord(ix) + opt.isolation_radius * std::cos(th),
                       g.coord(iy) + opt.isolation_radius * std::sin(th)};
        const auto v = sample_bilinear(density, q);
        if (v && v->real() > (1.0 - opt.prominence) * c) isolated = false;
      }
      if (!isolated) continue;
      out.peaks.push_back({pos, c, 0});
    }
  if (out.peaks.empty()) return out;

  // A lobe wider than a few bins can carry two grid maxima; keep the higher one.
  std::stable_sort(out.peaks.begin(), out.peaks.end(),
                   [](const Peak& a, const Peak& b) { return a.height > b.height; });
  std::vector<Peak> kept;
  for (const auto& p : out.peaks) {
    bool near = false;
    for (const auto& k : kept)
      near |= norm(Point2{p.position.x - k.position.x, p.position.y - k.position.y}) < opt.isolation_radius;
    if (!near) kept.push_back(p);
  }
  out.peaks = std::move(kept);

  std::size_t first = 0;
  if (opt.reference_angle) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < out.peaks.size(); ++i) {
      const auto& p = out.peaks[i].position;
      const double d = std::abs(wrap_angle(std::atan2(p.y, p.x) - *opt.reference_angle));
      if (d < best) { best = d; first = i; }
    }
  } else {
    for (std::size_t i = 1; i < out.peaks.size(); ++i)
      if (out.peaks[i].height > out.peaks[first].height) first = i;
  }
  label_clockwise(out.peaks, first);
  return out;
}

class TrackingLoss : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-peak time series of unwrapped arg G1(r_ref, r_p) in the co-rotating frame.
struct PhaseTrace {
  std::vector<double> times;
  /// Co-rotating peak positions fixed at the first sample, labelled clockwise.
  PeakSet peaks;
  /// phases[p][i]: unwrapped phase of peak p relative to peak 0 at sample i.
  std::vector<std::vector<double>> phases;

  /// Display offset: -2 pi on peak 1 and +2 pi on the last peak.
  double display_offset(std::size_t peak) const {
    const std::size_t n = phases.size();
    if (n >= 3 && peak == 1) return -2.0 * std::numbers::pi;
    if (n >= 3 && peak == n - 1) return 2.0 * std::numbers::pi;
    return 0.0;
  }
  double displayed(std::size_t peak, std::size_t sample) const {
    return phases[peak][sample] + display_offset(peak);
  }
};

inline double unwrap_next(double previous, double raw) {
  return previous + wrap_angle(raw - previous);
}

struct PhaseTraceOptions {
  PeakOptions peaks;
  /// Re-detect peaks every sample and follow them; otherwise positions are fixed
  /// in the co-rotating frame after the first sample.
  bool track{true};
};

/// Follows the density peaks of a sequence of states in the frame co-rotating with the
/// pump and records the phase of G1 between the reference peak and every other one.
inline PhaseTrace peak_phase_trace(const std::vector<SimState>& states, const ModeBasis& basis,
                                   const PumpSpec& pump, const PhaseTraceOptions& opt = {}) {
  PhaseTrace trace;
  if (states.empty()) return trace;
  const ModeProductKernel kernel(basis);
  const double nu = pump.orbital_frequency;

  auto detect = [&](const SimState& s) {
    PeakSet lab = find_peaks(photon_density(s.n, kernel, basis.grid(), s.time), opt.peaks);
    for (auto& p : lab.peaks) p.position = rotate(p.position, -nu * s.time);
    lab.frame = Frame::CoRotating;
    return lab;
  };

  PeakSet current = detect(states.front());
  if (current.size() < 2) throw TrackingLoss("fewer than two peaks in the first sample");
  trace.peaks = current;
  trace.phases.assign(current.size(), {});

  double spacing = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < current.size(); ++a)
    for (std::size_t b = a + 1; b < current.size(); ++b) {
      const Point2 d{current.peaks[a].position.x - current.peaks[b].position.x,
                     current.peaks[a].position.y - current.peaks[b].position.y};
      spacing = std::min(spacing, norm(d));
    }
  const double tolerance = 0.5 * spacing;

  for (std::size_t i = 0; i < states.size(); ++i) {
    const SimState& s = states[i];
    if (i > 0 && opt.track) {
      const PeakSet found = detect(s);
      for (auto& p : current.peaks) {
        double best = std::numeric_limits<double>::infinity();
        const Peak* match = nullptr;
        for (const auto& q : found.peaks) {
          const Point2 d{q.position.x - p.position.x, q.position.y - p.position.y};
          if (norm(d) < best) { best = norm(d); match = &q; }
        }
        if (!match || best > tolerance)
          throw TrackingLoss("peak " + std::to_string(p.label) + " lost at t=" +
                             std::to_string(s.time));
        p.position = match->position;
        p.height = match->height;
      }
    }
    const double angle = nu * s.time;
    const Point2 ref = rotate(current.peaks[0].position, angle);
    for (std::size_t p = 0; p < current.size(); ++p) {
      const Point2 r2 = rotate(current.peaks[p].position, angle);
      const double raw = p == 0 ? 0.0 : std::arg(g1_at(s.n, basis, ref, r2));
      auto& series = trace.phases[p];
      series.push_back(series.empty() ? raw : unwrap_next(series.back(), raw));
    }
    trace.times.push_back(s.time);
  }
  return trace;
}

}  // namespace photonvortex
