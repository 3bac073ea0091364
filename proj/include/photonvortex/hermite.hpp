#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace photonvortex {

/// Normalised 1D Hermite functions h_n(x) = (2^n n! sqrt(pi))^{-1/2} H_n(x) e^{-x^2/2},
/// written into out[0..order]. Uses the recurrence on the functions themselves,
/// so no intermediate overflows even for large n:
///   h_{n+1} = sqrt(2/(n+1)) x h_n - sqrt(n/(n+1)) h_{n-1}
/// `x` is in units of the oscillator length; the caller applies 1/sqrt(l) scaling.
inline void hermite_functions(double x, std::span<double> out) {
  if (out.empty()) return;
  out[0] = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * x * x);
  if (out.size() == 1) return;
  out[1] = std::numbers::sqrt2 * x * out[0];
  for (std::size_t n = 1; n + 1 < out.size(); ++n) {
    const double nd = static_cast<double>(n);
    out[n + 1] = std::sqrt(2.0 / (nd + 1.0)) * x * out[n] - std::sqrt(nd / (nd + 1.0)) * out[n - 1];
  }
}

inline std::vector<double> hermite_functions(double x, int max_order) {
  std::vector<double> out(static_cast<std::size_t>(max_order) + 1);
  hermite_functions(x, out);
  return out;
}

}  // namespace photonvortex
