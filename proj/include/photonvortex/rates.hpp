#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mode_basis.hpp"

namespace photonvortex {

/// Per-mode absorption/emission rates plus the scalar loss and pump rates.
/// All rates are in units of the trap frequency.
struct RateSpectra {
  Eigen::VectorXd absorption;  // A_k
  Eigen::VectorXd emission;    // E_k
  double kappa{0.26};
  double gamma_up{0.4};
  double gamma_down{0.002};
  double omega_zpl{0.0};
};

/// Parameters of the default absorption/emission model.
///
/// Emission is flat, absorption follows the Kennard-Stepanov Boltzmann factor of
/// the detuning delta_q = omega_zpl - omega_q below the zero-phonon line:
///   E_q = emission_0,  A_q = emission_0 * exp(-delta_q / theta).
/// A theta of +infinity gives A_q = E_q.
struct KennardStepanovParams {
  double emission_0{1.6e-7};
  double theta{8.0};
  double zpl_detuning{49.7};  // omega_zpl - omega_0
};

struct ModeRates {
  double absorption;
  double emission;
};

inline ModeRates kennard_stepanov_rates(int manifold, const KennardStepanovParams& p,
                                        double omega_t = 1.0) {
  if (!(p.theta > 0.0)) throw std::invalid_argument("thermal scale theta must be > 0");
  if (p.emission_0 < 0.0) throw std::invalid_argument("emission rate must be >= 0");
  const double detuning = p.zpl_detuning - manifold * omega_t;
  if (std::isinf(p.theta)) return {p.emission_0, p.emission_0};
  return {p.emission_0 * std::exp(-detuning / p.theta), p.emission_0};
}

/// Per-manifold override tables, indexed by q = 0..q_max.
struct RateTables {
  std::vector<double> absorption;
  std::vector<double> emission;
};

/// Expands manifold rates onto every mode of the basis, so degenerate modes share
/// rates. Explicit tables, when present, replace the model values.
inline RateSpectra build_rate_spectra(const ModeBasis& basis, const KennardStepanovParams& model,
                                      double kappa, double gamma_up, double gamma_down,
                                      const std::optional<RateTables>& tables = std::nullopt) {
  const int P = basis.q_max() + 1;
  std::vector<double> a(static_cast<std::size_t>(P)), e(a.size());
  for (int q = 0; q < P; ++q) {
    const auto r = kennard_stepanov_rates(q, model, basis.omega_t());
    a[static_cast<std::size_t>(q)] = r.absorption;
    e[static_cast<std::size_t>(q)] = r.emission;
  }
  if (tables) {
    auto apply = [P](const std::vector<double>& src, std::vector<double>& dst, const char* what) {
      if (src.empty()) return;
      if (static_cast<int>(src.size()) != P)
        throw std::invalid_argument(std::string(what) + " table needs q_max+1 entries");
      for (double v : src)
        if (!(v >= 0.0)) throw std::invalid_argument(std::string(what) + " rates must be >= 0");
      dst = src;
    };
    apply(tables->absorption, a, "absorption");
    apply(tables->emission, e, "emission");
  }

  RateSpectra out;
  out.absorption.resize(basis.size());
  out.emission.resize(basis.size());
  for (const auto& k : basis.modes()) {
    out.absorption(k.flat_id) = a[static_cast<std::size_t>(k.manifold())];
    out.emission(k.flat_id) = e[static_cast<std::size_t>(k.manifold())];
  }
  out.kappa = kappa;
  out.gamma_up = gamma_up;
  out.gamma_down = gamma_down;
  out.omega_zpl = basis.omega_0() + model.zpl_detuning;
  return out;
}

}  // namespace photonvortex
