#pragma once

// Reference implementations and random state generators shared by the unit and
// acceptance suites. The references are deliberately naive index-by-index
// transcriptions of the equations of motion.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "photonvortex/photonvortex.hpp"

namespace pvtest {

namespace pv = photonvortex;
using pv::cplx;

/// A tiny system with an arbitrary (random) separable mode table, small enough for
/// the double-loop references.
struct TinySystem {
  Eigen::MatrixXd phi;  // P x R
  std::vector<pv::ModeIndex> modes;
  int R{3};
  double cell_area{0.1};
  pv::RateSpectra rates;
  double rho0{1.0};
  Eigen::VectorXd omega;
  Eigen::VectorXd pump;  // per-bin Gamma_up

  int K() const { return static_cast<int>(modes.size()); }
  int M() const { return R * R; }
  pv::ModeProductKernel kernel() const { return pv::ModeProductKernel(phi, modes, cell_area); }
  /// psi(k, j) with j = iy * R + ix.
  double psi(int k, int j) const {
    const auto& m = modes[static_cast<std::size_t>(k)];
    return phi(m.qx, j % R) * phi(m.qy, j / R);
  }
};

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// K = 3 uses the triangular set (0,0),(1,0),(0,1); K = 4 adds (1,1).
inline TinySystem random_tiny(std::mt19937_64& rng, int K, int R) {
  TinySystem s;
  s.R = R;
  s.modes = {{0, 0, 0}, {1, 0, 1}, {0, 1, 2}};
  if (K == 4) s.modes.push_back({1, 1, 3});
  s.phi.resize(2, R);
  for (int a = 0; a < 2; ++a)
    for (int i = 0; i < R; ++i) s.phi(a, i) = uniform(rng, -1.5, 1.5);
  s.cell_area = uniform(rng, 0.05, 0.5);
  s.rates.emission.resize(K);
  s.rates.absorption.resize(K);
  for (int k = 0; k < K; ++k) {
    s.rates.emission(k) = uniform(rng, 0.0, 2.0);
    s.rates.absorption(k) = uniform(rng, 0.0, 2.0);
  }
  s.rates.kappa = uniform(rng, 0.0, 1.0);
  s.rates.gamma_down = uniform(rng, 0.0, 0.1);
  s.rho0 = uniform(rng, 0.1, 3.0);
  s.omega.resize(K);
  for (int k = 0; k < K; ++k) s.omega(k) = uniform(rng, -3.0, 3.0);
  s.pump.resize(s.M());
  for (int j = 0; j < s.M(); ++j) s.pump(j) = uniform(rng, 0.0, 1.0);
  return s;
}

/// Random Hermitian positive semidefinite matrix B B^dag.
inline pv::CorrelationMatrix random_psd(std::mt19937_64& rng, int K, double scale = 1.0) {
  pv::CorrelationMatrix B(K, K);
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j) B(i, j) = cplx(uniform(rng, -1, 1), uniform(rng, -1, 1));
  return scale * B * B.adjoint();
}

inline Eigen::VectorXd random_excitation(std::mt19937_64& rng, int M) {
  Eigen::VectorXd m(M);
  for (int j = 0; j < M; ++j) m(j) = uniform(rng, 0.0, 1.0);
  return m;
}

// --- reference transcriptions -----------------------------------------------

/// f_{ab} = sum_j psi_a(r_j) psi_b(r_j) m_j dA
inline Eigen::MatrixXd naive_f(const TinySystem& s, const Eigen::VectorXd& m) {
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(s.K(), s.K());
  for (int a = 0; a < s.K(); ++a)
    for (int b = 0; b < s.K(); ++b)
      for (int j = 0; j < s.M(); ++j) f(a, b) += s.psi(a, j) * s.psi(b, j) * m(j) * s.cell_area;
  return f;
}

/// dn_{ab}/dt = X_{ab} + conj(X_{ba}),
/// X = (i Omega - kappa/2) n + rho0 [f E (n + I) + (f - I) A n]
inline pv::CorrelationMatrix naive_photon_drift(const TinySystem& s, const pv::CorrelationMatrix& n,
                                                const Eigen::MatrixXd& f) {
  const int K = s.K();
  pv::CorrelationMatrix X(K, K);
  for (int a = 0; a < K; ++a)
    for (int b = 0; b < K; ++b) {
      cplx x = cplx(-0.5 * s.rates.kappa, s.omega(a)) * n(a, b);
      for (int c = 0; c < K; ++c) {
        const double id_cb = c == b ? 1.0 : 0.0;
        const double id_ac = a == c ? 1.0 : 0.0;
        x += s.rho0 * f(a, c) * s.rates.emission(c) * (n(c, b) + id_cb);
        x += s.rho0 * (f(a, c) - id_ac) * s.rates.absorption(c) * n(c, b);
      }
      X(a, b) = x;
    }
  pv::CorrelationMatrix out(K, K);
  for (int a = 0; a < K; ++a)
    for (int b = 0; b < K; ++b) out(a, b) = X(a, b) + std::conj(X(b, a));
  return out;
}

/// E_eff,j = Re sum_{k,k'} psi_k psi_k' E_k' (n + I)_{k'k},
/// A_eff,j = Re sum_{k,k'} psi_k psi_k' n_{k'k} A_k
inline pv::EffectiveRates naive_effective(const TinySystem& s, const pv::CorrelationMatrix& n) {
  pv::EffectiveRates r{Eigen::VectorXd::Zero(s.M()), Eigen::VectorXd::Zero(s.M())};
  for (int j = 0; j < s.M(); ++j) {
    cplx e = 0, a = 0;
    for (int k = 0; k < s.K(); ++k)
      for (int kp = 0; kp < s.K(); ++kp) {
        const double psi2 = s.psi(k, j) * s.psi(kp, j);
        e += psi2 * s.rates.emission(kp) * (n(kp, k) + (k == kp ? 1.0 : 0.0));
        a += psi2 * n(kp, k) * s.rates.absorption(k);
      }
    r.emission(j) = e.real();
    r.absorption(j) = a.real();
  }
  return r;
}

inline Eigen::VectorXd naive_molecular_drift(const TinySystem& s, const Eigen::VectorXd& m,
                                             const pv::EffectiveRates& eff) {
  Eigen::VectorXd d(s.M());
  for (int j = 0; j < s.M(); ++j)
    d(j) = -(s.rates.gamma_down + 2.0 * eff.emission(j)) * m(j) +
           (s.pump(j) + 2.0 * eff.absorption(j)) * (1.0 - m(j));
  return d;
}

inline pv::Derivative naive_drift(const TinySystem& s, const pv::CorrelationMatrix& n,
                                  const Eigen::VectorXd& m) {
  return {naive_photon_drift(s, n, naive_f(s, m)), naive_molecular_drift(s, m, naive_effective(s, n))};
}

/// Optimised path on the same tiny system.
inline pv::Derivative fast_drift(const TinySystem& s, const pv::ModeProductKernel& kernel,
                                 const pv::CorrelationMatrix& n, const Eigen::VectorXd& m) {
  const Eigen::MatrixXd f = pv::molecular_matrix(m, kernel);
  const auto eff = pv::effective_rates(n, kernel, s.rates);
  return {pv::photon_drift(n, f, s.rates, s.rho0, s.omega), pv::molecular_drift(m, s.pump, s.rates, eff)};
}

/// Textbook RK4 step on the reference drift, no checks.
inline pv::SimState naive_rk4(const TinySystem& s, const pv::SimState& y, double h) {
  auto d = [&](const pv::CorrelationMatrix& n, const Eigen::VectorXd& m) { return naive_drift(s, n, m); };
  const auto k1 = d(y.n, y.m);
  const auto k2 = d(y.n + 0.5 * h * k1.dn, y.m + 0.5 * h * k1.dm);
  const auto k3 = d(y.n + 0.5 * h * k2.dn, y.m + 0.5 * h * k2.dm);
  const auto k4 = d(y.n + h * k3.dn, y.m + h * k3.dm);
  pv::SimState out;
  out.time = y.time + h;
  out.n = y.n + h / 6.0 * (k1.dn + 2.0 * k2.dn + 2.0 * k3.dn + k4.dn);
  out.m = y.m + h / 6.0 * (k1.dm + 2.0 * k2.dm + 2.0 * k3.dm + k4.dm);
  return out;
}

/// max |a - b| / max |b|, with the denominator floored at `floor`.
template <class A, class B>
double rel_diff(const A& a, const B& b, double floor = 1e-300) {
  const double scale = std::max(b.cwiseAbs().maxCoeff(), floor);
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

/// A small but physical configuration for quick end-to-end runs.
inline pv::SimConfig small_config() {
  pv::SimConfig c;
  c.basis.q_max = 6;
  c.basis.resolution = 24;
  c.basis.extent = 5.0;
  c.pump.radius = 2.5;
  c.pump.orbital_frequency = 0.5;
  c.integrator.t_end = 4.0 * c.snapshot_period();
  c.integrator.snapshots_per_period = 8;
  c.output.checkpoint_every = 4;
  c.output.dense_tail = 4;
  return c;
}

}  // namespace pvtest
