#pragma once

#include <Eigen/Dense>

#include <complex>
#include <utility>
#include <vector>

#include "mode_basis.hpp"
#include "pump.hpp"
#include "rates.hpp"

namespace photonvortex {

using cplx = std::complex<double>;

/// Photon correlation matrix n_{k,k'} = <a_k^dag a_k'>, Hermitian K x K.
using CorrelationMatrix = Eigen::MatrixXcd;

/// Coupled photon/molecule state.
struct SimState {
  double time{0.0};
  CorrelationMatrix n;  // K x K
  Eigen::VectorXd m;    // per-bin excitation fraction, length M

  static SimState vacuum(int modes, std::size_t bins) {
    return {0.0, CorrelationMatrix::Zero(modes, modes),
            Eigen::VectorXd::Zero(static_cast<Eigen::Index>(bins))};
  }
};

/// Everything the equations of motion need besides the state.
struct Model {
  ModeBasis basis;
  RateSpectra rates;
  PumpSpec pump;
  double rho0{3.12e7};
  /// Constant added to every mode frequency in the integration frame. The frame
  /// rotates at omega_0, so by default Omega_k = q * omega_T.
  double frame_shift{0.0};

  double mode_offset(int k) const { return basis.mode(k).manifold() * basis.omega_t() + frame_shift; }
};

struct EffectiveRates {
  Eigen::VectorXd emission;    // E_eff per bin
  Eigen::VectorXd absorption;  // A_eff per bin
};

/// Separable contractions against products of basis functions.
///
/// psi_(a,b)(x,y) = phi_a(x) phi_b(y), so products psi_k psi_k' factor into
/// pair tables phi_a phi_c over one axis. Only unordered pairs a <= c are kept.
class ModeProductKernel {
 public:
  explicit ModeProductKernel(const ModeBasis& basis)
      : ModeProductKernel(basis.axis_factors(), basis.modes(), basis.grid().cell_area()) {}

  /// General form: `phi` holds one row per 1D order sampled on R points, `modes`
  /// any list of (qx, qy) with orders below phi.rows().
  ModeProductKernel(const Eigen::MatrixXd& phi, const std::vector<ModeIndex>& modes, double cell_area)
      : K_(static_cast<int>(modes.size())), R_(static_cast<int>(phi.cols())), cell_area_(cell_area) {
    const int P = static_cast<int>(phi.rows());
    std::vector<int> pair_id(static_cast<std::size_t>(P * P));
    int np = 0;
    for (int a = 0; a < P; ++a)
      for (int c = a; c < P; ++c) {
        pair_id[static_cast<std::size_t>(a * P + c)] = np;
        pair_id[static_cast<std::size_t>(c * P + a)] = np;
        ++np;
      }
    pairs_.resize(np, R_);
    for (int a = 0; a < P; ++a)
      for (int c = a; c < P; ++c)
        pairs_.row(pair_id[static_cast<std::size_t>(a * P + c)]) =
            phi.row(a).cwiseProduct(phi.row(c));

    x_pair_.resize(K_, K_);
    y_pair_.resize(K_, K_);
    for (const auto& k : modes)
      for (const auto& kp : modes) {
        x_pair_(k.flat_id, kp.flat_id) = pair_id[static_cast<std::size_t>(k.qx * P + kp.qx)];
        y_pair_(k.flat_id, kp.flat_id) = pair_id[static_cast<std::size_t>(k.qy * P + kp.qy)];
      }
  }

  int modes() const { return K_; }

  /// f_{k,k'} = sum_j psi_k(r_j) psi_k'(r_j) weights_j dA.
  Eigen::MatrixXd project(const Eigen::VectorXd& weights) const {
    Eigen::Map<const Eigen::MatrixXd> W(weights.data(), R_, R_);  // W(ix, iy)
    const Eigen::MatrixXd T = cell_area_ * (pairs_ * W);
    const Eigen::MatrixXd F = T * pairs_.transpose();
    Eigen::MatrixXd f(K_, K_);
    for (int kp = 0; kp < K_; ++kp)
      for (int k = 0; k < K_; ++k) f(k, kp) = F(x_pair_(k, kp), y_pair_(k, kp));
    return f;
  }

  /// out_j = sum_{k,k'} psi_k(r_j) psi_k'(r_j) X_{k',k}.
  Eigen::VectorXd trace_against(const Eigen::MatrixXd& X) const {
    const auto np = pairs_.rows();
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(np, np);
    for (int kp = 0; kp < K_; ++kp)
      for (int k = 0; k < K_; ++k) G(x_pair_(k, kp), y_pair_(k, kp)) += X(kp, k);
    const Eigen::MatrixXd T = pairs_.transpose() * G;  // R x np
    Eigen::VectorXd out(static_cast<Eigen::Index>(R_) * R_);
    Eigen::Map<Eigen::MatrixXd> O(out.data(), R_, R_);
    O.noalias() = T * pairs_;
    return out;
  }

 private:
  int K_;
  int R_;
  double cell_area_;
  Eigen::MatrixXd pairs_;  // pair x R
  Eigen::MatrixXi x_pair_;
  Eigen::MatrixXi y_pair_;
};

inline Eigen::MatrixXd molecular_matrix(const Eigen::VectorXd& m, const ModeProductKernel& kernel) {
  return kernel.project(m);
}

inline Eigen::MatrixXd molecular_matrix(const Eigen::VectorXd& m, const ModeBasis& basis) {
  return ModeProductKernel(basis).project(m);
}

/// dn/dt = (i Omega - kappa/2) n + rho0 { f E (n + I) + (f - I) A n } + h.c.
/// with Omega = diag(omega). The result is exactly Hermitian.
inline CorrelationMatrix photon_drift(const CorrelationMatrix& n, const Eigen::MatrixXd& f,
                                      const RateSpectra& rates, double rho0,
                                      const Eigen::VectorXd& omega) {
  const auto K = n.rows();
  const auto& E = rates.emission;
  const auto& A = rates.absorption;
  Eigen::MatrixXd fE = f * E.asDiagonal();
  Eigen::MatrixXd B = fE + (f - Eigen::MatrixXd::Identity(K, K)) * A.asDiagonal();
  B *= rho0;
  fE *= rho0;

  CorrelationMatrix X(K, K);
  const Eigen::MatrixXd re = n.real(), im = n.imag();
  X.real() = B * re;
  X.imag() = B * im;
  X.real() += fE;
  const double half_kappa = 0.5 * rates.kappa;
  for (Eigen::Index k = 0; k < K; ++k) X.row(k) += cplx(-half_kappa, omega(k)) * n.row(k);
  CorrelationMatrix out = X + X.adjoint();
  return out;
}

/// Frame frequencies Omega_k = model.mode_offset(k).
inline Eigen::VectorXd frame_frequencies(const Model& model) {
  Eigen::VectorXd omega(model.basis.size());
  for (int k = 0; k < model.basis.size(); ++k) omega(k) = model.mode_offset(k);
  return omega;
}

inline CorrelationMatrix photon_drift(const CorrelationMatrix& n, const Eigen::MatrixXd& f,
                                      const Model& model) {
  return photon_drift(n, f, model.rates, model.rho0, frame_frequencies(model));
}

/// E_eff,j = Re Tr[Psi(r_j) E (n + I)],  A_eff,j = Re Tr[Psi(r_j) n A].
inline EffectiveRates effective_rates(const CorrelationMatrix& n, const ModeProductKernel& kernel,
                                      const RateSpectra& rates) {
  const auto K = n.rows();
  Eigen::MatrixXd re = n.real();
  // X_E(k',k) = E_k' (Re n_{k'k} + delta),  X_A(k',k) = Re n_{k'k} A_k
  Eigen::MatrixXd xe = rates.emission.asDiagonal() * (re + Eigen::MatrixXd::Identity(K, K));
  Eigen::MatrixXd xa = re * rates.absorption.asDiagonal();
  return {kernel.trace_against(xe), kernel.trace_against(xa)};
}

inline EffectiveRates effective_rates(const CorrelationMatrix& n, const ModeBasis& basis,
                                      const RateSpectra& rates) {
  return effective_rates(n, ModeProductKernel(basis), rates);
}

/// dm/dt = -(Gamma_down + 2 E_eff) m + (Gamma_up(r, t) + 2 A_eff)(1 - m).
inline Eigen::VectorXd molecular_drift(const Eigen::VectorXd& m, const Eigen::VectorXd& pump_rates,
                                       const RateSpectra& rates, const EffectiveRates& eff) {
  const auto M = m.size();
  Eigen::VectorXd out(M);
  for (Eigen::Index j = 0; j < M; ++j) {
    const double loss = rates.gamma_down + 2.0 * eff.emission(j);
    const double gain = pump_rates(j) + 2.0 * eff.absorption(j);
    out(j) = -loss * m(j) + gain * (1.0 - m(j));
  }
  return out;
}

inline Eigen::VectorXd molecular_drift(const Eigen::VectorXd& m, const PumpSpec& pump,
                                       const SpatialGrid& grid, const RateSpectra& rates,
                                       const EffectiveRates& eff, double t) {
  Eigen::VectorXd up(m.size());
  pump.sample(grid, t, up);
  return molecular_drift(m, up, rates, eff);
}

struct Derivative {
  CorrelationMatrix dn;
  Eigen::VectorXd dm;
};

/// Right-hand side of the coupled system with cached kernels and scratch space.
class DriftEvaluator {
 public:
  explicit DriftEvaluator(const Model& model)
      : model_(model),
        kernel_(model.basis),
        omega_(frame_frequencies(model)),
        pump_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.basis.grid().size()))) {}

  const Model& model() const { return model_; }
  const ModeProductKernel& kernel() const { return kernel_; }

  Derivative operator()(double t, const CorrelationMatrix& n, const Eigen::VectorXd& m) {
    Derivative d;
    const Eigen::MatrixXd f = kernel_.project(m);
    d.dn = photon_drift(n, f, model_.rates, model_.rho0, omega_);
    const EffectiveRates eff = effective_rates(n, kernel_, model_.rates);
    model_.pump.sample(model_.basis.grid(), t, pump_);
    d.dm = molecular_drift(m, pump_, model_.rates, eff);
    return d;
  }

 private:
  const Model& model_;
  ModeProductKernel kernel_;
  Eigen::VectorXd omega_;
  Eigen::VectorXd pump_;
};

}  // namespace photonvortex
