#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "support.hpp"

namespace pv = photonvortex;
using pvtest::cplx;

namespace {

pv::Model small_model(int q = 4, int res = 24, double extent = 6.0) {
  pv::SimConfig c;
  c.basis.q_max = q;
  c.basis.resolution = res;
  c.basis.extent = extent;
  c.pump.radius = 2.0;
  return pv::make_model(c);
}

}  // namespace

// --- molecular matrix ---------------------------------------------------------

TEST(MolecularMatrix, ZeroExcitation) {
  auto model = small_model();
  const Eigen::VectorXd m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.basis.grid().size()));
  EXPECT_EQ(pv::molecular_matrix(m, model.basis).cwiseAbs().maxCoeff(), 0.0);
}

TEST(MolecularMatrix, SaturationGivesIdentity) {
  auto model = small_model(4, 64, 8.0);
  const Eigen::VectorXd m = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(model.basis.grid().size()));
  const Eigen::MatrixXd f = pv::molecular_matrix(m, model.basis);
  EXPECT_LT((f - Eigen::MatrixXd::Identity(f.rows(), f.cols())).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(MolecularMatrix, SingleBinAtOrigin) {
  auto basis = pv::build_basis(1, 1.0, 1000.0, 1.0, pv::SpatialGrid(3.0, 9));
  const std::size_t centre = basis.grid().flat(4, 4);
  Eigen::VectorXd m = Eigen::VectorXd::Zero(81);
  m(static_cast<Eigen::Index>(centre)) = 1.0;
  const Eigen::MatrixXd f = pv::molecular_matrix(m, basis);
  const double psi00 = 1.0 / std::sqrt(std::numbers::pi);
  EXPECT_NEAR(f(0, 0), psi00 * psi00 * basis.grid().cell_area(), 1e-15);
  EXPECT_EQ(f(0, basis.index_of(1, 0)), 0.0);
  EXPECT_EQ(f(0, basis.index_of(0, 1)), 0.0);
}

TEST(MolecularMatrix, MatchesDenseContraction) {
  auto model = small_model(6, 20);
  std::mt19937_64 rng(3);
  const auto m = pvtest::random_excitation(rng, static_cast<int>(model.basis.grid().size()));
  const auto& psi = model.basis.amplitudes();
  const Eigen::MatrixXd dense = psi * (m * model.basis.grid().cell_area()).asDiagonal() * psi.transpose();
  EXPECT_LT(pvtest::rel_diff(pv::molecular_matrix(m, model.basis), dense), 1e-13);
}

// --- photon drift -------------------------------------------------------------

TEST(PhotonDrift, VacuumWithoutExcitationIsStationary) {
  auto model = small_model();
  const int K = model.basis.size();
  const auto d = pv::photon_drift(pv::CorrelationMatrix::Zero(K, K), Eigen::MatrixXd::Zero(K, K), model);
  EXPECT_EQ(d.cwiseAbs().maxCoeff(), 0.0);
}

TEST(PhotonDrift, SpontaneousSeeding) {
  auto model = small_model();
  const int K = model.basis.size();
  std::mt19937_64 rng(11);
  const auto m = pvtest::random_excitation(rng, static_cast<int>(model.basis.grid().size()));
  const Eigen::MatrixXd f = pv::molecular_matrix(m, model.basis);
  const auto d = pv::photon_drift(pv::CorrelationMatrix::Zero(K, K), f, model);
  const Eigen::MatrixXd fE = f * model.rates.emission.asDiagonal();
  const Eigen::MatrixXd expect = model.rho0 * (fE + fE.transpose());
  EXPECT_LT(pvtest::rel_diff(d.real(), expect), 1e-14);
  EXPECT_EQ(d.imag().cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((d - d.adjoint()).cwiseAbs().maxCoeff(), 0.0);
  // fE + E f is PSD when E is flat (f itself is PSD)
  EXPECT_GT(pv::min_eigenvalue(d), -1e-12 * d.cwiseAbs().maxCoeff());
}

TEST(PhotonDrift, LossOnly) {
  auto model = small_model();
  model.rho0 = 0.0;
  const int K = model.basis.size();
  pv::CorrelationMatrix n = pv::CorrelationMatrix::Zero(K, K);
  for (int k = 0; k < K; ++k) n(k, k) = 1.0 + k;
  const auto d = pv::photon_drift(n, Eigen::MatrixXd::Random(K, K), model);
  for (int k = 0; k < K; ++k) EXPECT_NEAR(d(k, k).real(), -model.rates.kappa * n(k, k).real(), 1e-14);
  EXPECT_LT((d - pv::CorrelationMatrix(d.diagonal().asDiagonal())).cwiseAbs().maxCoeff(), 1e-14);
}

// --- effective rates ----------------------------------------------------------

TEST(EffectiveRates, VacuumLimit) {
  auto model = small_model();
  const int K = model.basis.size();
  const auto eff = pv::effective_rates(pv::CorrelationMatrix::Zero(K, K), model.basis, model.rates);
  EXPECT_EQ(eff.absorption.cwiseAbs().maxCoeff(), 0.0);
  const auto& psi = model.basis.amplitudes();
  const Eigen::VectorXd expect = psi.cwiseAbs2().transpose() * model.rates.emission;
  EXPECT_LT(pvtest::rel_diff(eff.emission, expect), 1e-13);
  EXPECT_GT(eff.emission.minCoeff(), 0.0);
}

TEST(EffectiveRates, SingleModeReduction) {
  auto model = small_model();
  const int K = model.basis.size();
  pv::CorrelationMatrix n = pv::CorrelationMatrix::Zero(K, K);
  n(0, 0) = 3.5;
  const auto eff = pv::effective_rates(n, model.basis, model.rates);
  const Eigen::VectorXd psi0 = model.basis.amplitudes().row(0).transpose();
  const Eigen::VectorXd expect = 3.5 * model.rates.absorption(0) * psi0.cwiseAbs2();
  EXPECT_LT(pvtest::rel_diff(eff.absorption, expect), 1e-13);
}

TEST(EffectiveRates, MatchesDoubleSumOnPhysicalBasis) {
  auto model = small_model(5, 16);
  std::mt19937_64 rng(5);
  const int K = model.basis.size();
  const auto n = pvtest::random_psd(rng, K);
  const auto eff = pv::effective_rates(n, model.basis, model.rates);
  const auto& psi = model.basis.amplitudes();
  for (std::size_t j = 0; j < model.basis.grid().size(); j += 5) {
    cplx e = 0, a = 0;
    const auto jj = static_cast<Eigen::Index>(j);
    for (int k = 0; k < K; ++k)
      for (int kp = 0; kp < K; ++kp) {
        const double p2 = psi(k, jj) * psi(kp, jj);
        e += p2 * model.rates.emission(kp) * (n(kp, k) + (k == kp ? 1.0 : 0.0));
        a += p2 * n(kp, k) * model.rates.absorption(k);
      }
    EXPECT_NEAR(eff.emission(jj), e.real(), 1e-10 * std::abs(e));
    EXPECT_NEAR(eff.absorption(jj), a.real(), 1e-10 * std::abs(a) + 1e-300);
  }
  EXPECT_GT(eff.absorption.minCoeff(), -1e-9);
}

// --- molecular drift ----------------------------------------------------------

TEST(MolecularDrift, SaturatedBinOnlyDecays) {
  pv::RateSpectra r;
  r.gamma_down = 0.002;
  const Eigen::VectorXd m = Eigen::VectorXd::Ones(1);
  const Eigen::VectorXd pump = Eigen::VectorXd::Constant(1, 1e6);
  const pv::EffectiveRates eff{Eigen::VectorXd::Constant(1, 0.3), Eigen::VectorXd::Constant(1, 0.7)};
  const auto d = pv::molecular_drift(m, pump, r, eff);
  EXPECT_DOUBLE_EQ(d(0), -(0.002 + 0.6));
}

TEST(MolecularDrift, GroundStateWithoutPumpIsStationary) {
  auto model = small_model();
  model.pump.peak_rate = 0.0;
  const auto M = static_cast<Eigen::Index>(model.basis.grid().size());
  const int K = model.basis.size();
  const auto eff = pv::effective_rates(pv::CorrelationMatrix::Zero(K, K), model.basis, model.rates);
  const auto d = pv::molecular_drift(Eigen::VectorXd::Zero(M), model.pump, model.basis.grid(), model.rates, eff, 1.0);
  EXPECT_EQ(d.cwiseAbs().maxCoeff(), 0.0);
}

TEST(MolecularDrift, ScalarFixedPoint) {
  pv::RateSpectra r;
  r.gamma_down = 0.002;
  const double up = 0.4;
  const double mstar = up / (up + r.gamma_down);
  const pv::EffectiveRates eff{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)};
  const Eigen::VectorXd pump = Eigen::VectorXd::Constant(1, up);
  EXPECT_NEAR(pv::molecular_drift(Eigen::VectorXd::Constant(1, mstar), pump, r, eff)(0), 0.0, 1e-16);
  // integrate the scalar ODE and approach m*
  double m = 0.0;
  const double h = 0.01;
  auto f = [&](double x) { return pv::molecular_drift(Eigen::VectorXd::Constant(1, x), pump, r, eff)(0); };
  for (int i = 0; i < 20000; ++i) {
    const double k1 = f(m), k2 = f(m + 0.5 * h * k1), k3 = f(m + 0.5 * h * k2), k4 = f(m + h * k3);
    m += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  EXPECT_NEAR(m, mstar, 1e-12);
}

TEST(Pump, GaussianProfile) {
  pv::PumpSpec p;
  p.radius = 4.0;
  p.width = 0.5;
  p.orbital_frequency = 0.25;
  p.phase_0 = 0.3;
  const auto c = p.center(2.0);
  EXPECT_NEAR(c.x, 4.0 * std::cos(0.8), 1e-15);
  EXPECT_NEAR(c.y, 4.0 * std::sin(0.8), 1e-15);
  EXPECT_DOUBLE_EQ(p.rate_at(c, 2.0), 0.4);
  EXPECT_NEAR(p.rate_at({c.x + 0.5, c.y}, 2.0), 0.4 * std::exp(-2.0), 1e-15);
  EXPECT_DOUBLE_EQ(p.z(), 4.0);
  pv::SpatialGrid g(6.0, 32);
  Eigen::VectorXd sampled(static_cast<Eigen::Index>(g.size()));
  p.sample(g, 2.0, sampled);
  for (std::size_t j = 0; j < g.size(); ++j)
    EXPECT_NEAR(sampled(static_cast<Eigen::Index>(j)), p.rate_at(g.position(j), 2.0), 1e-15);
}

// --- rate model ---------------------------------------------------------------

TEST(Rates, KennardStepanov) {
  pv::KennardStepanovParams p{2.0, 5.0, 3.0};
  EXPECT_DOUBLE_EQ(pv::kennard_stepanov_rates(3, p).absorption, 2.0);  // zero detuning
  EXPECT_DOUBLE_EQ(pv::kennard_stepanov_rates(3, p).emission, 2.0);
  double previous = 0.0;
  for (int q = 0; q <= 3; ++q) {  // absorption falls as the detuning below the line grows
    const double a = pv::kennard_stepanov_rates(q, p).absorption;
    EXPECT_GT(a, previous);
    previous = a;
  }
  p.theta = std::numeric_limits<double>::infinity();
  for (int q = 0; q < 10; ++q) EXPECT_EQ(pv::kennard_stepanov_rates(q, p).absorption, 2.0);
  p.theta = 0.0;
  EXPECT_THROW(pv::kennard_stepanov_rates(0, p), std::invalid_argument);
  p.theta = -1.0;
  EXPECT_THROW(pv::kennard_stepanov_rates(0, p), std::invalid_argument);
}

TEST(Rates, RoomTemperatureDyeExample) {
  // kT at 300 K and a 545 nm line with a 580 nm cutoff, in units of a 0.5e12 rad/s trap
  const double hbar = 1.054571817e-34, kB = 1.380649e-23, c = 2.99792458e8, wt = 0.5e12;
  const double theta = kB * 300.0 / hbar / wt;
  const double delta = 2.0 * std::numbers::pi * c * (1.0 / 545e-9 - 1.0 / 580e-9) / wt;
  const auto r = pv::kennard_stepanov_rates(0, {1.0, theta, delta});
  EXPECT_NEAR(theta, 78.5, 0.5);
  EXPECT_NEAR(delta, 417.4, 0.5);
  EXPECT_NEAR(r.absorption / r.emission, 0.0049, 0.0002);
}

TEST(Rates, DegenerateModesShareRatesAndTablesOverride) {
  auto basis = pv::build_basis(4, 1.0, 1000.0, 1.0, pv::SpatialGrid(6, 16));
  auto spectra = pv::build_rate_spectra(basis, {1.0, 2.0, 5.0}, 0.26, 0.4, 0.002);
  for (const auto& k : basis.modes())
    for (const auto& kp : basis.modes())
      if (k.manifold() == kp.manifold()) {
        EXPECT_EQ(spectra.absorption(k.flat_id), spectra.absorption(kp.flat_id));
        EXPECT_EQ(spectra.emission(k.flat_id), spectra.emission(kp.flat_id));
      }
  EXPECT_DOUBLE_EQ(spectra.omega_zpl, 1005.0);
  pv::RateTables t{{0.1, 0.2, 0.3, 0.4, 0.5}, {}};
  spectra = pv::build_rate_spectra(basis, {1.0, 2.0, 5.0}, 0.26, 0.4, 0.002, t);
  EXPECT_EQ(spectra.absorption(basis.index_of(2, 1)), 0.4);
  EXPECT_EQ(spectra.emission(basis.index_of(2, 1)), 1.0);
  t.absorption.pop_back();
  EXPECT_THROW(pv::build_rate_spectra(basis, {1.0, 2.0, 5.0}, 0.26, 0.4, 0.002, t), std::invalid_argument);
}

// --- oracle equivalence -------------------------------------------------------

TEST(Oracle, OptimisedDriftMatchesReference) {
  std::mt19937_64 rng(20240601);
  double worst_n = 0.0, worst_m = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int K = 3 + trial % 2;
    const int R = trial % 3 == 0 ? 2 : 3;  // M = 4 or 9
    const auto sys = pvtest::random_tiny(rng, K, R);
    const auto n = pvtest::random_psd(rng, K, pvtest::uniform(rng, 0.1, 10.0));
    const auto m = pvtest::random_excitation(rng, sys.M());
    const auto ref = pvtest::naive_drift(sys, n, m);
    const auto fast = pvtest::fast_drift(sys, sys.kernel(), n, m);
    worst_n = std::max(worst_n, pvtest::rel_diff(fast.dn, ref.dn));
    worst_m = std::max(worst_m, pvtest::rel_diff(fast.dm, ref.dm));
  }
  EXPECT_LT(worst_n, 1e-10);
  EXPECT_LT(worst_m, 1e-10);
}

TEST(Oracle, EvaluatorMatchesComposition) {
  auto model = small_model(4, 16);
  std::mt19937_64 rng(9);
  const auto n = pvtest::random_psd(rng, model.basis.size());
  const auto m = pvtest::random_excitation(rng, static_cast<int>(model.basis.grid().size()));
  pv::DriftEvaluator eval(model);
  const auto d = eval(1.3, n, m);
  const auto f = pv::molecular_matrix(m, model.basis);
  const auto eff = pv::effective_rates(n, model.basis, model.rates);
  EXPECT_LT(pvtest::rel_diff(d.dn, pv::photon_drift(n, f, model)), 1e-14);
  EXPECT_LT(pvtest::rel_diff(d.dm, pv::molecular_drift(m, model.pump, model.basis.grid(), model.rates, eff, 1.3)),
            1e-14);
}

TEST(FixedPoint, VacuumWithoutPump) {
  auto model = small_model();
  model.pump.peak_rate = 0.0;
  pv::DriftEvaluator eval(model);
  const auto s = pv::SimState::vacuum(model.basis.size(), model.basis.grid().size());
  const auto d = eval(0.0, s.n, s.m);
  EXPECT_EQ(d.dn.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(d.dm.cwiseAbs().maxCoeff(), 0.0);
}
