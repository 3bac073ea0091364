#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

#include "dynamics.hpp"

namespace photonvortex {

class StepFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Acceptance thresholds for a trial RK4 step.
struct StepPolicy {
  double hermiticity_tol{1e-10};  // relative to max |n_kk'|
  double negativity_tol{1e-9};    // on diag(n), relative to max(1, Tr n)
  double clamp_tol{1e-8};         // allowed excursion of m outside [0, 1] before rejection
  int max_halvings{6};
};

struct StepStats {
  std::int64_t accepted{0};
  std::int64_t rejected{0};
  std::int64_t clamp_warnings{0};
};

/// Largest stable step suggested by the fastest rate in the model.
inline double max_stable_dt(const Model& model, double safety) {
  double fastest = std::max({model.basis.q_max() * model.basis.omega_t() + std::abs(model.frame_shift),
                             model.rates.kappa, model.pump.peak_rate});
  if (model.rates.emission.size() > 0)
    fastest = std::max(fastest, model.rho0 * model.rates.emission.maxCoeff());
  if (model.rates.absorption.size() > 0)
    fastest = std::max(fastest, model.rho0 * model.rates.absorption.maxCoeff());
  return safety / fastest;
}

inline double hermiticity_defect(const CorrelationMatrix& n) {
  return (n - n.adjoint()).cwiseAbs().maxCoeff();
}

/// Smallest eigenvalue of the Hermitian part of n.
inline double min_eigenvalue(const CorrelationMatrix& n) {
  Eigen::SelfAdjointEigenSolver<CorrelationMatrix> es(n, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Classical RK4 on (n, m) with post-step Hermitisation and clamping. A trial that
/// violates the policy is retried as two half steps, up to max_halvings deep.
class Integrator {
 public:
  using DriftFn = std::function<Derivative(double, const CorrelationMatrix&, const Eigen::VectorXd&)>;

  explicit Integrator(const Model& model, StepPolicy policy = {})
      : drift_(DriftEvaluator(model)), policy_(policy) {}
  /// Any right-hand side with the same signature, e.g. a reference implementation.
  Integrator(DriftFn drift, StepPolicy policy) : drift_(std::move(drift)), policy_(policy) {}

  const StepStats& stats() const { return stats_; }

  void step(SimState& s, double dt) { step_impl(s, dt, 0); }

 private:
  bool trial(const SimState& s, double dt, SimState& out) {
    const double t = s.time;
    const Derivative k1 = drift_(t, s.n, s.m);
    const Derivative k2 = drift_(t + 0.5 * dt, s.n + (0.5 * dt) * k1.dn, s.m + (0.5 * dt) * k1.dm);
    const Derivative k3 = drift_(t + 0.5 * dt, s.n + (0.5 * dt) * k2.dn, s.m + (0.5 * dt) * k2.dm);
    const Derivative k4 = drift_(t + dt, s.n + dt * k3.dn, s.m + dt * k3.dm);
    const double w = dt / 6.0;
    out.n = s.n + w * (k1.dn + 2.0 * k2.dn + 2.0 * k3.dn + k4.dn);
    out.m = s.m + w * (k1.dm + 2.0 * k2.dm + 2.0 * k3.dm + k4.dm);
    out.time = t + dt;

    if (!out.n.allFinite() || !out.m.allFinite()) return false;
    const double scale = std::max(out.n.cwiseAbs().maxCoeff(), 1e-300);
    if (hermiticity_defect(out.n) > policy_.hermiticity_tol * scale) return false;
    out.n = 0.5 * (out.n + out.n.adjoint()).eval();
    const double trace = std::max(1.0, out.n.trace().real());
    if (out.n.diagonal().real().minCoeff() < -policy_.negativity_tol * trace) return false;
    if (out.m.minCoeff() < -policy_.clamp_tol || out.m.maxCoeff() > 1.0 + policy_.clamp_tol)
      return false;
    if (out.m.minCoeff() < 0.0 || out.m.maxCoeff() > 1.0) {
      ++stats_.clamp_warnings;
      out.m = out.m.cwiseMax(0.0).cwiseMin(1.0);
    }
    return true;
  }

  void step_impl(SimState& s, double dt, int depth) {
    SimState out;
    if (trial(s, dt, out)) {
      s = std::move(out);
      ++stats_.accepted;
      return;
    }
    ++stats_.rejected;
    if (depth >= policy_.max_halvings)
      throw StepFailure("step rejected at t=" + std::to_string(s.time) + " after " +
                        std::to_string(depth) + " halvings");
    const double target = s.time + dt;
    step_impl(s, 0.5 * dt, depth + 1);
    step_impl(s, target - s.time, depth + 1);
    s.time = target;
  }

  DriftFn drift_;
  StepPolicy policy_;
  StepStats stats_;
};

/// Snapshot timing. Snapshot i sits at t = i * interval; every interval is covered
/// by an integer number of equal substeps no longer than dt.
struct Schedule {
  double dt{0.05};
  double interval{1.0};
  double t_end{0.0};

  std::int64_t last_index() const {
    if (t_end <= 0.0) return 0;
    return static_cast<std::int64_t>(std::ceil(t_end / interval - 1e-9));
  }
  int substeps() const { return std::max(1, static_cast<int>(std::ceil(interval / dt - 1e-9))); }
  double time_of(std::int64_t index) const { return static_cast<double>(index) * interval; }
};

using SnapshotSink = std::function<void(const SimState&, std::int64_t index)>;

/// Integrates from snapshot `start_index` (state must sit at that time) to the end of
/// the schedule, handing every snapshot, including the starting one, to the sink.
inline SimState run(Integrator& integrator, const Schedule& schedule, SimState state,
                    std::int64_t start_index, const SnapshotSink& sink) {
  if (!(schedule.interval > 0.0) || !(schedule.dt > 0.0))
    throw std::invalid_argument("schedule needs positive dt and interval");
  state.time = schedule.time_of(start_index);
  if (sink) sink(state, start_index);
  const int sub = schedule.substeps();
  const double h = schedule.interval / sub;
  for (std::int64_t i = start_index; i < schedule.last_index(); ++i) {
    for (int s = 0; s < sub; ++s) {
      integrator.step(state, h);
      state.time = schedule.time_of(i) + (s + 1) * h;
    }
    state.time = schedule.time_of(i + 1);
    if (sink) sink(state, i + 1);
  }
  return state;
}

}  // namespace photonvortex
