#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "squeezelab/model.hpp"
#include "squeezelab/moments.hpp"
#include "squeezelab/parallel.hpp"
#include "squeezelab/rng.hpp"
#include "squeezelab/state.hpp"

namespace squeezelab {

struct IntegratorConfig {
  enum class Scheme { rk4, heun, euler_maruyama };

  int n_steps = 1024;
  Scheme scheme = Scheme::rk4;
  /// Relative drift of the conserved charges that counts as an integrator fault.
  double tolerance_report = 1e-8;

  static IntegratorConfig tw_default() { return {}; }
  static IntegratorConfig pp_default() { return {2048, Scheme::heun, 1e-8}; }

  /// Throws Error(invalid_argument) when n_steps < 16.
  void validate() const;
};

/// Ordering corrections applied by tw_moments. Both flags exist so validation
/// can demonstrate that removing a correction is detectable.
struct TwEstimatorOptions {
  bool half_quantum_correction = true;  // -1/2 on mode occupations
  bool spin_square_correction = true;   // -1/8 on <J_j^2>
};

/// Draws the Wigner sample of coherent(a1) x vacuum(a2) x squeezed vacuum(b).
TwTrajectory sample_tw_initial(const ModelParams& params, CounterRng& stream);

/// Same draw as the index-th trajectory of any ensemble built from params.
TwTrajectory sample_tw_trajectory(const ModelParams& params, std::size_t index);

/// d/dtau of (alpha1, alpha2, beta) under the three-mode flow.
TwTrajectory tw_derivatives(const TwTrajectory& state) noexcept;

/// One classical RK4 step of size h.
TwTrajectory rk4_step(const TwTrajectory& state, double h) noexcept;

/// Fixed-step RK4 to tau_final. Throws Error(non_finite) if an amplitude blows up.
TwTrajectory integrate_tw(TwTrajectory traj, double tau_final, const IntegratorConfig& cfg);

EnsembleMoments tw_moments(std::span<const TwTrajectory> ensemble,
                           const TwEstimatorOptions& options = {},
                           std::size_t n_batches = kDefaultBatches);

/// A full trajectory ensemble that can be advanced in place. Trajectory i is
/// always drawn from substream i of the master seed, so a reduced ensemble is a
/// prefix of the full one.
class TwEnsemble {
 public:
  TwEnsemble(const ModelParams& params, std::size_t count, const Executor& executor);

  const ModelParams& params() const noexcept { return params_; }
  std::size_t size() const noexcept { return state_.size(); }
  double tau() const noexcept { return tau_; }
  std::span<const TwTrajectory> trajectories() const noexcept { return state_; }

  /// n_steps RK4 steps of size dtau / n_steps on every trajectory.
  void advance(double dtau, int n_steps);

  /// Copy of this ensemble advanced by one RK4 step of size h (the receiver is
  /// unchanged). Used for sub-step root finding.
  TwEnsemble stepped(double h) const;

  /// Symmetric-ordering corrected <N_a2>, cheap enough to call every step.
  double mean_n_a2() const;

  /// <N_a2> after one RK4 step of size h, without storing the stepped state.
  double probe_n_a2(double h) const;

  EnsembleMoments moments(const TwEstimatorOptions& options = {}) const;

  /// Largest relative change of either conserved charge against `initial`.
  double max_charge_drift(std::span<const TwTrajectory> initial) const;

 private:
  ModelParams params_;
  const Executor* executor_;
  std::vector<TwTrajectory> state_;
  double tau_ = 0.0;
};

/// Samples params.n_trajectories (rounded up to a batch multiple), integrates to
/// tau and returns the ordering-corrected moments.
EnsembleMoments run_tw(const ModelParams& params, double tau, const IntegratorConfig& cfg,
                       const Executor& executor, const TwEstimatorOptions& options = {});

}  // namespace squeezelab
