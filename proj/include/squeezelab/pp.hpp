#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "squeezelab/model.hpp"
#include "squeezelab/moments.hpp"
#include "squeezelab/parallel.hpp"
#include "squeezelab/rng.hpp"
#include "squeezelab/state.hpp"
#include "squeezelab/tw.hpp"

namespace squeezelab {

struct PpOptions {
  bool noise_enabled = true;
  // Mutation hook for validation: false feeds dW instead of conj(dW) to the
  // photon amplitudes, which breaks the diffusion factorization.
  bool conjugate_noise = true;
  // Trajectories with any |amplitude| > guard_factor * sqrt(N) are dropped.
  double guard_factor = 1e3;
};

struct PpGuardReport {
  std::size_t n_launched = 0;
  std::size_t n_diverged = 0;
  double max_amplitude_seen = 0.0;

  void merge(const PpGuardReport& other) noexcept;
  double diverged_fraction() const noexcept;
};

PpTrajectory sample_pp_initial(const ModelParams& params, CounterRng& stream);

/// Six drift terms of the doubled-phase-space flow.
PpTrajectory pp_drift(const PpTrajectory& state) noexcept;

/// Noise increment for complex Wiener increments dW1, dW2 (E|dW|^2 = dt).
PpTrajectory pp_noise(const PpTrajectory& state, cplx dW1, cplx dW2,
                      bool conjugate_noise = true) noexcept;

struct PpStepResult {
  PpTrajectory state;
  bool diverged = false;
  double max_amplitude = 0.0;
};

/// Fixed-step stochastic Heun (or Euler-Maruyama) to tau_final. With noise
/// disabled the rk4 scheme is also accepted. A trajectory that crosses
/// guard_bound is frozen and flagged instead of integrated further.
PpStepResult integrate_pp(PpTrajectory traj, double tau_final, const IntegratorConfig& cfg,
                          CounterRng& stream, double guard_bound, const PpOptions& options = {});

/// Normal-ordered moments of the non-diverged trajectories. `diverged` is either
/// empty or parallel to `ensemble`. Throws Error(unusable_ensemble) when more
/// than 1% of the trajectories diverged.
EnsembleMoments pp_moments(std::span<const PpTrajectory> ensemble,
                           std::span<const char> diverged = {},
                           std::size_t n_batches = kDefaultBatches);

struct PpEnsemble {
  std::vector<PpTrajectory> trajectories;
  std::vector<char> diverged;
  PpGuardReport guard;
};

/// Samples and integrates params.n_trajectories (rounded up to a batch multiple).
/// Trajectory i uses substream i for both its initial draw and its noise.
PpEnsemble simulate_pp(const ModelParams& params, double tau, const IntegratorConfig& cfg,
                       const Executor& executor, const PpOptions& options = {});

struct PpRun {
  EnsembleMoments moments;
  PpGuardReport guard;
};

PpRun run_pp(const ModelParams& params, double tau, const IntegratorConfig& cfg,
             const Executor& executor, const PpOptions& options = {});

}  // namespace squeezelab
