#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "squeezelab/metrology.hpp"
#include "squeezelab/model.hpp"
#include "squeezelab/moments.hpp"
#include "squeezelab/parallel.hpp"

namespace squeezelab {

struct CalibrationOptions {
  std::size_t scan_trajectories = 10000;  // reduced ensemble for locating the first peak
  int scan_divisions = 128;               // coarse steps per pi / (2 sqrt(N_t + N_b))
  int march_steps = 1024;                 // full-ensemble RK4 steps from 0 to the scanned peak
  double tolerance = 2e-3;                // |q_achieved - q_target|
  double refine_rel_tol = 1e-4;           // root-finder stopping rule relative to the target
};

struct CalibrationResult {
  double tau = 0.0;
  double q_achieved = 0.0;
  double q_target = 0.0;
  int iterations = 0;
  std::pair<double, double> bracket{0.0, 0.0};
  bool at_peak = false;        // target sat just above the measured maximum
  bool q_from_formula = false; // r = 0: tau and q come from the beamsplitter reflection
};

/// Coarse first-peak location of Q(tau) on the reduced ensemble.
struct QScan {
  double tau_peak = 0.0;
  double q_max = 0.0;
  std::vector<QstPoint> samples;
};

struct CalibratedPoint {
  CalibrationResult calibration;
  std::optional<EnsembleMoments> moments;  // empty when calibration failed
  std::string failure;
};

/// Owns one TW ensemble for a fixed (r, N_t, seed) and walks it along the first
/// rising branch of Q(tau). All targets of one march share the same trajectories,
/// so sweeps over q use common random numbers.
class TwCalibrator {
 public:
  TwCalibrator(const ModelParams& params, const Executor& executor, CalibrationOptions options = {});

  const ModelParams& params() const noexcept { return params_; }
  const QScan& scan() const noexcept { return scan_; }
  double q_max() const noexcept { return scan_.q_max; }

  /// Calibrates every target (any order) and returns the matching points in the
  /// input order. Unreachable targets come back with an empty moments field.
  std::vector<CalibratedPoint> march(std::span<const double> q_targets) const;

 private:
  ModelParams params_;
  const Executor* executor_;
  CalibrationOptions options_;
  QScan scan_;
};

/// Throws Error(unreachable_q) when the target exceeds the first-branch maximum.
CalibrationResult calibrate_tau(double q_target, const ModelParams& params, const Executor& executor,
                                const CalibrationOptions& options = {});

struct OptimumPoint {
  double r_opt = 0.0;
  double q_opt = 0.0;
  double delta_phi_min = 0.0;
  double delta_phi_min_se = 0.0;
  SensitivityResult::Method method = SensitivityResult::Method::tw;
  SensitivityResult at_optimum;
  bool monotone = false;        // optimum sits on the search boundary
  bool noisy_objective = false; // golden-section rejected, grid fallback used
  int evaluations = 0;
};

/// One simulated point of a sweep; `ok` is false when calibration or the engine
/// failed and `failure` says why.
struct SweepPoint {
  double r = 0.0;
  double q_target = 0.0;
  CalibrationResult calibration;
  SensitivityResult result;
  std::size_t n_trajectories = 0;
  bool ok = false;
  std::string failure;
  // Per-batch influence of delta_phi; batches hold the same trajectory indices at
  // every r, so differences between points are paired.
  std::vector<double> delta_phi_influence;
};

/// SE of delta_phi(a) - delta_phi(b) from the paired batch influences.
double paired_difference_se(const SweepPoint& a, const SweepPoint& b);

/// TW sensitivity at every q target for one r, sharing a single march.
std::vector<SweepPoint> sweep_q(double r, const ModelParams& params, std::span<const double> q_grid,
                                const Executor& executor, const CalibrationOptions& options = {});
std::vector<SweepPoint> sweep_q(const TwCalibrator& calibrator, std::span<const double> q_grid);

/// 30 log-spaced points in [q_lo, 0.95 q_max]; q_lo is 5e-4, lowered for large r
/// so that the expected optimum C^2 N_t e^{-2r} stays on the grid.
std::vector<double> default_q_grid(double r, std::int64_t n_atoms, double q_max,
                                   std::size_t n_points = 30);

struct ROptions {
  double r_lo = 0.5;
  double r_hi = 12.0;
  double r_tol = 0.05;
  double se_stop_width = 0.5;  // the 1-SE stop only applies below this bracket width
  double noise_gate = 0.2;
  std::size_t fallback_points = 25;
};

OptimumPoint optimize_r_fixed_q(double q, const ModelParams& params, const Executor& executor,
                                const ROptions& r_options = {},
                                const CalibrationOptions& options = {});

enum class Objective { delta_phi, qcrb };

/// Grid argmin over the sweep; within 1 SE of the minimum the smallest q wins.
OptimumPoint argmin_over_q(std::span<const SweepPoint> sweep, Objective objective);

OptimumPoint optimize_q_fixed_r(double r, const ModelParams& params, std::span<const double> q_grid,
                                const Executor& executor, const CalibrationOptions& options = {});

struct RMinimum {
  double r = 0.0;
  OptimumPoint delta_phi;
  OptimumPoint qcrb;
  std::vector<SweepPoint> sweep;
};

/// For every r: default q grid, one sweep, argmin of both objectives.
std::vector<RMinimum> min_over_r_and_q(const ModelParams& params, std::span<const double> r_grid,
                                       const Executor& executor,
                                       const CalibrationOptions& options = {});

}  // namespace squeezelab
