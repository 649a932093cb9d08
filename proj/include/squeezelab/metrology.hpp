#pragma once

#include <optional>
#include <string_view>

#include "squeezelab/analytic_bs.hpp"
#include "squeezelab/moments.hpp"

namespace squeezelab {

/// Statistics of the information-recycled signal at the phi = pi/2 operating
/// point, plus the atom-only signal for comparison.
struct SignalMoments {
  double variance_s = 0.0;
  double variance_s_se = 0.0;
  double slope_magnitude = 0.0;
  double slope_se = 0.0;
  double cov_variance_slope = 0.0;

  double variance_s_atoms_only = 0.0;
  double variance_s_atoms_only_se = 0.0;
  double slope_atoms_only = 0.0;
  double slope_atoms_only_se = 0.0;
  double cov_atoms_only = 0.0;

  double q_used = 0.0;
  double q_se = 0.0;
  bool q_clamped = false;  // a slightly negative noisy q was set to 0

  /// Noise-free moments; the atom-only fields mirror the recycled ones.
  static SignalMoments exact(double variance, double slope, double q);
  static SignalMoments from_beamsplitter(double r, double q, std::int64_t n_atoms);
};

/// Builds the recycled signal from ensemble moments. q is measured as
/// <N_a2> / n_b0 unless q_override is given (needed when n_b0 = 0).
/// Errors: invalid_q outside [0, 1.05], missing_covariance, degenerate_input.
SignalMoments signal_moments_at_operating_point(const EnsembleMoments& m, double n_b0,
                                                std::optional<double> q_override = std::nullopt);

struct SensitivityResult {
  enum class Method { tw, pp, analytic_bs, analytic_smallq };

  double delta_phi = 0.0;
  double delta_phi_se = 0.0;
  double delta_phi_atoms_only = 0.0;
  double delta_phi_atoms_only_se = 0.0;
  double qcrb = 0.0;
  double qcrb_se = 0.0;
  double q_measured = 0.0;
  double tau = 0.0;
  Method method = Method::tw;
};

std::string_view to_string(SensitivityResult::Method method) noexcept;

/// Recycled-signal sensitivity as a function of the pooled moments; pass it to
/// EnsembleMoments::influence for per-batch sensitivities.
MomentFunction delta_phi_function(double n_b0, std::optional<double> q_override = std::nullopt);

/// Fills the delta_phi fields and q_measured. Throws Error(zero_slope).
SensitivityResult sensitivity(const SignalMoments& sm);

/// sqrt(variance_s_atoms_only) / slope_atoms_only. Throws Error(zero_slope).
double atoms_only_sensitivity(const SignalMoments& sm);
Estimate atoms_only_estimate(const SignalMoments& sm);

/// 4 V(J_y). Throws Error(negative_variance) when it is below zero by more than
/// 3 SE; a value within noise of zero is returned as is.
Estimate qfi_from_moments(const EnsembleMoments& m);

/// 1 / sqrt(fisher). Throws Error(nonpositive_fisher).
double qcrb(double fisher);
Estimate qcrb(Estimate fisher);

/// Full evaluation of one simulated point: recycled and atom-only sensitivity
/// and the Cramer-Rao bound.
SensitivityResult evaluate_point(const EnsembleMoments& m, double n_b0, double tau,
                                 SensitivityResult::Method method,
                                 std::optional<double> q_override = std::nullopt);

}  // namespace squeezelab
