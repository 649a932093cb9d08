#pragma once

#include <cstdint>

#include "squeezelab/harness.hpp"
#include "squeezelab/pp.hpp"
#include "squeezelab/tw.hpp"

namespace squeezelab::validation {

/// Relative drift of both TW conserved charges after integrating to tau.
ValidationCheck tw_conservation(std::uint64_t seed, const Executor& executor);

/// TW moments at tau = 0 (N = 1, r = 1) against the Gaussian closed forms, as the
/// largest |z| over all twelve moments. Passing the estimator options lets a
/// caller check that removing an ordering correction is caught.
ValidationCheck tw_gaussian_tau0(std::uint64_t seed, const Executor& executor,
                                 const TwEstimatorOptions& options = {});

/// <b^dag b>, <b^2> and <Y_b^2> of the positive-P initial sample.
ValidationCheck pp_initial_identities(std::uint64_t seed);

/// Noise-free positive-P with conjugate initial amplitudes follows the TW flow.
ValidationCheck pp_drift_matches_tw(std::uint64_t seed, const PpOptions& options = {});

/// Positive-P moments at N = 4 against exact Fock-space evolution.
ValidationCheck pp_matches_exact(std::uint64_t seed, const Executor& executor, const PpOptions& options = {});

/// Recycled and atom-only delta phi >= QCRB (within 3 SE) on a moderate-r TW
/// sweep; also reports the calibration tolerance of every point.
std::vector<ValidationCheck> tw_sweep_checks(std::uint64_t seed, const Executor& executor);

/// r = 1, N = 10^6, q = 0.5: TW against the beamsplitter closed form.
ValidationCheck undepleted_limit(std::uint64_t seed, const Executor& executor);

/// Noise-free signal moments reproduce the beamsplitter closed form exactly.
ValidationCheck beamsplitter_consistency();

/// optimal_C against a golden-section minimum and r_crit at N = 10^4.
ValidationCheck analytic_constants();

/// Byte-identical CSV across worker counts and repeated runs.
ValidationCheck determinism(std::uint64_t seed);

}  // namespace squeezelab::validation
