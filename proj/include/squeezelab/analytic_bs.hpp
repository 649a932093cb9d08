#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace squeezelab {

// Closed-form sensitivity of the information-recycled signal when the state
// transfer acts as an undepleted-pump beamsplitter with reflection q.

struct BsSignalMoments {
  double variance = 0.0;
  double slope = 0.0;
};

BsSignalMoments bs_signal_moments(double r, double q, std::int64_t n_atoms);

/// Exact beamsplitter sensitivity. Throws Error(depleted_regime) once
/// N_t - 2 q sinh^2 r <= 0.
double bs_sensitivity(double r, double q, std::int64_t n_atoms);

/// Atom-only interferometer after the same beamsplitter transfer:
/// sqrt(n1 (1 - q + q e^{-2r})) / (N_t - 2 q sinh^2 r) with n1 = N_t - q sinh^2 r.
/// Throws Error(depleted_regime) like bs_sensitivity.
double bs_atoms_only_sensitivity(double r, double q, std::int64_t n_atoms);

/// Drops e^{-2r} from the second term and the depletion in the denominator.
double bs_sensitivity_approx(double r, double q, std::int64_t n_atoms);

/// True when q >> e^{-2r} and N_t >> 2 q sinh^2 r, using a factor of 10 for ">>".
bool bs_intermediate_regime(double r, double q, std::int64_t n_atoms);

double bs_min_sensitivity(double q, std::int64_t n_atoms);

/// ln(4 N_t / q^2) / 4
double bs_opt_r(double q, std::int64_t n_atoms);

/// bs_opt_r(1, N_t)
double bs_r_crit(std::int64_t n_atoms);

struct BsSensitivityCurve {
  std::vector<double> q_grid;
  std::vector<double> delta_phi;  // NaN where the closed form is depleted
  double r = 0.0;
  std::int64_t n_atoms = 0;
};

/// 200 log-spaced reflections in [1e-3, 1].
std::vector<double> bs_default_q_grid(std::size_t n_points = 200);

BsSensitivityCurve bs_curve(double r, std::int64_t n_atoms, std::span<const double> q_grid);

}  // namespace squeezelab
