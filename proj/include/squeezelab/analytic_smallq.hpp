#pragma once

#include <cstdint>

namespace squeezelab {

// Second-order (Heun) small-time expansion of the three-mode dynamics, valid
// while tau e^r and tau sqrt(N_t) stay small, and the matching quantum Fisher
// information series.

double heun_na1(double r, double tau, std::int64_t n_atoms);

/// sqrt(N_t) tau (N_a1(tau) - N_t tau^2 sinh^2 r)
double smallq_slope(double r, double tau, std::int64_t n_atoms);

/// The three brace blocks of the recycled-signal variance, transcribed line by
/// line. NaN once 1 - N_t tau^2 < 0, where the cross block's root is imaginary.
namespace smallq_variance_terms {
double coherent_block(double r, double tau, std::int64_t n_atoms);
double cross_block(double r, double tau, std::int64_t n_atoms);
double transfer_block(double r, double tau, std::int64_t n_atoms);
}  // namespace smallq_variance_terms

double smallq_variance(double r, double tau, std::int64_t n_atoms);

/// Throws Error(divergence) at tau = 0.
double smallq_sensitivity_series(double r, double tau, std::int64_t n_atoms);

/// The three bracketed contributions of the series, scaling as e^{-r}/tau,
/// tau e^r and (tau e^r)^3 for r >~ 1. Their sum is the series.
struct SmallQSeriesTerms {
  double leading = 0.0;
  double second = 0.0;
  double third = 0.0;
};
SmallQSeriesTerms smallq_series_terms(double r, double tau, std::int64_t n_atoms);

/// sqrt(2 (sqrt(129) - 3) / 15)
double optimal_C();

/// [(5/32) C^3 + (3/8) C + (1 + q^2/8)/C] / N_t with C = optimal_C().
double smallq_min_sensitivity(double q, std::int64_t n_atoms);

/// ln(C sqrt(N_t / q))
double smallq_opt_r(double q, std::int64_t n_atoms);

namespace fisher_terms {
double a1(double r, double tau);
double a2(double r, double tau);
double a3(double r, double tau);
}  // namespace fisher_terms

double qfi_smallq(double r, double tau, std::int64_t n_atoms);

/// tau e^r <= 1 and tau sqrt(N_t) <= 1.
bool smallq_valid(double r, double tau, std::int64_t n_atoms);

struct SmallQExpansion {
  double tau = 0.0;
  double r = 0.0;
  std::int64_t n_atoms = 0;
  double n_a1_tau = 0.0;
  double slope = 0.0;
  double variance = 0.0;
  double delta_phi_series = 0.0;  // infinity at tau = 0
  double qfi = 0.0;
  bool valid = true;
};

SmallQExpansion smallq_expansion(double r, double tau, std::int64_t n_atoms);

}  // namespace squeezelab
