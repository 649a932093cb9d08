#include "squeezelab/analytic_bs.hpp"

#include <cmath>
#include <limits>

#include "squeezelab/error.hpp"
#include "squeezelab/model.hpp"
#include "squeezelab/numeric.hpp"

namespace squeezelab {

namespace {

void check_q(double q) {
  if (!(q > 0.0) || q > 1.0) throw Error(ErrorKind::invalid_argument, "q must lie in (0, 1]");
}

}  // namespace

BsSignalMoments bs_signal_moments(double r, double q, std::int64_t n_atoms) {
  check_q(q);
  const double n = static_cast<double>(n_atoms);
  const double nb = photon_number(r);
  const double e2 = std::exp(-2.0 * r);
  return {n * e2 + q * (q - e2) * nb, std::sqrt(q) * (n - 2.0 * q * nb)};
}

double bs_sensitivity(double r, double q, std::int64_t n_atoms) {
  check_q(q);
  const double n = static_cast<double>(n_atoms);
  const double nb = photon_number(r);
  const double denom = n - 2.0 * q * nb;
  if (!(denom > 0.0)) {
    throw Error(ErrorKind::depleted_regime, "N_t - 2 q sinh^2 r <= 0");
  }
  const double e2 = std::exp(-2.0 * r);
  return std::sqrt(n * e2 / q + (q - e2) * nb) / denom;
}

double bs_atoms_only_sensitivity(double r, double q, std::int64_t n_atoms) {
  check_q(q);
  const double n = static_cast<double>(n_atoms);
  const double nb = photon_number(r);
  const double denom = n - 2.0 * q * nb;
  if (!(denom > 0.0)) {
    throw Error(ErrorKind::depleted_regime, "N_t - 2 q sinh^2 r <= 0");
  }
  const double n1 = n - q * nb;
  return std::sqrt(n1 * (1.0 - q + q * std::exp(-2.0 * r))) / denom;
}

double bs_sensitivity_approx(double r, double q, std::int64_t n_atoms) {
  check_q(q);
  const double n = static_cast<double>(n_atoms);
  return std::sqrt(n * std::exp(-2.0 * r) / q + q * photon_number(r)) / n;
}

bool bs_intermediate_regime(double r, double q, std::int64_t n_atoms) {
  const double n = static_cast<double>(n_atoms);
  return q > 10.0 * std::exp(-2.0 * r) && n > 10.0 * 2.0 * q * photon_number(r);
}

double bs_min_sensitivity(double q, std::int64_t n_atoms) {
  check_q(q);
  const double n = static_cast<double>(n_atoms);
  return std::sqrt(n - 0.5 * q * std::sqrt(n) + q * q / 8.0) / std::pow(n, 1.25);
}

double bs_opt_r(double q, std::int64_t n_atoms) {
  check_q(q);
  return std::log(4.0 * static_cast<double>(n_atoms) / (q * q)) / 4.0;
}

double bs_r_crit(std::int64_t n_atoms) {
  if (n_atoms < 1) throw Error(ErrorKind::invalid_argument, "n_atoms must be >= 1");
  return bs_opt_r(1.0, n_atoms);
}

std::vector<double> bs_default_q_grid(std::size_t n_points) { return log_space(1e-3, 1.0, n_points); }

BsSensitivityCurve bs_curve(double r, std::int64_t n_atoms, std::span<const double> q_grid) {
  BsSensitivityCurve curve;
  curve.r = r;
  curve.n_atoms = n_atoms;
  curve.q_grid.assign(q_grid.begin(), q_grid.end());
  curve.delta_phi.reserve(q_grid.size());
  for (double q : q_grid) {
    try {
      curve.delta_phi.push_back(bs_sensitivity(r, q, n_atoms));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::depleted_regime) throw;
      curve.delta_phi.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  return curve;
}

}  // namespace squeezelab
