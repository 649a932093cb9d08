#include "squeezelab/model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "squeezelab/error.hpp"

namespace squeezelab {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid argument";
    case ErrorKind::degenerate_input: return "degenerate input";
    case ErrorKind::depleted_regime: return "depleted regime";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::non_finite: return "non-finite amplitude";
    case ErrorKind::insufficient_ensemble: return "insufficient ensemble";
    case ErrorKind::unusable_ensemble: return "unusable ensemble";
    case ErrorKind::invalid_q: return "invalid q";
    case ErrorKind::missing_covariance: return "missing covariance";
    case ErrorKind::zero_slope: return "zero slope";
    case ErrorKind::negative_variance: return "negative variance";
    case ErrorKind::nonpositive_fisher: return "nonpositive fisher information";
    case ErrorKind::unreachable_q: return "unreachable q";
    case ErrorKind::config: return "config error";
    case ErrorKind::validation: return "validation failure";
  }
  return "error";
}

void ModelParams::validate() const {
  if (n_atoms < 1) throw Error(ErrorKind::invalid_argument, "n_atoms must be >= 1");
  check_squeeze_r(squeeze_r);
  if (!(coupling_g > 0.0) || !std::isfinite(coupling_g)) {
    throw Error(ErrorKind::invalid_argument, "coupling_g must be positive and finite");
  }
  if (n_trajectories < 2) throw Error(ErrorKind::invalid_argument, "n_trajectories must be >= 2");
}

void check_squeeze_r(double r) {
  if (!(r >= 0.0)) throw Error(ErrorKind::invalid_argument, "squeezing r must be non-negative");
  if (r > kMaxSqueezeR) {
    throw Error(ErrorKind::invalid_argument,
                "squeezing r=" + std::to_string(r) + " exceeds overflow guard");
  }
}

double photon_number(double r) {
  check_squeeze_r(r);
  const double s = std::sinh(r);
  return s * s;
}

double tau_from_time(double coupling_g, double t) { return coupling_g * t; }

double bs_reflection_coefficient(double coupling_g, std::int64_t n_atoms, double t) {
  if (t < 0.0) throw Error(ErrorKind::invalid_argument, "time must be non-negative");
  const double s = std::sin(coupling_g * std::sqrt(static_cast<double>(n_atoms)) * t);
  return s * s;
}

double bs_tau_for_reflection(double q, std::int64_t n_atoms) {
  if (q < 0.0 || q > 1.0) throw Error(ErrorKind::invalid_argument, "reflection must lie in [0,1]");
  return std::asin(std::sqrt(q)) / std::sqrt(static_cast<double>(n_atoms));
}

double qst_efficiency(double n_a2_t1, double n_b_t0) {
  if (!(n_b_t0 > 0.0)) {
    throw Error(ErrorKind::degenerate_input, "QST efficiency undefined without input photons");
  }
  return n_a2_t1 / n_b_t0;
}

std::optional<double> try_qst_efficiency(double n_a2_t1, double n_b_t0) noexcept {
  if (!(n_b_t0 > 0.0)) return std::nullopt;
  return n_a2_t1 / n_b_t0;
}

std::pair<double, double> conserved_charges(const TwTrajectory& s) {
  const double n1 = std::norm(s.alpha1);
  const double n2 = std::norm(s.alpha2);
  const double nb = std::norm(s.beta);
  return {n1 + n2, n2 + nb};
}

}  // namespace squeezelab
