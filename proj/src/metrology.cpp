#include "squeezelab/metrology.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "squeezelab/error.hpp"
#include "squeezelab/model.hpp"

namespace squeezelab {

namespace {

constexpr double kQUpper = 1.05;

double ratio_se(double variance, double variance_se, double slope, double slope_se, double cov) {
  // d/dV and d/ds of sqrt(V)/s
  const double root = std::sqrt(std::max(variance, 0.0));
  if (root == 0.0) return std::sqrt(variance_se) / slope;
  const double a = 1.0 / (2.0 * root * slope);
  const double b = -root / (slope * slope);
  const double var = a * a * variance_se * variance_se + b * b * slope_se * slope_se + 2.0 * a * b * cov;
  return std::sqrt(std::max(var, 0.0));
}

// Recycled-signal variance for a weight q in [0, 1]. The photon term enters with
// a minus sign so that the transferred squeezed-vacuum fluctuations cancel
// between the atom and photon signals.
double recycled_variance(const MomentVector& v, double q) {
  const double var_jx = at(v, Moment::jx2) - at(v, Moment::jx) * at(v, Moment::jx);
  const double var_yb = at(v, Moment::yb2) - at(v, Moment::yb) * at(v, Moment::yb);
  const double cov = at(v, Moment::jx_yb) - at(v, Moment::jx) * at(v, Moment::yb);
  const double n_a1 = std::max(at(v, Moment::n_a1), 0.0);
  return 4.0 * q * var_jx + (1.0 - q) * n_a1 * var_yb -
         4.0 * std::sqrt(q * (1.0 - q)) * std::sqrt(n_a1) * cov;
}

}  // namespace

SignalMoments SignalMoments::exact(double variance, double slope, double q) {
  SignalMoments sm;
  sm.variance_s = sm.variance_s_atoms_only = variance;
  sm.slope_magnitude = sm.slope_atoms_only = slope;
  sm.q_used = q;
  return sm;
}

SignalMoments SignalMoments::from_beamsplitter(double r, double q, std::int64_t n_atoms) {
  const BsSignalMoments bs = bs_signal_moments(r, q, n_atoms);
  return exact(bs.variance, bs.slope, q);
}

SignalMoments signal_moments_at_operating_point(const EnsembleMoments& m, double n_b0,
                                                std::optional<double> q_override) {
  if (!m.has_covariance()) {
    throw Error(ErrorKind::missing_covariance, "ensemble carries no J_x-Y_b cross moment");
  }
  SignalMoments sm;
  Estimate q_est;
  MomentFunction q_of;
  if (q_override) {
    q_est = {*q_override, 0.0};
    const double fixed = *q_override;
    q_of = [fixed](const MomentVector&) { return fixed; };
  } else {
    if (!(n_b0 > 0.0)) {
      throw Error(ErrorKind::degenerate_input, "n_b0 = 0 leaves the QST efficiency undefined");
    }
    q_of = [n_b0](const MomentVector& v) { return at(v, Moment::n_a2) / n_b0; };
    q_est = m.derived(q_of);
  }
  if (!std::isfinite(q_est.value) || q_est.value > kQUpper) {
    throw Error(ErrorKind::invalid_q, "QST efficiency " + std::to_string(q_est.value) +
                                          " is outside [0, 1.05]");
  }
  if (q_est.value < 0.0) {
    if (q_est.value < -3.0 * q_est.se) {
      throw Error(ErrorKind::invalid_q, "QST efficiency " + std::to_string(q_est.value) +
                                            " is negative beyond noise");
    }
    sm.q_clamped = true;
  }
  sm.q_used = std::clamp(q_est.value, 0.0, kQUpper);
  sm.q_se = q_est.se;

  const auto weight = [q_of](const MomentVector& v) { return std::clamp(q_of(v), 0.0, 1.0); };
  const MomentFunction variance = [weight](const MomentVector& v) {
    return recycled_variance(v, weight(v));
  };
  const MomentFunction slope = [weight](const MomentVector& v) {
    return 2.0 * std::sqrt(weight(v)) * std::abs(at(v, Moment::jz));
  };
  const MomentFunction variance_atoms = [](const MomentVector& v) {
    return 4.0 * (at(v, Moment::jx2) - at(v, Moment::jx) * at(v, Moment::jx));
  };
  const MomentFunction slope_atoms = [](const MomentVector& v) {
    return 2.0 * std::abs(at(v, Moment::jz));
  };

  const auto dv = m.influence(variance);
  const auto ds = m.influence(slope);
  const auto dva = m.influence(variance_atoms);
  const auto dsa = m.influence(slope_atoms);
  const MomentVector& mean = m.mean();

  sm.variance_s = variance(mean);
  sm.variance_s_se = std::sqrt(std::max(m.covariance(dv, dv), 0.0));
  sm.slope_magnitude = slope(mean);
  sm.slope_se = std::sqrt(std::max(m.covariance(ds, ds), 0.0));
  sm.cov_variance_slope = m.covariance(dv, ds);
  sm.variance_s_atoms_only = variance_atoms(mean);
  sm.variance_s_atoms_only_se = std::sqrt(std::max(m.covariance(dva, dva), 0.0));
  sm.slope_atoms_only = slope_atoms(mean);
  sm.slope_atoms_only_se = std::sqrt(std::max(m.covariance(dsa, dsa), 0.0));
  sm.cov_atoms_only = m.covariance(dva, dsa);
  return sm;
}

MomentFunction delta_phi_function(double n_b0, std::optional<double> q_override) {
  return [n_b0, q_override](const MomentVector& v) {
    const double q = std::clamp(q_override ? *q_override : at(v, Moment::n_a2) / n_b0, 0.0, 1.0);
    return std::sqrt(std::max(recycled_variance(v, q), 0.0)) /
           (2.0 * std::sqrt(q) * std::abs(at(v, Moment::jz)));
  };
}

std::string_view to_string(SensitivityResult::Method method) noexcept {
  switch (method) {
    case SensitivityResult::Method::tw: return "tw";
    case SensitivityResult::Method::pp: return "pp";
    case SensitivityResult::Method::analytic_bs: return "analytic_bs";
    case SensitivityResult::Method::analytic_smallq: return "analytic_smallq";
  }
  return "unknown";
}

SensitivityResult sensitivity(const SignalMoments& sm) {
  if (!(sm.slope_magnitude > 0.0)) throw Error(ErrorKind::zero_slope, "signal slope is zero");
  SensitivityResult res;
  res.delta_phi = std::sqrt(std::max(sm.variance_s, 0.0)) / sm.slope_magnitude;
  res.delta_phi_se = ratio_se(sm.variance_s, sm.variance_s_se, sm.slope_magnitude, sm.slope_se,
                              sm.cov_variance_slope);
  res.q_measured = sm.q_used;
  return res;
}

Estimate atoms_only_estimate(const SignalMoments& sm) {
  if (!(sm.slope_atoms_only > 0.0)) throw Error(ErrorKind::zero_slope, "atom-only slope is zero");
  return {std::sqrt(std::max(sm.variance_s_atoms_only, 0.0)) / sm.slope_atoms_only,
          ratio_se(sm.variance_s_atoms_only, sm.variance_s_atoms_only_se, sm.slope_atoms_only,
                   sm.slope_atoms_only_se, sm.cov_atoms_only)};
}

double atoms_only_sensitivity(const SignalMoments& sm) { return atoms_only_estimate(sm).value; }

Estimate qfi_from_moments(const EnsembleMoments& m) {
  const Estimate f = m.derived([](const MomentVector& v) {
    return 4.0 * (at(v, Moment::jy2) - at(v, Moment::jy) * at(v, Moment::jy));
  });
  if (f.value < -3.0 * f.se) {
    throw Error(ErrorKind::negative_variance, "4 V(J_y) = " + std::to_string(f.value));
  }
  return f;
}

double qcrb(double fisher) {
  if (!(fisher > 0.0)) throw Error(ErrorKind::nonpositive_fisher, "Fisher information must be > 0");
  return 1.0 / std::sqrt(fisher);
}

Estimate qcrb(Estimate fisher) {
  const double bound = qcrb(fisher.value);
  return {bound, 0.5 * bound / fisher.value * fisher.se};
}

SensitivityResult evaluate_point(const EnsembleMoments& m, double n_b0, double tau,
                                 SensitivityResult::Method method, std::optional<double> q_override) {
  const SignalMoments sm = signal_moments_at_operating_point(m, n_b0, q_override);
  SensitivityResult res = sensitivity(sm);
  const Estimate atoms = atoms_only_estimate(sm);
  res.delta_phi_atoms_only = atoms.value;
  res.delta_phi_atoms_only_se = atoms.se;
  const Estimate bound = qcrb(qfi_from_moments(m));
  res.qcrb = bound.value;
  res.qcrb_se = bound.se;
  res.tau = tau;
  res.method = method;
  return res;
}

}  // namespace squeezelab
