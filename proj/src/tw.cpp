#include "squeezelab/tw.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "squeezelab/error.hpp"

namespace squeezelab {

namespace {

constexpr cplx kMinusI{0.0, -1.0};

bool finite(const TwTrajectory& s) noexcept {
  return std::isfinite(s.alpha1.real()) && std::isfinite(s.alpha1.imag()) &&
         std::isfinite(s.alpha2.real()) && std::isfinite(s.alpha2.imag()) &&
         std::isfinite(s.beta.real()) && std::isfinite(s.beta.imag());
}

TwTrajectory axpy(const TwTrajectory& y, double a, const TwTrajectory& k) noexcept {
  return {y.alpha1 + a * k.alpha1, y.alpha2 + a * k.alpha2, y.beta + a * k.beta};
}

}  // namespace

void IntegratorConfig::validate() const {
  if (n_steps < 16) throw Error(ErrorKind::invalid_argument, "integrator needs n_steps >= 16");
}

TwTrajectory sample_tw_initial(const ModelParams& params, CounterRng& stream) {
  // Each quadrature of a Wigner vacuum noise has variance 1/4, so <|eta|^2> = 1/2.
  std::normal_distribution<double> half(0.0, 0.5);
  const cplx eta1{half(stream), half(stream)};
  const cplx eta2{half(stream), half(stream)};
  const cplx eta3{half(stream), half(stream)};
  const double r = params.squeeze_r;
  TwTrajectory s;
  s.alpha1 = std::sqrt(static_cast<double>(params.n_atoms)) + eta1;
  s.alpha2 = eta2;
  s.beta = eta3 * std::cosh(r) + std::conj(eta3) * std::sinh(r);
  return s;
}

TwTrajectory sample_tw_trajectory(const ModelParams& params, std::size_t index) {
  CounterRng stream(params.master_seed, StreamDomain::tw_initial, index);
  return sample_tw_initial(params, stream);
}

TwTrajectory tw_derivatives(const TwTrajectory& s) noexcept {
  return {kMinusI * s.alpha2 * std::conj(s.beta), kMinusI * s.alpha1 * s.beta,
          kMinusI * s.alpha2 * std::conj(s.alpha1)};
}

TwTrajectory rk4_step(const TwTrajectory& y, double h) noexcept {
  const TwTrajectory k1 = tw_derivatives(y);
  const TwTrajectory k2 = tw_derivatives(axpy(y, 0.5 * h, k1));
  const TwTrajectory k3 = tw_derivatives(axpy(y, 0.5 * h, k2));
  const TwTrajectory k4 = tw_derivatives(axpy(y, h, k3));
  const double w = h / 6.0;
  return {y.alpha1 + w * (k1.alpha1 + 2.0 * k2.alpha1 + 2.0 * k3.alpha1 + k4.alpha1),
          y.alpha2 + w * (k1.alpha2 + 2.0 * k2.alpha2 + 2.0 * k3.alpha2 + k4.alpha2),
          y.beta + w * (k1.beta + 2.0 * k2.beta + 2.0 * k3.beta + k4.beta)};
}

TwTrajectory integrate_tw(TwTrajectory traj, double tau_final, const IntegratorConfig& cfg) {
  if (!(tau_final >= 0.0)) throw Error(ErrorKind::invalid_argument, "tau_final must be >= 0");
  cfg.validate();
  if (tau_final == 0.0) return traj;
  const double h = tau_final / cfg.n_steps;
  for (int i = 0; i < cfg.n_steps; ++i) traj = rk4_step(traj, h);
  if (!finite(traj)) throw Error(ErrorKind::non_finite, "TW amplitude became non-finite");
  return traj;
}

EnsembleMoments tw_moments(std::span<const TwTrajectory> ensemble, const TwEstimatorOptions& options,
                           std::size_t n_batches) {
  const std::size_t n = ensemble.size();
  if (n < 2) throw Error(ErrorKind::insufficient_ensemble, "TW moments need >= 2 trajectories");
  const std::size_t batches = std::min(n_batches, n);
  const double half = options.half_quantum_correction ? 0.5 : 0.0;
  const double eighth = options.spin_square_correction ? 0.125 : 0.0;

  std::vector<MomentVector> means(batches);
  std::vector<std::size_t> counts(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    const auto [lo, hi] = batch_range(n, batches, b);
    MomentVector acc{};
    for (std::size_t i = lo; i < hi; ++i) {
      const TwTrajectory& s = ensemble[i];
      const double n1 = std::norm(s.alpha1);
      const double n2 = std::norm(s.alpha2);
      const cplx c12 = std::conj(s.alpha1) * s.alpha2;
      const double jx = c12.real();
      const double jy = c12.imag();
      const double jz = 0.5 * (n1 - n2);
      const double yb = -2.0 * s.beta.imag();
      at(acc, Moment::n_a1) += n1;
      at(acc, Moment::n_a2) += n2;
      at(acc, Moment::n_b) += std::norm(s.beta);
      at(acc, Moment::jx) += jx;
      at(acc, Moment::jy) += jy;
      at(acc, Moment::jz) += jz;
      at(acc, Moment::jx2) += jx * jx;
      at(acc, Moment::jy2) += jy * jy;
      at(acc, Moment::jz2) += jz * jz;
      at(acc, Moment::yb) += yb;
      at(acc, Moment::yb2) += yb * yb;
      at(acc, Moment::jx_yb) += jx * yb;
    }
    const double inv = 1.0 / static_cast<double>(hi - lo);
    for (double& v : acc) v *= inv;
    at(acc, Moment::n_a1) -= half;
    at(acc, Moment::n_a2) -= half;
    at(acc, Moment::n_b) -= half;
    at(acc, Moment::jx2) -= eighth;
    at(acc, Moment::jy2) -= eighth;
    at(acc, Moment::jz2) -= eighth;
    means[b] = acc;
    counts[b] = hi - lo;
  }
  return EnsembleMoments(std::move(means), std::move(counts));
}

TwEnsemble::TwEnsemble(const ModelParams& params, std::size_t count, const Executor& executor)
    : params_(params), executor_(&executor), state_(count) {
  params_.validate();
  if (count < 2) throw Error(ErrorKind::insufficient_ensemble, "TW ensemble needs >= 2 trajectories");
  const std::size_t batches = std::min(kDefaultBatches, count);
  executor_->for_each_index(batches, [&](std::size_t b) {
    const auto [lo, hi] = batch_range(count, batches, b);
    for (std::size_t i = lo; i < hi; ++i) state_[i] = sample_tw_trajectory(params_, i);
  });
}

void TwEnsemble::advance(double dtau, int n_steps) {
  if (!(dtau >= 0.0) || n_steps < 1) {
    throw Error(ErrorKind::invalid_argument, "advance needs dtau >= 0 and n_steps >= 1");
  }
  if (dtau == 0.0) return;
  const double h = dtau / n_steps;
  const std::size_t n = state_.size();
  const std::size_t batches = std::min(kDefaultBatches, n);
  std::vector<char> bad(batches, 0);
  executor_->for_each_index(batches, [&](std::size_t b) {
    const auto [lo, hi] = batch_range(n, batches, b);
    for (std::size_t i = lo; i < hi; ++i) {
      TwTrajectory s = state_[i];
      for (int k = 0; k < n_steps; ++k) s = rk4_step(s, h);
      if (!finite(s)) bad[b] = 1;
      state_[i] = s;
    }
  });
  if (std::find(bad.begin(), bad.end(), 1) != bad.end()) {
    throw Error(ErrorKind::non_finite, "TW amplitude became non-finite");
  }
  tau_ += dtau;
}

TwEnsemble TwEnsemble::stepped(double h) const {
  TwEnsemble out = *this;
  out.advance(h, 1);
  return out;
}

double TwEnsemble::mean_n_a2() const { return probe_n_a2(0.0); }

double TwEnsemble::probe_n_a2(double h) const {
  // Per-batch partial sums folded in batch order; identical on every worker count.
  const std::size_t n = state_.size();
  const std::size_t batches = std::min(kDefaultBatches, n);
  std::vector<double> partial(batches, 0.0);
  executor_->for_each_index(batches, [&](std::size_t b) {
    const auto [lo, hi] = batch_range(n, batches, b);
    double sum = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      sum += std::norm(h == 0.0 ? state_[i].alpha2 : rk4_step(state_[i], h).alpha2);
    }
    partial[b] = sum;
  });
  double total = 0.0;
  for (double v : partial) total += v;
  return total / static_cast<double>(n) - 0.5;
}

EnsembleMoments TwEnsemble::moments(const TwEstimatorOptions& options) const {
  return tw_moments(state_, options);
}

double TwEnsemble::max_charge_drift(std::span<const TwTrajectory> initial) const {
  if (initial.size() != state_.size()) {
    throw Error(ErrorKind::invalid_argument, "initial ensemble size mismatch");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < state_.size(); ++i) {
    const auto [a0, b0] = conserved_charges(initial[i]);
    const auto [a1, b1] = conserved_charges(state_[i]);
    worst = std::max({worst, std::abs(a1 - a0) / a0, std::abs(b1 - b0) / b0});
  }
  return worst;
}

EnsembleMoments run_tw(const ModelParams& params, double tau, const IntegratorConfig& cfg,
                       const Executor& executor, const TwEstimatorOptions& options) {
  cfg.validate();
  if (!(tau >= 0.0)) throw Error(ErrorKind::invalid_argument, "tau must be >= 0");
  TwEnsemble ensemble(params, round_up_to_batches(static_cast<std::size_t>(params.n_trajectories)),
                      executor);
  ensemble.advance(tau, cfg.n_steps);
  return ensemble.moments(options);
}

}  // namespace squeezelab
