#include "squeezelab/pp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "squeezelab/error.hpp"

namespace squeezelab {

namespace {

constexpr cplx kI{0.0, 1.0};
const cplx kSqrtMinusI = std::polar(1.0, -std::numbers::pi / 4.0);
const cplx kSqrtPlusI = std::polar(1.0, std::numbers::pi / 4.0);

PpTrajectory axpy(const PpTrajectory& y, double a, const PpTrajectory& k) noexcept {
  return {y.alpha1 + a * k.alpha1, y.alpha2 + a * k.alpha2, y.beta + a * k.beta,
          y.alpha1p + a * k.alpha1p, y.alpha2p + a * k.alpha2p, y.betap + a * k.betap};
}

PpTrajectory add(const PpTrajectory& x, const PpTrajectory& y) noexcept { return axpy(x, 1.0, y); }

double max_abs(const PpTrajectory& s) noexcept {
  return std::max({std::abs(s.alpha1), std::abs(s.alpha2), std::abs(s.beta), std::abs(s.alpha1p),
                   std::abs(s.alpha2p), std::abs(s.betap)});
}

PpTrajectory rk4(const PpTrajectory& y, double h) noexcept {
  const PpTrajectory k1 = pp_drift(y);
  const PpTrajectory k2 = pp_drift(axpy(y, 0.5 * h, k1));
  const PpTrajectory k3 = pp_drift(axpy(y, 0.5 * h, k2));
  const PpTrajectory k4 = pp_drift(axpy(y, h, k3));
  PpTrajectory out = axpy(y, h / 6.0, k1);
  out = axpy(out, h / 3.0, k2);
  out = axpy(out, h / 3.0, k3);
  return axpy(out, h / 6.0, k4);
}

}  // namespace

void PpGuardReport::merge(const PpGuardReport& other) noexcept {
  n_launched += other.n_launched;
  n_diverged += other.n_diverged;
  max_amplitude_seen = std::max(max_amplitude_seen, other.max_amplitude_seen);
}

double PpGuardReport::diverged_fraction() const noexcept {
  return n_launched == 0 ? 0.0 : static_cast<double>(n_diverged) / static_cast<double>(n_launched);
}

PpTrajectory sample_pp_initial(const ModelParams& params, CounterRng& stream) {
  std::normal_distribution<double> gauss;
  const double n1 = gauss(stream);
  const double n2 = gauss(stream);
  const double n3 = gauss(stream);
  const double n4 = gauss(stream);
  const double r = params.squeeze_r;
  const double nu_minus = std::sqrt(std::exp(-r) * std::cosh(r) / 2.0);
  const double nu_plus = std::sqrt(std::exp(r) * std::cosh(r) / 2.0);
  const cplx eta = cplx(n3, n4) / std::numbers::sqrt2;
  const double root_n = std::sqrt(static_cast<double>(params.n_atoms));

  PpTrajectory s;
  s.alpha1 = s.alpha1p = root_n;
  s.alpha2 = s.alpha2p = 0.0;
  s.beta = kI * nu_minus * n1 - nu_plus * n2 + eta;
  s.betap = -kI * nu_minus * n1 - nu_plus * n2 - std::conj(eta);
  return s;
}

PpTrajectory pp_drift(const PpTrajectory& s) noexcept {
  return {-kI * s.alpha2 * s.betap,  -kI * s.alpha1 * s.beta,  -kI * s.alpha2 * s.alpha1p,
          kI * s.alpha2p * s.beta,   kI * s.alpha1p * s.betap, kI * s.alpha2p * s.alpha1};
}

PpTrajectory pp_noise(const PpTrajectory& s, cplx dW1, cplx dW2, bool conjugate_noise) noexcept {
  const cplx w1 = conjugate_noise ? std::conj(dW1) : dW1;
  const cplx w2 = conjugate_noise ? std::conj(dW2) : dW2;
  PpTrajectory d;
  d.alpha1 = kSqrtMinusI * s.alpha2 * dW1;
  d.beta = kSqrtMinusI * w1;
  d.alpha1p = kSqrtPlusI * s.alpha2p * dW2;
  d.betap = kSqrtPlusI * w2;
  return d;
}

PpStepResult integrate_pp(PpTrajectory traj, double tau_final, const IntegratorConfig& cfg,
                          CounterRng& stream, double guard_bound, const PpOptions& options) {
  if (!(tau_final >= 0.0)) throw Error(ErrorKind::invalid_argument, "tau_final must be >= 0");
  cfg.validate();
  using Scheme = IntegratorConfig::Scheme;
  if (cfg.scheme == Scheme::rk4 && options.noise_enabled) {
    throw Error(ErrorKind::invalid_argument, "rk4 is only valid for the drift-only P+ flow");
  }

  PpStepResult out{traj, false, max_abs(traj)};
  if (tau_final == 0.0) return out;

  const double h = tau_final / cfg.n_steps;
  const double sigma = std::sqrt(h / 2.0);
  std::normal_distribution<double> gauss;
  PpTrajectory y = traj;
  for (int step = 0; step < cfg.n_steps; ++step) {
    if (cfg.scheme == Scheme::rk4) {
      y = rk4(y, h);
    } else {
      cplx dW1{};
      cplx dW2{};
      if (options.noise_enabled) {
        const double a = gauss(stream);
        const double b = gauss(stream);
        const double c = gauss(stream);
        const double d = gauss(stream);
        dW1 = sigma * cplx(a, b);
        dW2 = sigma * cplx(c, d);
      }
      const PpTrajectory a0 = pp_drift(y);
      const PpTrajectory b0 = pp_noise(y, dW1, dW2, options.conjugate_noise);
      const PpTrajectory predictor = add(axpy(y, h, a0), b0);
      if (cfg.scheme == Scheme::euler_maruyama) {
        y = predictor;
      } else {
        const PpTrajectory a1 = pp_drift(predictor);
        const PpTrajectory b1 = pp_noise(predictor, dW1, dW2, options.conjugate_noise);
        y = axpy(axpy(axpy(axpy(y, 0.5 * h, a0), 0.5 * h, a1), 0.5, b0), 0.5, b1);
      }
    }
    const double amp = max_abs(y);
    out.max_amplitude = std::max(out.max_amplitude, std::isfinite(amp) ? amp : out.max_amplitude);
    if (!(amp <= guard_bound)) {
      out.diverged = true;
      break;
    }
  }
  out.state = y;
  return out;
}

EnsembleMoments pp_moments(std::span<const PpTrajectory> ensemble, std::span<const char> diverged,
                           std::size_t n_batches) {
  const std::size_t n = ensemble.size();
  if (n < 2) throw Error(ErrorKind::insufficient_ensemble, "P+ moments need >= 2 trajectories");
  if (!diverged.empty() && diverged.size() != n) {
    throw Error(ErrorKind::invalid_argument, "divergence flags do not match the ensemble");
  }
  const std::size_t n_bad =
      diverged.empty() ? 0 : static_cast<std::size_t>(std::count(diverged.begin(), diverged.end(), 1));
  if (100 * n_bad > n) {
    throw Error(ErrorKind::unusable_ensemble,
                "more than 1% of P+ trajectories diverged; boundary terms likely");
  }

  const std::size_t batches = std::min(n_batches, n);
  std::vector<MomentVector> means(batches);
  std::vector<std::size_t> counts(batches, 0);
  for (std::size_t b = 0; b < batches; ++b) {
    const auto [lo, hi] = batch_range(n, batches, b);
    MomentVector acc{};
    for (std::size_t i = lo; i < hi; ++i) {
      if (!diverged.empty() && diverged[i]) continue;
      ++counts[b];
      const PpTrajectory& s = ensemble[i];
      const cplx n1 = s.alpha1p * s.alpha1;
      const cplx n2 = s.alpha2p * s.alpha2;
      const cplx c12 = s.alpha1p * s.alpha2;  // a1^dag a2
      const cplx c21 = s.alpha2p * s.alpha1;  // a2^dag a1
      const cplx jx = 0.5 * (c12 + c21);
      const cplx jy = (c12 - c21) / (2.0 * kI);
      const cplx jz = 0.5 * (n1 - n2);
      const cplx yb = kI * (s.beta - s.betap);
      // a1^dag^2 a2^2 and a2^dag^2 a1^2 are c12^2 and c21^2 in normal order.
      const cplx n12 = n1 * n2;
      const cplx jx2 = 0.25 * (c21 * c21 + c12 * c12 + 2.0 * n12 + n1 + n2);
      const cplx jy2 = 0.25 * (-c21 * c21 - c12 * c12 + 2.0 * n12 + n1 + n2);
      const cplx jz2 = 0.25 * (n1 * n1 + n2 * n2 - 2.0 * n12 + n1 + n2);
      const cplx yb2 =
          -s.beta * s.beta - s.betap * s.betap + 2.0 * s.betap * s.beta + 1.0;
      at(acc, Moment::n_a1) += n1.real();
      at(acc, Moment::n_a2) += n2.real();
      at(acc, Moment::n_b) += (s.betap * s.beta).real();
      at(acc, Moment::jx) += jx.real();
      at(acc, Moment::jy) += jy.real();
      at(acc, Moment::jz) += jz.real();
      at(acc, Moment::jx2) += jx2.real();
      at(acc, Moment::jy2) += jy2.real();
      at(acc, Moment::jz2) += jz2.real();
      at(acc, Moment::yb) += yb.real();
      at(acc, Moment::yb2) += yb2.real();
      at(acc, Moment::jx_yb) += (jx * yb).real();
    }
    if (counts[b] > 0) {
      const double inv = 1.0 / static_cast<double>(counts[b]);
      for (double& v : acc) v *= inv;
    }
    means[b] = acc;
  }
  return EnsembleMoments(std::move(means), std::move(counts), n_bad);
}

PpEnsemble simulate_pp(const ModelParams& params, double tau, const IntegratorConfig& cfg,
                       const Executor& executor, const PpOptions& options) {
  params.validate();
  cfg.validate();
  if (!(tau >= 0.0)) throw Error(ErrorKind::invalid_argument, "tau must be >= 0");
  const std::size_t n = round_up_to_batches(static_cast<std::size_t>(params.n_trajectories));
  const double guard = options.guard_factor * std::sqrt(static_cast<double>(params.n_atoms));

  PpEnsemble out;
  out.trajectories.resize(n);
  out.diverged.assign(n, 0);
  const std::size_t batches = std::min(kDefaultBatches, n);
  std::vector<PpGuardReport> reports(batches);
  executor.for_each_index(batches, [&](std::size_t b) {
    const auto [lo, hi] = batch_range(n, batches, b);
    PpGuardReport& rep = reports[b];
    for (std::size_t i = lo; i < hi; ++i) {
      CounterRng stream(params.master_seed, StreamDomain::pp_trajectory, i);
      const PpTrajectory init = sample_pp_initial(params, stream);
      const PpStepResult res = integrate_pp(init, tau, cfg, stream, guard, options);
      out.trajectories[i] = res.state;
      out.diverged[i] = res.diverged ? 1 : 0;
      ++rep.n_launched;
      if (res.diverged) ++rep.n_diverged;
      rep.max_amplitude_seen = std::max(rep.max_amplitude_seen, res.max_amplitude);
    }
  });
  for (const PpGuardReport& rep : reports) out.guard.merge(rep);
  return out;
}

PpRun run_pp(const ModelParams& params, double tau, const IntegratorConfig& cfg,
             const Executor& executor, const PpOptions& options) {
  const PpEnsemble ens = simulate_pp(params, tau, cfg, executor, options);
  return {pp_moments(ens.trajectories, ens.diverged), ens.guard};
}

}  // namespace squeezelab
