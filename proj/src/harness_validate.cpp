#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "harness_rows.hpp"
#include "squeezelab/analytic_bs.hpp"
#include "squeezelab/analytic_smallq.hpp"
#include "squeezelab/error.hpp"
#include "squeezelab/exact.hpp"
#include "squeezelab/metrology.hpp"
#include "squeezelab/model.hpp"
#include "squeezelab/numeric.hpp"
#include "squeezelab/validation.hpp"

namespace squeezelab {

namespace validation {

namespace {

constexpr std::array<const char*, kMomentCount> kMomentNames = {
    "n_a1", "n_a2", "n_b", "jx", "jy", "jz", "jx2", "jy2", "jz2", "yb", "yb2", "jx_yb"};

ValidationCheck make(std::string name, bool passed, double measured, double limit, std::string detail) {
  return {std::move(name), passed, measured, limit, std::move(detail)};
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// Largest |z| of the ensemble against reference values, with the worst moment named.
std::pair<double, std::string> worst_z(const EnsembleMoments& m, const MomentVector& reference) {
  double worst = 0.0;
  std::string which = "none";
  for (std::size_t k = 0; k < kMomentCount; ++k) {
    const Estimate e = m.get(static_cast<Moment>(k));
    const double diff = e.value - reference[k];
    double z = 0.0;
    if (e.se > 0.0) {
      z = std::abs(diff) / e.se;
    } else if (std::abs(diff) > 1e-12 * std::max(1.0, std::abs(reference[k]))) {
      z = std::numeric_limits<double>::infinity();
    }
    if (z > worst) {
      worst = z;
      which = kMomentNames[k];
    }
  }
  return {worst, which};
}

struct MeanSe {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t n = 0;

  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++n;
  }
  double mean() const { return sum / static_cast<double>(n); }
  double se() const {
    const double m = mean();
    const double var = (sum_sq / static_cast<double>(n) - m * m) * static_cast<double>(n) / (n - 1.0);
    return std::sqrt(std::max(var, 0.0) / static_cast<double>(n));
  }
};

}  // namespace

ValidationCheck tw_conservation(std::uint64_t seed, const Executor& executor) {
  double worst = 0.0;
  for (double r : {2.0, 6.31}) {
    ModelParams p;
    p.squeeze_r = r;
    p.master_seed = seed;
    TwEnsemble ens(p, 2000, executor);
    const std::vector<TwTrajectory> initial(ens.trajectories().begin(), ens.trajectories().end());
    ens.advance(0.02, 1024);
    worst = std::max(worst, ens.max_charge_drift(initial));
  }
  return make("tw_conservation", worst <= 1e-8, worst, 1e-8,
              "max relative drift of |a1|^2+|a2|^2 and |a2|^2+|b|^2, 2000 trajectories, r in {2, 6.31}, tau 0.02");
}

ValidationCheck tw_gaussian_tau0(std::uint64_t seed, const Executor& executor, const TwEstimatorOptions& options) {
  ModelParams p;
  p.n_atoms = 1;
  p.squeeze_r = 1.0;
  p.master_seed = seed;
  const TwEnsemble ens(p, 100000, executor);
  const EnsembleMoments m = ens.moments(options);
  const double r = p.squeeze_r;
  MomentVector ref{};
  at(ref, Moment::n_a1) = 1.0;
  at(ref, Moment::n_b) = photon_number(r);
  at(ref, Moment::jz) = 0.5;
  at(ref, Moment::jx2) = 0.25;
  at(ref, Moment::jy2) = 0.25;
  at(ref, Moment::jz2) = 0.5;
  at(ref, Moment::yb2) = std::exp(-2.0 * r);
  const auto [z, which] = worst_z(m, ref);
  return make("tw_tau0_gaussian", z <= 3.0, z, 3.0,
              "max |z| over 12 moments at N=1, r=1, 1e5 trajectories (worst: " + which + ")");
}

ValidationCheck pp_initial_identities(std::uint64_t seed) {
  ModelParams p;
  p.squeeze_r = 1.0;
  p.master_seed = seed;
  MeanSe nb;
  MeanSe b2;
  MeanSe yb2;
  MeanSe b1;
  for (std::size_t i = 0; i < 100000; ++i) {
    CounterRng rng(seed, StreamDomain::pp_trajectory, i);
    const PpTrajectory s = sample_pp_initial(p, rng);
    nb.add((s.betap * s.beta).real());
    b2.add((s.beta * s.beta).real());
    yb2.add((-s.beta * s.beta - s.betap * s.betap + 2.0 * s.betap * s.beta).real() + 1.0);
    b1.add(s.beta.real());
  }
  const double r = p.squeeze_r;
  const double z_nb = std::abs(nb.mean() - std::sinh(r) * std::sinh(r)) / nb.se();
  const double z_b2 = std::abs(b2.mean() - std::sinh(r) * std::cosh(r)) / b2.se();
  const double z_yb = std::abs(yb2.mean() - std::exp(-2.0 * r)) / yb2.se();
  const double z_b1 = std::abs(b1.mean()) / b1.se();
  const double worst = std::max({z_nb, z_b2, z_yb, z_b1});
  return make("pp_initial_identities", worst <= 3.0, worst, 3.0,
              "|z| of <b+b>=" + num(nb.mean()) + ", <b^2>=" + num(b2.mean()) + ", <Yb^2>=" + num(yb2.mean()) +
                  " at r=1, 1e5 samples");
}

ValidationCheck pp_drift_matches_tw(std::uint64_t seed, const PpOptions& options) {
  ModelParams p;
  p.squeeze_r = 2.0;
  p.master_seed = seed;
  IntegratorConfig cfg;
  cfg.n_steps = 1024;
  cfg.scheme = IntegratorConfig::Scheme::rk4;
  PpOptions opts = options;
  opts.noise_enabled = false;
  const double tau = 0.015;
  const double scale = std::sqrt(static_cast<double>(p.n_atoms));
  double worst = 0.0;
  for (std::size_t i = 0; i < 200; ++i) {
    const TwTrajectory t0 = sample_tw_trajectory(p, i);
    const PpTrajectory p0{t0.alpha1, t0.alpha2, t0.beta, std::conj(t0.alpha1), std::conj(t0.alpha2),
                          std::conj(t0.beta)};
    const TwTrajectory t = integrate_tw(t0, tau, cfg);
    CounterRng rng(seed, StreamDomain::test, i);
    const PpStepResult s = integrate_pp(p0, tau, cfg, rng, 1e300, opts);
    worst = std::max({worst, std::abs(s.state.alpha1 - t.alpha1), std::abs(s.state.alpha2 - t.alpha2),
                      std::abs(s.state.beta - t.beta), std::abs(s.state.alpha1p - std::conj(t.alpha1)),
                      std::abs(s.state.alpha2p - std::conj(t.alpha2)),
                      std::abs(s.state.betap - std::conj(t.beta))});
  }
  worst /= scale;
  return make("pp_drift_matches_tw", worst <= 1e-8, worst, 1e-8,
              "max amplitude difference / sqrt(N), 200 trajectories, r=2, tau=0.015, RK4 without noise");
}

ValidationCheck pp_matches_exact(std::uint64_t seed, const Executor& executor, const PpOptions& options) {
  ModelParams p;
  p.n_atoms = 4;
  p.squeeze_r = 1.5;
  p.master_seed = seed;
  p.n_trajectories = 20000;
  const double tau = 0.3;
  IntegratorConfig cfg = IntegratorConfig::pp_default();
  cfg.n_steps = 256;
  const PpRun run = run_pp(p, tau, cfg, executor, options);
  const MomentVector exact = exact_moments(4.0, p.squeeze_r, tau);
  const auto [z, which] = worst_z(run.moments, exact);
  return make("pp_matches_exact", z <= 3.0, z, 3.0,
              "max |z| against exact Fock evolution at N=4, r=1.5, tau=0.3, 2e4 trajectories (worst: " + which +
                  ")");
}

std::vector<ValidationCheck> tw_sweep_checks(std::uint64_t seed, const Executor& executor) {
  ModelParams base;
  base.master_seed = seed;
  base.n_trajectories = 20000;
  const std::vector<double> qs = {0.05, 0.2, 0.5, 0.9};
  double cr = std::numeric_limits<double>::infinity();
  double cr_atoms = std::numeric_limits<double>::infinity();
  double q_err = 0.0;
  std::size_t failed = 0;
  for (double r : {1.0, 2.65}) {
    for (const SweepPoint& sp : sweep_q(r, base, qs, executor)) {
      if (!sp.ok) {
        ++failed;
        continue;
      }
      const SensitivityResult& s = sp.result;
      cr = std::min(cr, (s.delta_phi - s.qcrb) / std::hypot(s.delta_phi_se, s.qcrb_se));
      cr_atoms = std::min(cr_atoms, (s.delta_phi_atoms_only - s.qcrb) / std::hypot(s.delta_phi_atoms_only_se, s.qcrb_se));
      q_err = std::max(q_err, std::abs(s.q_measured - sp.q_target));
    }
  }
  const double tol = CalibrationOptions{}.tolerance;
  const std::string where = "r in {1, 2.65}, q in {0.05, 0.2, 0.5, 0.9}, 2e4 trajectories";
  return {make("cramer_rao_ordering", failed == 0 && cr >= -3.0, cr, -3.0,
               "min (delta_phi - QCRB) / SE, " + where),
          make("cramer_rao_ordering_atoms_only", failed == 0 && cr_atoms >= -3.0, cr_atoms, -3.0,
               "min (atom-only delta_phi - QCRB) / SE, " + where),
          make("calibration_tolerance", failed == 0 && q_err <= tol, q_err, tol,
               "max |q_measured - q_target|, " + std::to_string(failed) + " failed points, " + where)};
}

ValidationCheck undepleted_limit(std::uint64_t seed, const Executor& executor) {
  ModelParams p;
  p.n_atoms = 1000000;
  p.master_seed = seed;
  p.n_trajectories = 20000;
  const double q[] = {0.5};
  const SweepPoint sp = sweep_q(1.0, p, q, executor).front();
  if (!sp.ok) return make("undepleted_limit", false, detail::kNaN, 3.0, sp.failure);
  const double bs = bs_sensitivity(1.0, sp.result.q_measured, p.n_atoms);
  const double z = std::abs(sp.result.delta_phi - bs) / sp.result.delta_phi_se;
  return make("undepleted_limit", z <= 3.0, z, 3.0,
              "|TW - beamsplitter| / SE at r=1, N=1e6, q=0.5: " + num(sp.result.delta_phi) + " vs " + num(bs));
}

ValidationCheck beamsplitter_consistency() {
  double worst = 0.0;
  for (double r : {0.0, 0.5, 1.0, 2.0, 3.0}) {
    for (double q : {0.01, 0.1, 0.5, 1.0}) {
      const double direct = bs_sensitivity(r, q, 10000);
      const double via = sensitivity(SignalMoments::from_beamsplitter(r, q, 10000)).delta_phi;
      worst = std::max(worst, std::abs(via - direct) / direct);
    }
  }
  return make("beamsplitter_consistency", worst <= 1e-12, worst, 1e-12,
              "max relative difference of signal-moment and closed-form sensitivity");
}

ValidationCheck analytic_constants() {
  const auto f = [](double c) { return 5.0 / 32.0 * c * c * c + 3.0 / 8.0 * c + 1.0 / c; };
  const double oracle = golden_section(f, 0.1, 5.0, 1e-10).x;
  const double dc = std::abs(oracle - optimal_C());
  const double dr = std::abs(bs_r_crit(10000) - 2.649);
  return make("analytic_constants", dc <= 1e-6 && dr <= 1e-3, dc, 1e-6,
              "C=" + num(optimal_C()) + " vs golden-section " + num(oracle) + ", r_crit(1e4)=" + num(bs_r_crit(10000)));
}

ValidationCheck determinism(std::uint64_t seed) {
  ModelParams p;
  p.squeeze_r = 2.0;
  p.master_seed = seed;
  p.n_trajectories = 2000;
  const std::vector<double> qs = {0.05, 0.3, 0.8};
  const auto tw_csv = [&](unsigned threads) {
    const Executor ex(threads);
    std::vector<SweepRow> rows;
    for (const SweepPoint& sp : sweep_q(p.squeeze_r, p, qs, ex)) rows.push_back(detail::row_from_sweep(sp, "det"));
    CalibrationResult cal;
    cal.tau = 0.01;
    cal.q_target = 0.3;
    rows.push_back(detail::pp_row(p.with_trajectories(500), cal, 64, ex, "det"));
    return rows_to_csv(rows);
  };
  const std::string a = tw_csv(1);
  const std::string b = tw_csv(4);
  const std::string c = tw_csv(1);
  ExperimentConfig fig3;
  fig3.experiment = Experiment::fig3_bs_sweep;
  const bool fig3_same = rows_to_csv(run_fig3(fig3)) == rows_to_csv(run_fig3(fig3));
  const int mismatches = (a != b) + (a != c) + (!fig3_same);
  return make("determinism", mismatches == 0, mismatches, 0,
              "CSV of a TW+P+ sweep on 1 vs 4 workers and a repeat, plus fig3 twice");
}

}  // namespace validation

ValidationReport run_validate(const ExperimentConfig& config, const RunContext& ctx) {
  const ExperimentConfig c = config.resolved();
  c.validate();
  const Executor& ex = detail::executor_of(ctx);
  const std::uint64_t seed = c.master_seed;
  ValidationReport report;
  const auto add = [&](ValidationCheck check) {
    detail::log(ctx, std::string(check.passed ? "PASS " : "FAIL ") + check.name + ": " + validation::num(check.measured) +
                         " (limit " + validation::num(check.limit) + ") " + check.detail);
    report.checks.push_back(std::move(check));
  };
  const auto flipped = [](ValidationCheck mutant, std::string name) {
    mutant.name = std::move(name);
    mutant.passed = !mutant.passed;
    mutant.detail = "mutant must fail: " + mutant.detail;
    return mutant;
  };

  add(validation::tw_conservation(seed, ex));
  add(validation::tw_gaussian_tau0(seed, ex));
  TwEstimatorOptions no_eighth;
  no_eighth.spin_square_correction = false;
  add(flipped(validation::tw_gaussian_tau0(seed, ex, no_eighth), "tw_spin_square_mutant_detected"));
  add(validation::pp_initial_identities(seed));
  add(validation::pp_drift_matches_tw(seed));
  PpOptions bad_noise;
  bad_noise.conjugate_noise = false;
  ValidationCheck drift_mutant = validation::pp_drift_matches_tw(seed, bad_noise);
  drift_mutant.name = "pp_drift_matches_tw_under_noise_mutant";
  add(std::move(drift_mutant));
  add(validation::pp_matches_exact(seed, ex));
  add(flipped(validation::pp_matches_exact(seed, ex, bad_noise), "pp_conjugation_mutant_detected"));
  for (ValidationCheck& check : validation::tw_sweep_checks(seed, ex)) add(std::move(check));
  add(validation::undepleted_limit(seed, ex));
  add(validation::beamsplitter_consistency());
  add(validation::analytic_constants());
  add(validation::determinism(seed));
  return report;
}

}  // namespace squeezelab
