#include "squeezelab/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "squeezelab/analytic_smallq.hpp"
#include "squeezelab/error.hpp"
#include "squeezelab/numeric.hpp"
#include "squeezelab/tw.hpp"

namespace squeezelab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kInvPhi = 0.6180339887498949;

std::size_t full_size(const ModelParams& p) {
  return round_up_to_batches(static_cast<std::size_t>(p.n_trajectories));
}

CalibratedPoint make_point(const TwEnsemble& ens, double q_target, double q_achieved) {
  CalibratedPoint pt;
  pt.calibration.tau = ens.tau();
  pt.calibration.q_target = q_target;
  pt.calibration.q_achieved = q_achieved;
  pt.moments = ens.moments();
  return pt;
}

// Illinois false position on g(delta) = Q(prev stepped by delta) - target, with
// g(0) < 0 <= g(h).
std::pair<double, int> refine_crossing(const TwEnsemble& prev, double h, double n_b, double target,
                                       double g_lo, double g_hi, double tol) {
  double a = 0.0;
  double b = h;
  double ga = g_lo;
  double gb = g_hi;
  int side = 0;
  double c = b;
  int it = 0;
  for (; it < 60; ++it) {
    c = (a * gb - b * ga) / (gb - ga);
    const double gc = prev.probe_n_a2(c) / n_b - target;
    if (std::abs(gc) <= tol) break;
    if (gc * gb > 0.0) {
      b = c;
      gb = gc;
      if (side == 1) ga /= 2.0;
      side = 1;
    } else {
      a = c;
      ga = gc;
      if (side == -1) gb /= 2.0;
      side = -1;
    }
  }
  return {c, it + 1};
}

}  // namespace

TwCalibrator::TwCalibrator(const ModelParams& params, const Executor& executor,
                           CalibrationOptions options)
    : params_(params), executor_(&executor), options_(options) {
  params_.validate();
  if (options_.scan_divisions < 4 || options_.march_steps < 16) {
    throw Error(ErrorKind::invalid_argument, "calibration needs scan_divisions >= 4, march_steps >= 16");
  }
  const double n = static_cast<double>(params_.n_atoms);
  if (params_.squeeze_r == 0.0) {
    scan_.tau_peak = std::numbers::pi / (2.0 * std::sqrt(n));
    scan_.q_max = 1.0;
    return;
  }
  const double n_b = photon_number(params_.squeeze_r);
  const double tau_guess = std::numbers::pi / (2.0 * std::sqrt(n + n_b));
  const double h = tau_guess / options_.scan_divisions;
  const std::size_t count = std::min(full_size(params_), round_up_to_batches(options_.scan_trajectories));
  TwEnsemble ens(params_, count, executor);

  double best = -kInf;
  double best_tau = 0.0;
  const int max_steps = 16 * options_.scan_divisions;
  for (int k = 1; k <= max_steps; ++k) {
    ens.advance(h, 1);
    const double q = ens.mean_n_a2() / n_b;
    scan_.samples.push_back({ens.tau(), q});
    if (q > best) {
      best = q;
      best_tau = ens.tau();
    }
    if (ens.tau() >= 0.25 * tau_guess && best > 0.0 && q < 0.9 * best) break;
  }
  scan_.tau_peak = best_tau;
  scan_.q_max = best;
}

std::vector<CalibratedPoint> TwCalibrator::march(std::span<const double> q_targets) const {
  std::vector<CalibratedPoint> out(q_targets.size());
  std::vector<std::size_t> order(q_targets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return q_targets[i] < q_targets[j]; });
  for (double q : q_targets) {
    if (!std::isfinite(q) || q < 0.0 || q > 1.0) {
      throw Error(ErrorKind::invalid_q, "calibration target must lie in [0, 1]");
    }
  }
  if (q_targets.empty()) return out;

  const double tau_unit = scan_.tau_peak / options_.march_steps;
  TwEnsemble cur(params_, full_size(params_), *executor_);

  if (params_.squeeze_r == 0.0) {
    // No photons to transfer; operate the undepleted beamsplitter at its nominal
    // reflection and report that reflection as q.
    for (std::size_t idx : order) {
      const double q = q_targets[idx];
      const double tau = bs_tau_for_reflection(q, params_.n_atoms);
      const double dtau = tau - cur.tau();
      if (dtau > 0.0) cur.advance(dtau, std::max(1, static_cast<int>(std::ceil(dtau / tau_unit))));
      CalibratedPoint pt = make_point(cur, q, q);
      pt.calibration.q_from_formula = true;
      pt.calibration.bracket = {tau, tau};
      out[idx] = std::move(pt);
    }
    return out;
  }

  const double n_b = photon_number(params_.squeeze_r);
  const double h = tau_unit;
  TwEnsemble prev = cur;
  TwEnsemble prev2 = cur;
  double q_cur = cur.mean_n_a2() / n_b;
  double q_prev = q_cur;
  std::size_t next = 0;

  // Targets already met by the tau = 0 ensemble (q = 0 or noise above a tiny target).
  while (next < order.size() && q_targets[order[next]] <= std::max(q_cur, 0.0)) {
    CalibratedPoint pt = make_point(cur, q_targets[order[next]], q_cur);
    out[order[next]] = std::move(pt);
    ++next;
  }

  const int max_steps = 4 * options_.march_steps;
  int k = 0;
  for (; k < max_steps && next < order.size(); ++k) {
    prev2 = std::move(prev);
    prev = cur;
    q_prev = q_cur;
    cur.advance(h, 1);
    q_cur = cur.mean_n_a2() / n_b;

    while (next < order.size() && q_cur >= q_targets[order[next]]) {
      const double target = q_targets[order[next]];
      const double tol = std::max(options_.refine_rel_tol * target, 1e-12);
      const auto [delta, iters] =
          refine_crossing(prev, h, n_b, target, q_prev - target, q_cur - target, tol);
      const TwEnsemble hit = prev.stepped(delta);
      CalibratedPoint pt = make_point(hit, target, hit.mean_n_a2() / n_b);
      pt.calibration.iterations = iters;
      pt.calibration.bracket = {prev.tau(), cur.tau()};
      out[order[next]] = std::move(pt);
      ++next;
    }

    const bool past_peak = cur.tau() > 0.5 * scan_.tau_peak && q_cur < q_prev;
    if (past_peak) break;
  }
  if (next == order.size()) return out;

  // The rising branch ended below the remaining targets. Locate the peak between
  // prev2 and cur and accept targets within tolerance of it.
  const double span = cur.tau() - prev2.tau();
  const MinimizeResult peak = golden_section(
      [&](double d) { return -prev2.probe_n_a2(d) / n_b; }, 0.0, span, 1e-3 * h);
  const TwEnsemble top = prev2.stepped(peak.x);
  const double q_top = top.mean_n_a2() / n_b;
  for (; next < order.size(); ++next) {
    const double target = q_targets[order[next]];
    CalibratedPoint& pt = out[order[next]];
    if (target <= q_top + options_.tolerance) {
      pt = make_point(top, target, q_top);
      pt.calibration.at_peak = true;
      pt.calibration.iterations = peak.evaluations;
      pt.calibration.bracket = {prev2.tau(), cur.tau()};
    } else {
      pt.calibration.q_target = target;
      pt.calibration.q_achieved = q_top;
      pt.calibration.tau = top.tau();
      pt.failure = "unreachable: first-branch maximum of Q is " + std::to_string(q_top);
    }
  }
  return out;
}

CalibrationResult calibrate_tau(double q_target, const ModelParams& params, const Executor& executor,
                                const CalibrationOptions& options) {
  if (!(q_target >= 0.0 && q_target < 1.0)) {
    throw Error(ErrorKind::invalid_q, "calibration target must lie in [0, 1)");
  }
  if (q_target == 0.0) {
    CalibrationResult res;
    return res;
  }
  const TwCalibrator cal(params, executor, options);
  const double target[] = {q_target};
  const std::vector<CalibratedPoint> pts = cal.march(target);
  if (!pts[0].moments) throw Error(ErrorKind::unreachable_q, pts[0].failure);
  return pts[0].calibration;
}

std::vector<SweepPoint> sweep_q(const TwCalibrator& calibrator, std::span<const double> q_grid) {
  const ModelParams& p = calibrator.params();
  const double r = p.squeeze_r;
  const double n_b = photon_number(r);
  const std::vector<CalibratedPoint> pts = calibrator.march(q_grid);
  std::vector<SweepPoint> out;
  out.reserve(pts.size());
  for (const CalibratedPoint& cp : pts) {
    SweepPoint sp;
    sp.r = r;
    sp.q_target = cp.calibration.q_target;
    sp.calibration = cp.calibration;
    if (!cp.moments) {
      sp.failure = cp.failure;
      out.push_back(std::move(sp));
      continue;
    }
    sp.n_trajectories = cp.moments->n_trajectories();
    try {
      std::optional<double> q_override;
      if (cp.calibration.q_from_formula) q_override = cp.calibration.q_achieved;
      sp.result = evaluate_point(*cp.moments, n_b, cp.calibration.tau, SensitivityResult::Method::tw,
                                 q_override);
      sp.delta_phi_influence = cp.moments->influence(delta_phi_function(n_b, q_override));
      sp.ok = std::isfinite(sp.result.delta_phi) && std::isfinite(sp.result.qcrb);
      if (!sp.ok) sp.failure = "non-finite sensitivity";
    } catch (const Error& e) {
      sp.failure = e.what();
    }
    out.push_back(std::move(sp));
  }
  return out;
}

std::vector<SweepPoint> sweep_q(double r, const ModelParams& params, std::span<const double> q_grid,
                                const Executor& executor, const CalibrationOptions& options) {
  const TwCalibrator cal(params.with_r(r), executor, options);
  return sweep_q(cal, q_grid);
}

double paired_difference_se(const SweepPoint& a, const SweepPoint& b) {
  const std::vector<double>& ia = a.delta_phi_influence;
  const std::vector<double>& ib = b.delta_phi_influence;
  if (ia.size() != ib.size() || ia.size() < 2) {
    return std::hypot(a.result.delta_phi_se, b.result.delta_phi_se);
  }
  const double nb = static_cast<double>(ia.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < ia.size(); ++i) acc += (ia[i] - ib[i]) * (ia[i] - ib[i]);
  return std::sqrt(acc / (nb * (nb - 1.0)));
}

std::vector<double> default_q_grid(double r, std::int64_t n_atoms, double q_max,
                                   std::size_t n_points) {
  const double hi = 0.95 * q_max;
  double lo = 5e-4;
  const double c = optimal_C();
  const double q_opt_guess = c * c * static_cast<double>(n_atoms) * std::exp(-2.0 * r);
  lo = std::min(lo, 0.1 * q_opt_guess);
  if (!(lo < hi)) lo = 0.01 * hi;
  return log_space(lo, hi, n_points);
}

OptimumPoint argmin_over_q(std::span<const SweepPoint> sweep, Objective objective) {
  const auto value = [objective](const SweepPoint& p) {
    return objective == Objective::delta_phi ? p.result.delta_phi : p.result.qcrb;
  };
  const auto se = [objective](const SweepPoint& p) {
    return objective == Objective::delta_phi ? p.result.delta_phi_se : p.result.qcrb_se;
  };
  std::vector<std::size_t> ok;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    if (sweep[i].ok) ok.push_back(i);
  }
  if (ok.empty()) throw Error(ErrorKind::unreachable_q, "no usable point in the q sweep");
  std::sort(ok.begin(), ok.end(),
            [&](std::size_t i, std::size_t j) { return sweep[i].q_target < sweep[j].q_target; });
  std::size_t best = ok.front();
  for (std::size_t i : ok) {
    if (value(sweep[i]) < value(sweep[best])) best = i;
  }
  const double ceiling = value(sweep[best]) + se(sweep[best]);
  for (std::size_t i : ok) {
    if (value(sweep[i]) <= ceiling) {
      best = i;
      break;
    }
  }
  OptimumPoint op;
  const SweepPoint& p = sweep[best];
  op.r_opt = p.r;
  op.q_opt = p.result.q_measured;
  op.delta_phi_min = value(p);
  op.delta_phi_min_se = se(p);
  op.at_optimum = p.result;
  op.monotone = best == ok.front() || best == ok.back();
  op.evaluations = static_cast<int>(sweep.size());
  return op;
}

OptimumPoint optimize_q_fixed_r(double r, const ModelParams& params, std::span<const double> q_grid,
                                const Executor& executor, const CalibrationOptions& options) {
  return argmin_over_q(sweep_q(r, params, q_grid, executor, options), Objective::delta_phi);
}

OptimumPoint optimize_r_fixed_q(double q, const ModelParams& params, const Executor& executor,
                                const ROptions& ro, const CalibrationOptions& options) {
  if (!(ro.r_lo < ro.r_hi)) throw Error(ErrorKind::invalid_argument, "empty r bracket");
  std::vector<SweepPoint> seen;
  const auto eval = [&](double r) {
    const double target[] = {q};
    SweepPoint sp = sweep_q(r, params, target, executor, options).front();
    seen.push_back(sp);
    return sp;
  };
  const auto f = [](const SweepPoint& sp) { return sp.ok ? sp.result.delta_phi : kInf; };

  double a = ro.r_lo;
  double b = ro.r_hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  SweepPoint pc = eval(c);
  SweepPoint pd = eval(d);
  while (b - a > ro.r_tol) {
    const double fc = f(pc);
    const double fd = f(pd);
    if (std::isinf(fc) && std::isinf(fd)) {
      // Both probes unreachable: the reachable region lies to the left.
      b = c;
      c = b - kInvPhi * (b - a);
      d = a + kInvPhi * (b - a);
      pc = eval(c);
      pd = eval(d);
      continue;
    }
    if (b - a < ro.se_stop_width && std::isfinite(fc) && std::isfinite(fd) &&
        std::abs(fc - fd) < paired_difference_se(pc, pd)) {
      break;
    }
    if (fc < fd) {
      b = d;
      d = c;
      pd = pc;
      c = b - kInvPhi * (b - a);
      pc = eval(c);
    } else {
      a = c;
      c = d;
      pc = pd;
      d = a + kInvPhi * (b - a);
      pd = eval(d);
    }
  }

  const auto pick_best = [&] {
    const SweepPoint* best = nullptr;
    for (const SweepPoint& sp : seen) {
      if (sp.ok && (best == nullptr || sp.result.delta_phi < best->result.delta_phi)) best = &sp;
    }
    return best;
  };
  const SweepPoint* best = pick_best();
  if (best == nullptr) throw Error(ErrorKind::unreachable_q, "q is unreachable over the whole r bracket");

  double lo_v = kInf;
  double hi_v = -kInf;
  for (const SweepPoint& sp : seen) {
    if (!sp.ok) continue;
    lo_v = std::min(lo_v, sp.result.delta_phi);
    hi_v = std::max(hi_v, sp.result.delta_phi);
  }
  bool noisy = best->result.delta_phi_se > ro.noise_gate * (hi_v - lo_v);
  if (noisy) {
    const std::vector<double> grid = lin_space(ro.r_lo, ro.r_hi, ro.fallback_points);
    std::vector<double> vals;
    for (double r : grid) vals.push_back(f(eval(r)));
    const auto it = std::min_element(vals.begin(), vals.end());
    const std::size_t i = static_cast<std::size_t>(it - vals.begin());
    if (std::isfinite(*it) && i > 0 && i + 1 < vals.size() && std::isfinite(vals[i - 1]) &&
        std::isfinite(vals[i + 1])) {
      const double denom = vals[i - 1] - 2.0 * vals[i] + vals[i + 1];
      if (denom > 0.0) {
        const double step = grid[i + 1] - grid[i];
        eval(grid[i] + 0.5 * step * (vals[i - 1] - vals[i + 1]) / denom);
      }
    }
    best = pick_best();
  }

  OptimumPoint op;
  op.r_opt = best->r;
  op.q_opt = best->result.q_measured;
  op.delta_phi_min = best->result.delta_phi;
  op.delta_phi_min_se = best->result.delta_phi_se;
  op.at_optimum = best->result;
  op.noisy_objective = noisy;
  op.monotone = best->r - ro.r_lo <= ro.r_tol || ro.r_hi - best->r <= ro.r_tol;
  op.evaluations = static_cast<int>(seen.size());
  return op;
}

std::vector<RMinimum> min_over_r_and_q(const ModelParams& params, std::span<const double> r_grid,
                                       const Executor& executor, const CalibrationOptions& options) {
  if (!std::is_sorted(r_grid.begin(), r_grid.end())) {
    throw Error(ErrorKind::invalid_argument, "r grid must be ordered");
  }
  std::vector<RMinimum> out;
  for (double r : r_grid) {
    const TwCalibrator cal(params.with_r(r), executor, options);
    const std::vector<double> grid = default_q_grid(r, params.n_atoms, cal.q_max());
    RMinimum row;
    row.r = r;
    row.sweep = sweep_q(cal, grid);
    row.delta_phi = argmin_over_q(row.sweep, Objective::delta_phi);
    row.qcrb = argmin_over_q(row.sweep, Objective::qcrb);
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace squeezelab
