#include <cmath>
#include <sstream>

#include "harness_rows.hpp"
#include "squeezelab/analytic_bs.hpp"
#include "squeezelab/analytic_smallq.hpp"
#include "squeezelab/error.hpp"
#include "squeezelab/model.hpp"
#include "squeezelab/numeric.hpp"

namespace squeezelab {

namespace detail {

void mark_na(SweepRow& row, std::initializer_list<Field> fields) {
  std::string names;
  for (Field f : fields) {
    double* slot = nullptr;
    const char* name = "";
    switch (f) {
      case Field::r: slot = &row.r; name = "r"; break;
      case Field::q_target: slot = &row.q_target; name = "q_target"; break;
      case Field::q_measured: slot = &row.q_measured; name = "q_measured"; break;
      case Field::tau: slot = &row.tau; name = "tau"; break;
      case Field::delta_phi: slot = &row.delta_phi; name = "delta_phi"; break;
      case Field::delta_phi_se: slot = &row.delta_phi_se; name = "delta_phi_se"; break;
      case Field::delta_phi_atoms_only: slot = &row.delta_phi_atoms_only; name = "delta_phi_atoms_only"; break;
      case Field::qcrb: slot = &row.qcrb; name = "qcrb"; break;
      case Field::qcrb_se: slot = &row.qcrb_se; name = "qcrb_se"; break;
    }
    *slot = kNaN;
    if (!names.empty()) names += '|';
    names += name;
  }
  add_flag(row, "na:" + names);
}

SweepRow row_from_result(std::string engine, double r, double q_target, const SensitivityResult& res,
                         std::size_t n_traj, std::string series) {
  SweepRow row;
  row.engine = std::move(engine);
  row.r = r;
  row.q_target = q_target;
  row.q_measured = res.q_measured;
  row.tau = res.tau;
  row.delta_phi = res.delta_phi;
  row.delta_phi_se = res.delta_phi_se;
  row.delta_phi_atoms_only = res.delta_phi_atoms_only;
  row.qcrb = res.qcrb;
  row.qcrb_se = res.qcrb_se;
  row.n_traj = static_cast<std::int64_t>(n_traj);
  row.series = std::move(series);
  if (std::abs(res.q_measured - q_target) > CalibrationOptions{}.tolerance) add_flag(row, "q_off_target");
  return row;
}

SweepRow row_from_sweep(const SweepPoint& sp, std::string series) {
  SweepRow row;
  if (sp.ok) {
    row = row_from_result("tw", sp.r, sp.q_target, sp.result, sp.n_trajectories, std::move(series));
  } else {
    row.engine = "tw";
    row.r = sp.r;
    row.q_target = sp.q_target;
    row.tau = sp.calibration.tau;
    row.series = std::move(series);
    row.n_traj = static_cast<std::int64_t>(sp.n_trajectories);
    add_flag(row, sp.n_trajectories == 0 ? "calibration_failed" : "engine_failed");
    mark_na(row, {Field::q_measured, Field::delta_phi, Field::delta_phi_se, Field::delta_phi_atoms_only,
                  Field::qcrb, Field::qcrb_se});
    if (sp.n_trajectories == 0) mark_na(row, {Field::tau});
    add_flag(row, sp.failure);
  }
  if (sp.calibration.at_peak) add_flag(row, "at_peak");
  if (sp.calibration.q_from_formula) add_flag(row, "q_from_formula");
  return row;
}

SweepRow pp_row(const ModelParams& params, const CalibrationResult& cal, int pp_steps,
                const Executor& executor, std::string series) {
  IntegratorConfig cfg = IntegratorConfig::pp_default();
  cfg.n_steps = pp_steps;
  const double n_b = photon_number(params.squeeze_r);
  std::optional<double> q_override;
  if (cal.q_from_formula) q_override = cal.q_achieved;
  SweepRow row;
  try {
    const PpRun run = run_pp(params, cal.tau, cfg, executor);
    const SensitivityResult res =
        evaluate_point(run.moments, n_b, cal.tau, SensitivityResult::Method::pp, q_override);
    row = row_from_result("pp", params.squeeze_r, cal.q_target, res, run.guard.n_launched, std::move(series));
    row.n_diverged = static_cast<std::int64_t>(run.guard.n_diverged);
  } catch (const Error& e) {
    row = SweepRow{};
    row.engine = "pp";
    row.r = params.squeeze_r;
    row.q_target = cal.q_target;
    row.tau = cal.tau;
    row.series = std::move(series);
    add_flag(row, "engine_failed");
    mark_na(row, {Field::q_measured, Field::delta_phi, Field::delta_phi_se, Field::delta_phi_atoms_only,
                  Field::qcrb, Field::qcrb_se});
    add_flag(row, e.what());
  }
  if (cal.q_from_formula) add_flag(row, "q_from_formula");
  return row;
}

}  // namespace detail

namespace {

using detail::Field;

ModelParams base_params(const ExperimentConfig& c) {
  ModelParams p;
  p.n_atoms = c.n_atoms;
  p.master_seed = c.master_seed;
  p.n_trajectories = c.n_trajectories;
  return p;
}

std::vector<double> sweep_grid(const ExperimentConfig& c, double r, double q_max) {
  if (!c.q_values.empty()) return c.q_values;
  if (c.q_grid) return c.q_grid->values();
  return default_q_grid(r, c.n_atoms, q_max);
}

bool wants_tw(const ExperimentConfig& c) { return *c.engine != Engine::pp; }
bool wants_pp(const ExperimentConfig& c) { return *c.engine != Engine::tw; }

void stamp(std::vector<SweepRow>& rows, std::size_t from, const ExperimentConfig& c, double seconds) {
  if (!c.timing) return;
  for (std::size_t i = from; i < rows.size(); ++i) rows[i].wall_time = seconds;
}

SweepRow analytic_bs_row(double r, double q, std::int64_t n_atoms, std::string series) {
  SweepRow row;
  row.engine = "analytic_bs";
  row.r = r;
  row.q_target = q;
  row.q_measured = q;
  row.tau = bs_tau_for_reflection(q, n_atoms);
  row.series = std::move(series);
  try {
    row.delta_phi = bs_sensitivity(r, q, n_atoms);
    row.delta_phi_atoms_only = bs_atoms_only_sensitivity(r, q, n_atoms);
    detail::mark_na(row, {Field::delta_phi_se, Field::qcrb, Field::qcrb_se});
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::depleted_regime) throw;
    detail::add_flag(row, "depleted");
    detail::mark_na(row, {Field::delta_phi, Field::delta_phi_se, Field::delta_phi_atoms_only, Field::qcrb,
                          Field::qcrb_se});
  }
  return row;
}

SweepRow reference_row(std::string series, double value) {
  SweepRow row;
  row.engine = "reference";
  row.series = std::move(series);
  row.delta_phi = value;
  detail::mark_na(row, {Field::r, Field::q_target, Field::q_measured, Field::tau, Field::delta_phi_se,
                        Field::delta_phi_atoms_only, Field::qcrb, Field::qcrb_se});
  return row;
}

SweepRow optimum_row(const OptimumPoint& op, double q_target, std::size_t n_traj, std::string series) {
  SweepRow row = detail::row_from_result("tw", op.r_opt, q_target, op.at_optimum, n_traj, std::move(series));
  if (op.monotone) detail::add_flag(row, "monotone");
  if (op.noisy_objective) detail::add_flag(row, "noisy_objective");
  return row;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::vector<SweepRow> run_fig3(const ExperimentConfig& config) {
  const ExperimentConfig c = config.resolved();
  c.validate();
  const std::vector<double> grid = c.q_values.empty() ? c.q_grid->values() : c.q_values;
  std::vector<SweepRow> rows;
  for (double r : c.r_values) {
    for (double q : grid) rows.push_back(analytic_bs_row(r, q, c.n_atoms, "bs_curve"));
  }
  rows.push_back(reference_row("n_pow_-3/4", std::pow(static_cast<double>(c.n_atoms), -0.75)));
  return rows;
}

std::vector<SweepRow> run_fig4(const ExperimentConfig& config, const RunContext& ctx) {
  const ExperimentConfig c = config.resolved();
  c.validate();
  const Executor& ex = detail::executor_of(ctx);
  const ModelParams base = base_params(c);
  std::vector<SweepRow> rows;

  for (double r : c.r_values) {
    const std::size_t first = rows.size();
    const detail::Stopwatch sw;
    const TwCalibrator cal(base.with_r(r), ex);
    if (wants_tw(c)) {
      const std::vector<double> grid = sweep_grid(c, r, cal.q_max());
      detail::log(ctx, "fig4: r=" + fmt(r) + " TW sweep over " + std::to_string(grid.size()) + " q values");
      for (const SweepPoint& sp : sweep_q(cal, grid)) {
        rows.push_back(detail::row_from_sweep(sp, "fixed_r"));
        if (sp.q_target <= 1.0) rows.push_back(analytic_bs_row(r, sp.q_target, c.n_atoms, "bs_fixed_r"));
      }
    }
    if (wants_pp(c) && !c.pp_q_values.empty()) {
      for (const SweepPoint& sp : sweep_q(cal, c.pp_q_values)) {
        detail::log(ctx, "fig4: r=" + fmt(r) + " positive-P check at q=" + fmt(sp.q_target));
        rows.push_back(detail::row_from_sweep(sp, "pp_check"));
        if (sp.n_trajectories == 0) continue;
        rows.push_back(detail::pp_row(base.with_r(r).with_trajectories(c.pp_trajectories), sp.calibration,
                                      c.pp_steps, ex, "pp_check"));
      }
    }
    stamp(rows, first, c, sw.seconds());
  }

  if (wants_tw(c)) {
    for (double q : c.r_opt_q_values) {
      const std::size_t first = rows.size();
      const detail::Stopwatch sw;
      detail::log(ctx, "fig4: optimizing r at q=" + fmt(q));
      try {
        const OptimumPoint op = optimize_r_fixed_q(q, base, ex);
        rows.push_back(optimum_row(op, q, round_up_to_batches(static_cast<std::size_t>(c.n_trajectories)),
                                   "min_over_r"));
      } catch (const Error& e) {
        SweepRow row;
        row.engine = "tw";
        row.q_target = q;
        row.series = "min_over_r";
        detail::add_flag(row, "engine_failed");
        detail::mark_na(row, {Field::r, Field::q_measured, Field::tau, Field::delta_phi, Field::delta_phi_se,
                              Field::delta_phi_atoms_only, Field::qcrb, Field::qcrb_se});
        detail::add_flag(row, e.what());
        rows.push_back(row);
      }
      stamp(rows, first, c, sw.seconds());
    }
  }

  for (double q : log_space(1e-3, 1.0, 31)) {
    SweepRow row;
    row.engine = "analytic_smallq";
    row.series = "smallq_min";
    row.r = smallq_opt_r(q, c.n_atoms);
    row.q_target = q;
    row.q_measured = q;
    row.delta_phi = smallq_min_sensitivity(q, c.n_atoms);
    detail::mark_na(row, {Field::tau, Field::delta_phi_se, Field::delta_phi_atoms_only, Field::qcrb,
                          Field::qcrb_se});
    rows.push_back(row);
  }
  const double n = static_cast<double>(c.n_atoms);
  rows.push_back(reference_row("n_pow_-1", 1.0 / n));
  rows.push_back(reference_row("n_pow_-3/4", std::pow(n, -0.75)));
  return rows;
}

std::vector<SweepRow> run_fig5(const ExperimentConfig& config, const RunContext& ctx) {
  const ExperimentConfig c = config.resolved();
  c.validate();
  const Executor& ex = detail::executor_of(ctx);
  const ModelParams base = base_params(c);
  std::vector<SweepRow> rows;
  for (double r : c.r_values) {
    const std::size_t first = rows.size();
    const detail::Stopwatch sw;
    const TwCalibrator cal(base.with_r(r), ex);
    const std::vector<double> grid = sweep_grid(c, r, cal.q_max());
    detail::log(ctx, "fig5: r=" + fmt(r) + " TW sweep over " + std::to_string(grid.size()) + " q values");
    for (const SweepPoint& sp : sweep_q(cal, grid)) {
      rows.push_back(detail::row_from_sweep(sp, "tw"));
      if (!sp.ok || sp.calibration.tau <= 0.0) continue;
      SweepRow a;
      a.engine = "analytic_smallq";
      a.series = "smallq_series";
      a.r = r;
      a.q_target = sp.q_target;
      a.q_measured = sp.result.q_measured;
      a.tau = sp.calibration.tau;
      a.delta_phi = smallq_sensitivity_series(r, a.tau, c.n_atoms);
      const double f = qfi_smallq(r, a.tau, c.n_atoms);
      detail::mark_na(a, {Field::delta_phi_se, Field::delta_phi_atoms_only, Field::qcrb_se});
      if (f > 0.0) {
        a.qcrb = 1.0 / std::sqrt(f);
      } else {
        detail::mark_na(a, {Field::qcrb});
      }
      if (!smallq_valid(r, a.tau, c.n_atoms)) detail::add_flag(a, "outside_validity");
      rows.push_back(a);
    }
    stamp(rows, first, c, sw.seconds());
  }
  return rows;
}

std::vector<SweepRow> run_fig6(const ExperimentConfig& config, const RunContext& ctx) {
  const ExperimentConfig c = config.resolved();
  c.validate();
  const Executor& ex = detail::executor_of(ctx);
  const ModelParams base = base_params(c);
  std::vector<SweepRow> rows;
  for (double r : c.r_values) {
    const std::size_t first = rows.size();
    const detail::Stopwatch sw;
    detail::log(ctx, "fig6: r=" + fmt(r));
    const TwCalibrator cal(base.with_r(r), ex);
    const std::vector<double> grid = sweep_grid(c, r, cal.q_max());
    const std::vector<SweepPoint> sweep = sweep_q(cal, grid);
    for (const SweepPoint& sp : sweep) rows.push_back(detail::row_from_sweep(sp, "sweep"));
    const auto n_traj = round_up_to_batches(static_cast<std::size_t>(c.n_trajectories));
    for (auto [objective, series] : {std::pair{Objective::delta_phi, "min_delta_phi"},
                                     std::pair{Objective::qcrb, "min_qcrb"}}) {
      try {
        const OptimumPoint op = argmin_over_q(sweep, objective);
        SweepRow row = optimum_row(op, op.q_opt, n_traj, series);
        rows.push_back(row);
      } catch (const Error& e) {
        SweepRow row;
        row.engine = "tw";
        row.r = r;
        row.series = series;
        detail::add_flag(row, "engine_failed");
        detail::mark_na(row, {Field::q_target, Field::q_measured, Field::tau, Field::delta_phi,
                              Field::delta_phi_se, Field::delta_phi_atoms_only, Field::qcrb, Field::qcrb_se});
        detail::add_flag(row, e.what());
        rows.push_back(row);
      }
    }
    stamp(rows, first, c, sw.seconds());
  }
  return rows;
}

std::vector<SweepRow> run_single_point(const ExperimentConfig& config, const RunContext& ctx) {
  const ExperimentConfig c = config.resolved();
  c.validate();
  const Executor& ex = detail::executor_of(ctx);
  const ModelParams base = base_params(c);
  const std::vector<double> qs = c.q_values.empty() ? c.q_grid->values() : c.q_values;
  std::vector<SweepRow> rows;
  for (double r : c.r_values) {
    const TwCalibrator cal(base.with_r(r), ex);
    const std::vector<SweepPoint> tw_pts = sweep_q(cal, qs);
    for (const SweepPoint& sp : tw_pts) {
      const std::size_t first = rows.size();
      const detail::Stopwatch sw;
      if (wants_tw(c)) rows.push_back(detail::row_from_sweep(sp, "single"));
      if (wants_pp(c)) {
        if (sp.n_trajectories == 0) {
          SweepRow row = detail::row_from_sweep(sp, "single");
          row.engine = "pp";
          rows.push_back(row);
        } else {
          detail::log(ctx, "single: positive-P at r=" + fmt(r) + " q=" + fmt(sp.q_target));
          rows.push_back(detail::pp_row(base.with_r(r).with_trajectories(c.pp_trajectories), sp.calibration,
                                        c.pp_steps, ex, "single"));
        }
      }
      stamp(rows, first, c, sw.seconds());
    }
  }
  return rows;
}

RunResult run_experiment(const ExperimentConfig& config, const RunContext& ctx) {
  RunResult out;
  out.config = config.resolved();
  out.config.validate();
  const detail::Stopwatch sw;
  switch (out.config.experiment) {
    case Experiment::fig3_bs_sweep: out.rows = run_fig3(out.config); break;
    case Experiment::fig4_tmm_sweep: out.rows = run_fig4(out.config, ctx); break;
    case Experiment::fig5_qcrb_compare: out.rows = run_fig5(out.config, ctx); break;
    case Experiment::fig6_min_vs_r: out.rows = run_fig6(out.config, ctx); break;
    case Experiment::single_point: out.rows = run_single_point(out.config, ctx); break;
    case Experiment::validate: out.report = run_validate(out.config, ctx); break;
  }
  out.wall_time = sw.seconds();
  return out;
}

}  // namespace squeezelab
