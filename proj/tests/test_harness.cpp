#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "squeezelab/error.hpp"
#include "squeezelab/harness.hpp"
#include "squeezelab/parallel.hpp"

using namespace squeezelab;

namespace {

SweepRow random_row(std::mt19937_64& g) {
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  const std::string pieces[] = {"tw", "a,b", "quote\"d", "line\nbreak", "", "na:qcrb|qcrb_se", "r\r\n"};
  std::uniform_int_distribution<int> pick(0, 6);
  SweepRow row;
  row.engine = pieces[pick(g)];
  row.r = u(g);
  row.q_target = std::ldexp(u(g), -40);
  row.q_measured = u(g);
  row.tau = std::numeric_limits<double>::quiet_NaN();
  row.delta_phi = u(g) * 1e-300;
  row.delta_phi_se = u(g);
  row.delta_phi_atoms_only = std::nextafter(1.0, 2.0);
  row.qcrb = u(g);
  row.qcrb_se = std::numeric_limits<double>::quiet_NaN();
  row.n_traj = static_cast<std::int64_t>(g() >> 2);
  row.n_diverged = -3;
  row.wall_time = 0.0;
  row.series = pieces[pick(g)] + pieces[pick(g)];
  row.flags = pieces[pick(g)];
  return row;
}

ExperimentConfig fig3_config() {
  ExperimentConfig c;
  c.experiment = Experiment::fig3_bs_sweep;
  return c;
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("csv_round_trip_property") {
    std::mt19937_64 g(2024);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<SweepRow> rows;
      for (int i = 0; i < 1 + trial % 7; ++i) rows.push_back(random_row(g));
      const std::string text = rows_to_csv(rows);
      const std::vector<SweepRow> back = rows_from_csv(text);
      REQUIRE(back.size() == rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) CHECK(back[i] == rows[i]);
      CHECK(rows_to_csv(back) == text);
    }
  }

  TEST_CASE("csv_header_lists_row_fields") {
    const std::string text = rows_to_csv({});
    std::string header;
    for (std::string_view f : sweep_row_fields()) header += (header.empty() ? "" : ",") + std::string(f);
    CHECK(text == header + "\r\n");
  }

  TEST_CASE("malformed_csv_rejected") {
    CHECK_THROWS_AS(rows_from_csv("engine,r\r\ntw,1\r\n"), Error);
    CHECK_THROWS_AS(rows_from_csv(rows_to_csv({}) + "\"unterminated\r\n"), Error);
  }

  TEST_CASE("config_round_trip") {
    ExperimentConfig c;
    c.experiment = Experiment::fig4_tmm_sweep;
    c.r_values = {1.5, 2.65};
    c.q_grid = QGridSpec{0.001, 0.9, 12, true};
    c.engine = Engine::both;
    c.master_seed = 99;
    const ExperimentConfig back = parse_config(config_to_json(c));
    CHECK(back.experiment == c.experiment);
    CHECK(back.r_values == c.r_values);
    REQUIRE(back.q_grid.has_value());
    CHECK(back.q_grid->values() == c.q_grid->values());
    CHECK(back.engine == c.engine);
    CHECK(back.master_seed == 99);
  }

  TEST_CASE("config_errors") {
    const auto config_error = [](const std::string& text) {
      try {
        parse_config(text);
      } catch (const Error& e) {
        return e.kind() == ErrorKind::config;
      }
      return false;
    };
    CHECK(config_error("{"));
    CHECK(config_error(R"({"experiment": "validate"})"));
    CHECK(config_error(R"({"schema_version": 2, "experiment": "validate"})"));
    CHECK(config_error(R"({"schema_version": 1, "experiment": "validate", "colour": 1})"));
    CHECK(config_error(R"({"schema_version": 1, "experiment": "fig3", "r_values": [-1]})"));
    CHECK(config_error(R"({"schema_version": 1, "experiment": "single_point", "q_values": [1.5]})"));
    CHECK(config_error(R"({"schema_version": 1, "experiment": "fig3", "engine": "pp"})"));
    CHECK(config_error(R"({"schema_version": 1, "experiment": "single", "n_trajectories": 0})"));
  }

  TEST_CASE("experiment_aliases") {
    CHECK(parse_experiment("fig3") == Experiment::fig3_bs_sweep);
    CHECK(parse_experiment("fig6_min_vs_r") == Experiment::fig6_min_vs_r);
    CHECK_FALSE(parse_experiment("fig7").has_value());
  }

  TEST_CASE("fig3_curves") {
    const std::vector<SweepRow> rows = run_fig3(fig3_config().resolved());
    double sql_min = std::numeric_limits<double>::infinity();
    double crit_min = std::numeric_limits<double>::infinity();
    for (const SweepRow& row : rows) {
      if (row.series != "bs_curve" || std::isnan(row.delta_phi)) continue;
      if (row.r == 0.0) sql_min = std::min(sql_min, row.delta_phi);
      if (std::abs(row.r - 2.649) < 1e-9) crit_min = std::min(crit_min, row.delta_phi);
    }
    CHECK(sql_min == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(crit_min == doctest::Approx(1e-3).epsilon(0.05));
  }

  TEST_CASE("rows_are_finite_or_flagged") {
    ExperimentConfig c;
    c.experiment = Experiment::single_point;
    c.r_values = {0.0, 1.0};
    c.q_values = {0.3};
    c.n_trajectories = 2000;
    const Executor ex(1);
    std::vector<SweepRow> rows = run_experiment(fig3_config(), {&ex, nullptr}).rows;
    const std::vector<SweepRow> sim = run_experiment(c, {&ex, nullptr}).rows;
    rows.insert(rows.end(), sim.begin(), sim.end());
    for (const SweepRow& row : rows) {
      const double fields[] = {row.r, row.q_target, row.q_measured, row.tau, row.delta_phi,
                               row.delta_phi_se, row.delta_phi_atoms_only, row.qcrb, row.qcrb_se};
      bool any_nan = false;
      for (double f : fields) {
        CHECK_FALSE(std::isinf(f));
        any_nan = any_nan || std::isnan(f);
      }
      if (any_nan) CHECK_FALSE(row.flags.empty());
    }
  }

  TEST_CASE("output_identical_across_runs_and_workers") {
    ExperimentConfig c;
    c.experiment = Experiment::single_point;
    c.r_values = {1.0};
    c.q_values = {0.2, 0.6};
    c.n_trajectories = 3000;
    const Executor one(1);
    const Executor three(3);
    const std::string a = render_output(run_experiment(c, {&one, nullptr}));
    const std::string b = render_output(run_experiment(c, {&three, nullptr}));
    const std::string d = render_output(run_experiment(c, {&one, nullptr}));
    CHECK(a == b);
    CHECK(a == d);
    c.master_seed += 1;
    CHECK(a != render_output(run_experiment(c, {&one, nullptr})));
  }

  TEST_CASE("json_output_carries_meta") {
    ExperimentConfig c = fig3_config();
    c.output_format = OutputFormat::json;
    const Executor ex(1);
    const std::string doc = render_output(run_experiment(c, {&ex, nullptr}));
    CHECK(doc.find("\"meta\"") != std::string::npos);
    CHECK(doc.find("\"build_version\"") != std::string::npos);
    CHECK(doc.find("\"rows\"") != std::string::npos);
  }
}
