#include <doctest.h>

#include <cmath>
#include <vector>

#include "squeezelab/analytic_bs.hpp"
#include "squeezelab/analytic_smallq.hpp"
#include "squeezelab/error.hpp"
#include "squeezelab/metrology.hpp"
#include "squeezelab/optimize.hpp"
#include "squeezelab/parallel.hpp"
#include "squeezelab/validation.hpp"

using namespace squeezelab;

namespace {

MomentVector synthetic(double cov) {
  MomentVector v{};
  at(v, Moment::n_a1) = 900.0;
  at(v, Moment::n_a2) = 3.0;
  at(v, Moment::n_b) = 1.0;
  at(v, Moment::jx) = 0.5;
  at(v, Moment::jz) = 448.0;
  at(v, Moment::jx2) = 0.25 + 210.0;
  at(v, Moment::yb) = -0.2;
  at(v, Moment::yb2) = 0.04 + 0.6;
  at(v, Moment::jx_yb) = 0.5 * -0.2 + cov;
  return v;
}

// Written out from the recycled-signal definition with the correlation term subtracted.
double recycled_oracle(const MomentVector& v, double q) {
  const double vjx = at(v, Moment::jx2) - at(v, Moment::jx) * at(v, Moment::jx);
  const double vyb = at(v, Moment::yb2) - at(v, Moment::yb) * at(v, Moment::yb);
  const double cov = at(v, Moment::jx_yb) - at(v, Moment::jx) * at(v, Moment::yb);
  const double na1 = at(v, Moment::n_a1);
  const double var = 4 * q * vjx + (1 - q) * na1 * vyb - 4 * std::sqrt(q * (1 - q)) * std::sqrt(na1) * cov;
  return std::sqrt(var) / (2 * std::sqrt(q) * std::abs(at(v, Moment::jz)));
}

SweepPoint point(double q, double dphi) {
  SweepPoint p;
  p.q_target = q;
  p.ok = true;
  p.result.delta_phi = dphi;
  p.result.qcrb = dphi / 2;
  p.result.q_measured = q;
  return p;
}

}  // namespace

TEST_SUITE("metrology") {
  TEST_CASE("recycled_variance_subtracts_correlation") {
    for (double cov : {-5.0, 0.0, 5.0}) {
      const MomentVector v = synthetic(cov);
      const double q = 0.3;
      CHECK(delta_phi_function(4.0, q)(v) == doctest::Approx(recycled_oracle(v, q)).epsilon(1e-12));
    }
    CHECK(delta_phi_function(4.0, 0.3)(synthetic(5.0)) < delta_phi_function(4.0, 0.3)(synthetic(-5.0)));
  }

  TEST_CASE("measured_q_is_photon_transfer_fraction") {
    const MomentVector v = synthetic(0.0);
    CHECK(delta_phi_function(4.0)(v) == doctest::Approx(recycled_oracle(v, 0.75)).epsilon(1e-12));
  }

  TEST_CASE("noise_free_signal_reproduces_beamsplitter") { CHECK(validation::beamsplitter_consistency().passed); }

  TEST_CASE("qcrb_of_fisher") {
    CHECK(qcrb(1e8) == doctest::Approx(1e-4));
    CHECK_THROWS_AS(qcrb(0.0), Error);
  }

  TEST_CASE("smallq_expansion_bundle_consistent") {
    const SmallQExpansion e = smallq_expansion(2.0, 1e-3, 10000);
    CHECK(e.delta_phi_series == doctest::Approx(smallq_sensitivity_series(2.0, 1e-3, 10000)));
    CHECK(e.qfi == doctest::Approx(qfi_smallq(2.0, 1e-3, 10000)));
    CHECK(e.valid);
  }
}

TEST_SUITE("optimize") {
  TEST_CASE("calibration_reaches_target_within_tolerance") {
    ModelParams p;
    p.squeeze_r = 1.0;
    p.n_trajectories = 5000;
    const Executor ex(1);
    for (double q : {0.05, 0.4}) {
      const CalibrationResult c = calibrate_tau(q, p, ex);
      CHECK(std::abs(c.q_achieved - q) <= 2e-3);
      CHECK(c.tau > 0.0);
    }
  }

  TEST_CASE("unreachable_target_reported") {
    ModelParams p;
    p.squeeze_r = 1.0;
    p.n_trajectories = 2000;
    const Executor ex(1);
    const TwCalibrator cal(p, ex);
    const double q[] = {0.2, std::min(1.0, cal.q_max() + 0.05)};
    const std::vector<CalibratedPoint> pts = cal.march(q);
    REQUIRE(pts.size() == 2);
    CHECK(pts[0].moments.has_value());
    CHECK_FALSE(pts[1].moments.has_value());
    CHECK_FALSE(pts[1].failure.empty());
  }

  TEST_CASE("zero_squeezing_uses_beamsplitter_formula") {
    ModelParams p;
    p.n_trajectories = 1000;
    const CalibrationResult c = calibrate_tau(0.5, p, Executor(1));
    CHECK(c.q_from_formula);
    CHECK(c.tau == doctest::Approx(bs_tau_for_reflection(0.5, p.n_atoms)));
  }

  TEST_CASE("argmin_picks_smallest_and_flags_boundary") {
    const std::vector<SweepPoint> interior{point(0.1, 3.0), point(0.2, 1.0), point(0.3, 2.0)};
    const OptimumPoint a = argmin_over_q(interior, Objective::delta_phi);
    CHECK(a.q_opt == doctest::Approx(0.2));
    CHECK_FALSE(a.monotone);
    const std::vector<SweepPoint> edge{point(0.1, 1.0), point(0.2, 2.0), point(0.3, 3.0)};
    CHECK(argmin_over_q(edge, Objective::delta_phi).monotone);
    CHECK(argmin_over_q(edge, Objective::qcrb).delta_phi_min == doctest::Approx(0.5));
  }

  TEST_CASE("argmin_tie_goes_to_smaller_q") {
    const std::vector<SweepPoint> tie{point(0.1, 2.0), point(0.2, 1.0), point(0.3, 1.0), point(0.4, 2.0)};
    CHECK(argmin_over_q(tie, Objective::delta_phi).q_opt == doctest::Approx(0.2));
  }

  TEST_CASE("argmin_skips_failed_points") {
    std::vector<SweepPoint> pts{point(0.1, 2.0), point(0.2, 0.5), point(0.3, 1.0)};
    pts[1].ok = false;
    CHECK(argmin_over_q(pts, Objective::delta_phi).q_opt == doctest::Approx(0.3));
  }

  TEST_CASE("default_grid_covers_expected_optimum") {
    for (double r : {2.0, 6.31, 9.0}) {
      const double q_max = 0.98;
      const std::vector<double> g = default_q_grid(r, 10000, q_max);
      REQUIRE(g.size() == 30);
      CHECK(std::is_sorted(g.begin(), g.end()));
      CHECK(g.back() == doctest::Approx(0.95 * q_max));
      const double q_star = optimal_C() * optimal_C() * 10000 * std::exp(-2 * r);
      if (q_star < g.back()) CHECK(g.front() <= q_star);
    }
  }

  TEST_CASE("paired_se_vanishes_for_identical_points") {
    SweepPoint a = point(0.1, 1.0);
    a.delta_phi_influence = {0.1, -0.2, 0.05, 0.05};
    CHECK(paired_difference_se(a, a) == doctest::Approx(0.0));
    SweepPoint b = a;
    for (double& x : b.delta_phi_influence) x = -x;
    CHECK(paired_difference_se(a, b) > 0.0);
  }
}
