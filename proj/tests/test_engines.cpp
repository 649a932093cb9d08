#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "squeezelab/exact.hpp"
#include "squeezelab/model.hpp"
#include "squeezelab/analytic_smallq.hpp"
#include "squeezelab/parallel.hpp"
#include "squeezelab/pp.hpp"
#include "squeezelab/rng.hpp"
#include "squeezelab/tw.hpp"
#include "squeezelab/validation.hpp"

using namespace squeezelab;

namespace {

ModelParams small_params(double r, std::int64_t n_traj) {
  ModelParams p;
  p.squeeze_r = r;
  p.n_trajectories = n_traj;
  return p;
}

}  // namespace

TEST_SUITE("rng") {
  TEST_CASE("streams_are_reproducible_and_distinct") {
    CounterRng a(7, StreamDomain::test, 3);
    CounterRng b(7, StreamDomain::test, 3);
    CounterRng c(7, StreamDomain::test, 4);
    CounterRng d(7, StreamDomain::tw_initial, 3);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) {
      const auto x = a();
      CHECK(x == b());
      seen.insert(x);
      seen.insert(c());
      seen.insert(d());
    }
    CHECK(seen.size() == 3000);
  }

  TEST_CASE("uniform_bits_are_balanced") {
    CounterRng g(1, StreamDomain::test, 0);
    double mean = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) mean += double(g() >> 11) * 0x1.0p-53;
    mean /= n;
    CHECK(std::abs(mean - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / n));
  }

  TEST_CASE("executor_visits_every_index_once") {
    for (unsigned t : {1u, 3u}) {
      const Executor ex(t);
      std::vector<int> hits(1000, 0);
      ex.for_each_index(hits.size(), [&](std::size_t i) { hits[i] += 1; });
      CHECK(std::count(hits.begin(), hits.end(), 1) == 1000);
    }
  }

  TEST_CASE("executor_rethrows_lowest_failing_index") {
    const Executor ex(2);
    try {
      ex.for_each_index(100, [](std::size_t i) {
        if (i == 17 || i == 80) throw std::runtime_error(std::to_string(i));
      });
      FAIL("no exception");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "17");
    }
  }
}

TEST_SUITE("tw") {
  TEST_CASE("derivatives_match_hand_written_flow") {
    TwTrajectory s{{1.2, -0.3}, {0.1, 0.7}, {-0.4, 0.25}};
    const TwTrajectory d = tw_derivatives(s);
    const cplx i{0.0, 1.0};
    CHECK(std::abs(d.alpha1 - (-i * s.alpha2 * std::conj(s.beta))) < 1e-15);
    CHECK(std::abs(d.alpha2 - (-i * s.alpha1 * s.beta)) < 1e-15);
    CHECK(std::abs(d.beta - (-i * s.alpha2 * std::conj(s.alpha1))) < 1e-15);
  }

  TEST_CASE("charges_conserved_per_trajectory") {
    const ModelParams p = small_params(3.0, 100);
    IntegratorConfig cfg;
    cfg.n_steps = 2048;
    for (std::size_t i = 0; i < 20; ++i) {
      const TwTrajectory t0 = sample_tw_trajectory(p, i);
      const TwTrajectory t1 = integrate_tw(t0, 0.02, cfg);
      const auto [c0a, c0b] = conserved_charges(t0);
      const auto [c1a, c1b] = conserved_charges(t1);
      CHECK(std::abs(c1a - c0a) / std::abs(c0a) < 1e-8);
      CHECK(std::abs(c1b - c0b) / std::abs(c0b) < 1e-8);
    }
  }

  TEST_CASE("trajectory_depends_only_on_index") {
    const TwTrajectory a = sample_tw_trajectory(small_params(1.0, 1000), 42);
    const TwTrajectory b = sample_tw_trajectory(small_params(1.0, 50000), 42);
    CHECK(a == b);
    CHECK_FALSE(a == sample_tw_trajectory(small_params(1.0, 1000), 43));
  }

  TEST_CASE("tau0_moments_match_gaussian_closed_forms") {
    const Executor ex(1);
    CHECK(validation::tw_gaussian_tau0(5, ex).passed);
  }

  TEST_CASE("dropping_spin_square_correction_is_detected") {
    const Executor ex(1);
    TwEstimatorOptions mutant;
    mutant.spin_square_correction = false;
    CHECK_FALSE(validation::tw_gaussian_tau0(5, ex, mutant).passed);
  }

  TEST_CASE("ensemble_moments_independent_of_worker_count") {
    const ModelParams p = small_params(2.0, 2000);
    const EnsembleMoments a = run_tw(p, 0.005, IntegratorConfig::tw_default(), Executor(1));
    const EnsembleMoments b = run_tw(p, 0.005, IntegratorConfig::tw_default(), Executor(3));
    CHECK(a.mean() == b.mean());
    for (std::size_t k = 0; k < a.n_batches(); ++k) CHECK(a.batch_mean(k) == b.batch_mean(k));
  }

  TEST_CASE("incremental_advance_matches_direct_integration") {
    const ModelParams p = small_params(1.0, 200);
    const Executor ex(1);
    TwEnsemble ens(p, 200, ex);
    ens.advance(0.004, 64);
    ens.advance(0.004, 64);
    IntegratorConfig cfg;
    cfg.n_steps = 128;
    for (std::size_t i : {0u, 99u, 199u}) {
      const TwTrajectory direct = integrate_tw(sample_tw_trajectory(p, i), 0.008, cfg);
      CHECK(std::abs(ens.trajectories()[i].alpha2 - direct.alpha2) < 1e-12);
    }
  }
}

TEST_SUITE("pp") {
  TEST_CASE("initial_sample_moment_identities") { CHECK(validation::pp_initial_identities(11).passed); }

  TEST_CASE("noise_free_drift_follows_tw") { CHECK(validation::pp_drift_matches_tw(11).passed); }

  TEST_CASE("moments_match_exact_evolution") {
    const Executor ex(1);
    CHECK(validation::pp_matches_exact(11, ex).passed);
  }

  TEST_CASE("unconjugated_noise_mutant_is_detected") {
    const Executor ex(1);
    PpOptions mutant;
    mutant.conjugate_noise = false;
    CHECK_FALSE(validation::pp_matches_exact(11, ex, mutant).passed);
  }

  TEST_CASE("diverged_trajectories_are_excluded_and_counted") {
    PpTrajectory good{{1, 0}, {0, 0}, {0, 0}, {1, 0}, {0, 0}, {0, 0}};
    std::vector<PpTrajectory> ens(200, good);
    std::vector<char> div(200, 0);
    div[5] = 1;
    ens[5].alpha1 = {1e9, 0};
    const EnsembleMoments m = pp_moments(ens, div);
    CHECK(m.n_excluded() == 1);
    CHECK(m.mean_n_a1().value == doctest::Approx(1.0));
  }
}

TEST_SUITE("exact") {
  TEST_CASE("initial_state_moments") {
    const double r = 0.8;
    const MomentVector m = exact_moments(6.0, r, 0.0);
    CHECK(at(m, Moment::n_a1) == doctest::Approx(6.0).epsilon(1e-10));
    CHECK(at(m, Moment::n_a2) == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(at(m, Moment::n_b) == doctest::Approx(std::sinh(r) * std::sinh(r)).epsilon(1e-10));
    CHECK(at(m, Moment::jz) == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(at(m, Moment::jx2) == doctest::Approx(1.5).epsilon(1e-10));
  }

  TEST_CASE("conserved_sums_hold") {
    const MomentVector a = exact_moments(5.0, 1.0, 0.0);
    const MomentVector b = exact_moments(5.0, 1.0, 0.4);
    CHECK(at(b, Moment::n_a1) + at(b, Moment::n_a2) == doctest::Approx(at(a, Moment::n_a1)).epsilon(1e-10));
    CHECK(at(b, Moment::n_a2) + at(b, Moment::n_b) == doctest::Approx(at(a, Moment::n_b)).epsilon(1e-10));
  }

  TEST_CASE("short_time_occupation_matches_expansion") {
    const double r = 0.5;
    const double tau = 0.01;
    const MomentVector m = exact_moments(20.0, r, tau);
    CHECK(at(m, Moment::n_a1) == doctest::Approx(heun_na1(r, tau, 20)).epsilon(1e-7));
  }
}
