#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "squeezelab/state.hpp"

namespace squeezelab {

/// Physical configuration of one interferometer run. Dynamics depend only on the
/// dimensionless time tau = g t, so coupling_g only matters when converting
/// laboratory times.
struct ModelParams {
  std::int64_t n_atoms = 10000;
  double squeeze_r = 0.0;
  double coupling_g = 1.0;
  std::uint64_t master_seed = 20150301;
  std::int64_t n_trajectories = 50000;

  /// Throws Error(invalid_argument) when an invariant is violated.
  void validate() const;

  ModelParams with_r(double r) const {
    ModelParams p = *this;
    p.squeeze_r = r;
    return p;
  }
  ModelParams with_trajectories(std::int64_t n) const {
    ModelParams p = *this;
    p.n_trajectories = n;
    return p;
  }
};

struct QstPoint {
  double tau = 0.0;
  double efficiency = 0.0;
};

/// Largest squeezing parameter accepted by the hyperbolic helpers; e^{2r}
/// overflows a double near r = 354.
inline constexpr double kMaxSqueezeR = 300.0;

/// Throws Error(invalid_argument) for r < 0 or r > kMaxSqueezeR.
void check_squeeze_r(double r);

double photon_number(double r);

double tau_from_time(double coupling_g, double t);

/// sin^2(g sqrt(N) t), the reflection of the undepleted-pump beamsplitter.
double bs_reflection_coefficient(double coupling_g, std::int64_t n_atoms, double t);

/// Inverse of the beamsplitter reflection on its first rising branch, in tau.
double bs_tau_for_reflection(double q, std::int64_t n_atoms);

/// Generalized QST efficiency <N_a2(t1)> / <N_b(t0)>. Throws
/// Error(degenerate_input) when n_b_t0 <= 0.
double qst_efficiency(double n_a2_t1, double n_b_t0);

/// Same as qst_efficiency but reports the r = 0 case as std::nullopt.
std::optional<double> try_qst_efficiency(double n_a2_t1, double n_b_t0) noexcept;

/// (|a1|^2 + |a2|^2, |a2|^2 + |b|^2); both are constants of the TW flow.
std::pair<double, double> conserved_charges(const TwTrajectory& state);

}  // namespace squeezelab
