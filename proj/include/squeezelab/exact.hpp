#pragma once

#include "squeezelab/moments.hpp"

namespace squeezelab {

/// Fock-space truncation for exact evolution at small atom number.
struct FockCutoff {
  int n1_max = 0;  // 0 picks mean + 10 sqrt(mean) + 10
  int nb_max = 0;  // 0 picks a cutoff that keeps the squeezed tail below 1e-14
};

/// Exact moments of coherent(n_mean) x vacuum x squeezed(r) after the three-mode
/// flow for dimensionless time tau. Both n1 + n2 and n2 + nb are conserved, so
/// each initial Fock pair evolves inside its own small block. Intended as a test
/// oracle; cost grows like n1_max * nb_max * min(n1_max, nb_max)^2.
MomentVector exact_moments(double n_mean, double r, double tau, FockCutoff cutoff = {});

}  // namespace squeezelab
