#pragma once

#include <complex>

namespace squeezelab {

using cplx = std::complex<double>;

/// One truncated-Wigner sample: classical amplitudes for the condensate mode a1,
/// the outcoupled mode a2 and the photon mode b.
struct TwTrajectory {
  cplx alpha1{};
  cplx alpha2{};
  cplx beta{};

  friend bool operator==(const TwTrajectory&, const TwTrajectory&) = default;
};

/// One positive-P sample in doubled phase space. The "p" amplitudes play the role
/// of the conjugates but evolve independently.
struct PpTrajectory {
  cplx alpha1{};
  cplx alpha2{};
  cplx beta{};
  cplx alpha1p{};
  cplx alpha2p{};
  cplx betap{};

  friend bool operator==(const PpTrajectory&, const PpTrajectory&) = default;
};

}  // namespace squeezelab
