#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace squeezelab {

enum class ErrorKind {
  invalid_argument,
  degenerate_input,     // r = 0 makes the QST efficiency 0/0
  depleted_regime,      // beamsplitter closed form outside its validity
  divergence,           // series evaluated at tau = 0
  non_finite,           // integrator produced inf/nan
  insufficient_ensemble,
  unusable_ensemble,    // too many positive-P trajectories diverged
  invalid_q,
  missing_covariance,
  zero_slope,
  negative_variance,
  nonpositive_fisher,
  unreachable_q,
  config,
  validation,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace squeezelab
