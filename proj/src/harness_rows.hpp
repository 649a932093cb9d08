#pragma once

#include <chrono>
#include <initializer_list>
#include <limits>
#include <ostream>
#include <string>
#include <string_view>

#include "squeezelab/harness.hpp"
#include "squeezelab/optimize.hpp"
#include "squeezelab/pp.hpp"

namespace squeezelab::detail {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline void add_flag(SweepRow& row, std::string_view flag) {
  if (!row.flags.empty()) row.flags += ';';
  row.flags += flag;
}

enum class Field { r, q_target, q_measured, tau, delta_phi, delta_phi_se, delta_phi_atoms_only, qcrb, qcrb_se };

/// Sets the fields to NaN and records them as not applicable.
void mark_na(SweepRow& row, std::initializer_list<Field> fields);

/// Row for one TW sweep point; failures keep the row with NaN results and a flag.
SweepRow row_from_sweep(const SweepPoint& sp, std::string series);

/// Row for a finished sensitivity evaluation.
SweepRow row_from_result(std::string engine, double r, double q_target, const SensitivityResult& res,
                         std::size_t n_traj, std::string series);

/// Positive-P point at a TW-calibrated tau. Engine failures become flagged rows.
SweepRow pp_row(const ModelParams& params, const CalibrationResult& cal, int pp_steps,
                const Executor& executor, std::string series);

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline void log(const RunContext& ctx, const std::string& line) {
  if (ctx.log != nullptr) *ctx.log << line << '\n' << std::flush;
}

inline const Executor& executor_of(const RunContext& ctx) {
  static const Executor fallback(1);
  return ctx.executor != nullptr ? *ctx.executor : fallback;
}

}  // namespace squeezelab::detail
