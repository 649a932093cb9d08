#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace squeezelab {

/// Quantum expectation values estimated from a phase-space ensemble. Every entry
/// is already ordering-corrected, so it is a linear functional of the sampled
/// trajectories and batch values pool by a count-weighted mean.
enum class Moment : std::size_t {
  n_a1,
  n_a2,
  n_b,
  jx,
  jy,
  jz,
  jx2,
  jy2,
  jz2,
  yb,
  yb2,
  jx_yb,
};

inline constexpr std::size_t kMomentCount = 12;
using MomentVector = std::array<double, kMomentCount>;

inline constexpr double& at(MomentVector& v, Moment m) { return v[static_cast<std::size_t>(m)]; }
inline constexpr double at(const MomentVector& v, Moment m) { return v[static_cast<std::size_t>(m)]; }

/// Number of batches used for batch-means standard errors.
inline constexpr std::size_t kDefaultBatches = 100;

/// Smallest trajectory count >= n that is a multiple of kDefaultBatches.
std::size_t round_up_to_batches(std::size_t n);

/// Batch boundaries [begin, end) for splitting n items into `batches` slices.
std::pair<std::size_t, std::size_t> batch_range(std::size_t n, std::size_t batches, std::size_t b);

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

using MomentFunction = std::function<double(const MomentVector&)>;

class EnsembleMoments {
 public:
  EnsembleMoments() = default;
  EnsembleMoments(std::vector<MomentVector> batch_means, std::vector<std::size_t> batch_counts,
                  std::size_t n_excluded = 0, bool has_covariance = true);

  std::size_t n_trajectories() const noexcept { return n_used_; }
  std::size_t n_excluded() const noexcept { return n_excluded_; }
  std::size_t n_batches() const noexcept { return batch_means_.size(); }
  bool has_covariance() const noexcept { return has_covariance_; }

  const MomentVector& mean() const noexcept { return mean_; }
  const MomentVector& batch_mean(std::size_t b) const { return batch_means_.at(b); }
  std::span<const std::size_t> batch_counts() const noexcept { return batch_counts_; }

  Estimate get(Moment m) const;

  Estimate mean_n_a1() const { return get(Moment::n_a1); }
  Estimate mean_n_a2() const { return get(Moment::n_a2); }
  Estimate mean_n_b() const { return get(Moment::n_b); }
  Estimate mean_jx() const { return get(Moment::jx); }
  Estimate mean_jy() const { return get(Moment::jy); }
  Estimate mean_jz() const { return get(Moment::jz); }
  Estimate mean_jx2() const { return get(Moment::jx2); }
  Estimate mean_jy2() const { return get(Moment::jy2); }
  Estimate mean_jz2() const { return get(Moment::jz2); }
  Estimate mean_yb() const { return get(Moment::yb); }
  Estimate mean_yb2() const { return get(Moment::yb2); }
  Estimate cov_jx_yb() const;

  /// Per-batch first-order influence of f at the pooled mean, evaluated as a
  /// central difference along each batch's deviation. Pair two of these with
  /// covariance() to get the delta-method covariance of two derived quantities.
  std::vector<double> influence(const MomentFunction& f) const;

  /// Covariance of two derived quantities from their batch influences.
  double covariance(std::span<const double> influence_a, std::span<const double> influence_b) const;

  /// f(pooled mean) with a first-order delta-method standard error.
  Estimate derived(const MomentFunction& f) const;

  /// Delete-one-batch jackknife estimate of f, kept as a cross-check on derived().
  Estimate jackknife(const MomentFunction& f) const;

 private:
  std::vector<MomentVector> batch_means_;
  std::vector<std::size_t> batch_counts_;
  MomentVector mean_{};
  std::size_t n_used_ = 0;
  std::size_t n_excluded_ = 0;
  bool has_covariance_ = true;
};

}  // namespace squeezelab
