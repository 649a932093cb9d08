#include "squeezelab/moments.hpp"

#include <algorithm>
#include <cmath>

#include "squeezelab/error.hpp"

namespace squeezelab {

namespace {

// Relative size of the central-difference step along a batch deviation. f is
// smooth in the pooled means, so the truncation error is O(eps^2).
constexpr double kInfluenceStep = 1e-3;

}  // namespace

std::size_t round_up_to_batches(std::size_t n) {
  if (n == 0) return kDefaultBatches;
  return (n + kDefaultBatches - 1) / kDefaultBatches * kDefaultBatches;
}

std::pair<std::size_t, std::size_t> batch_range(std::size_t n, std::size_t batches, std::size_t b) {
  return {b * n / batches, (b + 1) * n / batches};
}

EnsembleMoments::EnsembleMoments(std::vector<MomentVector> batch_means,
                                 std::vector<std::size_t> batch_counts, std::size_t n_excluded,
                                 bool has_covariance)
    : batch_means_(std::move(batch_means)),
      batch_counts_(std::move(batch_counts)),
      n_excluded_(n_excluded),
      has_covariance_(has_covariance) {
  if (batch_means_.size() != batch_counts_.size()) {
    throw Error(ErrorKind::invalid_argument, "batch means and counts differ in length");
  }
  std::size_t active = 0;
  for (std::size_t b = 0; b < batch_counts_.size(); ++b) {
    if (batch_counts_[b] == 0) continue;
    ++active;
    n_used_ += batch_counts_[b];
  }
  if (n_used_ < 2 || active < 2) {
    throw Error(ErrorKind::insufficient_ensemble, "need at least two trajectories in two batches");
  }
  mean_.fill(0.0);
  for (std::size_t b = 0; b < batch_means_.size(); ++b) {
    const double w = static_cast<double>(batch_counts_[b]) / static_cast<double>(n_used_);
    if (w == 0.0) continue;
    for (std::size_t k = 0; k < kMomentCount; ++k) mean_[k] += w * batch_means_[b][k];
  }
}

Estimate EnsembleMoments::get(Moment m) const {
  const std::size_t k = static_cast<std::size_t>(m);
  return derived([k](const MomentVector& v) { return v[k]; });
}

Estimate EnsembleMoments::cov_jx_yb() const {
  if (!has_covariance_) {
    throw Error(ErrorKind::missing_covariance, "ensemble carries no J_x-Y_b cross moment");
  }
  return derived([](const MomentVector& v) {
    return at(v, Moment::jx_yb) - at(v, Moment::jx) * at(v, Moment::yb);
  });
}

std::vector<double> EnsembleMoments::influence(const MomentFunction& f) const {
  std::vector<double> out(batch_means_.size(), 0.0);
  MomentVector plus{};
  MomentVector minus{};
  for (std::size_t b = 0; b < batch_means_.size(); ++b) {
    if (batch_counts_[b] == 0) continue;
    for (std::size_t k = 0; k < kMomentCount; ++k) {
      const double d = kInfluenceStep * (batch_means_[b][k] - mean_[k]);
      plus[k] = mean_[k] + d;
      minus[k] = mean_[k] - d;
    }
    out[b] = (f(plus) - f(minus)) / (2.0 * kInfluenceStep);
  }
  return out;
}

double EnsembleMoments::covariance(std::span<const double> a, std::span<const double> b) const {
  double acc = 0.0;
  std::size_t active = 0;
  for (std::size_t i = 0; i < batch_counts_.size(); ++i) {
    if (batch_counts_[i] == 0) continue;
    ++active;
    const double w = static_cast<double>(batch_counts_[i]) / static_cast<double>(n_used_);
    acc += w * w * a[i] * b[i];
  }
  return acc * static_cast<double>(active) / static_cast<double>(active - 1);
}

Estimate EnsembleMoments::derived(const MomentFunction& f) const {
  const std::vector<double> d = influence(f);
  return {f(mean_), std::sqrt(std::max(0.0, covariance(d, d)))};
}

Estimate EnsembleMoments::jackknife(const MomentFunction& f) const {
  std::vector<double> loo;
  loo.reserve(batch_means_.size());
  const double total = static_cast<double>(n_used_);
  for (std::size_t b = 0; b < batch_means_.size(); ++b) {
    if (batch_counts_[b] == 0) continue;
    const double nb = static_cast<double>(batch_counts_[b]);
    MomentVector v{};
    for (std::size_t k = 0; k < kMomentCount; ++k) {
      v[k] = (total * mean_[k] - nb * batch_means_[b][k]) / (total - nb);
    }
    loo.push_back(f(v));
  }
  double avg = 0.0;
  for (double x : loo) avg += x;
  avg /= static_cast<double>(loo.size());
  double ss = 0.0;
  for (double x : loo) ss += (x - avg) * (x - avg);
  const double nb = static_cast<double>(loo.size());
  return {f(mean_), std::sqrt((nb - 1.0) / nb * ss)};
}

}  // namespace squeezelab
