#pragma once

#include <cstddef>
#include <functional>
#include <optional>

namespace squeezelab {

/// Name of the environment variable holding the worker count.
inline constexpr const char* kThreadsEnv = "SQUEEZELAB_THREADS";

/// CLI value wins, then SQUEEZELAB_THREADS, then hardware concurrency.
/// Throws Error(config) for a malformed environment value.
unsigned resolve_thread_count(std::optional<unsigned> cli_threads = std::nullopt);

/// Runs independent jobs on a fixed number of workers. Jobs write to disjoint,
/// index-addressed slots, so results never depend on scheduling.
class Executor {
 public:
  explicit Executor(unsigned threads = 1);

  unsigned threads() const noexcept { return threads_; }

  /// Calls fn(i) for every i in [0, n). The exception from the lowest failing
  /// index is rethrown after all workers finish.
  void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn) const;

 private:
  unsigned threads_;
};

}  // namespace squeezelab
