#pragma once

// Counter-based seed derivation and a deterministic replicate loop.

#include <cstddef>
#include <cstdint>
#include <functional>

namespace kclab {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Seed for replicate `index` under `master`. Depends only on the pair, so
/// replicate streams are the same under any schedule.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Runs body(i) for i in [0, count) on up to `threads` workers with a static
/// contiguous partition. Callers write results into slot i and reduce in index
/// order afterwards. The first exception thrown by a worker is rethrown.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace kclab
