#pragma once

#include <cstddef>
#include <functional>

namespace videograph {

/// Worker count: VIDEOGRAPH_THREADS when set to a positive integer,
/// otherwise the machine's hardware concurrency.
std::size_t configured_threads();

/// Runs body(begin, end) over contiguous chunks of [0, count) on up to
/// `threads` threads. Chunk boundaries depend only on count and threads.
void parallel_chunks(std::size_t count, std::size_t threads,
                     const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace videograph
