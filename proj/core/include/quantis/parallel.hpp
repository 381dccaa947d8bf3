#ifndef QUANTIS_PARALLEL_HPP
#define QUANTIS_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace quantis {

// Process-wide worker count for parallel loops. Defaults to the hardware
// concurrency; the CLI overrides it from --threads.
int num_threads();
void set_num_threads(int n);

// Splits [0, n) into fixed-size chunks and runs fn(chunk_index, begin, end)
// for each. The chunk layout depends only on n and chunk_size, never on the
// worker count, so callers that accumulate per-chunk results and merge them
// in chunk-index order get bit-identical output for any thread count.
// fn must write only to state owned by its chunk index.
void parallel_chunks(
    std::size_t n, std::size_t chunk_size,
    const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

}  // namespace quantis

#endif
