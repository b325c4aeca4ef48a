#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace rcb {

/// Worker count used when none is given: hardware concurrency, at least 1.
unsigned default_threads();

/// Calls body(i) for every i in [0, n) on up to `threads` workers. Indices are
/// handed out in increasing order; the first exception is rethrown after join.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

/// out[i] = job(i). Slots are keyed by index, so any reduction over the result
/// runs in stream order whatever the thread count.
template <class R, class Job>
std::vector<R> map_paths(std::size_t n, unsigned threads, Job&& job) {
  std::vector<R> out(n);
  parallel_for(n, threads, [&](std::size_t i) { out[i] = job(i); });
  return out;
}

/// Runs job(i) for i in [0, n) in blocks of `block` and hands each result to
/// sink(i, result) in increasing i on the calling thread. Memory stays at one block.
template <class R, class Job, class Sink>
void for_each_ordered(std::size_t n, unsigned threads, Job&& job, Sink&& sink,
                      std::size_t block = 1024) {
  for (std::size_t start = 0; start < n; start += block) {
    const std::size_t m = n - start < block ? n - start : block;
    std::vector<R> part = map_paths<R>(m, threads, [&](std::size_t i) { return job(start + i); });
    for (std::size_t i = 0; i < m; ++i) sink(start + i, part[i]);
  }
}

}  // namespace rcb
