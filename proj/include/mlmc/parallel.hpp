#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

namespace mlmc {

// Execution policy for sample loops.  `threads <= 0` means use the hardware
// concurrency.  Work is split into fixed chunks of `chunk` samples; each
// chunk is reduced independently and the per-chunk results are merged in
// chunk order.  Because the chunking is independent of the thread count,
// results are bit-identical for any number of threads.
struct ExecPolicy {
  int threads = 0;
  std::int64_t chunk = 4096;

  int resolved_threads() const {
    if (threads > 0) return threads;
    const unsigned hardware = std::thread::hardware_concurrency();
    return hardware > 0 ? static_cast<int>(hardware) : 1;
  }
};

// Streaming mean/variance accumulator (Welford), with bookkeeping for
// non-finite samples.  Non-finite values are counted and excluded from the
// moments; their signs are tracked so a fully divergent batch can still
// report a signed marker.
struct MomentAccumulator {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  std::int64_t n_nonfinite = 0;
  std::int64_t n_positive_infinite = 0;
  std::int64_t n_negative_infinite = 0;

  void add(double value) {
    if (!std::isfinite(value)) {
      ++n_nonfinite;
      if (value > 0.0) ++n_positive_infinite;
      if (value < 0.0) ++n_negative_infinite;
      return;
    }
    ++n;
    const double delta = value - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (value - mean);
  }

  // Chan et al. pairwise combination; merging in a fixed order keeps the
  // result independent of how chunks were assigned to threads.
  void merge(const MomentAccumulator& other) {
    n_nonfinite += other.n_nonfinite;
    n_positive_infinite += other.n_positive_infinite;
    n_negative_infinite += other.n_negative_infinite;
    if (other.n == 0) return;
    if (n == 0) {
      n = other.n;
      mean = other.mean;
      m2 = other.m2;
      return;
    }
    const double total = static_cast<double>(n + other.n);
    const double delta = other.mean - mean;
    const double combined_mean = mean + delta * (static_cast<double>(other.n) / total);
    m2 += other.m2 +
          delta * delta * (static_cast<double>(n) * static_cast<double>(other.n) / total);
    mean = combined_mean;
    n += other.n;
  }

  // Unbiased sample variance; 0 when fewer than two finite samples exist.
  double variance() const {
    return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0;
  }

  // Signed marker summarizing an all-divergent batch: +inf or -inf when the
  // blowups agree in sign, NaN otherwise.
  double divergence_marker() const {
    if (n_positive_infinite > n_negative_infinite) {
      return std::numeric_limits<double>::infinity();
    }
    if (n_negative_infinite > n_positive_infinite) {
      return -std::numeric_limits<double>::infinity();
    }
    return std::numeric_limits<double>::quiet_NaN();
  }
};

// Reduce `count` items into a State.  `per_item(state, i)` folds item i into
// a chunk-local state; chunk states are merged in ascending chunk order with
// `merge(accumulated, chunk_state)`.  The reduction tree is a function of
// `count` and `exec.chunk` only, never of the thread count.
template <class State, class PerItem, class Merge>
State parallel_reduce(std::int64_t count, const ExecPolicy& exec, State initial,
                      PerItem&& per_item, Merge&& merge) {
  if (count < 0) throw std::invalid_argument("parallel_reduce: count must be >= 0");
  if (exec.chunk < 1) throw std::invalid_argument("parallel_reduce: chunk must be >= 1");
  if (count == 0) return initial;

  const std::int64_t n_chunks = (count + exec.chunk - 1) / exec.chunk;
  const int n_threads =
      static_cast<int>(std::min<std::int64_t>(exec.resolved_threads(), n_chunks));

  std::vector<State> partial(static_cast<std::size_t>(n_chunks), initial);
  auto run_chunk = [&](std::int64_t c) {
    const std::int64_t begin = c * exec.chunk;
    const std::int64_t end = std::min(count, begin + exec.chunk);
    State state = initial;
    for (std::int64_t i = begin; i < end; ++i) per_item(state, i);
    partial[static_cast<std::size_t>(c)] = std::move(state);
  };

  if (n_threads <= 1) {
    for (std::int64_t c = 0; c < n_chunks; ++c) run_chunk(c);
  } else {
    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) {
      workers.emplace_back([&] {
        for (std::int64_t c = next.fetch_add(1); c < n_chunks; c = next.fetch_add(1)) {
          run_chunk(c);
        }
      });
    }
    for (auto& worker : workers) worker.join();
  }

  State result = std::move(partial[0]);
  for (std::int64_t c = 1; c < n_chunks; ++c) {
    merge(result, partial[static_cast<std::size_t>(c)]);
  }
  return result;
}

// Moments of value_of(0..count-1) under the deterministic chunked reduction.
template <class ValueOf>
MomentAccumulator parallel_moments(std::int64_t count, const ExecPolicy& exec,
                                   ValueOf&& value_of) {
  return parallel_reduce(
      count, exec, MomentAccumulator{},
      [&value_of](MomentAccumulator& acc, std::int64_t i) { acc.add(value_of(i)); },
      [](MomentAccumulator& acc, const MomentAccumulator& other) { acc.merge(other); });
}

}  // namespace mlmc
