#pragma once

// Block-parallel Monte Carlo. Work is cut into fixed blocks, each with its
// own stream derived from a base seed, so results never depend on how many
// threads run the blocks.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "mgpx/core.hpp"

namespace mgpx::parallel {

inline constexpr std::size_t default_block = 8192;

/// Worker count: MGPX_THREADS when set, hardware concurrency otherwise.
inline std::size_t thread_count() {
  std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("MGPX_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return std::min<std::size_t>(static_cast<std::size_t>(v), 256);
  }
  return hw;
}

/// Runs fn(block) for block in [0, nblocks). Exceptions are rethrown on the
/// calling thread (the first one raised wins).
template <class Fn>
void for_blocks(std::size_t nblocks, Fn&& fn) {
  const std::size_t workers = std::min(thread_count(), nblocks);
  if (workers <= 1) {
    for (std::size_t b = 0; b < nblocks; ++b) fn(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t b = next.fetch_add(1);
        if (b >= nblocks) return;
        try {
          fn(b);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(nblocks);
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// Splits n items into fixed-size blocks; fn(block_rng, begin, end).
template <class Fn>
void for_ranges(RngStream& rng, std::size_t n, Fn&& fn, std::size_t block = default_block) {
  const std::uint64_t base = rng.next_u64();
  const std::size_t nblocks = (n + block - 1) / block;
  for_blocks(nblocks, [&](std::size_t b) {
    RngStream local(base, b);
    const std::size_t begin = b * block;
    fn(local, begin, std::min(n, begin + block));
  });
}

/// Sums k per-draw statistics over n draws. fn(local_rng, acc) adds one
/// draw's contributions into acc[0..k). Block sums are combined in block
/// order, so the result is independent of the thread count.
template <class Fn>
std::vector<double> accumulate(RngStream& rng, std::size_t n, std::size_t k, Fn&& fn,
                               std::size_t block = default_block) {
  const std::size_t nblocks = (n + block - 1) / block;
  std::vector<double> partial(nblocks * k, 0.0);
  for_ranges(
      rng, n,
      [&](RngStream& local, std::size_t begin, std::size_t end) {
        double* acc = partial.data() + (begin / block) * k;
        for (std::size_t i = begin; i < end; ++i) fn(local, acc);
      },
      block);
  std::vector<double> total(k, 0.0);
  for (std::size_t b = 0; b < nblocks; ++b) {
    for (std::size_t c = 0; c < k; ++c) total[c] += partial[b * k + c];
  }
  return total;
}

/// Mean and standard error of a scalar per-draw statistic.
template <class Fn>
Estimate mean(RngStream& rng, std::size_t n, Fn&& fn) {
  if (n == 0) throw DomainError("parallel::mean: n must be positive");
  const auto s = accumulate(rng, n, 2, [&](RngStream& local, double* acc) {
    const double v = fn(local);
    acc[0] += v;
    acc[1] += v * v;
  });
  const double nn = static_cast<double>(n);
  const double m = s[0] / nn;
  const double var = n > 1 ? std::max(0.0, (s[1] - nn * m * m) / (nn - 1.0)) : 0.0;
  return {m, std::sqrt(var / nn), {}};
}

}  // namespace mgpx::parallel
