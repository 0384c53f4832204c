#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

#include "errors.hpp"
#include "numeric.hpp"

namespace mmcoal {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of stream `index` under a master seed. Streams are independent of how
/// work is split across threads.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t master, std::uint64_t index) {
  return Rng(derive_seed(master, index));
}

/// Uniform on [0, 1).
inline double uniform01(Rng& rng) noexcept {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform on (0, 1).
inline double uniform_open01(Rng& rng) noexcept {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Uniform integer on [0, n), n >= 1.
inline std::int64_t uniform_index(Rng& rng, std::int64_t n) {
  std::uniform_int_distribution<std::int64_t> dist(0, n - 1);
  return dist(rng);
}

inline double exponential(Rng& rng, double rate) noexcept {
  return -std::log(uniform_open01(rng)) / rate;
}

/// Number of failures before the first success, success probability p in (0, 1].
/// Saturates at the largest int64 when the draw overflows.
inline std::int64_t geometric_failures(Rng& rng, double p) noexcept {
  if (p >= 1.0) return 0;
  const double g = std::floor(std::log(uniform_open01(rng)) / std::log1p(-p));
  if (!(g < 9.0e18)) return std::numeric_limits<std::int64_t>::max();
  return static_cast<std::int64_t>(g);
}

inline std::int64_t binomial_draw(Rng& rng, std::int64_t n, double p) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  std::binomial_distribution<std::int64_t> dist(n, p);
  return dist(rng);
}

inline std::int64_t poisson_draw(Rng& rng, double mean) {
  if (mean <= 0.0) return 0;
  std::poisson_distribution<std::int64_t> dist(mean);
  return dist(rng);
}

/// Successes among `draws` items taken without replacement from `total` items of
/// which `successes` are marked.
inline std::int64_t hypergeometric_draw(Rng& rng, std::int64_t total, std::int64_t successes,
                                        std::int64_t draws) {
  if (successes < 0 || draws < 0 || successes > total || draws > total) {
    throw DomainError("hypergeometric_draw: invalid parameters");
  }
  // Symmetric in (successes, draws); iterate over the smaller.
  std::int64_t small = std::min(successes, draws);
  std::int64_t other = std::max(successes, draws);
  if (small == 0) return 0;
  if (small <= 64) {
    std::int64_t hit = 0;
    std::int64_t remaining = total;
    std::int64_t marked = other;
    for (std::int64_t i = 0; i < small; ++i) {
      if (uniform_index(rng, remaining) < marked) {
        ++hit;
        --marked;
      }
      --remaining;
    }
    return hit;
  }
  const double t = static_cast<double>(total);
  const double s = static_cast<double>(other);
  const double d = static_cast<double>(small);
  const std::int64_t lo = std::max<std::int64_t>(0, small - (total - other));
  const std::int64_t hi = small;
  std::int64_t mode = static_cast<std::int64_t>(std::floor((d + 1) * (s + 1) / (t + 2)));
  mode = std::clamp(mode, lo, hi);
  const double pmode = std::exp(log_hypergeometric_pmf(mode, total, other, small));
  // Chop-down search alternating around the mode.
  double u = uniform01(rng);
  u -= pmode;
  if (u <= 0) return mode;
  double pdown = pmode, pup = pmode;
  std::int64_t down = mode, up = mode;
  auto ratio_up = [&](std::int64_t k) {  // p(k+1)/p(k)
    return (s - k) * (d - k) / ((k + 1.0) * (t - s - d + k + 1.0));
  };
  while (down > lo || up < hi) {
    if (up < hi) {
      pup *= ratio_up(up);
      ++up;
      u -= pup;
      if (u <= 0) return up;
    }
    if (down > lo) {
      pdown /= ratio_up(down - 1);
      --down;
      u -= pdown;
      if (u <= 0) return down;
    }
  }
  return mode;
}

/// Runs fn(index, rng) for index in [0, count) on `threads` workers. Each index
/// gets its own generator derived from (seed, index), so results do not depend on
/// the number of workers. Results come back in index order.
template <class Fn>
auto run_replicates(std::size_t count, std::uint64_t seed, unsigned threads, Fn&& fn)
    -> std::vector<decltype(fn(std::size_t{}, std::declval<Rng&>()))> {
  using Result = decltype(fn(std::size_t{}, std::declval<Rng&>()));
  std::vector<Result> out(count);
  if (threads == 0) threads = 1;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::size_t error_index = std::numeric_limits<std::size_t>::max();
  std::exception_ptr error;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        Rng rng = make_rng(seed, i);
        out[i] = fn(i, rng);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace mmcoal
