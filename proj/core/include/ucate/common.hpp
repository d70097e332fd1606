#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace ucate {

// Malformed inputs: files, schemas, configs, violated preconditions.
class input_error : public std::runtime_error {
 public:
  explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Analysis failures on schema-valid data: degenerate designs, divergent
// simulations, unstable bootstraps.
class estimation_error : public std::runtime_error {
 public:
  explicit estimation_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Rank-deficient regression design; bootstrap replicates catch this one
// specifically (a discard), everything else propagates.
class rank_error : public estimation_error {
 public:
  explicit rank_error(const std::string& msg) : estimation_error(msg) {}
};

// Inclusive index range [first, last], 0-based.
struct IndexRange {
  std::size_t first = 0;
  std::size_t last = 0;

  std::size_t size() const { return last - first + 1; }
  bool contains(std::size_t i) const { return i >= first && i <= last; }
};

inline bool operator==(const IndexRange& a, const IndexRange& b) {
  return a.first == b.first && a.last == b.last;
}

// Runs fn(i) for i in [0, n). Work is partitioned into contiguous blocks by
// index, so any result written to slot i is identical for every thread count.
template <typename Fn>
void parallel_for_index(std::size_t n, int threads, Fn&& fn) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::mutex error_mutex;
  std::exception_ptr first_error;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      const std::size_t lo = n * w / workers;
      const std::size_t hi = n * (w + 1) / workers;
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace ucate
