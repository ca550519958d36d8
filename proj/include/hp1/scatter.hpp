#pragma once

#include <atomic>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace hp1 {

/// How the current vector is reduced across workers. Serial deposits
/// directly into the output and runs on one worker.
enum class Strategy {
  Serial,
  Replicated,        // one heap-allocated copy per worker
  ReplicatedPadded,  // copies in one block, stride rounded up to a cache line
  PooledContiguous,  // copies carved back to back from one allocation
  Atomic,            // single shared vector, atomic additions (nondeterministic)
};

std::string_view strategy_name(Strategy s) noexcept;
/// Accepts serial, replicated, padded, pooled, atomic. Throws on anything else.
Strategy strategy_from_name(std::string_view name);

inline constexpr std::size_t kDefaultCacheLineBytes = 64;

/// Raw deposit handle for one worker, used in the hot loop.
struct ScatterAccess {
  double* data = nullptr;
  std::int64_t n_dofs = 0;
  bool atomic = false;

  void add(std::int64_t index, double value) const noexcept {
    assert(index >= 0 && index < n_dofs);
    if (atomic) {
      std::atomic_ref<double>(data[index]).fetch_add(value, std::memory_order_relaxed);
    } else {
      data[index] += value;
    }
  }
};

class ScatterAccumulator {
 public:
  ScatterAccumulator(Strategy strategy, std::int64_t n_dofs, int n_workers,
                     std::size_t cache_line_bytes = kDefaultCacheLineBytes);

  Strategy strategy() const noexcept { return strategy_; }
  std::int64_t n_dofs() const noexcept { return n_dofs_; }
  int n_workers() const noexcept { return n_workers_; }
  /// Distance in elements between consecutive worker copies (0 for Atomic
  /// and Replicated, whose copies are not carved from one block).
  std::int64_t stride() const noexcept { return stride_; }

  /// Checked deposit; out-of-range worker or index raises Errc::Logic.
  void deposit(int worker, std::int64_t index, double value);
  ScatterAccess access(int worker) noexcept;

  /// Storage worker `worker` deposits into (the shared vector for Atomic).
  std::span<const double> worker_copy(int worker) const;

  /// Sum worker copies slot by slot, worker 0 first. Call after all deposits.
  std::vector<double> contribute() const;
  void contribute_into(std::span<double> out) const;

  void reset() noexcept;

 private:
  double* copy_ptr(int worker) noexcept;
  const double* copy_ptr(int worker) const noexcept;

  struct AlignedFree {
    std::size_t align;
    void operator()(double* p) const noexcept;
  };

  Strategy strategy_;
  std::int64_t n_dofs_;
  int n_workers_;
  std::int64_t stride_ = 0;
  std::unique_ptr<double[], AlignedFree> block_;
  std::size_t block_elements_ = 0;
  std::vector<std::vector<double>> copies_;
};

}  // namespace hp1
