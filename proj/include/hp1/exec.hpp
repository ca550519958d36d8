#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "hp1/errors.hpp"
#include "hp1/scatter.hpp"

namespace hp1 {

enum class Partition {
  Contiguous,  // one static block per worker
  Dynamic,     // fixed-size chunks handed out from a shared counter
};

enum class ScratchMode {
  Pooled,       // each worker's fields back to back in one block
  Interleaved,  // field-major: worker copies of a field are adjacent (false sharing)
};

/// Name of the environment variable that overrides the worker count.
inline constexpr const char* kWorkerEnvVar = "HP1_NUM_THREADS";

struct ExecConfig {
  int n_workers = 1;
  Strategy strategy = Strategy::Serial;
  Partition partition = Partition::Contiguous;
  std::int64_t chunk_size = 1024;
  /// Per-worker scratch in 8-byte slots; used by the generic dispatch overload.
  std::size_t scratch_elements = 0;
  /// Forces contiguous static partitioning and a replicated reduction.
  bool deterministic = false;
  ScratchMode scratch_mode = ScratchMode::Pooled;
  std::size_t cache_line_bytes = kDefaultCacheLineBytes;
};

/// Validate and apply the implied settings (serial => 1 worker, deterministic
/// => contiguous partitioning and no atomics).
ExecConfig normalized(ExecConfig cfg);

/// Reads kWorkerEnvVar; returns `fallback` when unset or not a positive integer.
int worker_count_from_env(int fallback);

struct IndexRange {
  std::int64_t begin = 0;
  std::int64_t end = 0;
  std::int64_t size() const noexcept { return end - begin; }
};

/// Contiguous block of worker `w`; the first (size % n) workers get one extra index.
IndexRange static_block(IndexRange range, int n_workers, int w) noexcept;

class WorkerScratch {
 public:
  WorkerScratch() = default;
  WorkerScratch(std::byte* base, std::span<const std::size_t> offsets,
                std::span<const std::size_t> sizes)
      : base_(base), offsets_(offsets), sizes_(sizes) {}

  /// Field `f` viewed as T (double or std::int64_t).
  template <class T>
  std::span<T> field(std::size_t f) const noexcept {
    static_assert(sizeof(T) == 8);
    return {reinterpret_cast<T*>(base_ + offsets_[f] * 8), sizes_[f]};
  }
  std::size_t n_fields() const noexcept { return sizes_.size(); }

 private:
  std::byte* base_ = nullptr;
  std::span<const std::size_t> offsets_;
  std::span<const std::size_t> sizes_;
};

/// Zero-initialized per-worker scratch, allocated once before dispatch.
class ScratchArena {
 public:
  ScratchArena(std::vector<std::size_t> field_slots, int n_workers,
               ScratchMode mode = ScratchMode::Pooled);

  WorkerScratch worker(int w) const noexcept;
  int n_workers() const noexcept { return n_workers_; }
  ScratchMode mode() const noexcept { return mode_; }
  std::size_t slots_per_worker() const noexcept { return per_worker_; }
  /// Slot ranges [offset, offset+size) of worker w, one per field.
  std::vector<std::pair<std::size_t, std::size_t>> slot_ranges(int w) const;
  bool matches(const std::vector<std::size_t>& field_slots, int n_workers,
               ScratchMode mode) const noexcept;

 private:
  struct Free {
    void operator()(std::byte* p) const noexcept;
  };
  std::vector<std::size_t> sizes_;
  int n_workers_;
  ScratchMode mode_;
  std::size_t per_worker_ = 0;
  std::vector<std::size_t> offsets_;  // n_workers x n_fields
  std::unique_ptr<std::byte[], Free> storage_;
};

/// Collects the first failure of each worker and rethrows the one with the
/// lowest particle index as a ParticleError.
class DispatchFailures {
 public:
  explicit DispatchFailures(int n_workers) : slots_(static_cast<std::size_t>(n_workers)) {}
  void record(int worker, std::int64_t index, std::exception_ptr error) noexcept;
  bool any() const noexcept { return abort_.load(std::memory_order_relaxed); }
  void rethrow_first() const;

 private:
  struct Slot {
    std::int64_t index = -1;
    std::exception_ptr error;
  };
  std::vector<Slot> slots_;
  std::atomic<bool> abort_{false};
};

/// Run fn(w) for w in [0, n); worker 0 runs on the calling thread.
void run_workers(int n_workers, const std::function<void(int)>& fn);

/// Invoke body(worker_id, index, scratch) exactly once per index of `range`.
template <class Body>
void parallel_for_particles(IndexRange range, const ExecConfig& config, ScratchArena& arena,
                            Body&& body) {
  const ExecConfig cfg = normalized(config);
  if (range.size() <= 0) return;
  if (arena.n_workers() < cfg.n_workers) throw_invalid("scratch arena has too few workers");

  DispatchFailures failures(cfg.n_workers);
  std::atomic<std::int64_t> next{range.begin};
  // In deterministic mode workers never abort each other, so the lowest
  // failing index is found regardless of timing.
  const bool early_abort = !cfg.deterministic;

  run_workers(cfg.n_workers, [&](int w) {
    WorkerScratch scratch = arena.worker(w);
    auto run_block = [&](std::int64_t b, std::int64_t e) -> bool {
      std::int64_t i = b;
      try {
        for (; i < e; ++i) {
          if (early_abort && failures.any()) return false;
          body(w, i, scratch);
        }
      } catch (...) {
        failures.record(w, i, std::current_exception());
        return false;
      }
      return true;
    };
    if (cfg.partition == Partition::Contiguous) {
      const IndexRange blk = static_block(range, cfg.n_workers, w);
      run_block(blk.begin, blk.end);
      return;
    }
    for (;;) {
      if (early_abort && failures.any()) return;
      const std::int64_t b = next.fetch_add(cfg.chunk_size, std::memory_order_relaxed);
      if (b >= range.end) return;
      if (!run_block(b, std::min(b + cfg.chunk_size, range.end))) return;
    }
  });
  failures.rethrow_first();
}

/// Generic overload: one scratch field of config.scratch_elements slots.
template <class Body>
void parallel_for_particles(IndexRange range, const ExecConfig& config, Body&& body) {
  const ExecConfig cfg = normalized(config);
  ScratchArena arena({cfg.scratch_elements}, cfg.n_workers, cfg.scratch_mode);
  parallel_for_particles(range, cfg, arena, std::forward<Body>(body));
}

}  // namespace hp1
