#include "hp1/exec.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>
#include <thread>

#include "hp1/errors.hpp"

namespace hp1 {

ExecConfig normalized(ExecConfig cfg) {
  if (cfg.n_workers < 1) throw_invalid("worker count must be at least 1");
  if (cfg.chunk_size < 1) throw_invalid("chunk size must be at least 1");
  if (cfg.strategy == Strategy::Serial) cfg.n_workers = 1;
  if (cfg.deterministic) {
    cfg.partition = Partition::Contiguous;
    if (cfg.strategy == Strategy::Atomic) cfg.strategy = Strategy::Replicated;
  }
  return cfg;
}

int worker_count_from_env(int fallback) {
  const char* raw = std::getenv(kWorkerEnvVar);
  if (raw == nullptr || *raw == '\0') return fallback;
  char* end = nullptr;
  const long v = std::strtol(raw, &end, 10);
  if (*end != '\0' || v < 1 || v > 4096) return fallback;
  return static_cast<int>(v);
}

IndexRange static_block(IndexRange range, int n_workers, int w) noexcept {
  const std::int64_t n = std::max<std::int64_t>(range.size(), 0);
  const std::int64_t base = n / n_workers;
  const std::int64_t extra = n % n_workers;
  const std::int64_t begin = range.begin + w * base + std::min<std::int64_t>(w, extra);
  return {begin, begin + base + (w < extra ? 1 : 0)};
}

void ScratchArena::Free::operator()(std::byte* p) const noexcept {
  ::operator delete[](p, std::align_val_t(kDefaultCacheLineBytes));
}

ScratchArena::ScratchArena(std::vector<std::size_t> field_slots, int n_workers, ScratchMode mode)
    : sizes_(std::move(field_slots)), n_workers_(n_workers), mode_(mode) {
  if (n_workers < 1) throw_invalid("scratch arena needs at least one worker");
  const std::size_t nf = sizes_.size();
  for (std::size_t s : sizes_) per_worker_ += s;
  offsets_.resize(static_cast<std::size_t>(n_workers) * nf);

  std::size_t field_base = 0;
  for (std::size_t f = 0; f < nf; ++f) {
    std::size_t inner = 0;
    for (std::size_t g = 0; g < f; ++g) inner += sizes_[g];
    for (int w = 0; w < n_workers; ++w) {
      std::size_t& off = offsets_[static_cast<std::size_t>(w) * nf + f];
      if (mode == ScratchMode::Pooled) {
        off = static_cast<std::size_t>(w) * per_worker_ + inner;
      } else {
        off = field_base + static_cast<std::size_t>(w) * sizes_[f];
      }
    }
    field_base += static_cast<std::size_t>(n_workers) * sizes_[f];
  }

  const std::size_t bytes = std::max<std::size_t>(per_worker_ * n_workers * 8, 8);
  storage_ = std::unique_ptr<std::byte[], Free>(static_cast<std::byte*>(
      ::operator new[](bytes, std::align_val_t(kDefaultCacheLineBytes))));
  std::memset(storage_.get(), 0, bytes);
}

WorkerScratch ScratchArena::worker(int w) const noexcept {
  const std::size_t nf = sizes_.size();
  return WorkerScratch(storage_.get(),
                       std::span<const std::size_t>(offsets_).subspan(static_cast<std::size_t>(w) * nf, nf),
                       sizes_);
}

std::vector<std::pair<std::size_t, std::size_t>> ScratchArena::slot_ranges(int w) const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t nf = sizes_.size();
  for (std::size_t f = 0; f < nf; ++f) {
    out.emplace_back(offsets_[static_cast<std::size_t>(w) * nf + f], sizes_[f]);
  }
  return out;
}

bool ScratchArena::matches(const std::vector<std::size_t>& field_slots, int n_workers,
                           ScratchMode mode) const noexcept {
  return field_slots == sizes_ && n_workers == n_workers_ && mode == mode_;
}

void DispatchFailures::record(int worker, std::int64_t index, std::exception_ptr error) noexcept {
  Slot& s = slots_[static_cast<std::size_t>(worker)];
  if (s.index < 0) {
    s.index = index;
    s.error = std::move(error);
  }
  abort_.store(true, std::memory_order_relaxed);
}

void DispatchFailures::rethrow_first() const {
  const Slot* first = nullptr;
  for (const Slot& s : slots_) {
    if (s.index >= 0 && (first == nullptr || s.index < first->index)) first = &s;
  }
  if (first == nullptr) return;
  try {
    std::rethrow_exception(first->error);
  } catch (const ParticleError&) {
    throw;
  } catch (const Error& e) {
    throw ParticleError(e.code(), first->index, e.what());
  } catch (const std::exception& e) {
    throw ParticleError(Errc::Internal, first->index, e.what());
  } catch (...) {
    throw ParticleError(Errc::Internal, first->index, "unknown failure");
  }
}

void run_workers(int n_workers, const std::function<void(int)>& fn) {
  if (n_workers <= 1) {
    fn(0);
    return;
  }
  std::vector<std::jthread> threads;
  threads.reserve(static_cast<std::size_t>(n_workers - 1));
  for (int w = 1; w < n_workers; ++w) threads.emplace_back(fn, w);
  fn(0);
}

}  // namespace hp1
