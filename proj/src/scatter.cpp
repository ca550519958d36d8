#include "hp1/scatter.hpp"

#include <algorithm>
#include <cstring>
#include <new>
#include <string>
#include <utility>

#include "hp1/errors.hpp"

namespace hp1 {

std::string_view strategy_name(Strategy s) noexcept {
  switch (s) {
    case Strategy::Serial: return "serial";
    case Strategy::Replicated: return "replicated";
    case Strategy::ReplicatedPadded: return "padded";
    case Strategy::PooledContiguous: return "pooled";
    case Strategy::Atomic: return "atomic";
  }
  return "unknown";
}

Strategy strategy_from_name(std::string_view name) {
  for (Strategy s : {Strategy::Serial, Strategy::Replicated, Strategy::ReplicatedPadded,
                     Strategy::PooledContiguous, Strategy::Atomic}) {
    if (strategy_name(s) == name) return s;
  }
  throw_invalid("unknown strategy '" + std::string(name) + "'");
}

void ScatterAccumulator::AlignedFree::operator()(double* p) const noexcept {
  ::operator delete[](p, std::align_val_t(align));
}

ScatterAccumulator::ScatterAccumulator(Strategy strategy, std::int64_t n_dofs, int n_workers,
                                       std::size_t cache_line_bytes)
    : strategy_(strategy), n_dofs_(n_dofs), n_workers_(n_workers), block_(nullptr, {64}) {
  if (n_dofs < 1) throw_invalid("accumulator needs at least one DOF");
  if (n_workers < 1) throw_invalid("accumulator needs at least one worker");
  if (cache_line_bytes < sizeof(double) || cache_line_bytes % sizeof(double) != 0 ||
      (cache_line_bytes & (cache_line_bytes - 1)) != 0) {
    throw_invalid("cache line size must be a power of two multiple of 8 bytes");
  }
  const std::size_t align = std::max(cache_line_bytes, alignof(std::max_align_t));
  auto allocate = [&](std::size_t elements) {
    block_elements_ = elements;
    block_ = std::unique_ptr<double[], AlignedFree>(
        static_cast<double*>(::operator new[](elements * sizeof(double), std::align_val_t(align))),
        AlignedFree{align});
    std::fill_n(block_.get(), elements, 0.0);
  };

  switch (strategy) {
    case Strategy::Serial:
      throw_invalid("serial strategy deposits directly and has no accumulator");
    case Strategy::Replicated:
      copies_.assign(static_cast<std::size_t>(n_workers),
                     std::vector<double>(static_cast<std::size_t>(n_dofs), 0.0));
      break;
    case Strategy::ReplicatedPadded: {
      const auto line = static_cast<std::int64_t>(cache_line_bytes / sizeof(double));
      stride_ = (n_dofs + line - 1) / line * line;
      allocate(static_cast<std::size_t>(stride_ * n_workers));
      break;
    }
    case Strategy::PooledContiguous:
      stride_ = n_dofs;
      allocate(static_cast<std::size_t>(stride_ * n_workers));
      break;
    case Strategy::Atomic:
      allocate(static_cast<std::size_t>(n_dofs));
      break;
  }
}

double* ScatterAccumulator::copy_ptr(int worker) noexcept {
  return const_cast<double*>(std::as_const(*this).copy_ptr(worker));
}

const double* ScatterAccumulator::copy_ptr(int worker) const noexcept {
  switch (strategy_) {
    case Strategy::Replicated: return copies_[static_cast<std::size_t>(worker)].data();
    case Strategy::ReplicatedPadded:
    case Strategy::PooledContiguous: return block_.get() + stride_ * worker;
    default: return block_.get();
  }
}

void ScatterAccumulator::deposit(int worker, std::int64_t index, double value) {
  if (worker < 0 || worker >= n_workers_) {
    throw Error(Errc::Logic, "worker id " + std::to_string(worker) + " out of range");
  }
  if (index < 0 || index >= n_dofs_) {
    throw Error(Errc::Logic, "deposit index " + std::to_string(index) + " out of range");
  }
  access(worker).add(index, value);
}

ScatterAccess ScatterAccumulator::access(int worker) noexcept {
  return {copy_ptr(worker), n_dofs_, strategy_ == Strategy::Atomic};
}

std::span<const double> ScatterAccumulator::worker_copy(int worker) const {
  if (worker < 0 || worker >= n_workers_) {
    throw Error(Errc::Logic, "worker id " + std::to_string(worker) + " out of range");
  }
  return {copy_ptr(worker), static_cast<std::size_t>(n_dofs_)};
}

std::vector<double> ScatterAccumulator::contribute() const {
  std::vector<double> out(static_cast<std::size_t>(n_dofs_));
  contribute_into(out);
  return out;
}

void ScatterAccumulator::contribute_into(std::span<double> out) const {
  if (static_cast<std::int64_t>(out.size()) != n_dofs_) {
    throw_invalid("contribute target has the wrong length");
  }
  const double* first = copy_ptr(0);
  std::copy_n(first, n_dofs_, out.data());
  if (strategy_ == Strategy::Atomic) return;
  for (int w = 1; w < n_workers_; ++w) {
    const double* src = copy_ptr(w);
    for (std::int64_t i = 0; i < n_dofs_; ++i) out[static_cast<std::size_t>(i)] += src[i];
  }
}

void ScatterAccumulator::reset() noexcept {
  if (strategy_ == Strategy::Replicated) {
    for (auto& c : copies_) std::fill(c.begin(), c.end(), 0.0);
  } else {
    std::fill_n(block_.get(), block_elements_, 0.0);
  }
}

}  // namespace hp1
