#pragma once

#include <cstdint>
#include <vector>

#include "timrl/envs/env.hpp"
#include "timrl/inference/encoder.hpp"
#include "timrl/numerics/random.hpp"

namespace timrl::policy {

struct ReplayEntry {
  envs::Transition transition;
  inference::TaskEmbedding embedding;  // active when the step was taken
  std::uint64_t episode = 0;
  int t = 0;
};

/// Fixed-capacity FIFO ring of labeled transitions. Episodes are appended
/// whole, so an entry's in-episode predecessors sit directly before it.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void add(ReplayEntry entry);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  /// i-th oldest entry.
  const ReplayEntry& at(std::size_t i) const;

  /// batch_size distinct indices drawn uniformly. Throws ContractError if
  /// the buffer holds fewer than batch_size entries.
  std::vector<std::size_t> sample(std::size_t batch_size, Rng& rng) const;

  /// Indices of up to `window` entries of the same episode ending at i
  /// (inclusive when `include_self`), oldest first.
  std::vector<std::size_t> context_indices(std::size_t i, std::size_t window, bool include_self) const;

 private:
  std::size_t capacity_;
  std::vector<ReplayEntry> ring_;
  std::size_t head_ = 0;  // next write slot
  std::size_t size_ = 0;
};

}  // namespace timrl::policy
