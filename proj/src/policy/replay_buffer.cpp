#include "timrl/policy/replay_buffer.hpp"

#include <algorithm>
#include <numeric>

#include "timrl/numerics/errors.hpp"

namespace timrl::policy {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ContractError("replay buffer capacity must be positive");
  ring_.reserve(std::min<std::size_t>(capacity, 1u << 16));
}

void ReplayBuffer::add(ReplayEntry entry) {
  if (ring_.size() < capacity_) {
    ring_.push_back(std::move(entry));
  } else {
    ring_[head_] = std::move(entry);
  }
  head_ = (head_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

const ReplayEntry& ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw ContractError("replay index " + std::to_string(i) + " out of range");
  const std::size_t oldest = size_ < capacity_ ? 0 : head_;
  return ring_[(oldest + i) % capacity_];
}

std::vector<std::size_t> ReplayBuffer::sample(std::size_t batch_size, Rng& rng) const {
  if (batch_size == 0 || batch_size > size_) {
    throw ContractError("cannot sample " + std::to_string(batch_size) + " entries from a buffer of " +
                        std::to_string(size_));
  }
  std::vector<std::size_t> out;
  out.reserve(batch_size);
  if (batch_size * 4 < size_) {
    // Rejection sampling keeps small batches O(batch).
    while (out.size() < batch_size) {
      const std::size_t i = rng.index(size_);
      if (std::find(out.begin(), out.end(), i) == out.end()) out.push_back(i);
    }
    return out;
  }
  std::vector<std::size_t> idx(size_);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < batch_size; ++i) std::swap(idx[i], idx[i + rng.index(size_ - i)]);
  out.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(batch_size));
  return out;
}

std::vector<std::size_t> ReplayBuffer::context_indices(std::size_t i, std::size_t window,
                                                       bool include_self) const {
  const auto& anchor = at(i);
  std::vector<std::size_t> out;
  std::size_t j = include_self ? i + 1 : i;
  int expected_t = include_self ? anchor.t : anchor.t - 1;
  while (j > 0 && out.size() < window) {
    const auto& e = at(j - 1);
    if (e.episode != anchor.episode || e.t != expected_t) break;
    out.push_back(j - 1);
    --j;
    --expected_t;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace timrl::policy
