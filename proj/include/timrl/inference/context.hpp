#pragma once

#include <span>
#include <vector>

#include "timrl/envs/env.hpp"
#include "timrl/envs/observation.hpp"
#include "timrl/numerics/tensor.hpp"

namespace timrl::inference {

/// Width of one context row: [pad(s), pad(a), r, pad(s')].
std::size_t context_row_width(const envs::PadDims& dims);

/// Column layout of a context row.
struct RowLayout {
  std::size_t state = 0;
  std::size_t action = 0;

  std::size_t state_begin() const { return 0; }
  std::size_t action_begin() const { return state; }
  std::size_t reward_col() const { return state + action; }
  std::size_t next_state_begin() const { return state + action + 1; }
  std::size_t width() const { return 2 * state + action + 1; }
};

std::vector<double> context_row(const envs::Transition& tr, const envs::EnvSpec& spec,
                                const envs::PadDims& dims,
                                const envs::RunningNormalizer* normalizer);

/// The up-to-H most recent transitions, encoded as rows.
class ContextWindow {
 public:
  /// Keeps the last `window` entries of `transitions` (oldest first).
  /// Throws ContractError if `transitions` is empty.
  static ContextWindow build(std::span<const envs::Transition> transitions, std::size_t window,
                             const envs::EnvSpec& spec, const envs::PadDims& dims,
                             const envs::RunningNormalizer* normalizer);
  static ContextWindow from_rows(Tensor rows);

  const Tensor& rows() const { return rows_; }
  std::size_t length() const { return rows_.rows(); }

 private:
  Tensor rows_;
};

/// Several variable-length contexts stacked for one batched forward pass.
struct ContextBatch {
  Tensor rows;        // [R×W], all contexts concatenated
  Tensor mean_pool;   // [B×R], row b averages context b
  Tensor membership;  // [B×R], 0/1
  Tensor expand;      // [R×B], broadcasts a per-context row back to its rows
  std::vector<std::size_t> lengths;

  std::size_t contexts() const { return lengths.size(); }

  static ContextBatch stack(const std::vector<std::vector<std::vector<double>>>& contexts);
};

}  // namespace timrl::inference
