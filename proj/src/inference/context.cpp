#include "timrl/inference/context.hpp"

#include "timrl/numerics/errors.hpp"

namespace timrl::inference {

std::size_t context_row_width(const envs::PadDims& dims) {
  return RowLayout{dims.state, dims.action}.width();
}

std::vector<double> context_row(const envs::Transition& tr, const envs::EnvSpec& spec,
                                const envs::PadDims& dims,
                                const envs::RunningNormalizer* normalizer) {
  std::vector<double> row;
  row.reserve(context_row_width(dims));
  const auto s = envs::pad_observation(tr.state, spec, dims, normalizer);
  const auto a = envs::pad_action(tr.action, dims);
  const auto s2 = envs::pad_observation(tr.next_state, spec, dims, normalizer);
  row.insert(row.end(), s.begin(), s.end());
  row.insert(row.end(), a.begin(), a.end());
  row.push_back(tr.reward);
  row.insert(row.end(), s2.begin(), s2.end());
  return row;
}

ContextWindow ContextWindow::build(std::span<const envs::Transition> transitions,
                                   std::size_t window, const envs::EnvSpec& spec,
                                   const envs::PadDims& dims,
                                   const envs::RunningNormalizer* normalizer) {
  if (transitions.empty() || window == 0) throw ContractError("context window needs at least one transition");
  const std::size_t n = std::min(window, transitions.size());
  const std::size_t width = context_row_width(dims);
  std::vector<double> data;
  data.reserve(n * width);
  for (std::size_t i = transitions.size() - n; i < transitions.size(); ++i) {
    const auto row = context_row(transitions[i], spec, dims, normalizer);
    data.insert(data.end(), row.begin(), row.end());
  }
  ContextWindow ctx;
  ctx.rows_ = Tensor({n, width}, std::move(data));
  return ctx;
}

ContextWindow ContextWindow::from_rows(Tensor rows) {
  if (!rows.defined() || rows.rank() != 2) throw ContractError("context window needs a non-empty row matrix");
  ContextWindow ctx;
  ctx.rows_ = std::move(rows);
  return ctx;
}

ContextBatch ContextBatch::stack(const std::vector<std::vector<std::vector<double>>>& contexts) {
  if (contexts.empty()) throw ContractError("context batch needs at least one context");
  ContextBatch batch;
  std::size_t total = 0;
  const std::size_t width = contexts.front().empty() ? 0 : contexts.front().front().size();
  for (const auto& c : contexts) {
    if (c.empty()) throw ContractError("context batch contains an empty context");
    batch.lengths.push_back(c.size());
    total += c.size();
  }
  const std::size_t b = contexts.size();
  std::vector<double> rows;
  rows.reserve(total * width);
  std::vector<double> pool(b * total, 0.0), member(b * total, 0.0), expand(total * b, 0.0);
  std::size_t r = 0;
  for (std::size_t i = 0; i < b; ++i) {
    const double inv = 1.0 / static_cast<double>(contexts[i].size());
    for (const auto& row : contexts[i]) {
      if (row.size() != width) throw DimensionError("context rows differ in width");
      rows.insert(rows.end(), row.begin(), row.end());
      pool[i * total + r] = inv;
      member[i * total + r] = 1.0;
      expand[r * b + i] = 1.0;
      ++r;
    }
  }
  batch.rows = Tensor({total, width}, std::move(rows));
  batch.mean_pool = Tensor({b, total}, std::move(pool));
  batch.membership = Tensor({b, total}, std::move(member));
  batch.expand = Tensor({total, b}, std::move(expand));
  return batch;
}

}  // namespace timrl::inference
