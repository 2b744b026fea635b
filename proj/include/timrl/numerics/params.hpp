#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "timrl/numerics/tensor.hpp"

namespace timrl {

/// Named learnable tensors, in a stable order.
using ParamList = std::vector<std::pair<std::string, Tensor>>;

/// FNV-1a over names, shapes and raw float bytes.
std::uint64_t checksum(const ParamList& params);

std::vector<Tensor> tensors_of(const ParamList& params);

/// dst ← τ·src + (1−τ)·dst, elementwise; lists must match in order and shape.
void soft_update(const ParamList& src, ParamList& dst, double tau);
void copy_values(const ParamList& src, ParamList& dst);

}  // namespace timrl
