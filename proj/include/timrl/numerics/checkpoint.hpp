#pragma once

// Checkpoint byte layout (all integers little-endian):
//
//   u32  format version (currently 1)
//   u64  entry count
//   per entry:
//     u32  name length in bytes, then the UTF-8 name (no terminator)
//     u32  rank, then rank × u64 dimensions
//     f64  payload, product(dimensions) IEEE-754 values, little-endian, row-major

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "timrl/numerics/params.hpp"
#include "timrl/numerics/tensor.hpp"

namespace timrl {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedArray {
  std::string name;
  Shape shape;
  std::vector<double> data;

  bool operator==(const NamedArray&) const = default;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_checkpoint(std::ostream& os, const std::vector<NamedArray>& entries);
std::vector<NamedArray> read_checkpoint(std::istream& is);

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedArray>& entries);
std::vector<NamedArray> load_checkpoint(const std::filesystem::path& path);

std::vector<NamedArray> snapshot(const ParamList& params);

/// Copies values from `entries` into `params` by name. Every parameter must be
/// present with an identical shape; otherwise throws DimensionError listing
/// each mismatch.
void restore(const std::vector<NamedArray>& entries, ParamList& params);

}  // namespace timrl
