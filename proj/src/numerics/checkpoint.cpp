#include "timrl/numerics/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "timrl/numerics/errors.hpp"

namespace timrl {

namespace {

template <typename U>
void put_le(std::ostream& os, U value) {
  char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  os.write(bytes, sizeof(U));
}

template <typename U>
U get_le(std::istream& is) {
  unsigned char bytes[sizeof(U)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(U))) {
    throw CheckpointError("checkpoint truncated");
  }
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
  return value;
}

}  // namespace

void write_checkpoint(std::ostream& os, const std::vector<NamedArray>& entries) {
  put_le<std::uint32_t>(os, kCheckpointVersion);
  put_le<std::uint64_t>(os, entries.size());
  for (const auto& e : entries) {
    if (shape_numel(e.shape) != e.data.size()) {
      throw DimensionError("checkpoint entry " + e.name + " has shape " + shape_str(e.shape) +
                           " but " + std::to_string(e.data.size()) + " values");
    }
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(e.name.size()));
    os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(e.shape.size()));
    for (auto d : e.shape) put_le<std::uint64_t>(os, d);
    for (double v : e.data) put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(v));
  }
  if (!os) throw CheckpointError("failed writing checkpoint");
}

std::vector<NamedArray> read_checkpoint(std::istream& is) {
  const auto version = get_le<std::uint32_t>(is);
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = get_le<std::uint64_t>(is);
  std::vector<NamedArray> entries;
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedArray e;
    const auto name_len = get_le<std::uint32_t>(is);
    e.name.resize(name_len);
    if (!is.read(e.name.data(), name_len)) throw CheckpointError("checkpoint truncated");
    const auto rank = get_le<std::uint32_t>(is);
    for (std::uint32_t r = 0; r < rank; ++r) e.shape.push_back(get_le<std::uint64_t>(is));
    e.data.resize(shape_numel(e.shape));
    for (auto& v : e.data) v = std::bit_cast<double>(get_le<std::uint64_t>(is));
    entries.push_back(std::move(e));
  }
  return entries;
}

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedArray>& entries) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw CheckpointError("cannot open " + path.string() + " for writing");
  write_checkpoint(os, entries);
}

std::vector<NamedArray> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open " + path.string());
  return read_checkpoint(is);
}

std::vector<NamedArray> snapshot(const ParamList& params) {
  std::vector<NamedArray> out;
  out.reserve(params.size());
  for (const auto& [name, t] : params) out.push_back({name, t.shape(), t.to_vector()});
  return out;
}

void restore(const std::vector<NamedArray>& entries, ParamList& params) {
  std::map<std::string, const NamedArray*> by_name;
  for (const auto& e : entries) by_name[e.name] = &e;
  std::ostringstream problems;
  for (const auto& [name, t] : params) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      problems << "  missing " << name << " (expected " << shape_str(t.shape()) << ")\n";
    } else if (it->second->shape != t.shape()) {
      problems << "  " << name << ": checkpoint " << shape_str(it->second->shape) << " vs model "
               << shape_str(t.shape()) << "\n";
    }
  }
  if (!problems.str().empty()) throw DimensionError("checkpoint does not match model:\n" + problems.str());
  for (auto& [name, t] : params) {
    const auto& src = by_name.at(name)->data;
    auto dst = t.mutable_data();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

}  // namespace timrl
