#include "timrl/numerics/params.hpp"

#include <bit>
#include <cstring>

#include "timrl/numerics/errors.hpp"

namespace timrl {

namespace {
constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

void mix(std::uint64_t& h, const void* bytes, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

void require_match(const ParamList& src, const ParamList& dst) {
  if (src.size() != dst.size()) throw DimensionError("parameter lists differ in length");
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i].second.shape() != dst[i].second.shape()) {
      throw DimensionError("parameter " + src[i].first + " " + shape_str(src[i].second.shape()) +
                           " vs " + dst[i].first + " " + shape_str(dst[i].second.shape()));
    }
  }
}
}  // namespace

std::uint64_t checksum(const ParamList& params) {
  std::uint64_t h = kFnvOffset;
  for (const auto& [name, t] : params) {
    mix(h, name.data(), name.size());
    for (auto d : t.shape()) {
      const std::uint64_t d64 = d;
      mix(h, &d64, sizeof d64);
    }
    mix(h, t.data().data(), t.size() * sizeof(double));
  }
  return h;
}

std::vector<Tensor> tensors_of(const ParamList& params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const auto& [_, t] : params) out.push_back(t);
  return out;
}

void soft_update(const ParamList& src, ParamList& dst, double tau) {
  require_match(src, dst);
  for (std::size_t i = 0; i < src.size(); ++i) {
    auto s = src[i].second.data();
    auto d = dst[i].second.mutable_data();
    for (std::size_t j = 0; j < d.size(); ++j) d[j] = tau * s[j] + (1.0 - tau) * d[j];
  }
}

void copy_values(const ParamList& src, ParamList& dst) {
  require_match(src, dst);
  for (std::size_t i = 0; i < src.size(); ++i) {
    auto s = src[i].second.data();
    auto d = dst[i].second.mutable_data();
    std::copy(s.begin(), s.end(), d.begin());
  }
}

}  // namespace timrl
