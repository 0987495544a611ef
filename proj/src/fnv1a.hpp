#ifndef MIXQUAD_SRC_FNV1A_HPP
#define MIXQUAD_SRC_FNV1A_HPP

#include <cstddef>
#include <cstdint>

namespace mixquad::detail {

struct Fnv1a {
  std::uint64_t state = 14695981039346656037ull;

  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state ^= p[i];
      state *= 1099511628211ull;
    }
  }
  void real(double v) { bytes(&v, sizeof(v)); }
  void integer(std::int64_t v) { bytes(&v, sizeof(v)); }
};

}  // namespace mixquad::detail

#endif  // MIXQUAD_SRC_FNV1A_HPP
