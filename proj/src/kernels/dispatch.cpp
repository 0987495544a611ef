#include <cstdlib>
#include <string>

#include "mixquad/kernels.hpp"

namespace mixquad::kernels {

// Defined in the per-ISA translation units.
bool avx2_compiled();
bool neon_compiled();

bool avx2_available() {
#if defined(__x86_64__) || defined(_M_X64)
  return avx2_compiled() && __builtin_cpu_supports("avx2") &&
         __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

bool neon_available() { return neon_compiled(); }

namespace {

const Ops& select() {
  if (const char* forced = std::getenv("MIXQUAD_KERNELS")) {
    const std::string name(forced);
    if (name == "scalar") return scalar_ops();
    if (name == "avx2" && avx2_available()) return avx2_ops();
    if (name == "neon" && neon_available()) return neon_ops();
    // Unknown or unavailable request: fall through to auto-detection.
  }
  if (avx2_available()) return avx2_ops();
  if (neon_available()) return neon_ops();
  return scalar_ops();
}

}  // namespace

const Ops& active_ops() {
  static const Ops& ops = select();
  return ops;
}

std::string active_name() { return active_ops().name; }

}  // namespace mixquad::kernels
