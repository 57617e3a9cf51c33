// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <string_view>

#include "protoscene/simd/kernels.hpp"

namespace protoscene::simd {
namespace detail {
const KernelTable* avx2_table();
}

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

}  // namespace

const KernelTable* avx2_kernels() {
  static const KernelTable* table = cpu_has_avx2() ? detail::avx2_table() : nullptr;
  return table;
}

const KernelTable& kernels() {
  static const KernelTable& table = [&]() -> const KernelTable& {
    if (const char* force = std::getenv("PROTOSCENE_SIMD");
        force != nullptr && std::string_view(force) == "scalar") {
      return scalar_kernels();
    }
    if (const KernelTable* t = avx2_kernels()) return *t;
    return scalar_kernels();
  }();
  return table;
}

}  // namespace protoscene::simd
