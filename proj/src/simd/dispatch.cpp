#include <atomic>
#include <cstdlib>
#include <cstring>

#include "tsaw/simd/kernels.hpp"

namespace tsaw::simd {

#if defined(TSAW_HAVE_AVX2)
const KernelTable& avx2_table_impl();
#endif

const KernelTable* avx2_table() {
#if defined(TSAW_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &avx2_table_impl() : nullptr;
#else
  return nullptr;
#endif
}

namespace {

const KernelTable* select_default() {
  const char* env = std::getenv("TSAW_SIMD");
  if (env != nullptr && std::strcmp(env, "scalar") == 0) return &scalar_table();
  if (const KernelTable* t = avx2_table()) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*> g_override{nullptr};

}  // namespace

const KernelTable& active() {
  if (const KernelTable* t = g_override.load(std::memory_order_acquire)) return *t;
  static const KernelTable* chosen = select_default();
  return *chosen;
}

void override_active(const KernelTable* table) { g_override.store(table, std::memory_order_release); }

}  // namespace tsaw::simd
