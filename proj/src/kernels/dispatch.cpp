#include <atomic>
#include <cstdlib>
#include <string_view>

#include "dpsgd/kernels.hpp"

namespace dpsgd::kernels {
namespace {

const KernelTable* best_available() noexcept {
  if (const char* env = std::getenv("DPSGD_SIMD")) {
    const std::string_view want{env};
    if (want == "scalar") return &scalar_table();
    if (want == "avx2" && avx2_table()) return avx2_table();
    if (want == "neon" && neon_table()) return neon_table();
  }
  if (const auto* t = avx2_table()) return t;
  if (const auto* t = neon_table()) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*>& slot() noexcept {
  static std::atomic<const KernelTable*> table{best_available()};
  return table;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
    case Isa::kNeon: return "neon";
  }
  return "unknown";
}

const KernelTable& active() noexcept { return *slot().load(std::memory_order_relaxed); }

bool select(Isa isa) noexcept {
  const KernelTable* table = nullptr;
  switch (isa) {
    case Isa::kScalar: table = &scalar_table(); break;
    case Isa::kAvx2: table = avx2_table(); break;
    case Isa::kNeon: table = neon_table(); break;
  }
  if (!table) return false;
  slot().store(table, std::memory_order_relaxed);
  return true;
}

}  // namespace dpsgd::kernels
