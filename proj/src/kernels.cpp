#include "ncc/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace ncc::kernels {
namespace {

const Ops* select_default() {
  if (const char* env = std::getenv("NCC_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return &scalar_ops();
    if (std::strcmp(env, "avx2") == 0 && avx2_supported()) return &avx2_ops();
    // Unknown or unsupported request falls through to auto selection.
  }
  return avx2_supported() ? &avx2_ops() : &scalar_ops();
}

std::atomic<const Ops*> g_override{nullptr};

}  // namespace

const Ops& active() {
  if (const Ops* o = g_override.load(std::memory_order_acquire)) return *o;
  static const Ops* selected = select_default();
  return *selected;
}

void set_active(const Ops* ops) {
  g_override.store(ops, std::memory_order_release);
}

}  // namespace ncc::kernels
