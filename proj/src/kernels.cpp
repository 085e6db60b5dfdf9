#include "gcnh/kernels.hpp"

#include <atomic>

namespace gcnh::kernels {

#if defined(GCNH_HAVE_AVX2)
const KernelTable& avx2_kernel_table();
#endif

const KernelTable* avx2_kernels() {
#if defined(GCNH_HAVE_AVX2)
    static const bool supported = __builtin_cpu_supports("avx2");
    return supported ? &avx2_kernel_table() : nullptr;
#else
    return nullptr;
#endif
}

namespace {

const KernelTable* best_available() {
    if (const KernelTable* t = avx2_kernels()) {
        return t;
    }
    return &scalar_kernels();
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> table{best_available()};
    return table;
}

} // namespace

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

bool select(std::string_view name) {
    const KernelTable* table = nullptr;
    if (name == "auto") {
        table = best_available();
    } else if (name == "scalar") {
        table = &scalar_kernels();
    } else if (name == "avx2") {
        table = avx2_kernels();
    }
    if (table == nullptr) {
        return false;
    }
    current().store(table, std::memory_order_relaxed);
    return true;
}

} // namespace gcnh::kernels
