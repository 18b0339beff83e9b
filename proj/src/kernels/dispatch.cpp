#include <cstdlib>
#include <string_view>

#include "calign/kernels/kernels.hpp"

namespace calign::kernels {

#if defined(CALIGN_BUILD_AVX2)
const KernelTable* avx2_table_impl();
#endif

const KernelTable* avx2_table() {
#if defined(CALIGN_BUILD_AVX2)
    static const bool supported = __builtin_cpu_supports("avx2");
    return supported ? avx2_table_impl() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active() {
    static const KernelTable& chosen = [] () -> const KernelTable& {
        const char* env = std::getenv("CALIGN_SIMD");
        if (env != nullptr && std::string_view(env) == "scalar") return scalar_table();
        if (const KernelTable* t = avx2_table()) return *t;
        return scalar_table();
    }();
    return chosen;
}

}  // namespace calign::kernels
