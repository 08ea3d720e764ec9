#include <cstdlib>
#include <cstring>

#include "krlab/simd/kernels.hpp"

namespace krlab::simd {
namespace {

const Kernels* resolve() {
    const char* force = std::getenv("KRLAB_SIMD");
    if (force && std::strcmp(force, "scalar") == 0) return &kScalar;
#if defined(__x86_64__) || defined(_M_X64)
    bool want_avx2 = !force || std::strcmp(force, "auto") == 0 || std::strcmp(force, "avx2") == 0;
    if (want_avx2 && __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
        return &kAvx2;
#endif
#if defined(__aarch64__)
    bool want_neon = !force || std::strcmp(force, "auto") == 0 || std::strcmp(force, "neon") == 0;
    if (want_neon) return &kNeon;
#endif
    return &kScalar;
}

}  // namespace

const Kernels& active() {
    static const Kernels* k = resolve();
    return *k;
}

const char* active_name() { return active().name; }

}  // namespace krlab::simd
