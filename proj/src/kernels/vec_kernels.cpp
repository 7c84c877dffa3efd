#include "depsteer/kernels/vec_kernels.hpp"

#include <atomic>
#include <stdexcept>

namespace depsteer::kernels {

double dot_scalar(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

double squared_norm_scalar(std::span<const double> a) {
    double acc = 0.0;
    for (double v : a) {
        acc += v * v;
    }
    return acc;
}

double weighted_sqdist_scalar(std::span<const double> a,
                              std::span<const double> b,
                              std::span<const double> w) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += w[i] * d * d;
    }
    return acc;
}

namespace {

enum class Mode { Auto, ForcedScalar, ForcedAvx2 };
std::atomic<Mode> g_mode{Mode::Auto};

bool detect_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

bool use_avx2() {
    switch (g_mode.load(std::memory_order_relaxed)) {
    case Mode::ForcedScalar: return false;
    case Mode::ForcedAvx2: return true;
    case Mode::Auto: break;
    }
    static const bool available = detect_avx2();
    return available;
}

}  // namespace

bool avx2_available() { return detect_avx2(); }

Variant active_variant() {
    return use_avx2() ? Variant::Avx2 : Variant::Scalar;
}

void force_variant(Variant v) {
    if (v == Variant::Avx2 && !detect_avx2()) {
        throw std::runtime_error("AVX2 variant not supported on this CPU");
    }
    g_mode.store(v == Variant::Avx2 ? Mode::ForcedAvx2 : Mode::ForcedScalar,
                 std::memory_order_relaxed);
}

void reset_variant() { g_mode.store(Mode::Auto, std::memory_order_relaxed); }

double dot(std::span<const double> a, std::span<const double> b) {
#if defined(__x86_64__) || defined(_M_X64)
    if (use_avx2()) return dot_avx2(a, b);
#endif
    return dot_scalar(a, b);
}

double squared_norm(std::span<const double> a) {
#if defined(__x86_64__) || defined(_M_X64)
    if (use_avx2()) return squared_norm_avx2(a);
#endif
    return squared_norm_scalar(a);
}

double weighted_sqdist(std::span<const double> a,
                       std::span<const double> b,
                       std::span<const double> w) {
#if defined(__x86_64__) || defined(_M_X64)
    if (use_avx2()) return weighted_sqdist_avx2(a, b, w);
#endif
    return weighted_sqdist_scalar(a, b, w);
}

}  // namespace depsteer::kernels
