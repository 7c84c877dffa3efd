#pragma once
// Dense vector kernels behind embedding retrieval and the GP surrogate.
//
// Scalar reference implementations are always available and serve as the
// equivalence baseline. On x86-64 an AVX2+FMA variant is selected at
// runtime when the CPU supports it; `force_variant` pins the choice for
// equivalence testing.

#include <cstddef>
#include <span>

namespace depsteer::kernels {

enum class Variant { Scalar, Avx2 };

// Scalar reference kernels.
double dot_scalar(std::span<const double> a, std::span<const double> b);
double squared_norm_scalar(std::span<const double> a);
// sum_i w[i] * (a[i] - b[i])^2 -- the ARD kernel distance.
double weighted_sqdist_scalar(std::span<const double> a,
                              std::span<const double> b,
                              std::span<const double> w);

// Dispatched entry points. Lengths must match; checked by the caller.
double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);
double weighted_sqdist(std::span<const double> a,
                       std::span<const double> b,
                       std::span<const double> w);

// True when the running CPU can execute the AVX2 variant.
bool avx2_available();

Variant active_variant();
// Pins the dispatched variant. Requesting Avx2 on a CPU without support
// throws std::runtime_error. Scalar is always accepted.
void force_variant(Variant v);
void reset_variant();  // back to auto-detection

#if defined(__x86_64__) || defined(_M_X64)
double dot_avx2(std::span<const double> a, std::span<const double> b);
double squared_norm_avx2(std::span<const double> a);
double weighted_sqdist_avx2(std::span<const double> a,
                            std::span<const double> b,
                            std::span<const double> w);
#endif

}  // namespace depsteer::kernels
