#pragma once

// Batched ratio-estimator kernels.
//
// For a linear form (a, b) over four channels and per-replication counts A,
//
//   f     = Σ a_μ A_μ / Σ b_ν A_ν
//   sigma = sqrt(Σ (a_μ − b_μ f)² A_μ) / Σ b_ν A_ν
//
// Every variant performs the same IEEE operations in the same order (no fused
// multiply-add), so outputs are bit-identical across variants. A zero
// denominator yields NaN in both outputs.

#include <array>
#include <cstddef>
#include <span>
#include <string_view>

namespace fidest::kernels {

enum class SimdLevel { Scalar, Avx2 };

std::string_view simd_level_name(SimdLevel level);

/// Best variant supported by the build and the running CPU. Setting the
/// environment variable FIDEST_SIMD=scalar forces the scalar path.
SimdLevel active_simd_level();
bool simd_level_available(SimdLevel level);

struct RatioForm {
  std::array<double, 4> a;
  std::array<double, 4> b;
};

/// Channel-major counts: counts[μ][i] is channel μ of replication i.
struct ChannelColumns {
  std::array<std::span<const double>, 4> counts;
  std::size_t size() const { return counts[0].size(); }
};

void ratio_batch_scalar(const RatioForm& form, const ChannelColumns& in, std::span<double> f,
                        std::span<double> sigma);

#if defined(FIDEST_HAVE_AVX2)
void ratio_batch_avx2(const RatioForm& form, const ChannelColumns& in, std::span<double> f,
                      std::span<double> sigma);
#endif

/// Dispatches to `level`, which must be available.
void ratio_batch(SimdLevel level, const RatioForm& form, const ChannelColumns& in, std::span<double> f,
                 std::span<double> sigma);

/// Dispatches to active_simd_level().
void ratio_batch(const RatioForm& form, const ChannelColumns& in, std::span<double> f, std::span<double> sigma);

/// Single-record form of the same arithmetic.
struct RatioResult {
  double f;
  double sigma;
};
RatioResult ratio_one(const RatioForm& form, const std::array<double, 4>& counts);

}  // namespace fidest::kernels
