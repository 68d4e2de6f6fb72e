#include <cstdlib>
#include <stdexcept>
#include <string>

#include "fidest/kernels.hpp"

namespace fidest::kernels {

std::string_view simd_level_name(SimdLevel level) {
  switch (level) {
    case SimdLevel::Scalar: return "scalar";
    case SimdLevel::Avx2: return "avx2";
  }
  return "unknown";
}

bool simd_level_available(SimdLevel level) {
  switch (level) {
    case SimdLevel::Scalar: return true;
    case SimdLevel::Avx2:
#if defined(FIDEST_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

namespace {

SimdLevel detect() {
  if (const char* env = std::getenv("FIDEST_SIMD")) {
    if (std::string(env) == "scalar") return SimdLevel::Scalar;
  }
  return simd_level_available(SimdLevel::Avx2) ? SimdLevel::Avx2 : SimdLevel::Scalar;
}

}  // namespace

SimdLevel active_simd_level() {
  static const SimdLevel level = detect();
  return level;
}

void ratio_batch(SimdLevel level, const RatioForm& form, const ChannelColumns& in, std::span<double> f,
                 std::span<double> sigma) {
  switch (level) {
    case SimdLevel::Scalar: ratio_batch_scalar(form, in, f, sigma); return;
    case SimdLevel::Avx2:
#if defined(FIDEST_HAVE_AVX2)
      if (simd_level_available(SimdLevel::Avx2)) {
        ratio_batch_avx2(form, in, f, sigma);
        return;
      }
#endif
      break;
  }
  throw std::invalid_argument("SIMD level " + std::string(simd_level_name(level)) + " is not available");
}

void ratio_batch(const RatioForm& form, const ChannelColumns& in, std::span<double> f, std::span<double> sigma) {
  ratio_batch(active_simd_level(), form, in, f, sigma);
}

}  // namespace fidest::kernels
