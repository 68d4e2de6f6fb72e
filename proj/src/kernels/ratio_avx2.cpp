// Compiled with -mavx2 -mno-fma. Only reached after a runtime CPU check.

#include <immintrin.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "fidest/kernels.hpp"

namespace fidest::kernels {

void ratio_batch_avx2(const RatioForm& form, const ChannelColumns& in, std::span<double> f,
                      std::span<double> sigma) {
  const std::size_t n = in.size();
  for (const auto& c : in.counts) {
    if (c.size() != n) throw std::invalid_argument("channel columns differ in length");
  }
  if (f.size() < n || sigma.size() < n) throw std::invalid_argument("output span too short");

  const __m256d a0 = _mm256_set1_pd(form.a[0]), a1 = _mm256_set1_pd(form.a[1]);
  const __m256d a2 = _mm256_set1_pd(form.a[2]), a3 = _mm256_set1_pd(form.a[3]);
  const __m256d b0 = _mm256_set1_pd(form.b[0]), b1 = _mm256_set1_pd(form.b[1]);
  const __m256d b2 = _mm256_set1_pd(form.b[2]), b3 = _mm256_set1_pd(form.b[3]);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d nan = _mm256_set1_pd(std::numeric_limits<double>::quiet_NaN());

  const double* c0 = in.counts[0].data();
  const double* c1 = in.counts[1].data();
  const double* c2 = in.counts[2].data();
  const double* c3 = in.counts[3].data();

  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d A0 = _mm256_loadu_pd(c0 + i);
    const __m256d A1 = _mm256_loadu_pd(c1 + i);
    const __m256d A2 = _mm256_loadu_pd(c2 + i);
    const __m256d A3 = _mm256_loadu_pd(c3 + i);

    __m256d num = _mm256_add_pd(_mm256_mul_pd(a0, A0), _mm256_mul_pd(a1, A1));
    num = _mm256_add_pd(num, _mm256_mul_pd(a2, A2));
    num = _mm256_add_pd(num, _mm256_mul_pd(a3, A3));
    __m256d den = _mm256_add_pd(_mm256_mul_pd(b0, A0), _mm256_mul_pd(b1, A1));
    den = _mm256_add_pd(den, _mm256_mul_pd(b2, A2));
    den = _mm256_add_pd(den, _mm256_mul_pd(b3, A3));

    const __m256d fv = _mm256_div_pd(num, den);
    const __m256d d0 = _mm256_sub_pd(a0, _mm256_mul_pd(b0, fv));
    const __m256d d1 = _mm256_sub_pd(a1, _mm256_mul_pd(b1, fv));
    const __m256d d2 = _mm256_sub_pd(a2, _mm256_mul_pd(b2, fv));
    const __m256d d3 = _mm256_sub_pd(a3, _mm256_mul_pd(b3, fv));
    __m256d var = _mm256_add_pd(_mm256_mul_pd(_mm256_mul_pd(d0, d0), A0), _mm256_mul_pd(_mm256_mul_pd(d1, d1), A1));
    var = _mm256_add_pd(var, _mm256_mul_pd(_mm256_mul_pd(d2, d2), A2));
    var = _mm256_add_pd(var, _mm256_mul_pd(_mm256_mul_pd(d3, d3), A3));
    const __m256d sv = _mm256_div_pd(_mm256_sqrt_pd(var), den);

    const __m256d empty = _mm256_cmp_pd(den, zero, _CMP_EQ_OQ);
    _mm256_storeu_pd(f.data() + i, _mm256_blendv_pd(fv, nan, empty));
    _mm256_storeu_pd(sigma.data() + i, _mm256_blendv_pd(sv, nan, empty));
  }
  for (; i < n; ++i) {
    const RatioResult r = ratio_one(form, {c0[i], c1[i], c2[i], c3[i]});
    f[i] = r.f;
    sigma[i] = r.sigma;
  }
}

}  // namespace fidest::kernels
