#include <cmath>
#include <limits>
#include <stdexcept>

#include "fidest/kernels.hpp"

namespace fidest::kernels {

namespace {

inline RatioResult ratio_kernel(const RatioForm& p, double A0, double A1, double A2, double A3) {
  const double num = ((p.a[0] * A0 + p.a[1] * A1) + p.a[2] * A2) + p.a[3] * A3;
  const double den = ((p.b[0] * A0 + p.b[1] * A1) + p.b[2] * A2) + p.b[3] * A3;
  if (den == 0.0) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan};
  }
  const double f = num / den;
  const double d0 = p.a[0] - p.b[0] * f;
  const double d1 = p.a[1] - p.b[1] * f;
  const double d2 = p.a[2] - p.b[2] * f;
  const double d3 = p.a[3] - p.b[3] * f;
  const double var = (((d0 * d0) * A0 + (d1 * d1) * A1) + (d2 * d2) * A2) + (d3 * d3) * A3;
  return {f, std::sqrt(var) / den};
}

}  // namespace

void ratio_batch_scalar(const RatioForm& form, const ChannelColumns& in, std::span<double> f,
                        std::span<double> sigma) {
  const std::size_t n = in.size();
  for (const auto& c : in.counts) {
    if (c.size() != n) throw std::invalid_argument("channel columns differ in length");
  }
  if (f.size() < n || sigma.size() < n) throw std::invalid_argument("output span too short");
  for (std::size_t i = 0; i < n; ++i) {
    const RatioResult r = ratio_kernel(form, in.counts[0][i], in.counts[1][i], in.counts[2][i], in.counts[3][i]);
    f[i] = r.f;
    sigma[i] = r.sigma;
  }
}

RatioResult ratio_one(const RatioForm& form, const std::array<double, 4>& counts) {
  return ratio_kernel(form, counts[0], counts[1], counts[2], counts[3]);
}

}  // namespace fidest::kernels
