#include "fidest/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fidest {
namespace {

constexpr Pauli kMeasured[3] = {Pauli::X, Pauli::Y, Pauli::Z};

// Eigenvalue signs over channels ++, +−, −+, −−.
constexpr std::array<double, 4> kSignBoth = {1, -1, -1, 1};
constexpr std::array<double, 4> kSignFirst = {1, 1, -1, -1};
constexpr std::array<double, 4> kSignSecond = {1, -1, 1, -1};

std::string group_name(Pauli r, Pauli s) { return {pauli_name(r), pauli_name(s)}; }

const CountRecord& find_record(std::span<const CountRecord> records, const std::string& name) {
  for (const CountRecord& r : records) {
    if (r.group == name) return r;
  }
  throw std::invalid_argument("missing tomography basis " + name);
}

double signed_frequency(const CountRecord& rec, const std::array<double, 4>& sign) {
  const auto r = rec.run_times();
  std::array<double, 4> a{}, b{};
  for (std::size_t i = 0; i < 4; ++i) {
    b[i] = 1.0 / r[i];
    a[i] = sign[i] * b[i];
  }
  return ratio_estimate(ChannelLinForm::make(a, b), rec);
}

}  // namespace

std::vector<MeasurementSetting> tomo_settings(double total_time) {
  if (!(total_time > 0.0) || !std::isfinite(total_time)) throw std::invalid_argument("total_time must be positive");
  std::vector<MeasurementSetting> out;
  out.reserve(36);
  for (Pauli r : kMeasured) {
    for (Pauli s : kMeasured) {
      auto group = pauli_basis_settings(r, s, 1.0 / 9.0, total_time);
      out.insert(out.end(), group.begin(), group.end());
    }
  }
  return out;
}

PauliVector tomo_pauli_estimate(std::span<const CountRecord> records) {
  PauliVector est;
  est(Pauli::I, Pauli::I) = 1.0;
  for (Pauli r : kMeasured) {
    for (Pauli s : kMeasured) {
      const CountRecord& rec = find_record(records, group_name(r, s));
      rec.validate();
      est(r, s) = signed_frequency(rec, kSignBoth);
      est(r, Pauli::I) += signed_frequency(rec, kSignFirst) / 3.0;
      est(Pauli::I, s) += signed_frequency(rec, kSignSecond) / 3.0;
    }
  }
  return est;
}

Mat4 linear_inversion(std::span<const CountRecord> records) { return tomo_pauli_estimate(records).reconstruct(); }

DensityMatrix4 mle_project(const Mat4& hermitian) {
  if (!is_hermitian(hermitian, 1e-10)) throw std::invalid_argument("projection needs a Hermitian input");
  const cplx tr = hermitian.trace();
  if (std::abs(tr.real() - 1.0) > 1e-10 || std::abs(tr.imag()) > 1e-10) {
    throw std::invalid_argument("projection needs a trace-one input");
  }
  Eigen::SelfAdjointEigenSolver<Mat4> es(0.5 * (hermitian + hermitian.adjoint()));
  // Eigen sorts ascending; walk from the smallest.
  Eigen::Vector4d lambda = es.eigenvalues();
  if (lambda.minCoeff() >= 0.0) return DensityMatrix4::from_matrix(hermitian);

  double carried = 0.0;
  int i = 0;
  for (; i < 4; ++i) {
    const int remaining = 4 - i;
    if (lambda(i) + carried / remaining >= 0.0) break;
    carried += lambda(i);
    lambda(i) = 0.0;
  }
  const int remaining = 4 - i;
  for (int j = i; j < 4; ++j) lambda(j) += carried / remaining;
  lambda = lambda.cwiseMax(0.0);
  lambda /= lambda.sum();

  const Mat4& v = es.eigenvectors();
  const Mat4 rho = v * lambda.cast<cplx>().asDiagonal() * v.adjoint();
  return DensityMatrix4::from_matrix(0.5 * (rho + rho.adjoint()));
}

EstimatorPlan tomo_fidelity_plan(double theta, std::span<const GroupTimes> groups) {
  const PauliVector psi = pauli_coeffs(ket_target(theta));
  EstimatorPlan plan{Protocol::TOMO, theta, 0.25, {}};
  for (Pauli r : kMeasured) {
    for (Pauli s : kMeasured) {
      const std::string name = group_name(r, s);
      const auto it = std::find_if(groups.begin(), groups.end(), [&](const GroupTimes& g) { return g.group == name; });
      if (it == groups.end()) throw std::invalid_argument("missing tomography basis " + name);
      std::array<double, 4> a{}, b{};
      for (std::size_t ch = 0; ch < 4; ++ch) {
        b[ch] = 1.0 / it->run_times[ch];
        const double coeff = psi(r, s) * kSignBoth[ch] + psi(r, Pauli::I) / 3.0 * kSignFirst[ch] +
                             psi(Pauli::I, s) / 3.0 * kSignSecond[ch];
        a[ch] = 0.25 * coeff * b[ch];
      }
      plan.terms.push_back({name, ChannelLinForm::make(a, b), 1.0, 0.0});
    }
  }
  return plan;
}

TomographyResult tomography_from_records(std::vector<CountRecord> records, double theta) {
  const Mat4 linear = linear_inversion(records);
  DensityMatrix4 rho_hat = mle_project(linear);
  std::vector<GroupTimes> times;
  for (const CountRecord& r : records) times.push_back({r.group, r.run_times()});
  const FidelityEstimate lin = evaluate_plan(tomo_fidelity_plan(theta, times), records);
  const double f = fidelity(rho_hat, ket_target(theta));
  return {std::move(rho_hat), f, lin.value, lin.sigma, std::move(records)};
}

TomographyResult tomo_fidelity(const DensityMatrix4& rho, double pair_rate, double total_time, double theta,
                               std::mt19937_64& rng) {
  const auto settings = tomo_settings(total_time);
  return tomography_from_records(simulate_counts(rho, settings, pair_rate, rng), theta);
}

}  // namespace fidest
