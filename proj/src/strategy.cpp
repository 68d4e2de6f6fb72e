#include "fidest/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fidest {
namespace {

void check_theta(double theta) {
  if (!(theta >= 0.0 && theta <= std::numbers::pi / 2)) {
    throw std::invalid_argument("theta must lie in [0, pi/2]");
  }
}

// 1/√(1+tanθ) and 1/√(1+cotθ), written so both endpoints stay finite.
struct LocalAmplitudes {
  double c;
  double s;
};

LocalAmplitudes local_amplitudes(double theta) {
  const double ct = std::cos(theta);
  const double st = std::sin(theta);
  return {std::sqrt(ct / (ct + st)), std::sqrt(st / (ct + st))};
}

cplx phase(double angle) { return std::polar(1.0, angle); }

// Single-qubit pair (c|0> + e^{iα}s|1>, s|0> − e^{iα}c|1>). The second vector
// is orthogonal to the first for every α.
std::array<Vec2, 2> local_pair(const LocalAmplitudes& a, cplx e) {
  Vec2 v, w;
  v << a.c, e * a.s;
  w << a.s, -e * a.c;
  return {v, w};
}

// Phase pattern of φ_1, φ_2, φ_3 on the two qubits.
struct PhiPhases {
  cplx first;
  cplx second;
};

std::array<PhiPhases, 3> phi_phases() {
  using std::numbers::pi;
  return {PhiPhases{phase(2 * pi / 3), phase(pi / 3)},
          PhiPhases{phase(4 * pi / 3), phase(5 * pi / 3)},
          PhiPhases{cplx(1.0, 0.0), cplx(-1.0, 0.0)}};
}

}  // namespace

double weight_q(double theta) {
  check_theta(theta);
  const double s2 = std::sin(2 * theta);
  return (2 + s2) / (4 + s2);
}

StrategyWeights strategy_weights(double theta) {
  check_theta(theta);
  const double s2 = std::sin(2 * theta);
  return {(2 + s2) / (4 + s2), (2 - s2) / (4 + s2), 2 * (1 + s2) / (3 * (4 + s2))};
}

std::array<Ket4, 3> phi_states(double theta) {
  check_theta(theta);
  const LocalAmplitudes a = local_amplitudes(theta);
  const auto phases = phi_phases();
  auto make = [&](const PhiPhases& p) {
    return Ket4::product(local_pair(a, p.first)[0], local_pair(a, p.second)[0]);
  };
  return {make(phases[0]), make(phases[1]), make(phases[2])};
}

Mat4 build_omega(double theta) {
  const StrategyWeights w = strategy_weights(theta);
  const Mat4 zz_even = Ket4::basis(0, 0).projector() + Ket4::basis(1, 1).projector();
  Mat4 omega = w.w_zz * zz_even;
  for (const Ket4& phi : phi_states(theta)) omega += w.w_phi * (Mat4::Identity() - phi.projector());
  return omega;
}

double fidelity_from_omega(double tr_omega_rho, double q) {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("q must lie in (0, 1)");
  return (tr_omega_rho - q) / (1.0 - q);
}

Strategy make_strategy(double theta) {
  return Strategy{theta, strategy_weights(theta), build_omega(theta), phi_states(theta)};
}

std::vector<MeasurementSetting> settings_table(double theta, double total_time) {
  check_theta(theta);
  if (!(total_time > 0.0) || !std::isfinite(total_time)) {
    throw std::invalid_argument("total_time must be positive");
  }
  const double s2 = std::sin(2 * theta);
  const double zz_frac = (2 - s2) / (4 + s2) / 4;
  const double phi_frac = (1 + s2) / (4 + s2) / 3;
  const double other_frac = (1 + s2) / (4 + s2) / 9;

  std::vector<MeasurementSetting> out;
  out.reserve(16);
  // Table order HH, VV, HV, VH.
  const int zz_bits[4][2] = {{0, 0}, {1, 1}, {0, 1}, {1, 0}};
  for (int ch = 0; ch < 4; ++ch) {
    out.push_back({"ZZ", ch + 1, Ket4::basis(zz_bits[ch][0], zz_bits[ch][1]), zz_frac, zz_frac * total_time});
  }

  const LocalAmplitudes a = local_amplitudes(theta);
  const auto phases = phi_phases();
  for (int g = 0; g < 3; ++g) {
    const auto first = local_pair(a, phases[g].first);
    const auto second = local_pair(a, phases[g].second);
    const std::string group = "G" + std::to_string(g + 1);
    // (φ, φ), (⊥, φ), (φ, ⊥), (⊥, ⊥) on the two qubits.
    const int pick[4][2] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    for (int ch = 0; ch < 4; ++ch) {
      const double frac = ch == 0 ? phi_frac : other_frac;
      out.push_back({group, ch + 1, Ket4::product(first[pick[ch][0]], second[pick[ch][1]]), frac,
                     frac * total_time});
    }
  }
  return out;
}

std::vector<MeasurementSetting> pauli_basis_settings(Pauli r, Pauli s, double group_fraction, double total_time) {
  if (!(group_fraction > 0.0) || !(total_time > 0.0)) {
    throw std::invalid_argument("basis group needs positive time");
  }
  const auto first = pauli_eigenbasis(r);
  const auto second = pauli_eigenbasis(s);
  const std::string group{pauli_name(r), pauli_name(s)};
  const double frac = group_fraction / 4;
  std::vector<MeasurementSetting> out;
  out.reserve(4);
  int ch = 1;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j, ++ch) out.push_back({group, ch, Ket4::product(first[i], second[j]), frac, frac * total_time});
  return out;
}

VerificationPlan::VerificationPlan(double epsilon, double delta, std::int64_t n_trials)
    : epsilon_(epsilon), delta_(delta), n_trials_(n_trials) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  if (n_trials < 1) throw std::invalid_argument("n_trials must be at least 1");
}

std::int64_t required_trials(double q, double epsilon, double delta) {
  const double per_trial = std::log(1.0 / (1.0 - (1.0 - q) * epsilon));
  return static_cast<std::int64_t>(std::ceil(std::log(1.0 / delta) / per_trial));
}

VerificationPlan VerificationPlan::for_target(double theta, double epsilon, double delta) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  return VerificationPlan(epsilon, delta, required_trials(weight_q(theta), epsilon, delta));
}

bool verification_trial(const Strategy& strategy, const DensityMatrix4& sigma, std::mt19937_64& rng) {
  const StrategyWeights& w = strategy.weights;
  std::discrete_distribution<int> pick({w.w_zz, w.w_phi, w.w_phi, w.w_phi});
  const int j = pick(rng);
  double accept;
  if (j == 0) {
    accept = sigma(0, 0).real() + sigma(3, 3).real();
  } else {
    const Vec4& phi = strategy.phis[static_cast<std::size_t>(j - 1)].amplitudes();
    accept = 1.0 - phi.dot(sigma.matrix() * phi).real();
  }
  std::bernoulli_distribution outcome(std::clamp(accept, 0.0, 1.0));
  return outcome(rng);
}

VerificationOutcome run_verification(const StateSource& source, double theta, const VerificationPlan& plan,
                                     std::mt19937_64& rng) {
  const Strategy strategy = make_strategy(theta);
  for (std::int64_t i = 0; i < plan.n_trials(); ++i) {
    if (!verification_trial(strategy, source(i), rng)) return {false, i + 1};
  }
  return {true, plan.n_trials()};
}

}  // namespace fidest
