#pragma once

// Locally optimal verification strategy for sinθ|00> + cosθ|11>:
//
//   Ω = w_zz P⁺_ZZ + w_phi Σ_k (I − |φ_k><φ_k|) = (1 − q)|ψ><ψ| + q I
//
// plus the rank-1 measurement schedule a single-outcome detector can run, and
// a sequential pass/fail runner.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fidest/quantum.hpp"

namespace fidest {

struct StrategyWeights {
  double q;      // Ω = (1 − q)|ψ><ψ| + q I
  double w_zz;   // weight of P⁺_ZZ
  double w_phi;  // weight of each I − |φ_k><φ_k|
};

/// q = (2 + sin2θ)/(4 + sin2θ); θ in [0, π/2].
double weight_q(double theta);
StrategyWeights strategy_weights(double theta);

/// The three product states orthogonal to ψ(θ) whose complements build Ω.
std::array<Ket4, 3> phi_states(double theta);

/// Ω assembled from its local projectors.
Mat4 build_omega(double theta);

/// (tr(Ωρ) − q)/(1 − q). Not clamped. Throws for q outside (0, 1).
double fidelity_from_omega(double tr_omega_rho, double q);

struct Strategy {
  double theta;
  StrategyWeights weights;
  Mat4 omega;
  std::array<Ket4, 3> phis;
};

Strategy make_strategy(double theta);

/// One rank-1 timed projection. `group` names the orthonormal basis it belongs
/// to and `channel` is its 1-based position within that basis.
struct MeasurementSetting {
  std::string group;
  int channel;
  Ket4 state;
  double time_fraction;
  double run_time;  // seconds

  Mat4 projector() const { return state.projector(); }
};

/// Sixteen settings in four bases: ZZ (|HH>, |VV>, |HV>, |VH>) then the bases
/// G1, G2, G3 whose first channel is φ_1, φ_2, φ_3. Times sum to total_time.
std::vector<MeasurementSetting> settings_table(double theta, double total_time);

/// Product eigenbasis of Σ_r ⊗ Σ_s as one group named e.g. "XY", channels in
/// order ++, +−, −+, −−, each with group_fraction/4 of total_time.
std::vector<MeasurementSetting> pauli_basis_settings(Pauli r, Pauli s, double group_fraction, double total_time);

class VerificationPlan {
 public:
  /// Throws std::invalid_argument on ε, δ outside (0, 1) or n_trials < 1.
  VerificationPlan(double epsilon, double delta, std::int64_t n_trials);

  /// n = ⌈ln(1/δ) / ln(1/(1 − (1 − q)ε))⌉ for the strategy at θ.
  static VerificationPlan for_target(double theta, double epsilon, double delta);

  double epsilon() const { return epsilon_; }
  double delta() const { return delta_; }
  std::int64_t n_trials() const { return n_trials_; }

 private:
  double epsilon_;
  double delta_;
  std::int64_t n_trials_;
};

std::int64_t required_trials(double q, double epsilon, double delta);

/// Produces the state emitted on a given (0-based) trial.
using StateSource = std::function<DensityMatrix4(std::int64_t trial)>;

struct VerificationOutcome {
  bool passed;
  std::int64_t trials;  // trials consumed, including a rejecting one
};

/// Draws P_j ∈ {P⁺_ZZ, I − |φ_k><φ_k|} with probabilities (w_zz, w_phi, w_phi,
/// w_phi) and returns whether the outcome associated with P_j occurred.
bool verification_trial(const Strategy& strategy, const DensityMatrix4& sigma, std::mt19937_64& rng);

VerificationOutcome run_verification(const StateSource& source, double theta, const VerificationPlan& plan,
                                     std::mt19937_64& rng);

}  // namespace fidest
