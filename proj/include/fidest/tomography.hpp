#pragma once

// Product-Pauli state tomography: linear inversion followed by projection onto
// the physical states.

#include <random>
#include <span>
#include <vector>

#include "fidest/counts.hpp"
#include "fidest/estimators.hpp"

namespace fidest {

/// 36 settings: the nine bases {X,Y,Z}⊗{X,Y,Z} ("XX", "XY", …, "ZZ"), T/9
/// per basis, channels ++, +−, −+, −−.
std::vector<MeasurementSetting> tomo_settings(double total_time);

/// Pauli coefficients from run-time-weighted frequencies. Single-qubit
/// marginals (ρ_rI, ρ_Is) average the three bases that measure them.
PauliVector tomo_pauli_estimate(std::span<const CountRecord> records);

/// ¼ Σ ρ̂_rs Σ_r⊗Σ_s: Hermitian and trace one, possibly not positive.
/// Throws NoCountsError for an empty basis.
Mat4 linear_inversion(std::span<const CountRecord> records);

/// Nearest (Frobenius) density matrix: the most negative eigenvalues are
/// zeroed and their mass spread evenly over the rest.
DensityMatrix4 mle_project(const Mat4& hermitian);

/// Fidelity of the linear-inversion estimate to ψ(θ) as a ratio plan, giving
/// its first-order Poissonian error bar.
EstimatorPlan tomo_fidelity_plan(double theta, std::span<const GroupTimes> groups);

struct TomographyResult {
  DensityMatrix4 rho_hat;
  double fidelity_to_target;  // of rho_hat
  double linear_fidelity;     // before projection
  double linear_sigma;
  std::vector<CountRecord> per_basis_counts;
};

TomographyResult tomography_from_records(std::vector<CountRecord> records, double theta);

/// Simulates counts over tomo_settings, reconstructs, projects and scores
/// against ψ(θ).
TomographyResult tomo_fidelity(const DensityMatrix4& rho, double pair_rate, double total_time, double theta,
                               std::mt19937_64& rng);

}  // namespace fidest
