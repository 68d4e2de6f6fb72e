#pragma once

// Noisy target states and Poissonian photon-count records.

#include <array>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fidest/quantum.hpp"
#include "fidest/strategy.hpp"

namespace fidest {

enum class NoiseKind { Depolarizing, Dephasing, Miscalibration };

std::string_view noise_kind_name(NoiseKind kind);
/// Accepts "depolarizing", "dephasing", "miscalibration".
NoiseKind parse_noise_kind(std::string_view name);

/// `parameter` is p in [0, 1] for the channels and a local Y-rotation angle in
/// [−π, π] for miscalibration.
struct NoiseModel {
  NoiseKind kind;
  double parameter;

  static NoiseModel make(NoiseKind kind, double parameter);
  static NoiseModel none() { return {NoiseKind::Depolarizing, 0.0}; }
};

/// Noisy version of ψ(θ): (1−p)ψψ + p I/4, ψψ with |00><11| coherences damped
/// by (1−p), or (R⊗R)ψψ(R⊗R)† for R = exp(−iαY/2).
DensityMatrix4 apply_noise(const NoiseModel& model, double theta);

/// Parameter reproducing `target_fidelity` against ψ(θ) within 1e-9. Throws
/// std::domain_error when the kind cannot reach the target at this θ.
NoiseModel calibrate_noise(NoiseKind kind, double theta, double target_fidelity);

struct Channel {
  int label;
  double counts;    // A_μ
  double run_time;  // r_μ, seconds
};

/// Four channels of one basis group, in the group's channel order.
struct CountRecord {
  std::string group;
  std::array<Channel, 4> channels;

  /// Throws std::invalid_argument on negative or non-finite counts, or
  /// non-positive run times.
  void validate() const;
  double total_counts() const;
  double total_time() const;
  std::array<double, 4> counts() const;
  std::array<double, 4> run_times() const;
};

/// Born probability tr(ρ Π) with rounding noise below 1e-14 flushed to zero.
double born_probability(const DensityMatrix4& rho, const Ket4& state);

/// One CountRecord per basis group (in order of first appearance) with
/// A ~ Poisson(pair_rate · run_time · tr(ρ Π)). Throws on negative pair_rate
/// or groups that do not hold exactly four channels.
std::vector<CountRecord> simulate_counts(const DensityMatrix4& rho, std::span<const MeasurementSetting> settings,
                                         double pair_rate, std::mt19937_64& rng);

/// Same layout with counts replaced by their Poisson means.
std::vector<CountRecord> expected_counts(const DensityMatrix4& rho, std::span<const MeasurementSetting> settings,
                                         double pair_rate);

/// Poisson means pair_rate · run_time · tr(ρ Π) per setting, in settings order.
std::vector<double> poisson_means(const DensityMatrix4& rho, std::span<const MeasurementSetting> settings,
                                  double pair_rate);

/// Groups settings into (group name, four settings) blocks.
struct SettingGroup {
  std::string group;
  std::array<const MeasurementSetting*, 4> settings;
};
std::vector<SettingGroup> group_settings(std::span<const MeasurementSetting> settings);

}  // namespace fidest
