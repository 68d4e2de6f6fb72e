#pragma once

// Configuration-driven experiment runners and their reports.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fidest/counts.hpp"
#include "fidest/estimators.hpp"

namespace fidest {

/// Invalid configuration; the message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kMaxK = 16;

/// θ = kπ/32.
double theta_for_k(int k);

/// Tomographic calibration fidelities of the reference experiment, k = 0..16.
inline constexpr std::array<double, 17> kReferenceFidelity = {0.972, 0.961, 0.954, 0.944, 0.939, 0.935,
                                                             0.908, 0.919, 0.974, 0.908, 0.911, 0.911,
                                                             0.919, 0.926, 0.945, 0.949, 0.963};

enum class Calibration { Reference, TargetFidelity, Fixed };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::Depolarizing;
  Calibration calibration = Calibration::Reference;
  double parameter = 0.0;        // used by Fixed
  double target_fidelity = 1.0;  // used by TargetFidelity
};

struct ExperimentConfig {
  std::vector<int> k_grid = default_k_grid();
  double total_time = 400.0;
  double pair_rate = 500.0;
  NoiseSpec noise;
  std::vector<Protocol> protocols = {Protocol::LVP, Protocol::DFE};
  std::int64_t replications = 1000;
  std::uint64_t seed = 20210101;
  double dfe_count_scale = 1.0;
  double dfe_floor = 0.02;
  std::vector<double> time_grid = {200, 400, 600, 800, 1000, 1200, 1400, 1600, 1800, 2000};
  double epsilon = 0.05;
  double delta = 0.01;
  std::int64_t n_trials = 0;  // 0: derive from ε, δ
  unsigned threads = 0;       // 0: hardware concurrency

  static std::vector<int> default_k_grid();
  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {});
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});

/// Target state for grid point k with the configured noise applied.
DensityMatrix4 noisy_state(const ExperimentConfig& config, int k);

/// Independent seed for one replication, derived from the master seed.
std::uint64_t replication_seed(std::uint64_t master, int k, Protocol protocol, std::int64_t replication,
                               std::uint64_t stream = 0);

/// Analytic estimates of one protocol at one (k, T) over all replications.
struct ReplicationSet {
  std::vector<double> values;
  std::vector<double> sigmas;
  double total_time;  // simulated integration time per replication
};

ReplicationSet run_replications(const ExperimentConfig& config, int k, Protocol protocol, double total_time,
                                std::uint64_t stream = 0);

struct SweepRow {
  int k;
  double theta;
  Protocol protocol;
  double f_true;
  double f_hat_mean;
  double sigma_analytic_mean;
  double sigma_empirical;
  std::int64_t reps;
  double total_time;
  std::int64_t out_of_range;  // replications with F̂ outside [0, 1]
  ReplicationSet samples;
};

struct SweepReport {
  std::vector<SweepRow> rows;
};

SweepReport run_sweep(const ExperimentConfig& config);

struct ScalingRow {
  int k;
  double theta;
  double total_time;
  Protocol protocol;
  double f_hat_mean;
  double sigma_analytic_mean;
  double sigma_empirical;
  std::int64_t reps;
};

struct ScalingFit {
  int k;
  Protocol protocol;
  double exponent;   // slope of log sigma vs log T
  double prefactor;  // sigma(T) ≈ prefactor · T^exponent
};

struct TimeScalingReport {
  std::vector<ScalingRow> rows;
  std::vector<ScalingFit> fits;
};

TimeScalingReport run_time_scaling(const ExperimentConfig& config);

struct ValidationRow {
  int k;
  Protocol protocol;
  std::int64_t reps;
  double f_true;
  double sigma_empirical;
  double sigma_analytic_mean;
  double relative_deviation;  // |empirical − analytic| / analytic, 0 when both vanish
};

struct ValidationReport {
  std::vector<ValidationRow> rows;
};

ValidationReport mc_validate(const ExperimentConfig& config);

/// Sweep restricted to tomography.
SweepReport run_tomography(const ExperimentConfig& config);

struct VerifyRow {
  int k;
  double q;
  double f_true;
  std::int64_t n_trials;
  std::int64_t reps;
  std::int64_t passes;
  double mean_trials;
  double accept_rate;  // accepted trials / trials consumed
};

struct VerifyReport {
  std::vector<VerifyRow> rows;
};

VerifyReport run_verify(const ExperimentConfig& config);

/// Least-squares slope and intercept of log y against log x.
ScalingFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y);

/// "%.12g"
std::string format_real(double x);

void write_csv(std::ostream& out, const SweepReport& report);
void write_csv(std::ostream& out, const TimeScalingReport& report);
void write_csv(std::ostream& out, const ValidationReport& report);
void write_csv(std::ostream& out, const VerifyReport& report);

/// Sidecar: command, full config echo and seed; plus fits for time scaling.
nlohmann::json sidecar(const std::string& command, const ExperimentConfig& config);
nlohmann::json sidecar(const std::string& command, const ExperimentConfig& config, const TimeScalingReport& report);

}  // namespace fidest
