#pragma once

// Fidelity point estimates and first-order (Poissonian) error bars.
//
// Every estimator here is an affine combination of per-group ratios
//
//   F = c₀ + Σ_g s_g (f_g − o_g),   f_g = Σ a_μ A_μ / Σ b_ν A_ν,
//
// with (Δf_g)² = Σ (a_μ − b_μ f_g)² A_μ / (Σ b_ν A_ν)² and groups independent,
// so (ΔF)² = Σ_g s_g² (Δf_g)².

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fidest/counts.hpp"
#include "fidest/kernels.hpp"
#include "fidest/strategy.hpp"

namespace fidest {

enum class Protocol { LVP, DFE, TOMO };

std::string_view protocol_name(Protocol p);
/// Case-insensitive "lvp", "dfe", "tomo".
Protocol parse_protocol(std::string_view name);

/// A basis group whose weighted counts sum to zero: the ratio is undefined.
class NoCountsError : public std::runtime_error {
 public:
  explicit NoCountsError(std::string group);
  const std::string& group() const { return group_; }

 private:
  std::string group_;
};

struct ChannelLinForm {
  std::array<double, 4> a;
  std::array<double, 4> b;

  /// Throws std::invalid_argument when b is identically zero.
  static ChannelLinForm make(const std::array<double, 4>& a, const std::array<double, 4>& b);
  kernels::RatioForm kernel_form() const { return {a, b}; }
};

/// Σ a_μ A_μ / Σ b_ν A_ν. Throws NoCountsError on a zero denominator.
double ratio_estimate(const ChannelLinForm& form, const CountRecord& record);
/// sqrt(Σ (a_μ − b_μ f)² A_μ) / Σ b_ν A_ν.
double ratio_sigma(const ChannelLinForm& form, const CountRecord& record, double f);

struct FidelityEstimate {
  Protocol protocol;
  double theta;
  double value;  // unclamped
  double sigma;
  double total_counts;
  double total_time;

  bool in_unit_interval() const { return value >= 0.0 && value <= 1.0; }
};

/// One ratio term of an estimator.
struct RatioTerm {
  std::string group;
  ChannelLinForm form;
  double scale;
  double offset;
};

struct EstimatorPlan {
  Protocol protocol;
  double theta;
  double constant;
  std::vector<RatioTerm> terms;
};

/// Run times of each group, looked up by name.
struct GroupTimes {
  std::string group;
  std::array<double, 4> run_times;
};

/// LVP: groups ZZ (HH, VV, HV, VH), G1, G2, G3 (φ_k channel first).
EstimatorPlan lvp_plan(double theta, std::span<const GroupTimes> groups);
/// DFE: groups XX, YY, ZZ with channels ++, +−, −+, −−.
EstimatorPlan dfe_plan(double theta, std::span<const GroupTimes> groups);

FidelityEstimate evaluate_plan(const EstimatorPlan& plan, std::span<const CountRecord> records);

FidelityEstimate lvp_estimate(std::span<const CountRecord> records, double theta);
FidelityEstimate dfe_estimate(std::span<const CountRecord> records, double theta);

struct DfeAllocation {
  /// Minimum share of total time given to any basis group.
  double floor_fraction = 0.02;
};

/// Time shares of the XX, YY, ZZ groups: proportional to ψ_XX², ψ_YY² and
/// ψ_ZZ² + ψ_IZ² + ψ_ZI², with groups below the floor raised to it.
std::array<double, 3> dfe_group_fractions(double theta, const DfeAllocation& allocation = {});

/// Twelve settings: XX, YY, ZZ product bases, equal split within each group.
std::vector<MeasurementSetting> dfe_settings(double theta, double total_time, const DfeAllocation& allocation = {});

/// Counts of many replications sharing one schedule, stored channel-major
/// for the batch kernels.
class CountBatch {
 public:
  CountBatch(std::span<const MeasurementSetting> settings, std::size_t replications);

  std::size_t size() const { return size_; }
  std::span<const GroupTimes> group_times() const { return times_; }
  double total_time() const;

  /// Stores one replication's records; groups must match the schedule.
  void store(std::size_t replication, std::span<const CountRecord> records);

  std::span<const double> column(std::size_t group, std::size_t channel) const;
  double total_counts(std::size_t replication) const;

 private:
  std::size_t index_of(const std::string& group) const;

  std::size_t size_;
  std::vector<GroupTimes> times_;
  std::vector<std::array<std::vector<double>, 4>> counts_;
};

struct EstimateBatch {
  std::vector<double> values;
  std::vector<double> sigmas;
};

/// Evaluates the plan for every replication. Results equal evaluate_plan on
/// each replication bit for bit, whatever the SIMD level.
EstimateBatch evaluate_plan_batch(const EstimatorPlan& plan, const CountBatch& batch, kernels::SimdLevel level);
EstimateBatch evaluate_plan_batch(const EstimatorPlan& plan, const CountBatch& batch);

}  // namespace fidest
