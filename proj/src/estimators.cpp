#include "fidest/estimators.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace fidest {

std::string_view protocol_name(Protocol p) {
  switch (p) {
    case Protocol::LVP: return "LVP";
    case Protocol::DFE: return "DFE";
    case Protocol::TOMO: return "TOMO";
  }
  return "unknown";
}

Protocol parse_protocol(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  if (upper == "LVP") return Protocol::LVP;
  if (upper == "DFE") return Protocol::DFE;
  if (upper == "TOMO") return Protocol::TOMO;
  throw std::invalid_argument("unknown protocol '" + std::string(name) + "'");
}

NoCountsError::NoCountsError(std::string group)
    : std::runtime_error("no counts in basis group " + group + ": estimate undefined"), group_(std::move(group)) {}

ChannelLinForm ChannelLinForm::make(const std::array<double, 4>& a, const std::array<double, 4>& b) {
  if (std::all_of(b.begin(), b.end(), [](double x) { return x == 0.0; })) {
    throw std::invalid_argument("denominator coefficients are all zero");
  }
  return {a, b};
}

double ratio_estimate(const ChannelLinForm& form, const CountRecord& record) {
  record.validate();
  const kernels::RatioResult r = kernels::ratio_one(form.kernel_form(), record.counts());
  if (std::isnan(r.f)) throw NoCountsError(record.group);
  return r.f;
}

double ratio_sigma(const ChannelLinForm& form, const CountRecord& record, double f) {
  record.validate();
  const auto counts = record.counts();
  double den = 0.0;
  double var = 0.0;
  for (std::size_t i = 0; i < 4; ++i) den += form.b[i] * counts[i];
  if (den == 0.0) throw NoCountsError(record.group);
  for (std::size_t i = 0; i < 4; ++i) {
    const double d = form.a[i] - form.b[i] * f;
    var += d * d * counts[i];
  }
  return std::sqrt(var) / den;
}

namespace {

const GroupTimes& find_group(std::span<const GroupTimes> groups, const std::string& name) {
  for (const GroupTimes& g : groups) {
    if (g.group == name) return g;
  }
  throw std::invalid_argument("missing basis group " + name);
}

std::array<double, 4> inverse(const std::array<double, 4>& r) {
  std::array<double, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    if (!(r[i] > 0.0)) throw std::invalid_argument("run times must be positive");
    out[i] = 1.0 / r[i];
  }
  return out;
}

// Single definition of the affine combination so batch and scalar paths agree.
struct Accumulator {
  double value;
  double var = 0.0;

  void add(const RatioTerm& term, double f, double sigma) {
    value += term.scale * (f - term.offset);
    const double s = term.scale * sigma;
    var += s * s;
  }
  double sigma() const { return std::sqrt(var); }
};

}  // namespace

EstimatorPlan lvp_plan(double theta, std::span<const GroupTimes> groups) {
  const StrategyWeights w = strategy_weights(theta);
  const double norm = 1.0 - w.q;
  EstimatorPlan plan{Protocol::LVP, theta, 1.0, {}};

  // tr(Ωρ) = w_zz P⁺_ZZ + Σ w_phi (1 − P(φ_j)) and w_zz + 3 w_phi = 1, so
  // F = 1 + (w_zz/(1−q))(P⁺_ZZ − 1) − (w_phi/(1−q)) Σ P(φ_j).
  // A pure target then yields exactly 1.
  const auto zz = inverse(find_group(groups, "ZZ").run_times);
  plan.terms.push_back({"ZZ", ChannelLinForm::make({zz[0], zz[1], 0.0, 0.0}, zz), w.w_zz / norm, 1.0});
  for (const char* name : {"G1", "G2", "G3"}) {
    const auto b = inverse(find_group(groups, name).run_times);
    plan.terms.push_back({name, ChannelLinForm::make({b[0], 0.0, 0.0, 0.0}, b), -w.w_phi / norm, 0.0});
  }
  return plan;
}

EstimatorPlan dfe_plan(double theta, std::span<const GroupTimes> groups) {
  const PauliVector psi = pauli_coeffs(ket_target(theta));
  const double psi_xx = psi(Pauli::X, Pauli::X);
  const double psi_yy = psi(Pauli::Y, Pauli::Y);
  const double psi_iz = psi(Pauli::I, Pauli::Z);
  EstimatorPlan plan{Protocol::DFE, theta, 0.25, {}};

  // ¼ ψ_XX ρ_XX with ρ_XX = 2 P⁺_XX − 1 is (ψ_XX/2)(P⁺_XX − ½).
  const auto xx = inverse(find_group(groups, "XX").run_times);
  plan.terms.push_back({"XX", ChannelLinForm::make({xx[0], 0.0, 0.0, xx[3]}, xx), psi_xx / 2, 0.5});
  const auto yy = inverse(find_group(groups, "YY").run_times);
  plan.terms.push_back({"YY", ChannelLinForm::make({yy[0], 0.0, 0.0, yy[3]}, yy), psi_yy / 2, 0.5});
  // ¼(ρ_ZZ + ψ_IZ(ρ_IZ + ρ_ZI)) as one signed four-channel ratio.
  const auto zz = inverse(find_group(groups, "ZZ").run_times);
  const std::array<double, 4> a_zz = {0.25 * (1 + 2 * psi_iz) * zz[0], -0.25 * zz[1], -0.25 * zz[2],
                                      0.25 * (1 - 2 * psi_iz) * zz[3]};
  plan.terms.push_back({"ZZ", ChannelLinForm::make(a_zz, zz), 1.0, 0.0});
  return plan;
}

FidelityEstimate evaluate_plan(const EstimatorPlan& plan, std::span<const CountRecord> records) {
  Accumulator acc{plan.constant};
  double total_counts = 0.0;
  double total_time = 0.0;
  for (const RatioTerm& term : plan.terms) {
    const auto rec = std::find_if(records.begin(), records.end(),
                                  [&](const CountRecord& r) { return r.group == term.group; });
    if (rec == records.end()) throw std::invalid_argument("missing basis group " + term.group);
    rec->validate();
    const kernels::RatioResult r = kernels::ratio_one(term.form.kernel_form(), rec->counts());
    if (std::isnan(r.f)) throw NoCountsError(term.group);
    acc.add(term, r.f, r.sigma);
    total_counts += rec->total_counts();
    total_time += rec->total_time();
  }
  return {plan.protocol, plan.theta, acc.value, acc.sigma(), total_counts, total_time};
}

namespace {

std::vector<GroupTimes> times_of(std::span<const CountRecord> records) {
  std::vector<GroupTimes> out;
  out.reserve(records.size());
  for (const CountRecord& r : records) out.push_back({r.group, r.run_times()});
  return out;
}

}  // namespace

FidelityEstimate lvp_estimate(std::span<const CountRecord> records, double theta) {
  return evaluate_plan(lvp_plan(theta, times_of(records)), records);
}

FidelityEstimate dfe_estimate(std::span<const CountRecord> records, double theta) {
  return evaluate_plan(dfe_plan(theta, times_of(records)), records);
}

std::array<double, 3> dfe_group_fractions(double theta, const DfeAllocation& allocation) {
  const double floor = allocation.floor_fraction;
  if (!(floor > 0.0 && floor <= 1.0 / 3.0)) throw std::invalid_argument("DFE floor fraction must lie in (0, 1/3]");
  const PauliVector psi = pauli_coeffs(ket_target(theta));
  auto sq = [&](Pauli r, Pauli s) { return psi(r, s) * psi(r, s); };
  const std::array<double, 3> weight = {sq(Pauli::X, Pauli::X), sq(Pauli::Y, Pauli::Y),
                                        sq(Pauli::Z, Pauli::Z) + sq(Pauli::I, Pauli::Z) + sq(Pauli::Z, Pauli::I)};

  // Raise groups under the floor to it and share the rest proportionally;
  // repeat until no free group falls below the floor.
  std::array<bool, 3> pinned = {false, false, false};
  std::array<double, 3> frac{};
  for (bool changed = true; changed;) {
    changed = false;
    double free_weight = 0.0;
    int n_pinned = 0;
    for (std::size_t i = 0; i < 3; ++i) {
      if (pinned[i]) ++n_pinned;
      else free_weight += weight[i];
    }
    const double rest = 1.0 - floor * n_pinned;
    for (std::size_t i = 0; i < 3; ++i) {
      frac[i] = pinned[i] ? floor : rest * weight[i] / free_weight;
    }
    for (std::size_t i = 0; i < 3; ++i) {
      if (!pinned[i] && frac[i] < floor) {
        pinned[i] = true;
        changed = true;
      }
    }
  }
  return frac;
}

std::vector<MeasurementSetting> dfe_settings(double theta, double total_time, const DfeAllocation& allocation) {
  if (!(total_time > 0.0) || !std::isfinite(total_time)) throw std::invalid_argument("total_time must be positive");
  const auto frac = dfe_group_fractions(theta, allocation);
  std::vector<MeasurementSetting> out;
  out.reserve(12);
  const Pauli bases[3] = {Pauli::X, Pauli::Y, Pauli::Z};
  for (std::size_t g = 0; g < 3; ++g) {
    auto group = pauli_basis_settings(bases[g], bases[g], frac[g], total_time);
    out.insert(out.end(), group.begin(), group.end());
  }
  return out;
}

CountBatch::CountBatch(std::span<const MeasurementSetting> settings, std::size_t replications)
    : size_(replications) {
  for (const SettingGroup& g : group_settings(settings)) {
    GroupTimes t{g.group, {}};
    for (std::size_t ch = 0; ch < 4; ++ch) t.run_times[ch] = g.settings[ch]->run_time;
    times_.push_back(std::move(t));
    std::array<std::vector<double>, 4> cols;
    for (auto& c : cols) c.assign(replications, 0.0);
    counts_.push_back(std::move(cols));
  }
}

double CountBatch::total_time() const {
  double t = 0.0;
  for (const GroupTimes& g : times_)
    for (double r : g.run_times) t += r;
  return t;
}

std::size_t CountBatch::index_of(const std::string& group) const {
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (times_[i].group == group) return i;
  }
  throw std::invalid_argument("basis group " + group + " is not in the schedule");
}

void CountBatch::store(std::size_t replication, std::span<const CountRecord> records) {
  if (replication >= size_) throw std::out_of_range("replication index out of range");
  if (records.size() != times_.size()) throw std::invalid_argument("record count does not match schedule");
  for (const CountRecord& rec : records) {
    rec.validate();
    const std::size_t g = index_of(rec.group);
    for (std::size_t ch = 0; ch < 4; ++ch) {
      if (rec.channels[ch].run_time != times_[g].run_times[ch]) {
        throw std::invalid_argument("group " + rec.group + ": run time differs from schedule");
      }
      counts_[g][ch][replication] = rec.channels[ch].counts;
    }
  }
}

std::span<const double> CountBatch::column(std::size_t group, std::size_t channel) const {
  return counts_.at(group).at(channel);
}

double CountBatch::total_counts(std::size_t replication) const {
  double t = 0.0;
  for (const auto& group : counts_)
    for (const auto& col : group) t += col[replication];
  return t;
}

EstimateBatch evaluate_plan_batch(const EstimatorPlan& plan, const CountBatch& batch, kernels::SimdLevel level) {
  const std::size_t n = batch.size();
  std::vector<std::vector<double>> f(plan.terms.size(), std::vector<double>(n));
  std::vector<std::vector<double>> s(plan.terms.size(), std::vector<double>(n));

  const auto groups = batch.group_times();
  for (std::size_t t = 0; t < plan.terms.size(); ++t) {
    const RatioTerm& term = plan.terms[t];
    std::size_t g = groups.size();
    for (std::size_t i = 0; i < groups.size(); ++i) {
      if (groups[i].group == term.group) g = i;
    }
    if (g == groups.size()) throw std::invalid_argument("missing basis group " + term.group);
    const kernels::ChannelColumns cols{
        {batch.column(g, 0), batch.column(g, 1), batch.column(g, 2), batch.column(g, 3)}};
    kernels::ratio_batch(level, term.form.kernel_form(), cols, f[t], s[t]);
    if (std::any_of(f[t].begin(), f[t].end(), [](double x) { return std::isnan(x); })) {
      throw NoCountsError(term.group);
    }
  }

  EstimateBatch out{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    Accumulator acc{plan.constant};
    for (std::size_t t = 0; t < plan.terms.size(); ++t) acc.add(plan.terms[t], f[t][i], s[t][i]);
    out.values[i] = acc.value;
    out.sigmas[i] = acc.sigma();
  }
  return out;
}

EstimateBatch evaluate_plan_batch(const EstimatorPlan& plan, const CountBatch& batch) {
  return evaluate_plan_batch(plan, batch, kernels::active_simd_level());
}

}  // namespace fidest
