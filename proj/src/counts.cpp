#include "fidest/counts.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace fidest {

std::string_view noise_kind_name(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::Depolarizing: return "depolarizing";
    case NoiseKind::Dephasing: return "dephasing";
    case NoiseKind::Miscalibration: return "miscalibration";
  }
  return "unknown";
}

NoiseKind parse_noise_kind(std::string_view name) {
  if (name == "depolarizing") return NoiseKind::Depolarizing;
  if (name == "dephasing") return NoiseKind::Dephasing;
  if (name == "miscalibration") return NoiseKind::Miscalibration;
  throw std::invalid_argument("unknown noise kind '" + std::string(name) + "'");
}

NoiseModel NoiseModel::make(NoiseKind kind, double parameter) {
  if (!std::isfinite(parameter)) throw std::invalid_argument("noise parameter must be finite");
  if (kind == NoiseKind::Miscalibration) {
    if (std::abs(parameter) > std::numbers::pi) throw std::invalid_argument("miscalibration angle outside [-pi, pi]");
  } else if (parameter < 0.0 || parameter > 1.0) {
    throw std::invalid_argument(std::string(noise_kind_name(kind)) + " parameter outside [0, 1]");
  }
  return {kind, parameter};
}

namespace {

Mat2 y_rotation(double angle) {
  Mat2 r;
  r << std::cos(angle / 2), -std::sin(angle / 2), std::sin(angle / 2), std::cos(angle / 2);
  return r;
}

// R ⊗ R
Mat4 rotate_both(double angle) {
  const Mat2 r = y_rotation(angle);
  Mat4 rr;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) rr.block<2, 2>(2 * i, 2 * j) = r(i, j) * r;
  return rr;
}

double miscalibration_fidelity(double theta, double angle) {
  const Mat4 rr = rotate_both(angle);
  const Vec4& psi = ket_target(theta).amplitudes();
  return std::norm(psi.dot(rr * psi));
}

}  // namespace

DensityMatrix4 apply_noise(const NoiseModel& model, double theta) {
  const NoiseModel m = NoiseModel::make(model.kind, model.parameter);
  const Ket4 psi = ket_target(theta);
  Mat4 rho = psi.projector();
  switch (m.kind) {
    case NoiseKind::Depolarizing:
      rho = (1.0 - m.parameter) * rho + m.parameter * 0.25 * Mat4::Identity();
      break;
    case NoiseKind::Dephasing:
      rho(0, 3) *= 1.0 - m.parameter;
      rho(3, 0) *= 1.0 - m.parameter;
      break;
    case NoiseKind::Miscalibration: {
      const Mat4 rr = rotate_both(m.parameter);
      rho = rr * rho * rr.adjoint();
      break;
    }
  }
  return DensityMatrix4::from_matrix(rho);
}

NoiseModel calibrate_noise(NoiseKind kind, double theta, double target_fidelity) {
  auto unattainable = [&]() {
    std::ostringstream msg;
    msg << noise_kind_name(kind) << " noise cannot reach fidelity " << target_fidelity << " at theta " << theta;
    return std::domain_error(msg.str());
  };
  if (!(target_fidelity > 0.0 && target_fidelity <= 1.0)) throw unattainable();
  if (target_fidelity == 1.0) return NoiseModel::make(kind, 0.0);

  switch (kind) {
    case NoiseKind::Depolarizing: {
      const double p = 4.0 * (1.0 - target_fidelity) / 3.0;
      if (p > 1.0) throw unattainable();
      return NoiseModel::make(kind, p);
    }
    case NoiseKind::Dephasing: {
      // F = 1 − p sin²2θ / 2
      const double s2 = std::sin(2 * theta);
      const double p = 2.0 * (1.0 - target_fidelity) / (s2 * s2);
      if (!std::isfinite(p) || p > 1.0) throw unattainable();
      return NoiseModel::make(kind, p);
    }
    case NoiseKind::Miscalibration: {
      // Fidelity falls from 1 at α = 0; bracket the first crossing, then bisect.
      constexpr int kSteps = 4096;
      double lo = 0.0;
      double hi = -1.0;
      for (int i = 1; i <= kSteps; ++i) {
        const double a = std::numbers::pi * i / kSteps;
        if (miscalibration_fidelity(theta, a) <= target_fidelity) {
          hi = a;
          break;
        }
        lo = a;
      }
      if (hi < 0.0) throw unattainable();
      for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        (miscalibration_fidelity(theta, mid) > target_fidelity ? lo : hi) = mid;
      }
      const double angle = 0.5 * (lo + hi);
      if (std::abs(miscalibration_fidelity(theta, angle) - target_fidelity) >= 1e-9) throw unattainable();
      return NoiseModel::make(kind, angle);
    }
  }
  throw unattainable();
}

void CountRecord::validate() const {
  for (const Channel& c : channels) {
    if (!std::isfinite(c.counts) || c.counts < 0.0) {
      throw std::invalid_argument("group " + group + ": counts must be nonnegative");
    }
    if (!std::isfinite(c.run_time) || !(c.run_time > 0.0)) {
      throw std::invalid_argument("group " + group + ": run times must be positive");
    }
  }
}

double CountRecord::total_counts() const {
  double t = 0.0;
  for (const Channel& c : channels) t += c.counts;
  return t;
}

double CountRecord::total_time() const {
  double t = 0.0;
  for (const Channel& c : channels) t += c.run_time;
  return t;
}

std::array<double, 4> CountRecord::counts() const {
  return {channels[0].counts, channels[1].counts, channels[2].counts, channels[3].counts};
}

std::array<double, 4> CountRecord::run_times() const {
  return {channels[0].run_time, channels[1].run_time, channels[2].run_time, channels[3].run_time};
}

double born_probability(const DensityMatrix4& rho, const Ket4& state) {
  const Vec4& v = state.amplitudes();
  const double p = v.dot(rho.matrix() * v).real();
  return p < 1e-14 ? 0.0 : std::min(p, 1.0);
}

std::vector<SettingGroup> group_settings(std::span<const MeasurementSetting> settings) {
  std::vector<SettingGroup> groups;
  std::map<std::string, std::size_t> index;
  std::vector<std::size_t> filled;
  for (const MeasurementSetting& s : settings) {
    auto [it, inserted] = index.try_emplace(s.group, groups.size());
    if (inserted) {
      groups.push_back({s.group, {nullptr, nullptr, nullptr, nullptr}});
      filled.push_back(0);
    }
    const std::size_t g = it->second;
    if (filled[g] == 4) throw std::invalid_argument("group " + s.group + " has more than four settings");
    groups[g].settings[filled[g]++] = &s;
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (filled[g] != 4) throw std::invalid_argument("group " + groups[g].group + " has fewer than four settings");
  }
  return groups;
}

std::vector<double> poisson_means(const DensityMatrix4& rho, std::span<const MeasurementSetting> settings,
                                  double pair_rate) {
  if (!(pair_rate >= 0.0) || !std::isfinite(pair_rate)) throw std::invalid_argument("pair rate must be nonnegative");
  std::vector<double> means;
  means.reserve(settings.size());
  for (const MeasurementSetting& s : settings) {
    if (!(s.run_time > 0.0)) throw std::invalid_argument("setting run time must be positive");
    means.push_back(pair_rate * s.run_time * born_probability(rho, s.state));
  }
  return means;
}

namespace {

template <class CountFn>
std::vector<CountRecord> build_records(const DensityMatrix4& rho, std::span<const MeasurementSetting> settings,
                                       double pair_rate, CountFn&& count) {
  const auto groups = group_settings(settings);
  std::vector<CountRecord> out;
  out.reserve(groups.size());
  for (const SettingGroup& g : groups) {
    CountRecord rec{g.group, {}};
    for (std::size_t ch = 0; ch < 4; ++ch) {
      const MeasurementSetting& s = *g.settings[ch];
      if (!(s.run_time > 0.0)) throw std::invalid_argument("setting run time must be positive");
      rec.channels[ch] = {s.channel, count(pair_rate * s.run_time * born_probability(rho, s.state)), s.run_time};
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace

std::vector<CountRecord> simulate_counts(const DensityMatrix4& rho, std::span<const MeasurementSetting> settings,
                                         double pair_rate, std::mt19937_64& rng) {
  if (!(pair_rate >= 0.0) || !std::isfinite(pair_rate)) throw std::invalid_argument("pair rate must be nonnegative");
  return build_records(rho, settings, pair_rate, [&rng](double mean) {
    if (mean <= 0.0) return 0.0;
    std::poisson_distribution<long long> poisson(mean);
    return static_cast<double>(poisson(rng));
  });
}

std::vector<CountRecord> expected_counts(const DensityMatrix4& rho, std::span<const MeasurementSetting> settings,
                                         double pair_rate) {
  if (!(pair_rate >= 0.0) || !std::isfinite(pair_rate)) throw std::invalid_argument("pair rate must be nonnegative");
  return build_records(rho, settings, pair_rate, [](double mean) { return mean; });
}

}  // namespace fidest
