#include "fidest/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <ostream>
#include <set>
#include <thread>

#include "fidest/tomography.hpp"

namespace fidest {

double theta_for_k(int k) { return k * std::numbers::pi / 32; }

std::vector<int> ExperimentConfig::default_k_grid() {
  std::vector<int> k(kMaxK + 1);
  for (int i = 0; i <= kMaxK; ++i) k[static_cast<std::size_t>(i)] = i;
  return k;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) { throw ConfigError(field + ": " + why); };
  if (k_grid.empty()) fail("k", "must list at least one value");
  std::set<int> seen;
  for (int k : k_grid) {
    if (k < 0 || k > kMaxK) fail("k", "values must lie in [0, 16], got " + std::to_string(k));
    if (!seen.insert(k).second) fail("k", "duplicate value " + std::to_string(k));
  }
  if (!(total_time > 0.0) || !std::isfinite(total_time)) fail("total_time", "must be positive");
  if (!(pair_rate >= 0.0) || !std::isfinite(pair_rate)) fail("pair_rate", "must be nonnegative");
  if (protocols.empty()) fail("protocols", "must list at least one protocol");
  if (std::set<Protocol>(protocols.begin(), protocols.end()).size() != protocols.size()) {
    fail("protocols", "duplicate protocol");
  }
  if (replications < 1) fail("replications", "must be at least 1");
  if (!(dfe_count_scale > 0.0) || !std::isfinite(dfe_count_scale)) fail("dfe.count_scale", "must be positive");
  if (!(dfe_floor > 0.0 && dfe_floor <= 1.0 / 3.0)) fail("dfe.floor_fraction", "must lie in (0, 1/3]");
  if (time_grid.empty()) fail("time_grid", "must list at least one time");
  for (std::size_t i = 0; i < time_grid.size(); ++i) {
    if (!(time_grid[i] > 0.0) || !std::isfinite(time_grid[i])) fail("time_grid", "times must be positive");
    if (i > 0 && !(time_grid[i] > time_grid[i - 1])) fail("time_grid", "times must be strictly ascending");
  }
  if (!(epsilon > 0.0 && epsilon < 1.0)) fail("verify.epsilon", "must lie in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) fail("verify.delta", "must lie in (0, 1)");
  if (n_trials < 0) fail("verify.n_trials", "must be nonnegative");
  switch (noise.calibration) {
    case Calibration::Reference: break;
    case Calibration::TargetFidelity:
      if (!(noise.target_fidelity > 0.0 && noise.target_fidelity <= 1.0)) {
        fail("noise.target_fidelity", "must lie in (0, 1]");
      }
      break;
    case Calibration::Fixed:
      try {
        NoiseModel::make(noise.kind, noise.parameter);
      } catch (const std::invalid_argument& e) {
        fail("noise.parameter", e.what());
      }
      break;
  }
}

namespace {

std::string_view calibration_name(Calibration c) {
  switch (c) {
    case Calibration::Reference: return "reference";
    case Calibration::TargetFidelity: return "target";
    case Calibration::Fixed: return "fixed";
  }
  return "unknown";
}

Calibration parse_calibration(const std::string& s) {
  if (s == "reference") return Calibration::Reference;
  if (s == "target") return Calibration::TargetFidelity;
  if (s == "fixed") return Calibration::Fixed;
  throw ConfigError("noise.calibration: expected reference, target or fixed, got '" + s + "'");
}

template <class T>
T field(const nlohmann::json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(path + ": wrong type");
  }
}

void reject_unknown(const nlohmann::json& j, const std::string& prefix, std::initializer_list<std::string> keys) {
  if (!j.is_object()) throw ConfigError((prefix.empty() ? std::string("config") : prefix) + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ConfigError((prefix.empty() ? "" : prefix + ".") + key + ": unknown field");
    }
  }
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig c) {
  reject_unknown(j, "", {"k", "total_time", "pair_rate", "noise", "protocols", "replications", "seed", "dfe",
                         "time_grid", "verify", "threads"});
  if (j.contains("k")) c.k_grid = field<std::vector<int>>(j["k"], "k");
  if (j.contains("total_time")) c.total_time = field<double>(j["total_time"], "total_time");
  if (j.contains("pair_rate")) c.pair_rate = field<double>(j["pair_rate"], "pair_rate");
  if (j.contains("replications")) c.replications = field<std::int64_t>(j["replications"], "replications");
  if (j.contains("seed")) c.seed = field<std::uint64_t>(j["seed"], "seed");
  if (j.contains("threads")) c.threads = field<unsigned>(j["threads"], "threads");
  if (j.contains("time_grid")) c.time_grid = field<std::vector<double>>(j["time_grid"], "time_grid");
  if (j.contains("protocols")) {
    c.protocols.clear();
    for (const auto& p : field<std::vector<std::string>>(j["protocols"], "protocols")) {
      try {
        c.protocols.push_back(parse_protocol(p));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("protocols: ") + e.what());
      }
    }
  }
  if (j.contains("dfe")) {
    const auto& d = j["dfe"];
    reject_unknown(d, "dfe", {"count_scale", "floor_fraction"});
    if (d.contains("count_scale")) c.dfe_count_scale = field<double>(d["count_scale"], "dfe.count_scale");
    if (d.contains("floor_fraction")) c.dfe_floor = field<double>(d["floor_fraction"], "dfe.floor_fraction");
  }
  if (j.contains("noise")) {
    const auto& n = j["noise"];
    reject_unknown(n, "noise", {"kind", "calibration", "parameter", "target_fidelity"});
    if (n.contains("kind")) {
      try {
        c.noise.kind = parse_noise_kind(field<std::string>(n["kind"], "noise.kind"));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("noise.kind: ") + e.what());
      }
    }
    if (n.contains("calibration")) {
      c.noise.calibration = parse_calibration(field<std::string>(n["calibration"], "noise.calibration"));
    }
    if (n.contains("parameter")) c.noise.parameter = field<double>(n["parameter"], "noise.parameter");
    if (n.contains("target_fidelity")) {
      c.noise.target_fidelity = field<double>(n["target_fidelity"], "noise.target_fidelity");
    }
  }
  if (j.contains("verify")) {
    const auto& v = j["verify"];
    reject_unknown(v, "verify", {"epsilon", "delta", "n_trials"});
    if (v.contains("epsilon")) c.epsilon = field<double>(v["epsilon"], "verify.epsilon");
    if (v.contains("delta")) c.delta = field<double>(v["delta"], "verify.delta");
    if (v.contains("n_trials")) c.n_trials = field<std::int64_t>(v["n_trials"], "verify.n_trials");
  }
  return c;
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["k"] = c.k_grid;
  j["total_time"] = c.total_time;
  j["pair_rate"] = c.pair_rate;
  j["replications"] = c.replications;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["time_grid"] = c.time_grid;
  std::vector<std::string> protocols;
  for (Protocol p : c.protocols) protocols.emplace_back(protocol_name(p));
  j["protocols"] = protocols;
  j["dfe"] = {{"count_scale", c.dfe_count_scale}, {"floor_fraction", c.dfe_floor}};
  j["noise"] = {{"kind", std::string(noise_kind_name(c.noise.kind))},
                {"calibration", std::string(calibration_name(c.noise.calibration))},
                {"parameter", c.noise.parameter},
                {"target_fidelity", c.noise.target_fidelity}};
  j["verify"] = {{"epsilon", c.epsilon}, {"delta", c.delta}, {"n_trials", c.n_trials}};
  return j;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return config_from_json(j, std::move(base));
}

DensityMatrix4 noisy_state(const ExperimentConfig& config, int k) {
  const double theta = theta_for_k(k);
  switch (config.noise.calibration) {
    case Calibration::Reference:
      return apply_noise(calibrate_noise(config.noise.kind, theta, kReferenceFidelity.at(static_cast<std::size_t>(k))),
                         theta);
    case Calibration::TargetFidelity:
      return apply_noise(calibrate_noise(config.noise.kind, theta, config.noise.target_fidelity), theta);
    case Calibration::Fixed: return apply_noise(NoiseModel::make(config.noise.kind, config.noise.parameter), theta);
  }
  throw ConfigError("noise.calibration: unknown");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Runs fn(i) for i in [0, n) on up to `threads` workers; rethrows the first
// exception.
template <class Fn>
void parallel_for(std::int64_t n, unsigned threads, Fn&& fn) {
  unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::int64_t>(workers, n));
  if (workers <= 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::int64_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

double mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double sample_std(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

std::vector<MeasurementSetting> schedule(const ExperimentConfig& config, int k, Protocol protocol, double total_time) {
  const double theta = theta_for_k(k);
  switch (protocol) {
    case Protocol::LVP: return settings_table(theta, total_time);
    case Protocol::DFE: return dfe_settings(theta, total_time, DfeAllocation{config.dfe_floor});
    case Protocol::TOMO: return tomo_settings(total_time);
  }
  return {};
}

}  // namespace

std::uint64_t replication_seed(std::uint64_t master, int k, Protocol protocol, std::int64_t replication,
                               std::uint64_t stream) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ static_cast<std::uint64_t>(k));
  h = splitmix64(h ^ static_cast<std::uint64_t>(protocol));
  h = splitmix64(h ^ stream);
  return splitmix64(h ^ static_cast<std::uint64_t>(replication));
}

ReplicationSet run_replications(const ExperimentConfig& config, int k, Protocol protocol, double total_time,
                                std::uint64_t stream) {
  const double theta = theta_for_k(k);
  const DensityMatrix4 rho = noisy_state(config, k);
  const auto settings = schedule(config, k, protocol, total_time);
  const auto n = config.replications;
  ReplicationSet out{std::vector<double>(static_cast<std::size_t>(n)),
                     std::vector<double>(static_cast<std::size_t>(n)), 0.0};
  for (const MeasurementSetting& s : settings) out.total_time += s.run_time;

  if (protocol == Protocol::TOMO) {
    parallel_for(n, config.threads, [&](std::int64_t i) {
      std::mt19937_64 rng(replication_seed(config.seed, k, protocol, i, stream));
      const TomographyResult r = tomography_from_records(simulate_counts(rho, settings, config.pair_rate, rng), theta);
      out.values[static_cast<std::size_t>(i)] = r.fidelity_to_target;
      out.sigmas[static_cast<std::size_t>(i)] = r.linear_sigma;
    });
    return out;
  }

  const double rate = protocol == Protocol::DFE ? config.pair_rate * config.dfe_count_scale : config.pair_rate;
  CountBatch batch(settings, static_cast<std::size_t>(n));
  parallel_for(n, config.threads, [&](std::int64_t i) {
    std::mt19937_64 rng(replication_seed(config.seed, k, protocol, i, stream));
    batch.store(static_cast<std::size_t>(i), simulate_counts(rho, settings, rate, rng));
  });
  const EstimatorPlan plan =
      protocol == Protocol::LVP ? lvp_plan(theta, batch.group_times()) : dfe_plan(theta, batch.group_times());
  EstimateBatch est = evaluate_plan_batch(plan, batch);
  out.values = std::move(est.values);
  out.sigmas = std::move(est.sigmas);
  return out;
}

SweepReport run_sweep(const ExperimentConfig& config) {
  config.validate();
  SweepReport report;
  for (int k : config.k_grid) {
    const double theta = theta_for_k(k);
    const double f_true = fidelity(noisy_state(config, k), ket_target(theta));
    for (Protocol p : config.protocols) {
      ReplicationSet set = run_replications(config, k, p, config.total_time);
      const auto out_of_range = std::count_if(set.values.begin(), set.values.end(),
                                              [](double v) { return v < 0.0 || v > 1.0; });
      report.rows.push_back({k, theta, p, f_true, mean(set.values), mean(set.sigmas), sample_std(set.values),
                             config.replications, set.total_time, static_cast<std::int64_t>(out_of_range),
                             std::move(set)});
    }
  }
  return report;
}

ScalingFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("power-law fit needs two or more points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("power-law fit needs positive data");
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;
  return {0, Protocol::LVP, slope, std::exp(intercept)};
}

TimeScalingReport run_time_scaling(const ExperimentConfig& config) {
  config.validate();
  TimeScalingReport report;
  for (int k : config.k_grid) {
    const double theta = theta_for_k(k);
    for (Protocol p : config.protocols) {
      std::vector<double> sigma_means;
      for (std::size_t t = 0; t < config.time_grid.size(); ++t) {
        const double total = config.time_grid[t];
        const ReplicationSet set = run_replications(config, k, p, total, t + 1);
        sigma_means.push_back(mean(set.sigmas));
        report.rows.push_back({k, theta, total, p, mean(set.values), sigma_means.back(), sample_std(set.values),
                               config.replications});
      }
      if (config.time_grid.size() >= 2) {
        ScalingFit fit = fit_power_law(config.time_grid, sigma_means);
        fit.k = k;
        fit.protocol = p;
        report.fits.push_back(fit);
      }
    }
  }
  return report;
}

ValidationReport mc_validate(const ExperimentConfig& config) {
  const SweepReport sweep = run_sweep(config);
  ValidationReport report;
  for (const SweepRow& r : sweep.rows) {
    double dev = 0.0;
    if (r.sigma_analytic_mean > 0.0) {
      dev = std::abs(r.sigma_empirical - r.sigma_analytic_mean) / r.sigma_analytic_mean;
    } else if (r.sigma_empirical > 0.0) {
      dev = std::numeric_limits<double>::infinity();
    }
    report.rows.push_back({r.k, r.protocol, r.reps, r.f_true, r.sigma_empirical, r.sigma_analytic_mean, dev});
  }
  return report;
}

SweepReport run_tomography(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  c.protocols = {Protocol::TOMO};
  return run_sweep(c);
}

VerifyReport run_verify(const ExperimentConfig& config) {
  config.validate();
  VerifyReport report;
  for (int k : config.k_grid) {
    const double theta = theta_for_k(k);
    const DensityMatrix4 sigma = noisy_state(config, k);
    const VerificationPlan plan = config.n_trials > 0
                                      ? VerificationPlan(config.epsilon, config.delta, config.n_trials)
                                      : VerificationPlan::for_target(theta, config.epsilon, config.delta);
    const auto n = static_cast<std::size_t>(config.replications);
    std::vector<VerificationOutcome> outcomes(n);
    parallel_for(config.replications, config.threads, [&](std::int64_t i) {
      std::mt19937_64 rng(replication_seed(config.seed, k, Protocol::LVP, i, 0x5eed));
      outcomes[static_cast<std::size_t>(i)] =
          run_verification([&](std::int64_t) { return sigma; }, theta, plan, rng);
    });
    std::int64_t passes = 0;
    std::int64_t trials = 0;
    for (const auto& o : outcomes) {
      passes += o.passed ? 1 : 0;
      trials += o.trials;
    }
    const std::int64_t rejections = config.replications - passes;
    report.rows.push_back({k, weight_q(theta), fidelity(sigma, ket_target(theta)), plan.n_trials(),
                           config.replications, passes,
                           static_cast<double>(trials) / static_cast<double>(config.replications),
                           static_cast<double>(trials - rejections) / static_cast<double>(trials)});
  }
  return report;
}

std::string format_real(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

void write_csv(std::ostream& out, const SweepReport& report) {
  out << "k,theta_rad,protocol,f_true,f_hat_mean,sigma_analytic_mean,sigma_empirical,reps,total_time_s\n";
  for (const SweepRow& r : report.rows) {
    out << r.k << ',' << format_real(r.theta) << ',' << protocol_name(r.protocol) << ',' << format_real(r.f_true)
        << ',' << format_real(r.f_hat_mean) << ',' << format_real(r.sigma_analytic_mean) << ','
        << format_real(r.sigma_empirical) << ',' << r.reps << ',' << format_real(r.total_time) << '\n';
  }
}

void write_csv(std::ostream& out, const TimeScalingReport& report) {
  out << "k,theta_rad,total_time_s,protocol,f_hat_mean,sigma_analytic_mean,sigma_empirical,reps\n";
  for (const ScalingRow& r : report.rows) {
    out << r.k << ',' << format_real(r.theta) << ',' << format_real(r.total_time) << ',' << protocol_name(r.protocol)
        << ',' << format_real(r.f_hat_mean) << ',' << format_real(r.sigma_analytic_mean) << ','
        << format_real(r.sigma_empirical) << ',' << r.reps << '\n';
  }
}

void write_csv(std::ostream& out, const ValidationReport& report) {
  out << "k,protocol,reps,f_true,sigma_empirical,sigma_analytic_mean,relative_deviation\n";
  for (const ValidationRow& r : report.rows) {
    out << r.k << ',' << protocol_name(r.protocol) << ',' << r.reps << ',' << format_real(r.f_true) << ','
        << format_real(r.sigma_empirical) << ',' << format_real(r.sigma_analytic_mean) << ','
        << format_real(r.relative_deviation) << '\n';
  }
}

void write_csv(std::ostream& out, const VerifyReport& report) {
  out << "k,q,f_true,n_trials,reps,passes,mean_trials,accept_rate\n";
  for (const VerifyRow& r : report.rows) {
    out << r.k << ',' << format_real(r.q) << ',' << format_real(r.f_true) << ',' << r.n_trials << ',' << r.reps << ','
        << r.passes << ',' << format_real(r.mean_trials) << ',' << format_real(r.accept_rate) << '\n';
  }
}

nlohmann::json sidecar(const std::string& command, const ExperimentConfig& config) {
  return {{"command", command}, {"seed", config.seed}, {"config", config_to_json(config)}};
}

nlohmann::json sidecar(const std::string& command, const ExperimentConfig& config, const TimeScalingReport& report) {
  nlohmann::json j = sidecar(command, config);
  j["fits"] = nlohmann::json::array();
  for (const ScalingFit& f : report.fits) {
    j["fits"].push_back({{"k", f.k},
                         {"protocol", std::string(protocol_name(f.protocol))},
                         {"exponent", f.exponent},
                         {"prefactor", f.prefactor}});
  }
  return j;
}

}  // namespace fidest
