// fidest: simulate and compare two-qubit fidelity-estimation protocols.
//
//   fidest sweep     --config desk.json --out results/
//   fidest timescale --k 4,8,12 --time-grid 200,400,800,1600,2000
//   fidest validate  --reps 10000 --k 4,8,12
//   fidest tomo      --k 0,6
//   fidest verify    --k 8 --reps 200
//
// Flags override values read from --config. Exit codes: 0 success, 2 config
// error, 3 an estimate had a basis group with no counts.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fidest/harness.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNoCounts = 3;

struct Flags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::vector<int> k;
  std::optional<double> time;
  std::vector<double> time_grid;
  std::optional<double> rate;
  std::vector<std::string> protocols;
  std::optional<std::int64_t> reps;
  std::optional<double> dfe_count_scale;
  std::optional<double> dfe_floor;
  std::optional<std::string> noise;
  std::optional<std::string> noise_kind;
  std::optional<double> noise_param;
  std::optional<double> target_fidelity;
  std::optional<double> epsilon;
  std::optional<double> delta;
  std::optional<std::int64_t> trials;
  std::optional<unsigned> threads;
  std::string out_dir;
};

void add_common_options(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config_path, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--k", f.k, "grid points k (theta = k pi/32), comma separated")->delimiter(',');
  cmd->add_option("--time", f.time, "total integration time per protocol and k, seconds");
  cmd->add_option("--time-grid", f.time_grid, "integration times for timescale, seconds")->delimiter(',');
  cmd->add_option("--rate", f.rate, "coincidence rate, pairs per second");
  cmd->add_option("--protocols", f.protocols, "subset of LVP,DFE,TOMO")->delimiter(',');
  cmd->add_option("--reps", f.reps, "replications");
  cmd->add_option("--dfe-count-scale", f.dfe_count_scale, "multiplier on DFE count rate");
  cmd->add_option("--dfe-floor", f.dfe_floor, "minimum DFE time share per basis");
  cmd->add_option("--noise", f.noise, "calibration: reference, target, fixed or none");
  cmd->add_option("--noise-kind", f.noise_kind, "depolarizing, dephasing or miscalibration");
  cmd->add_option("--noise-param", f.noise_param, "noise parameter for --noise fixed");
  cmd->add_option("--target-fidelity", f.target_fidelity, "fidelity for --noise target");
  cmd->add_option("--epsilon", f.epsilon, "verification infidelity gap");
  cmd->add_option("--delta", f.delta, "verification failure probability");
  cmd->add_option("--trials", f.trials, "verification trials (default: derived from epsilon, delta)");
  cmd->add_option("--threads", f.threads, "worker threads (0: all cores)");
  cmd->add_option("--out", f.out_dir, "output directory for <command>.csv and <command>.json");
}

fidest::ExperimentConfig resolve(const Flags& f, fidest::ExperimentConfig base) {
  using namespace fidest;
  ExperimentConfig c = f.config_path.empty() ? std::move(base) : load_config(f.config_path, std::move(base));
  if (f.seed) c.seed = *f.seed;
  if (!f.k.empty()) c.k_grid = f.k;
  if (f.time) c.total_time = *f.time;
  if (!f.time_grid.empty()) c.time_grid = f.time_grid;
  if (f.rate) c.pair_rate = *f.rate;
  if (!f.protocols.empty()) {
    c.protocols.clear();
    for (const auto& p : f.protocols) {
      try {
        c.protocols.push_back(parse_protocol(p));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("--protocols: ") + e.what());
      }
    }
  }
  if (f.reps) c.replications = *f.reps;
  if (f.dfe_count_scale) c.dfe_count_scale = *f.dfe_count_scale;
  if (f.dfe_floor) c.dfe_floor = *f.dfe_floor;
  if (f.noise_kind) {
    try {
      c.noise.kind = parse_noise_kind(*f.noise_kind);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("--noise-kind: ") + e.what());
    }
  }
  if (f.noise) {
    if (*f.noise == "reference") c.noise.calibration = Calibration::Reference;
    else if (*f.noise == "target") c.noise.calibration = Calibration::TargetFidelity;
    else if (*f.noise == "fixed") c.noise.calibration = Calibration::Fixed;
    else if (*f.noise == "none") {
      c.noise.calibration = Calibration::Fixed;
      c.noise.parameter = 0.0;
    } else {
      throw ConfigError("--noise: expected reference, target, fixed or none");
    }
  }
  if (f.noise_param) c.noise.parameter = *f.noise_param;
  if (f.target_fidelity) {
    c.noise.target_fidelity = *f.target_fidelity;
    if (!f.noise) c.noise.calibration = Calibration::TargetFidelity;
  }
  if (f.epsilon) c.epsilon = *f.epsilon;
  if (f.delta) c.delta = *f.delta;
  if (f.trials) c.n_trials = *f.trials;
  if (f.threads) c.threads = *f.threads;
  c.validate();
  return c;
}

template <class Report>
void emit(const std::string& command, const Flags& f, const fidest::ExperimentConfig& config, const Report& report,
          const nlohmann::json& meta) {
  if (f.out_dir.empty()) {
    fidest::write_csv(std::cout, report);
    return;
  }
  const std::filesystem::path dir(f.out_dir);
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / (command + ".csv"));
  fidest::write_csv(csv, report);
  std::ofstream json(dir / (command + ".json"));
  json << meta.dump(2) << '\n';
  std::cerr << "wrote " << (dir / (command + ".csv")).string() << " and " << (dir / (command + ".json")).string()
            << " (seed " << config.seed << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  using namespace fidest;
  CLI::App app{"Simulate and cross-validate two-qubit fidelity estimation (LVP, DFE, tomography)"};
  app.require_subcommand(1);
  Flags flags;

  auto* sweep = app.add_subcommand("sweep", "LVP and DFE estimates across the k grid");
  auto* timescale = app.add_subcommand("timescale", "error bar versus integration time, with power-law fits");
  auto* validate = app.add_subcommand("validate", "Monte-Carlo spread against analytic error bars");
  auto* tomo = app.add_subcommand("tomo", "tomographic calibration fidelities");
  auto* verify = app.add_subcommand("verify", "sequential pass/fail verification runs");
  for (auto* cmd : {sweep, timescale, validate, tomo, verify}) add_common_options(cmd, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (sweep->parsed()) {
      const auto c = resolve(flags, {});
      emit("sweep", flags, c, run_sweep(c), sidecar("sweep", c));
    } else if (timescale->parsed()) {
      ExperimentConfig base;
      base.k_grid = {4, 8, 12};
      const auto c = resolve(flags, base);
      const auto report = run_time_scaling(c);
      emit("timescale", flags, c, report, sidecar("timescale", c, report));
    } else if (validate->parsed()) {
      const auto c = resolve(flags, {});
      emit("validate", flags, c, mc_validate(c), sidecar("validate", c));
    } else if (tomo->parsed()) {
      const auto c = resolve(flags, {});
      emit("tomo", flags, c, run_tomography(c), sidecar("tomo", c));
    } else if (verify->parsed()) {
      ExperimentConfig base;
      base.replications = 100;
      const auto c = resolve(flags, base);
      emit("verify", flags, c, run_verify(c), sidecar("verify", c));
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::domain_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NoCountsError& e) {
    std::cerr << "estimation error: " << e.what() << '\n';
    return kExitNoCounts;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
