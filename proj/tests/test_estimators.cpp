#include <doctest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>

#include "fidest/counts.hpp"
#include "fidest/estimators.hpp"
#include "oracle.hpp"

using namespace fidest;
using std::numbers::pi;

namespace {

CountRecord record(std::array<double, 4> counts, std::array<double, 4> times = {1, 1, 1, 1}) {
  CountRecord r{"G", {}};
  for (int i = 0; i < 4; ++i) r.channels[i] = {i + 1, counts[i], times[i]};
  return r;
}

using Records = std::vector<CountRecord>;

// Estimators written directly from their definitions in terms of
// run-time-normalised frequencies, with no plan machinery.
double oracle_lvp(const Records& recs, double theta) {
  const double s = std::sin(2 * theta);
  const double q = (2 + s) / (4 + s), w_zz = (2 - s) / (4 + s), w_phi = 2 * (1 + s) / (3 * (4 + s));
  auto rate = [](const CountRecord& r, int ch) { return r.channels[ch].counts / r.channels[ch].run_time; };
  auto total = [&](const CountRecord& r) { return rate(r, 0) + rate(r, 1) + rate(r, 2) + rate(r, 3); };
  const double p_even = (rate(recs[0], 0) + rate(recs[0], 1)) / total(recs[0]);
  double tr = w_zz * p_even;
  for (int g = 1; g <= 3; ++g) tr += w_phi * (1 - rate(recs[g], 0) / total(recs[g]));
  return (tr - q) / (1 - q);
}

double oracle_dfe(const Records& recs, double theta) {
  const double s2 = std::sin(2 * theta), c2 = std::cos(2 * theta);
  auto freq = [](const CountRecord& r, std::array<double, 4> sign) {
    double num = 0, den = 0;
    for (int i = 0; i < 4; ++i) {
      const double x = r.channels[i].counts / r.channels[i].run_time;
      num += sign[i] * x;
      den += x;
    }
    return num / den;
  };
  const double xx = freq(recs[0], {1, -1, -1, 1});
  const double yy = freq(recs[1], {1, -1, -1, 1});
  const double zz = freq(recs[2], {1, -1, -1, 1});
  const double zi = freq(recs[2], {1, 1, -1, -1});
  const double iz = freq(recs[2], {1, -1, 1, -1});
  return 0.25 * (1 + xx * s2 + yy * (-s2) + zz + (-c2) * (iz + zi));
}

// First-order Poissonian error of an arbitrary estimator:
// (ΔF)² = Σ_μ (∂F/∂A_μ)² A_μ, derivatives by central differences.
double numeric_sigma(const std::function<double(const Records&)>& est, Records recs) {
  double var = 0;
  for (auto& r : recs) {
    for (auto& ch : r.channels) {
      const double a = ch.counts;
      const double h = 1e-4 * std::max(1.0, a);
      ch.counts = a + h;
      const double up = est(recs);
      ch.counts = a - h;
      const double down = est(recs);
      ch.counts = a;
      const double d = (up - down) / (2 * h);
      var += d * d * a;
    }
  }
  return std::sqrt(var);
}

DensityMatrix4 depolarized(double theta, double p) {
  return DensityMatrix4::from_matrix((1 - p) * ket_target(theta).projector() + p * Mat4::Identity() / 4.0);
}

}  // namespace

TEST_CASE("ratio_estimate examples") {
  const auto form = ChannelLinForm::make({1, 0, 0, 0}, {1, 1, 1, 1});
  CHECK(ratio_estimate(form, record({800, 0, 0, 0})) == 1.0);
  CHECK(ratio_estimate(form, record({800, 800, 0, 0})) == 0.5);
  CHECK_THROWS_AS(ratio_estimate(form, record({0, 0, 0, 0})), NoCountsError);
  CHECK_THROWS_AS(ChannelLinForm::make({1, 0, 0, 0}, {0, 0, 0, 0}), std::invalid_argument);
}

TEST_CASE("ratio_sigma examples") {
  const auto form = ChannelLinForm::make({1, 0, 0, 0}, {1, 1, 1, 1});
  CHECK(ratio_sigma(form, record({800, 0, 0, 0}), 1.0) == 0.0);
  const double s = ratio_sigma(form, record({800, 800, 0, 0}), 0.5);
  CHECK(s == doctest::Approx(1 / (2 * std::sqrt(1600.0))).epsilon(1e-14));
  CHECK(s == doctest::Approx(0.0125).epsilon(1e-12));
  // 1/(2√(2N)) with N = 800
  CHECK(s == doctest::Approx(1 / (2 * std::sqrt(2 * 800.0))).epsilon(1e-14));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(1, 1000);
  for (int i = 0; i < 20; ++i) {
    const auto rec = record({u(rng), u(rng), u(rng), u(rng)}, {2, 3, 5, 7});
    const auto f2 = ChannelLinForm::make({0.3, -0.1, 0.0, 0.7}, {0.5, 0.25, 0.2, 1.0 / 7});
    const double f = ratio_estimate(f2, rec);
    auto scaled = rec;
    for (auto& ch : scaled.channels) ch.counts *= 4;
    CHECK(std::abs(ratio_sigma(f2, scaled, ratio_estimate(f2, scaled)) - ratio_sigma(f2, rec, f) / 2) < 1e-12);
  }
}

TEST_CASE("ratio_sigma matches the numeric derivative formula") {
  const auto form = ChannelLinForm::make({0.2, -0.5, 0.1, 0.4}, {1, 0.5, 0.25, 2});
  const Records recs = {record({120, 30, 7, 55}, {1, 2, 4, 0.5})};
  const double f = ratio_estimate(form, recs[0]);
  const double numeric = numeric_sigma([&](const Records& r) { return ratio_estimate(form, r[0]); }, recs);
  CHECK(ratio_sigma(form, recs[0], f) == doctest::Approx(numeric).epsilon(1e-7));
}

TEST_CASE("LVP on exact expected counts") {
  for (int k = 0; k <= 16; ++k) {
    const double theta = k * pi / 32;
    const auto settings = settings_table(theta, 400);
    const auto pure = lvp_estimate(expected_counts(DensityMatrix4::pure(ket_target(theta)), settings, 500), theta);
    CHECK(std::abs(pure.value - 1.0) < 1e-12);
    CHECK(pure.protocol == Protocol::LVP);
    const auto mixed = lvp_estimate(expected_counts(DensityMatrix4::maximally_mixed(), settings, 500), theta);
    CHECK(std::abs(mixed.value - 0.25) < 1e-12);
  }
  const auto settings = settings_table(pi / 4, 400);
  const auto rho = depolarized(pi / 4, 0.12);
  const auto e = lvp_estimate(expected_counts(rho, settings, 500), pi / 4);
  CHECK(std::abs(e.value - 0.91) < 1e-12);
  CHECK(e.total_time == doctest::Approx(400));
  double expected_total = 0;
  for (const auto& s : settings) {
    expected_total += 500 * s.run_time * oracle::expectation(oracle::from_eigen(rho.matrix()),
                                                             oracle::V4{s.state[0], s.state[1], s.state[2], s.state[3]});
  }
  CHECK(e.total_counts == doctest::Approx(expected_total).epsilon(1e-12));
}

TEST_CASE("DFE schedule") {
  const auto f = dfe_group_fractions(pi / 4);
  for (double x : f) CHECK(x == doctest::Approx(1.0 / 3).epsilon(1e-12));

  const auto z = dfe_group_fractions(0.0);
  CHECK(z[0] == doctest::Approx(0.02));
  CHECK(z[1] == doctest::Approx(0.02));
  CHECK(z[2] == doctest::Approx(0.96));

  const auto custom = dfe_group_fractions(0.0, {0.05});
  CHECK(custom[0] == doctest::Approx(0.05));
  CHECK_THROWS_AS(dfe_group_fractions(0.3, {0.0}), std::invalid_argument);
  CHECK_THROWS_AS(dfe_group_fractions(0.3, {0.5}), std::invalid_argument);

  for (int k = 0; k <= 16; ++k) {
    const double theta = k * pi / 32;
    const auto settings = dfe_settings(theta, 400);
    REQUIRE(settings.size() == 12);
    double total = 0;
    for (const auto& s : settings) total += s.run_time;
    CHECK(std::abs(total - 400) < 1e-12);
    const auto fr = dfe_group_fractions(theta);
    for (double x : fr) CHECK(x >= 0.02 - 1e-15);
    // Unfloored groups keep the ψ² proportion.
    const double s2 = std::sin(2 * theta), c2 = std::cos(2 * theta);
    if (fr[0] > 0.02 + 1e-12) CHECK(fr[0] / fr[2] == doctest::Approx(s2 * s2 / (1 + 2 * c2 * c2)).epsilon(1e-12));
  }
  const auto s = dfe_settings(pi / 4, 300);
  CHECK(s[0].group == "XX");
  CHECK(s[4].group == "YY");
  CHECK(s[8].group == "ZZ");
  CHECK(s[0].run_time == doctest::Approx(25.0));
}

TEST_CASE("DFE on exact expected counts") {
  for (int k = 0; k <= 16; ++k) {
    const double theta = k * pi / 32;
    const auto settings = dfe_settings(theta, 400);
    const auto pure = dfe_estimate(expected_counts(DensityMatrix4::pure(ket_target(theta)), settings, 500), theta);
    CHECK(std::abs(pure.value - 1.0) < 1e-12);
    const auto mixed = dfe_estimate(expected_counts(DensityMatrix4::maximally_mixed(), settings, 500), theta);
    CHECK(std::abs(mixed.value - 0.25) < 1e-12);
  }
  for (double p : {0.04, 0.12, 0.5}) {
    const auto rho = depolarized(pi / 8, p);
    const auto e = dfe_estimate(expected_counts(rho, dfe_settings(pi / 8, 400), 500), pi / 8);
    CHECK(std::abs(e.value - fidelity(rho, ket_target(pi / 8))) < 1e-12);
    CHECK(std::abs(e.value - (1 - 3 * p / 4)) < 1e-12);
  }
}

TEST_CASE("infinite-statistics estimates equal the direct trace on random states") {
  std::mt19937_64 rng(51);
  for (int i = 0; i < 100; ++i) {
    const oracle::M4 m = oracle::random_state(rng, 1 + i % 4);
    const auto rho = DensityMatrix4::from_matrix(oracle::to_eigen(m));
    const double theta = (i % 17) * pi / 32;
    const double truth = oracle::expectation(m, oracle::target(theta));
    const auto lvp = lvp_estimate(expected_counts(rho, settings_table(theta, 400), 500), theta);
    const auto dfe = dfe_estimate(expected_counts(rho, dfe_settings(theta, 400), 500), theta);
    CHECK(std::abs(lvp.value - truth) < 1e-10);
    CHECK(std::abs(dfe.value - truth) < 1e-10);
  }
}

TEST_CASE("point estimates and error bars match direct formulas on simulated counts") {
  std::mt19937_64 rng(52);
  for (int i = 0; i < 40; ++i) {
    const double theta = (i % 17) * pi / 32;
    const auto rho = oracle::random_density(rng);
    const auto lvp_recs = simulate_counts(rho, settings_table(theta, 400), 500, rng);
    const auto dfe_recs = simulate_counts(rho, dfe_settings(theta, 400), 500, rng);

    const auto lvp = lvp_estimate(lvp_recs, theta);
    const auto dfe = dfe_estimate(dfe_recs, theta);
    CHECK(lvp.value == doctest::Approx(oracle_lvp(lvp_recs, theta)).epsilon(1e-12));
    CHECK(dfe.value == doctest::Approx(oracle_dfe(dfe_recs, theta)).epsilon(1e-12));

    const double lvp_sigma = numeric_sigma([&](const Records& r) { return oracle_lvp(r, theta); }, lvp_recs);
    const double dfe_sigma = numeric_sigma([&](const Records& r) { return oracle_dfe(r, theta); }, dfe_recs);
    CHECK(lvp.sigma == doctest::Approx(lvp_sigma).epsilon(1e-6));
    CHECK(dfe.sigma == doctest::Approx(dfe_sigma).epsilon(1e-6));
  }
}

TEST_CASE("pure-state LVP replications return exactly one") {
  std::mt19937_64 rng(53);
  for (int k : {0, 3, 8, 11, 16}) {
    const double theta = k * pi / 32;
    const auto settings = settings_table(theta, 400);
    const auto rho = DensityMatrix4::pure(ket_target(theta));
    for (int i = 0; i < 50; ++i) {
      const auto e = lvp_estimate(simulate_counts(rho, settings, 500, rng), theta);
      CHECK(e.value == 1.0);
      CHECK(e.sigma == 0.0);
    }
  }
}

TEST_CASE("scale invariance of point estimates") {
  std::mt19937_64 rng(54);
  const double theta = 7 * pi / 32;
  const auto rho = depolarized(theta, 0.1);
  for (const auto& settings : {settings_table(theta, 400), dfe_settings(theta, 400)}) {
    const bool lvp = settings.size() == 16;
    auto recs = simulate_counts(rho, settings, 500, rng);
    const double before = lvp ? lvp_estimate(recs, theta).value : dfe_estimate(recs, theta).value;
    for (auto& r : recs)
      for (auto& ch : r.channels) {
        ch.counts *= 3.5;
        ch.run_time *= 3.5;
      }
    const double after = lvp ? lvp_estimate(recs, theta).value : dfe_estimate(recs, theta).value;
    CHECK(std::abs(after - before) < 1e-12);
  }
}

TEST_CASE("an empty group reports which group had no counts") {
  const double theta = pi / 4;
  auto recs = expected_counts(depolarized(theta, 0.1), settings_table(theta, 400), 500);
  for (auto& ch : recs[2].channels) ch.counts = 0;
  try {
    lvp_estimate(recs, theta);
    FAIL("expected NoCountsError");
  } catch (const NoCountsError& e) {
    CHECK(e.group() == "G2");
  }
  // A single empty channel is fine.
  recs = expected_counts(depolarized(theta, 0.1), settings_table(theta, 400), 500);
  recs[1].channels[3].counts = 0;
  CHECK_NOTHROW(lvp_estimate(recs, theta));
}

TEST_CASE("estimators reject missing groups") {
  const double theta = pi / 4;
  auto recs = expected_counts(depolarized(theta, 0.1), dfe_settings(theta, 400), 500);
  recs.pop_back();
  CHECK_THROWS(dfe_estimate(recs, theta));
}

TEST_CASE("batch evaluation is bit-identical to per-record evaluation") {
  std::mt19937_64 rng(55);
  const double theta = 9 * pi / 32;
  const auto rho = depolarized(theta, 0.08);
  for (const auto& settings : {settings_table(theta, 400), dfe_settings(theta, 400)}) {
    const bool lvp = settings.size() == 16;
    const std::size_t n = 37;
    CountBatch batch(settings, n);
    std::vector<FidelityEstimate> single;
    for (std::size_t i = 0; i < n; ++i) {
      const auto recs = simulate_counts(rho, settings, 500, rng);
      batch.store(i, recs);
      single.push_back(lvp ? lvp_estimate(recs, theta) : dfe_estimate(recs, theta));
      CHECK(batch.total_counts(i) == doctest::Approx(single.back().total_counts));
    }
    CHECK(batch.total_time() == doctest::Approx(400).epsilon(1e-12));
    const auto plan = lvp ? lvp_plan(theta, batch.group_times()) : dfe_plan(theta, batch.group_times());
    for (auto level : {kernels::SimdLevel::Scalar, kernels::SimdLevel::Avx2}) {
      if (!kernels::simd_level_available(level)) continue;
      const auto out = evaluate_plan_batch(plan, batch, level);
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(out.values[i] == single[i].value);
        CHECK(out.sigmas[i] == single[i].sigma);
      }
    }
  }
}

TEST_CASE("batch evaluation raises NoCountsError on an empty group") {
  const double theta = pi / 4;
  const auto settings = settings_table(theta, 400);
  CountBatch batch(settings, 3);
  for (std::size_t i = 0; i < 3; ++i) batch.store(i, expected_counts(depolarized(theta, 0.1), settings, 500));
  auto recs = expected_counts(depolarized(theta, 0.1), settings, 500);
  for (auto& ch : recs[0].channels) ch.counts = 0;
  batch.store(1, recs);
  CHECK_THROWS_AS(evaluate_plan_batch(lvp_plan(theta, batch.group_times()), batch), NoCountsError);
}

TEST_CASE("Monte-Carlo spread agrees with analytic sigma") {
  // Smaller version of the full acceptance check: 2000 replications.
  std::mt19937_64 rng(56);
  const double theta = pi / 4;
  const auto rho = apply_noise(calibrate_noise(NoiseKind::Depolarizing, theta, 0.95), theta);
  for (const auto& settings : {settings_table(theta, 400), dfe_settings(theta, 400)}) {
    const bool lvp = settings.size() == 16;
    const int n = 2000;
    double sum = 0, sum2 = 0, sig = 0;
    for (int i = 0; i < n; ++i) {
      const auto recs = simulate_counts(rho, settings, 500, rng);
      const auto e = lvp ? lvp_estimate(recs, theta) : dfe_estimate(recs, theta);
      sum += e.value;
      sum2 += e.value * e.value;
      sig += e.sigma;
    }
    const double mean = sum / n;
    const double sd = std::sqrt((sum2 - n * mean * mean) / (n - 1));
    CHECK(std::abs(sd / (sig / n) - 1) < 0.1);
    CHECK(std::abs(mean - 0.95) < 4 * sd / std::sqrt(n));
  }
}

TEST_CASE("protocol names") {
  CHECK(parse_protocol("lvp") == Protocol::LVP);
  CHECK(parse_protocol("DFE") == Protocol::DFE);
  CHECK(parse_protocol("Tomo") == Protocol::TOMO);
  CHECK(protocol_name(Protocol::DFE) == "DFE");
  CHECK_THROWS_AS(parse_protocol("mle"), std::invalid_argument);
}
