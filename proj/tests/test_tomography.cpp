#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "fidest/counts.hpp"
#include "fidest/tomography.hpp"
#include "oracle.hpp"

using namespace fidest;
using std::numbers::pi;

namespace {

// Linear-inversion fidelity to ψ(θ) written out directly from frequencies.
double oracle_linear_fidelity(const std::vector<CountRecord>& recs, double theta) {
  const oracle::M4 target = oracle::from_eigen(ket_target(theta).projector());
  double coeff[4][4] = {};
  coeff[0][0] = 1;
  const char names[] = "IXYZ";
  for (const auto& r : recs) {
    const int a = static_cast<int>(std::find(names, names + 4, r.group[0]) - names);
    const int b = static_cast<int>(std::find(names, names + 4, r.group[1]) - names);
    double x[4], tot = 0;
    for (int i = 0; i < 4; ++i) tot += x[i] = r.channels[i].counts / r.channels[i].run_time;
    coeff[a][b] += (x[0] - x[1] - x[2] + x[3]) / tot;
    coeff[a][0] += (x[0] + x[1] - x[2] - x[3]) / tot / 3;
    coeff[0][b] += (x[0] - x[1] + x[2] - x[3]) / tot / 3;
  }
  double f = 0;
  for (int r = 0; r < 4; ++r)
    for (int s = 0; s < 4; ++s) f += coeff[r][s] * oracle::pauli_coeff(target, r, s) / 4;
  return f;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("tomography settings") {
  const auto s = tomo_settings(900);
  REQUIRE(s.size() == 36);
  std::map<std::string, std::pair<int, Mat4>> groups;
  double total = 0;
  for (const auto& x : s) {
    auto& [n, sum] = groups.try_emplace(x.group, 0, Mat4::Zero()).first->second;
    ++n;
    sum += x.projector();
    total += x.run_time;
  }
  CHECK(groups.size() == 9);
  CHECK(total == doctest::Approx(900));
  for (const auto& [name, g] : groups) {
    CHECK(g.first == 4);
    CHECK((g.second - Mat4::Identity()).norm() < 1e-12);
  }
  double xx = 0;
  for (const auto& x : s)
    if (x.group == "XX") xx += x.run_time;
  CHECK(xx == doctest::Approx(100));
  CHECK_THROWS(tomo_settings(0));
}

TEST_CASE("linear inversion on exact expectations") {
  const auto settings = tomo_settings(400);
  const auto psi = DensityMatrix4::pure(ket_target(pi / 4));
  CHECK((linear_inversion(expected_counts(psi, settings, 500)) - psi.matrix()).norm() < 1e-10);
  const auto mixed = DensityMatrix4::maximally_mixed();
  CHECK((linear_inversion(expected_counts(mixed, settings, 500)) - mixed.matrix()).norm() < 1e-12);
}

TEST_CASE("linear inversion keeps unit trace at finite counts") {
  std::mt19937_64 rng(61);
  const auto settings = tomo_settings(2.0);  // a handful of counts per channel
  for (int i = 0; i < 50; ++i) {
    const Mat4 h = linear_inversion(simulate_counts(oracle::random_density(rng), settings, 500, rng));
    CHECK(std::abs(h.trace().real() - 1.0) < 1e-12);
    CHECK(std::abs(h.trace().imag()) < 1e-12);
    CHECK(is_hermitian(h));
  }
}

TEST_CASE("round trip on random states has negligible trace distance") {
  std::mt19937_64 rng(62);
  const auto settings = tomo_settings(400);
  for (int i = 0; i < 100; ++i) {
    const auto rho = oracle::random_density(rng, 1 + i % 4);
    const auto result = tomography_from_records(expected_counts(rho, settings, 500), (i % 17) * pi / 32);
    CHECK(trace_distance(result.rho_hat.matrix(), rho.matrix()) < 1e-9);
  }
}

TEST_CASE("mle_project examples") {
  Mat4 h = Mat4::Zero();
  h.diagonal() << 1.1, 0.1, -0.1, -0.1;
  const auto p = mle_project(h);
  Mat4 expected = Mat4::Zero();
  expected(0, 0) = 1.0;
  CHECK((p.matrix() - expected).norm() < 1e-12);

  std::mt19937_64 rng(63);
  for (int i = 0; i < 20; ++i) {
    const auto rho = oracle::random_density(rng, 1 + i % 4);
    CHECK((mle_project(rho.matrix()).matrix() - rho.matrix()).norm() < 1e-12);
  }
  CHECK_THROWS(mle_project(Mat4::Identity()));
}

TEST_CASE("mle_project output is physical and bounded by the distance to the PSD cone") {
  std::mt19937_64 rng(64);
  int active = 0;
  for (int i = 0; i < 200; ++i) {
    const oracle::M4 hm = oracle::random_hermitian_trace1(rng);
    const Mat4 h = oracle::to_eigen(hm);
    const auto p = mle_project(h);
    Eigen::SelfAdjointEigenSolver<Mat4> es(p.matrix());
    CHECK(es.eigenvalues().minCoeff() >= -1e-14);  // solver rounding only
    CHECK(std::abs(p.matrix().trace().real() - 1.0) < 1e-12);

    const double theta = (i % 17) * pi / 32;
    const auto t = oracle::target(theta);
    const double dist = oracle::frobenius(oracle::from_eigen(p.matrix()), hm);
    active += dist > 1e-12;
    // |F(P(H)) − F(H)| ≤ ‖P(H) − H‖ so the fidelity error grows by at most that distance.
    const double fp = oracle::expectation(oracle::from_eigen(p.matrix()), t);
    const double fh = oracle::expectation(hm, t);
    CHECK(std::abs(fp - fh) <= dist + 1e-12);

    // Frobenius optimality against random physical competitors.
    for (int j = 0; j < 5; ++j) {
      const oracle::M4 other = oracle::random_state(rng, 1 + j % 4);
      CHECK(dist <= oracle::frobenius(other, hm) + 1e-12);
    }
  }
  CHECK(active > 100);
}

TEST_CASE("tomo_fidelity on a noiseless target with exact counts is one") {
  for (int k : {0, 4, 8, 16}) {
    const double theta = k * pi / 32;
    const auto r = tomography_from_records(
        expected_counts(DensityMatrix4::pure(ket_target(theta)), tomo_settings(400), 500), theta);
    CHECK(r.fidelity_to_target == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(r.linear_fidelity == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("linear fidelity and its error bar match direct formulas") {
  std::mt19937_64 rng(65);
  for (int i = 0; i < 20; ++i) {
    const double theta = (i % 17) * pi / 32;
    const auto rho = oracle::random_density(rng);
    auto recs = simulate_counts(rho, tomo_settings(400), 500, rng);
    const auto r = tomography_from_records(recs, theta);
    CHECK(r.linear_fidelity == doctest::Approx(oracle_linear_fidelity(recs, theta)).epsilon(1e-12));

    double var = 0;
    for (auto& rec : recs)
      for (auto& ch : rec.channels) {
        const double a = ch.counts, h = 1e-4 * std::max(1.0, a);
        ch.counts = a + h;
        const double up = oracle_linear_fidelity(recs, theta);
        ch.counts = a - h;
        const double down = oracle_linear_fidelity(recs, theta);
        ch.counts = a;
        var += std::pow((up - down) / (2 * h), 2) * a;
      }
    CHECK(r.linear_sigma == doctest::Approx(std::sqrt(var)).epsilon(1e-6));
    CHECK(r.per_basis_counts.size() == 9);
  }
}

TEST_CASE("tomo_fidelity reproduces a calibrated target") {
  const double theta = 0.0;
  const auto rho = apply_noise(calibrate_noise(NoiseKind::Depolarizing, theta, 0.972), theta);
  std::mt19937_64 rng(66);
  const auto r = tomo_fidelity(rho, 500, 400, theta, rng);
  CHECK(std::abs(r.fidelity_to_target - 0.972) < 3 * r.linear_sigma);
  Eigen::SelfAdjointEigenSolver<Mat4> es(r.rho_hat.matrix());
  CHECK(es.eigenvalues().minCoeff() >= -1e-14);  // solver rounding only
}

TEST_CASE("reconstruction error halves when integration time quadruples") {
  const double theta = pi / 4;
  const auto rho = apply_noise(calibrate_noise(NoiseKind::Depolarizing, theta, 0.95), theta);
  const double truth = fidelity(rho, ket_target(theta));
  auto median_error = [&](double total_time) {
    std::vector<double> err;
    for (int i = 0; i < 200; ++i) {
      std::mt19937_64 rng(1000 + i);
      err.push_back(std::abs(tomo_fidelity(rho, 500, total_time, theta, rng).fidelity_to_target - truth));
    }
    return median(err);
  };
  const double ratio = median_error(100) / median_error(400);
  MESSAGE("median error ratio " << ratio);
  CHECK(ratio >= 1.7);
  CHECK(ratio <= 2.3);
}
