// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>
#include <limits>

#include "doctest.h"
#include "isac/channel.hpp"

using namespace isac;

namespace {
constexpr double kPi = 3.14159265358979323846;

ChannelParams base_params(int M) {
  ChannelParams p;
  p.num_antennas = M;
  p.spacing_ratio = 0.5;
  p.theta = {0.0, 0.0};
  p.rician_beta = 1.0;
  p.taps = 1;
  p.si_taps = 1;
  p.pdp = power_delay_profile(1, 1.0);
  p.pdp_si = power_delay_profile(1, 1.0);
  return p;
}
}  // namespace

TEST_CASE("steering vector closed forms") {
  const auto broadside = steering_vector(0.0, 4, 0.5);
  for (int m = 0; m < 4; ++m) {
    CHECK(std::abs(broadside.entries(m) - std::complex<double>(1.0)) < 1e-15);
  }

  const auto endfire = steering_vector(kPi / 2.0, 2, 0.5);
  CHECK(std::abs(endfire.entries(0) - std::complex<double>(1.0)) < 1e-15);
  CHECK(std::abs(endfire.entries(1) - std::complex<double>(-1.0)) < 1e-12);

  // Independent scalar phase accumulation for theta = pi/6.
  const auto oblique = steering_vector(kPi / 6.0, 3, 0.5);
  for (int m = 0; m < 3; ++m) {
    const double phase = 2.0 * kPi * 0.5 * m * std::sin(kPi / 6.0);
    CHECK(std::abs(oblique.entries(m).real() - std::cos(phase)) < 1e-14);
    CHECK(std::abs(oblique.entries(m).imag() - std::sin(phase)) < 1e-14);
  }

  CHECK(oblique.entries(0) == std::complex<double>(1.0));
  CHECK_THROWS(steering_vector(0.1, 0, 0.5));
  CHECK_THROWS(steering_vector(0.1, 4, 0.0));
}

TEST_CASE("steering entries stay unit modulus") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const double theta = (rng.next_double() - 0.5) * kPi;
    const int M = 1 + static_cast<int>(rng.next_u64() % 12);
    const double spacing = 0.1 + 0.65 * rng.next_double();
    const auto sv = steering_vector(theta, M, spacing);
    for (int m = 0; m < M; ++m) {
      CHECK(std::abs(std::abs(sv.entries(m)) - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("steering derivative closed forms") {
  const auto at_zero = steering_derivative(0.0, 3, 0.5);
  CHECK(std::abs(at_zero(0)) < 1e-15);
  CHECK(std::abs(at_zero(1) - std::complex<double>(0.0, kPi)) < 1e-12);
  CHECK(std::abs(at_zero(2) - std::complex<double>(0.0, 2.0 * kPi)) < 1e-12);

  const auto at_endfire = steering_derivative(kPi / 2.0, 5, 0.5);
  CHECK(at_endfire.cwiseAbs().maxCoeff() < 1e-12);

  const auto d = steering_derivative(kPi / 6.0, 2, 0.5);
  const std::complex<double> expected =
      std::complex<double>(0.0, kPi * std::cos(kPi / 6.0)) *
      std::polar(1.0, kPi * std::sin(kPi / 6.0));
  CHECK(std::abs(d(1) - expected) < 1e-12);
}

TEST_CASE("steering derivative matches central finite differences") {
  Rng rng(11);
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const double theta = (rng.next_double() - 0.5) * 2.8;
    const int M = 1 + static_cast<int>(rng.next_u64() % 12);
    const double spacing = 0.1 + 0.65 * rng.next_double();
    const auto analytic = steering_derivative(theta, M, spacing);
    const auto plus = steering_vector(theta + h, M, spacing).entries;
    const auto minus = steering_vector(theta - h, M, spacing).entries;
    const Eigen::VectorXcd fd = (plus - minus) / (2.0 * h);
    CHECK((analytic - fd).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("derivative quadratic form is sign invariant") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const int M = 2 + static_cast<int>(rng.next_u64() % 5);
    Eigen::MatrixXcd X(M, M);
    for (int r = 0; r < M; ++r) {
      for (int c = 0; c < M; ++c) X(r, c) = rng.next_cgaussian();
    }
    const Eigen::MatrixXcd Q = X * X.adjoint();
    const auto adot =
        steering_derivative((rng.next_double() - 0.5) * kPi, M, 0.5);
    const double pos = std::real(adot.dot(Q * adot));
    const Eigen::VectorXcd neg = -adot;
    const double flipped = std::real(neg.dot(Q * neg));
    CHECK(pos == doctest::Approx(flipped).epsilon(1e-14));
    CHECK(pos >= -1e-12);
  }
}

TEST_CASE("narrowband Rician limits and moments") {
  auto params = base_params(4);

  // Pure LOS limit reproduces the steering vector exactly.
  params.rician_beta = std::numeric_limits<double>::infinity();
  params.theta = {0.3, -0.2};
  Rng rng(1);
  const auto los = sample_narrowband(params, rng);
  for (int k = 0; k < 2; ++k) {
    const auto sv = steering_vector(params.theta[k], 4, 0.5);
    CHECK((los.h[k] - sv.entries).cwiseAbs().maxCoeff() == 0.0);
  }

  // Rayleigh case: per-entry variance 1 within 5% over 1e4 draws.
  params.rician_beta = 0.0;
  Rng rng2(2);
  double acc = 0.0;
  const int draws = 10000;
  for (int t = 0; t < draws; ++t) {
    const auto ch = sample_narrowband(params, rng2);
    acc += ch.h[0].squaredNorm() / 4.0;
  }
  CHECK(acc / draws == doctest::Approx(1.0).epsilon(0.05));

  // Rician beta = 1 keeps unit per-entry power too.
  params.rician_beta = 1.0;
  Rng rng3(3);
  acc = 0.0;
  for (int t = 0; t < draws; ++t) {
    const auto ch = sample_narrowband(params, rng3);
    acc += ch.h[0].squaredNorm() / 4.0;
  }
  CHECK(acc / draws == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("fixed seed gives bit-identical channels") {
  const auto params = base_params(4);
  Rng a(42), b(42);
  const auto ch1 = sample_narrowband(params, a);
  const auto ch2 = sample_narrowband(params, b);
  for (int k = 0; k < 2; ++k) {
    CHECK((ch1.h[k] - ch2.h[k]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((ch1.g[k] - ch2.g[k]).cwiseAbs().maxCoeff() == 0.0);
  }
  Rng c(43);
  const auto ch3 = sample_narrowband(params, c);
  CHECK((ch1.h[0] - ch3.h[0]).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("stream derivation separates purposes and trials") {
  const std::uint64_t master = 99;
  const auto s1 = derive_stream(master, {1, 2});
  const auto s2 = derive_stream(master, {1, 3});
  const auto s3 = derive_stream(master, {2, 2});
  CHECK(s1 != s2);
  CHECK(s1 != s3);
  CHECK(s1 == derive_stream(master, {1, 2}));
}

TEST_CASE("wideband sampling limits and power") {
  auto params = base_params(4);
  params.taps = 1;
  params.rician_beta0 = std::numeric_limits<double>::infinity();
  Rng rng(5);
  const auto single = sample_wideband(params, rng);
  const auto sv = steering_vector(0.0, 4, 0.5);
  CHECK((single.h_taps[0][0] - sv.entries).cwiseAbs().maxCoeff() == 0.0);

  params.taps = 3;
  params.si_taps = 3;
  params.pdp = power_delay_profile(3, std::exp(-1.0));
  params.pdp_si = power_delay_profile(3, std::exp(-1.0));
  params.rician_beta0 = 1.0;
  Rng rng2(6);
  double acc = 0.0;
  const int draws = 10000;
  for (int t = 0; t < draws; ++t) {
    const auto ch = sample_wideband(params, rng2);
    double p = 0.0;
    for (const auto& tap : ch.h_taps[0]) p += tap.squaredNorm();
    acc += p / 4.0;
  }
  CHECK(acc / draws == doctest::Approx(1.0).epsilon(0.05));

  params.taps = 5;  // more taps than antennas
  params.pdp = power_delay_profile(5, 0.5);
  Rng rng3(7);
  CHECK_THROWS(sample_wideband(params, rng3));
}

TEST_CASE("power delay profile shapes") {
  CHECK(power_delay_profile(1, 0.3)(0) == doctest::Approx(1.0));
  const auto uniform = power_delay_profile(2, 1.0);
  CHECK(uniform(0) == doctest::Approx(0.5));
  CHECK(uniform(1) == doctest::Approx(0.5));
  const auto geo = power_delay_profile(4, std::exp(-1.0));
  CHECK(std::abs(geo.sum() - 1.0) < 1e-12);
  for (int l = 1; l < 4; ++l) {
    CHECK(geo(l) / geo(l - 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  }
  CHECK_THROWS(power_delay_profile(0, 0.5));
}

TEST_CASE("modified Rician factor and inversion") {
  Eigen::VectorXd single(1);
  single << 1.0;
  CHECK(modified_rician_factor(3.0, single) == doctest::Approx(3.0));

  Eigen::VectorXd even(2);
  even << 0.5, 0.5;
  CHECK(modified_rician_factor(1.0, even) == doctest::Approx(1.0 / 3.0));

  const auto pdp = power_delay_profile(4, std::exp(-1.0));
  for (double target : {0.05, 0.3, 0.9, 1.5}) {
    const double beta0 = invert_modified_rician_factor(target, pdp);
    CHECK(modified_rician_factor(beta0, pdp) == doctest::Approx(target).epsilon(1e-10));
  }
  CHECK_THROWS(invert_modified_rician_factor(1e9, pdp));
}
