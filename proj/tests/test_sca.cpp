// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <limits>

#include "doctest.h"
#include "isac/oracles.hpp"
#include "isac/sca.hpp"

using namespace isac;

namespace {

NarrowbandChannels sample_channels(int M, std::uint64_t seed,
                                   double beta = 1.0) {
  ChannelParams params;
  params.num_antennas = M;
  params.theta = {0.0, 0.0};
  params.rician_beta = beta;
  Rng rng(seed);
  return sample_narrowband(params, rng);
}

LinkBudget desk_budget() {
  LinkBudget b;
  b.rho_c = 31.6227766;
  b.rho_s = 5.01187234;
  b.eta = 1e5;
  b.rho_si = 1e-8;
  b.half_cpi = 50;
  return b;
}

}  // namespace

TEST_CASE("quadratic-over-linear tangent bound") {
  const auto at_12 = linearize_quadratic_over_linear(1.0, 2.0);
  CHECK(at_12.slope_a == doctest::Approx(1.0));
  CHECK(at_12.slope_b == doctest::Approx(-0.25));
  CHECK(at_12.eval(1.0, 2.0) == doctest::Approx(0.5));  // tight: 1^2 / 2

  const auto at_01 = linearize_quadratic_over_linear(0.0, 1.0);
  CHECK(at_01.eval(5.0, 3.0) == doctest::Approx(0.0));

  Rng rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const double a_e = 4.0 * (rng.next_double() - 0.5);
    const double b_e = 0.1 + 3.0 * rng.next_double();
    const double a = 4.0 * (rng.next_double() - 0.5);
    const double b = 0.1 + 3.0 * rng.next_double();
    const auto bound = linearize_quadratic_over_linear(a_e, b_e);
    CHECK(bound.eval(a, b) <= a * a / b + 1e-12);
    CHECK(bound.eval(a_e, b_e) == doctest::Approx(a_e * a_e / b_e).epsilon(1e-12));
  }
  CHECK_THROWS(linearize_quadratic_over_linear(1.0, 0.0));
}

TEST_CASE("surrogates are tight at the expansion and bound from below") {
  const auto ch = sample_channels(3, 7);
  const auto budget = desk_budget();
  Rng rng(8);
  const auto expansion = random_design(ch, DuplexMode::full, rng);
  const NarrowbandSurrogates sur(expansion, ch, budget);
  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i < 2; ++i) {
      CHECK(sur.gamma_surrogate(k, i, expansion) ==
            doctest::Approx(sur.gamma_true(k, i, expansion)).epsilon(1e-10));
      const double g = sur.expansion_g(k, i);
      CHECK(sur.d_surrogate(k, i, g, expansion) ==
            doctest::Approx(sur.d_true(k, i, g, expansion)).epsilon(1e-9));
    }
  }
  for (int trial = 0; trial < 100; ++trial) {
    const auto probe = random_design(ch, DuplexMode::full, rng);
    const double g = 2.0 * rng.next_double();
    for (int k = 0; k < 2; ++k) {
      for (int i = 0; i < 2; ++i) {
        CHECK(sur.gamma_surrogate(k, i, probe) <=
              sur.gamma_true(k, i, probe) + 1e-9);
        CHECK(sur.d_surrogate(k, i, g, probe) <=
              sur.d_true(k, i, g, probe) + 1e-9);
      }
    }
  }
}

TEST_CASE("zero-beam expansion pins the SINR surrogate near zero") {
  const auto ch = sample_channels(3, 9);
  const auto budget = desk_budget();
  Rng rng(10);
  auto expansion = random_design(ch, DuplexMode::full, rng);
  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i < 2; ++i) expansion.beams[k][i][0].setZero();
  }
  const NarrowbandSurrogates sur(expansion, ch, budget);
  for (int trial = 0; trial < 20; ++trial) {
    const auto probe = random_design(ch, DuplexMode::full, rng);
    for (int k = 0; k < 2; ++k) {
      for (int i = 0; i < 2; ++i) {
        // The floored slope admits only a vanishing rate credit.
        CHECK(sur.gamma_surrogate(k, i, probe) < 1e-4);
      }
    }
  }
}

TEST_CASE("subproblem structure audit") {
  const auto ch = sample_channels(4, 11);
  const auto budget = desk_budget();
  Rng rng(12);
  const auto expansion = random_design(ch, DuplexMode::full, rng);

  // Full duplex at an interior weight: 2 tied covariance blocks, 2 tied
  // beams, 12 auxiliary scalars (r, g, d per transceiver and interval),
  // 4 Schur blocks, 4 Fisher cones, 2 power + 4 SINR + 4 Fisher-ratio rows.
  const auto full = build_subproblem(expansion, ch, budget, 0.5, DuplexMode::full, 5e5);
  CHECK(full.spec.matrices.size() == 2);
  CHECK(full.spec.vectors.size() == 2);
  CHECK(full.spec.scalars.size() == 12);
  CHECK(full.spec.schur_blocks.size() == 4);
  CHECK(full.spec.cones.size() == 4);
  CHECK(full.spec.inequalities.size() == 10);
  CHECK(full.q_var[0][0] == full.q_var[0][1]);
  CHECK(full.w_var[1][0] == full.w_var[1][1]);

  Rng hrng(13);
  const auto hexp = random_design(ch, DuplexMode::half, hrng);
  const auto half = build_subproblem(hexp, ch, budget, 0.5, DuplexMode::half, 5e5);
  CHECK(half.spec.matrices.size() == 2);
  CHECK(half.spec.scalars.size() == 6);
  CHECK(half.spec.schur_blocks.size() == 2);
  CHECK(half.spec.cones.size() == 2);
  CHECK(half.q_var[0][1] == -1);
  CHECK(half.q_var[1][0] == -1);
  CHECK(half.r_var[0][0] == -1);  // nothing arrives at A in interval 1
  CHECK(half.r_var[0][1] >= 0);

  // Weight endpoints drop the matching objective pieces.
  const auto rate_only = build_subproblem(expansion, ch, budget, 1.0, DuplexMode::full, 5e5);
  CHECK(rate_only.spec.objective.inv_weight == 0.0);
  CHECK(rate_only.spec.cones.empty());
  CHECK(rate_only.spec.scalars.size() == 4);  // r only

  const auto crb_only = build_subproblem(expansion, ch, budget, 0.0, DuplexMode::full, 5e5);
  CHECK(crb_only.spec.objective.log_weight == 0.0);
  CHECK(crb_only.spec.objective.log_scalars.empty());
  CHECK(crb_only.spec.scalars.size() == 8);  // g, d only
}

TEST_CASE("extract_sensing_covariance repairs and rejects") {
  Rng rng(15);
  Eigen::VectorXcd w(3);
  for (int m = 0; m < 3; ++m) w(m) = rng.next_cgaussian();
  const Eigen::MatrixXcd rank1 = w * w.adjoint();
  const auto zero = extract_sensing_covariance(rank1, {w});
  CHECK(zero.cwiseAbs().maxCoeff() < 1e-12);

  const auto ident = extract_sensing_covariance(
      Eigen::MatrixXcd::Identity(3, 3), {Eigen::VectorXcd::Zero(3)});
  CHECK((ident - Eigen::MatrixXcd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);

  // A deficit beyond tolerance signals solver failure.
  CHECK_THROWS(extract_sensing_covariance(0.99 * rank1, {w}));
}

TEST_CASE("narrowband SCA converges with a certificate") {
  const auto budget = desk_budget();
  for (int trial = 0; trial < 3; ++trial) {
    const auto ch = sample_channels(4, 20 + trial);
    ScaOptions opt;
    opt.weight = 0.5;
    opt.mode = trial % 2 == 0 ? DuplexMode::full : DuplexMode::half;
    opt.seed = 100 + trial;
    opt.restarts = 2;
    const auto res = run_sca(ch, budget, opt);
    CHECK(res.best.converged);
    CHECK(res.best.iterations <= 50);
    CHECK(res.best.kkt_residual < 1e-4);
    for (std::size_t i = 1; i < res.best.trajectory.size(); ++i) {
      CHECK(res.best.trajectory[i] >= res.best.trajectory[i - 1] - 1e-9);
    }
    CHECK_NOTHROW(res.best.design.check());
    CHECK(res.best.design.total_power(0) <= 2.0 + 1e-8);
    CHECK(res.runs.size() == 2);

    const double kkt = design_kkt_residual(res.best.design, ch, budget,
                                           opt.weight, opt.mode, opt.mu);
    CHECK(kkt < 1e-4);

    if (opt.mode == DuplexMode::half) {
      CHECK(res.best.design.Q[0][1].cwiseAbs().maxCoeff() == 0.0);
      CHECK(res.best.design.Q[1][0].cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("pure-rate full-duplex run respects the capacity-style bound") {
  ChannelParams params;
  params.num_antennas = 4;
  params.theta = {0.1, -0.2};
  params.rician_beta = std::numeric_limits<double>::infinity();
  Rng rng(31);
  const auto ch = sample_narrowband(params, rng);
  LinkBudget b = desk_budget();
  b.rho_si = 1e-12;
  ScaOptions opt;
  opt.weight = 1.0;
  opt.mode = DuplexMode::full;
  opt.seed = 32;
  opt.restarts = 2;
  const auto res = run_sca(ch, b, opt);
  CHECK(res.best.converged);
  // Cauchy-Schwarz and the power budget: per-link gain at most 2 rho_c M.
  const double bound = 2.0 * std::log2(1.0 + 2.0 * b.rho_c * 4.0);
  CHECK(res.best.rate_sum <= bound);
  CHECK(res.best.rate_sum > 0.25 * bound);  // echo interference costs the rest
}

TEST_CASE("tiny instances match exhaustive sampling") {
  const auto budget = desk_budget();
  const auto ch = sample_channels(2, 41);
  ScaOptions opt;
  opt.weight = 0.5;
  opt.mode = DuplexMode::full;
  opt.seed = 42;
  const auto res = run_sca(ch, budget, opt);
  CHECK(res.best.converged);
  const auto best = rejection_sample_true_objective(ch, budget, opt.weight,
                                                    opt.mode, opt.mu, 1000000, 43);
  CHECK(res.best.objective >= best.best_objective - 1e-3);
}

TEST_CASE("runs are deterministic") {
  const auto budget = desk_budget();
  const auto ch = sample_channels(3, 51);
  ScaOptions opt;
  opt.weight = 0.3;
  opt.mode = DuplexMode::full;
  opt.seed = 52;
  opt.restarts = 2;
  const auto a = run_sca(ch, budget, opt);
  const auto b = run_sca(ch, budget, opt);
  CHECK(a.best.objective == b.best.objective);
  CHECK(a.best.kkt_residual == b.best.kkt_residual);
  CHECK(a.best.iterations == b.best.iterations);
}
