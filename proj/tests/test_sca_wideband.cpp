// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "isac/oracles.hpp"
#include "isac/sca_wideband.hpp"

using namespace isac;

namespace {

WidebandChannels sample_channels(int M, int L, std::uint64_t seed) {
  ChannelParams params;
  params.num_antennas = M;
  params.theta = {0.0, 0.0};
  params.taps = L;
  params.si_taps = L;
  params.pdp = power_delay_profile(L, std::exp(-1.0));
  params.pdp_si = power_delay_profile(L, std::exp(-1.0));
  params.rician_beta0 = L > 1 ? invert_modified_rician_factor(1.0, params.pdp) : 1.0;
  Rng rng(seed);
  return sample_wideband(params, rng);
}

LinkBudget desk_budget(std::int64_t half_cpi = 500) {
  LinkBudget b;
  b.rho_c = 31.6227766;
  b.rho_s = 5.01187234;
  b.eta = 1e5;
  b.rho_si = 1e-8;
  b.half_cpi = half_cpi;
  return b;
}

}  // namespace

TEST_CASE("ZF null-space bases") {
  // Single tap: no interference to cancel, the basis is everything.
  std::vector<Eigen::VectorXcd> single = {Eigen::VectorXcd::Random(4)};
  const auto full = zf_nullspace_basis(single);
  CHECK(full.size() == 1);
  CHECK((full[0] - Eigen::MatrixXcd::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);

  // Orthonormal channels: tap 0's beam must avoid e2, leaving span{e1}.
  Eigen::VectorXcd e1 = Eigen::VectorXcd::Zero(2), e2 = Eigen::VectorXcd::Zero(2);
  e1(0) = 1.0;
  e2(1) = 1.0;
  const auto axes = zf_nullspace_basis({e1, e2});
  CHECK(axes[0].cols() == 1);
  CHECK(std::abs(std::abs(axes[0].col(0).dot(e1)) - 1.0) < 1e-12);
  CHECK(std::abs(axes[1].col(0).dot(e2)) == doctest::Approx(1.0).epsilon(1e-12));

  // Random taps: orthonormal columns, zero cross products.
  Rng rng(5);
  std::vector<Eigen::VectorXcd> taps(3);
  for (auto& t : taps) {
    t.resize(4);
    for (int m = 0; m < 4; ++m) t(m) = rng.next_cgaussian();
  }
  const auto bases = zf_nullspace_basis(taps);
  for (int l = 0; l < 3; ++l) {
    CHECK(bases[l].cols() == 2);  // M - (L - 1)
    const Eigen::MatrixXcd gram = bases[l].adjoint() * bases[l];
    CHECK((gram - Eigen::MatrixXcd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
    for (int lp = 0; lp < 3; ++lp) {
      if (lp == l) continue;
      CHECK((taps[lp].adjoint() * bases[l]).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  // Dependent excluded taps are reported.
  CHECK_THROWS(zf_nullspace_basis({taps[0], taps[1], taps[1]}));
}

TEST_CASE("wideband subproblem structure audit") {
  const auto budget = desk_budget();
  for (int L : {2, 4}) {
    const auto ch = sample_channels(4, L, 10 + L);
    Rng rng(20 + L);
    const auto it_design = random_design(ch, DuplexMode::full, rng);
    WidebandScaState state;
    for (int k = 0; k < 2; ++k) {
      for (int i = 0; i < 2; ++i) {
        state.q_taps[k][i].assign(L, it_design.Q[k][i] / L);
      }
    }
    const auto prob = build_subproblem_wideband(it_design, state, ch, budget, 0.5,
                                                DuplexMode::full, 5e5);
    CHECK(prob.spec.schur_blocks.size() == static_cast<std::size_t>(4 * L));
    CHECK(prob.spec.matrices.size() == static_cast<std::size_t>(2 * L));
    CHECK(prob.spec.vectors.size() == static_cast<std::size_t>(2 * L));
    CHECK(prob.spec.scalars.size() == 12);
  }

  // L = 1 collapses to the narrowband structure.
  const auto ch1 = sample_channels(3, 1, 31);
  Rng rng(32);
  const auto d1 = random_design(ch1, DuplexMode::full, rng);
  WidebandScaState s1;
  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i < 2; ++i) s1.q_taps[k][i] = {d1.Q[k][i]};
  }
  const auto prob1 =
      build_subproblem_wideband(d1, s1, ch1, budget, 0.5, DuplexMode::full, 5e5);
  CHECK(prob1.spec.matrices.size() == 2);
  CHECK(prob1.spec.vectors.size() == 2);
  CHECK(prob1.spec.scalars.size() == 12);
  CHECK(prob1.spec.schur_blocks.size() == 4);
  CHECK(prob1.spec.cones.size() == 4);
  CHECK(prob1.spec.inequalities.size() == 10);

  // Half duplex mutes the second interval for both transceivers and pins the
  // first-interval rate variables (nothing arrives there).
  const auto ch2 = sample_channels(4, 2, 41);
  Rng rng2(42);
  const auto d2 = random_design(ch2, DuplexMode::half, rng2);
  WidebandScaState s2;
  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i < 2; ++i) {
      s2.q_taps[k][i].assign(2, d2.Q[k][i] / 2.0);
    }
  }
  const auto prob2 =
      build_subproblem_wideband(d2, s2, ch2, budget, 0.5, DuplexMode::half, 5e5);
  CHECK(prob2.r_var[0][0] == -1);
  CHECK(prob2.r_var[1][0] == -1);
  CHECK(prob2.r_var[0][1] >= 0);
  CHECK(prob2.r_var[1][1] >= 0);
  CHECK(prob2.q_var[0][1][0] == -1);
  CHECK(prob2.q_var[1][1][0] == -1);
}

TEST_CASE("wideband SCA: certificate, ZF exactness, power accounting") {
  const auto budget = desk_budget();
  for (int trial = 0; trial < 2; ++trial) {
    const auto ch = sample_channels(4, 2, 50 + trial);
    ScaOptions opt;
    opt.weight = 0.5;
    opt.mode = trial == 0 ? DuplexMode::full : DuplexMode::half;
    opt.seed = 60 + trial;
    opt.restarts = 2;
    const auto res = run_sca_wideband(ch, budget, opt);
    const auto& best = res.result.best;
    CHECK(best.converged);
    CHECK(best.iterations <= 50);
    CHECK(best.kkt_residual < 1e-4);
    for (std::size_t i = 1; i < best.trajectory.size(); ++i) {
      CHECK(best.trajectory[i] >= best.trajectory[i - 1] - 1e-9);
    }
    CHECK_NOTHROW(best.design.check());

    // ZF holds to machine precision by the null-space parametrization.
    CHECK(zf_residual(best.design, ch, 0) < 1e-12);
    CHECK(zf_residual(best.design, ch, 1) < 1e-12);

    // The aggregate covariance is exactly the sum of the per-tap blocks.
    for (int k = 0; k < 2; ++k) {
      double total = 0.0;
      for (int i = 0; i < 2; ++i) {
        Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(4, 4);
        for (const auto& q : res.best_state.q_taps[k][i]) sum += q;
        CHECK((sum - best.design.Q[k][i]).cwiseAbs().maxCoeff() < 1e-12);
        total += best.design.Q[k][i].real().trace();
      }
      CHECK(total <= 2.0 + 1e-8);
    }

    if (opt.mode == DuplexMode::half) {
      // Wideband half duplex: both mute the SECOND interval (unlike the
      // narrowband pattern where A and B alternate).
      CHECK(best.design.Q[0][1].cwiseAbs().maxCoeff() == 0.0);
      CHECK(best.design.Q[1][1].cwiseAbs().maxCoeff() == 0.0);
      CHECK(best.design.Q[0][0].cwiseAbs().maxCoeff() > 0.0);
      CHECK(best.design.Q[1][0].cwiseAbs().maxCoeff() > 0.0);
    }
  }
}

TEST_CASE("single-tap pipelines coincide") {
  // One channel realization, expressed both ways.
  const auto wch = sample_channels(3, 1, 71);
  NarrowbandChannels nch;
  nch.num_antennas = 3;
  nch.spacing_ratio = wch.spacing_ratio;
  nch.theta = wch.theta;
  nch.alpha = wch.alpha;
  nch.doppler_hz = wch.doppler_hz;
  for (int k = 0; k < 2; ++k) {
    nch.h[k] = wch.h_taps[k][0];
    nch.g[k] = wch.g_taps[k][0];
  }
  const auto budget = desk_budget(50);

  // Shared initial design (full duplex ties make the interval pairing moot).
  Rng rng(72);
  auto init_n = random_design(nch, DuplexMode::full, rng);
  auto init_w = init_n;
  init_w.band = Band::wide;

  ScaOptions opt;
  opt.weight = 0.5;
  opt.mode = DuplexMode::full;
  opt.seed = 73;
  opt.restarts = 1;
  opt.initial_design = init_n;
  const auto narrow = run_sca(nch, budget, opt);
  opt.initial_design = init_w;
  const auto wide = run_sca_wideband(wch, budget, opt);
  CHECK(narrow.best.objective ==
        doctest::Approx(wide.result.best.objective).epsilon(1e-6));
}

TEST_CASE("sensing-prior runs fund the dedicated signal") {
  const auto budget = desk_budget();
  int funded = 0;
  for (int trial = 0; trial < 3; ++trial) {
    const auto ch = sample_channels(4, 4, 80 + trial);
    ScaOptions opt;
    opt.weight = 0.1;
    opt.mode = DuplexMode::full;
    opt.seed = 90 + trial;
    opt.restarts = 2;
    const auto res = run_sca_wideband(ch, budget, opt);
    const auto& d = res.result.best.design;
    for (int k = 0; k < 2; ++k) {
      for (int i = 0; i < 2; ++i) {
        const double q_tr = d.Q[k][i].real().trace();
        if (q_tr > 1e-9 && d.sensing_power(k, i) > 0.1 * q_tr) ++funded;
      }
    }
  }
  CHECK(funded == 12);  // every active slot across the 3 trials
}
