// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "isac/oracles.hpp"
#include "isac/sca.hpp"
#include "isac/solver.hpp"

using namespace isac;
using namespace isac::solver;

namespace {

// max log2(1 + r) subject to 0 <= r <= 3.
SubproblemSpec scalar_toy() {
  SubproblemSpec spec;
  spec.scalars.push_back({0.0, "r"});
  AffineExpr upper;
  upper.constant = 3.0;
  upper.scalars.emplace_back(0, -1.0);
  spec.inequalities.push_back(upper);
  spec.objective.log_weight = 1.0;
  spec.objective.log_scalars = {0};
  return spec;
}

// max tr(A Q) subject to tr(Q) <= 1, Q >= 0, A = diag(1, 2).
SubproblemSpec matrix_toy() {
  SubproblemSpec spec;
  spec.matrices.push_back({2, "Q"});
  AffineExpr power;
  power.constant = 1.0;
  power.matrices.emplace_back(0, -Eigen::MatrixXcd::Identity(2, 2));
  spec.inequalities.push_back(power);
  spec.schur_blocks.push_back({0, -1, "psd"});
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(2, 2);
  A(0, 0) = 1.0;
  A(1, 1) = 2.0;
  spec.objective.linear.matrices.emplace_back(0, A);
  return spec;
}

NarrowbandChannels sample_channels(int M, std::uint64_t seed) {
  ChannelParams params;
  params.num_antennas = M;
  params.theta = {0.2, -0.1};
  params.rician_beta = 1.0;
  Rng rng(seed);
  return sample_narrowband(params, rng);
}

LinkBudget desk_budget() {
  LinkBudget b;
  b.rho_c = 31.62;
  b.rho_s = 5.01;
  b.eta = 1e5;
  b.rho_si = 1e-8;
  b.half_cpi = 50;
  return b;
}

}  // namespace

TEST_CASE("scalar toy solves to the boundary") {
  const auto spec = scalar_toy();
  Point start = zero_point(spec);
  start.scalars[0] = 1.0;
  const auto sol = solve(spec, start);
  REQUIRE(sol.status == SolveStatus::optimal);
  CHECK(sol.point.scalars[0] == doctest::Approx(3.0).epsilon(1e-7));
  CHECK(sol.objective == doctest::Approx(2.0).epsilon(1e-7));
  CHECK(sol.kkt_residual < 1e-6);
}

TEST_CASE("kkt residual separates optimal from interior points") {
  const auto spec = scalar_toy();
  Point opt = zero_point(spec);
  opt.scalars[0] = 3.0;
  CHECK(kkt_residual(spec, opt) < 1e-10);

  Point interior = zero_point(spec);
  interior.scalars[0] = 1.0;
  // d/dr log2(1+r) at r=1 is 1/(2 ln 2) ~ 0.72, with no active constraint.
  CHECK(kkt_residual(spec, interior) >= 0.1);
  CHECK(kkt_residual(spec, interior) ==
        doctest::Approx(1.0 / (2.0 * std::log(2.0))).epsilon(1e-9));
}

TEST_CASE("matrix toy picks the dominant eigendirection") {
  const auto spec = matrix_toy();
  Point start = zero_point(spec);
  start.matrices[0] = 0.25 * Eigen::MatrixXcd::Identity(2, 2);
  const auto sol = solve(spec, start);
  REQUIRE(sol.status == SolveStatus::optimal);
  CHECK(sol.objective == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(std::abs(sol.point.matrices[0](1, 1).real() - 1.0) < 1e-5);
  CHECK(std::abs(sol.point.matrices[0](0, 0).real()) < 1e-5);
  CHECK(sol.kkt_residual < 1e-6);
}

TEST_CASE("infeasible starts are reported, not crashed") {
  const auto spec = scalar_toy();
  Point bad = zero_point(spec);
  bad.scalars[0] = 5.0;  // violates r <= 3
  CHECK(solve(spec, bad).status == SolveStatus::infeasible_start);
  Point boundary = zero_point(spec);
  boundary.scalars[0] = 0.0;  // not strictly interior
  CHECK(solve(spec, boundary).status == SolveStatus::infeasible_start);
}

TEST_CASE("solver is deterministic") {
  const auto ch = sample_channels(3, 5);
  const auto budget = desk_budget();
  Rng rng(6);
  const auto expansion = random_design(ch, DuplexMode::full, rng);
  const auto prob = build_subproblem(expansion, ch, budget, 0.5, DuplexMode::full, 1.5e4);
  Rng srng(7);
  const auto start = strictly_feasible_start(prob.spec, srng);
  const auto a = solve(prob.spec, start);
  const auto b = solve(prob.spec, start);
  REQUIRE(a.status == SolveStatus::optimal);
  CHECK(a.objective == b.objective);
  for (std::size_t s = 0; s < a.point.scalars.size(); ++s) {
    CHECK(a.point.scalars[s] == b.point.scalars[s]);
  }
  for (std::size_t m = 0; m < a.point.matrices.size(); ++m) {
    CHECK((a.point.matrices[m] - b.point.matrices[m]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("barrier merit is nondecreasing within each stage") {
  const auto ch = sample_channels(3, 15);
  const auto budget = desk_budget();
  Rng rng(16);
  const auto expansion = random_design(ch, DuplexMode::full, rng);
  const auto prob = build_subproblem(expansion, ch, budget, 0.4, DuplexMode::full, 1.5e4);
  Rng srng(17);
  const auto start = strictly_feasible_start(prob.spec, srng);
  SolveOptions opt;
  opt.record_merit = true;
  const auto sol = solve(prob.spec, start, opt);
  REQUIRE(sol.status == SolveStatus::optimal);
  REQUIRE(sol.merit_trace.size() > 3);
  for (std::size_t i = 1; i < sol.merit_trace.size(); ++i) {
    if (sol.merit_trace[i].first != sol.merit_trace[i - 1].first) continue;
    const double prev = sol.merit_trace[i - 1].second;
    CHECK(sol.merit_trace[i].second >= prev - 1e-9 * (1.0 + std::abs(prev)));
  }
}

TEST_CASE("solved narrowband subproblems return clean conic iterates") {
  const auto budget = desk_budget();
  for (int trial = 0; trial < 4; ++trial) {
    const auto ch = sample_channels(3, 20 + trial);
    Rng rng(30 + trial);
    const auto mode = trial % 2 == 0 ? DuplexMode::full : DuplexMode::half;
    const auto expansion = random_design(ch, mode, rng);
    const auto prob =
        build_subproblem(expansion, ch, budget, 0.3 + 0.1 * trial, mode, 1.5e4);
    Rng srng(40 + trial);
    const auto start = strictly_feasible_start(prob.spec, srng);
    const auto sol = solve(prob.spec, start);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(sol.kkt_residual < 1e-6);
    CHECK(feasibility_margin(prob.spec, sol.point) > -1e-8);
    for (const auto& Q : sol.point.matrices) {
      CHECK((Q - Q.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Q, Eigen::EigenvaluesOnly);
      CHECK(es.eigenvalues().minCoeff() > -1e-8);
    }
  }
}

TEST_CASE("strictly feasible start clears every margin") {
  const auto budget = desk_budget();
  for (int trial = 0; trial < 4; ++trial) {
    const auto ch = sample_channels(4, 50 + trial);
    Rng rng(60 + trial);
    const auto mode = trial % 2 == 0 ? DuplexMode::full : DuplexMode::half;
    const auto expansion = random_design(ch, mode, rng);
    const auto prob = build_subproblem(expansion, ch, budget, 0.5, mode, 1.5e4);
    Rng srng(70 + trial);
    const auto start = strictly_feasible_start(prob.spec, srng);
    CHECK(feasibility_margin(prob.spec, start) >= 1e-9);
  }
}

TEST_CASE("solver beats rejection sampling on tiny subproblems") {
  const auto budget = desk_budget();
  for (int trial = 0; trial < 10; ++trial) {
    const auto ch = sample_channels(2, 80 + trial);
    Rng rng(90 + trial);
    const auto mode = trial % 2 == 0 ? DuplexMode::full : DuplexMode::half;
    const double weight = 0.15 + 0.07 * trial;
    const auto expansion = random_design(ch, mode, rng);
    const auto prob = build_subproblem(expansion, ch, budget, weight, mode, 1.5e4);
    Rng srng(100 + trial);
    const auto start = strictly_feasible_start(prob.spec, srng);
    const auto sol = solve(prob.spec, start);
    REQUIRE(sol.status == SolveStatus::optimal);
    const auto best = rejection_sample_subproblem(expansion, ch, budget, weight,
                                                  mode, 1.5e4, 30000, 110 + trial);
    CHECK(sol.objective >= best.best_objective - 1e-4);
  }
}

TEST_CASE("rejection sampler policies agree bitwise") {
  const auto ch = sample_channels(2, 120);
  const auto budget = desk_budget();
  Rng rng(121);
  const auto expansion = random_design(ch, DuplexMode::full, rng);
  const auto serial = rejection_sample_subproblem(expansion, ch, budget, 0.5,
                                                  DuplexMode::full, 1.5e4, 20000,
                                                  9, ExecPolicy::serial);
  const auto parallel = rejection_sample_subproblem(expansion, ch, budget, 0.5,
                                                    DuplexMode::full, 1.5e4, 20000,
                                                    9, ExecPolicy::parallel);
  CHECK(serial.best_objective == parallel.best_objective);
  CHECK(serial.feasible == parallel.feasible);
}

TEST_CASE("spec debug dump is well formed") {
  const auto ch = sample_channels(2, 130);
  Rng rng(131);
  const auto expansion = random_design(ch, DuplexMode::full, rng);
  const auto prob =
      build_subproblem(expansion, ch, desk_budget(), 0.5, DuplexMode::full, 1.5e4);
  const std::string dump = to_json_string(prob.spec);
  CHECK(dump.find("\"num_real_vars\"") != std::string::npos);
  CHECK(dump.find("\"inequalities\"") != std::string::npos);
  CHECK(dump.find("\"schur_blocks\"") != std::string::npos);
}
