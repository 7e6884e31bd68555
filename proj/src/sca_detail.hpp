// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "isac/sca.hpp"

namespace isac::detail {

// Weighted tradeoff objective; the CRB term is dropped entirely at weight 1
// so an infinite CRB cannot poison a pure-rate run.
inline double weighted_objective(double weight, double mu, double rate_sum,
                                 double crb_sum) {
  if (weight >= 1.0) return rate_sum;
  return weight * rate_sum - (1.0 - weight) * mu * crb_sum;
}

// Numerator floors keep the SINR linearization informative when an expansion
// beam is (nearly) dead; the tangent stays a valid global bound because it is
// taken at a shifted expansion point, and the tightness error it introduces
// is O(floor^2), far below the 1e-9 monotonicity slack.
constexpr double kExpansionFloor = 1e-7;

inline bool slot_active(DuplexMode mode, Band band, int k, int i) {
  if (mode == DuplexMode::full) return true;
  if (band == Band::narrow) return (k == 0 && i == 0) || (k == 1 && i == 1);
  return i == 0;  // wideband half-duplex mutes the second interval for both
}

// One SCA run: build at the iterate, solve, extract, certify, repeat until
// the objective stalls and the KKT residual of the re-expanded problem is
// below target. Family provides the band-specific pieces.
template <class Family>
ScaRun run_sca_once(const Family& fam, const ScaOptions& opt, int restart) {
  using Iterate = typename Family::Iterate;
  Rng rng = stream_rng(opt.seed, {purpose_tag(StreamPurpose::sca_init),
                                  static_cast<std::uint64_t>(restart)});
  Iterate cur = fam.initial(restart, rng);

  ScaRun run;
  auto cur_metrics = fam.metrics(cur);
  run.trajectory.push_back(
      weighted_objective(opt.weight, opt.mu, cur_metrics.rate_sum, cur_metrics.crb_sum));

  auto prob = fam.build(cur);
  double travel_factor = 12.0;  // adaptive over-relaxation reach
  for (int t = 1; t <= opt.max_iterations; ++t) {
    const solver::Point start = fam.start(prob, cur, rng);
    solver::SolveOptions sopt;
    sopt.tol = opt.solver_tol;
    // Occasional wideband subproblems spend a couple hundred Newton steps
    // centering through a nearly blocked tap; give them room.
    sopt.max_newton = 1000;
    const auto sol = solver::solve(prob.spec, start, sopt);
    if (sol.status != solver::SolveStatus::optimal) {
      throw std::runtime_error("sca: subproblem solve failed at iteration " +
                               std::to_string(t) + " (" +
                               solver::to_string(sol.status) + ")");
    }
    Iterate next = fam.extract(prob, sol.point);
    cur_metrics = fam.metrics(next);
    double obj = weighted_objective(opt.weight, opt.mu, cur_metrics.rate_sum,
                                    cur_metrics.crb_sum);
    auto prob_next = fam.build(next);
    double kkt = solver::kkt_residual(prob_next.spec, fam.lift(prob_next, next));

    // Monotone over-relaxation: slow SCA tails drift along a nearly flat
    // valley, so probe further steps along the iterate difference. Far from
    // the fixed point, travel greedily by objective with an adaptive reach;
    // near it, keep the candidate with the smallest re-expanded KKT residual
    // (the plain step always qualifies, so polishing can only help).
    if (kkt > 10.0 * opt.kkt_tol) {
      bool full_reach = false;
      bool accepted = false;
      double best_obj = obj + 1e-12 * (1.0 + std::abs(obj));
      std::optional<Iterate> best_cand;
      DesignMetrics best_metrics{};
      double best_factor = 0.0;
      for (double factor : {travel_factor, 0.5 * travel_factor,
                            0.25 * travel_factor, 1.0}) {
        const auto cand = fam.extrapolate(cur, next, factor);
        if (!cand) continue;
        const auto cand_metrics = fam.metrics(*cand);
        const double cand_obj = weighted_objective(
            opt.weight, opt.mu, cand_metrics.rate_sum, cand_metrics.crb_sum);
        if (cand_obj <= best_obj) continue;
        best_obj = cand_obj;
        best_cand = cand;
        best_metrics = cand_metrics;
        best_factor = factor;
      }
      if (best_cand) {
        full_reach = best_factor == travel_factor;
        accepted = true;
        next = std::move(*best_cand);
        cur_metrics = best_metrics;
        obj = best_obj;
        prob_next = fam.build(next);
        kkt = solver::kkt_residual(prob_next.spec, fam.lift(prob_next, next));
      }
      travel_factor = accepted && full_reach
                          ? std::min(travel_factor * 2.0, 400.0)
                          : std::max(travel_factor * 0.5, 12.0);
    } else {
      for (double factor : {12.0, 6.0, 3.0, 1.0}) {
        const auto cand = fam.extrapolate(cur, next, factor);
        if (!cand) continue;
        const auto cand_metrics = fam.metrics(*cand);
        const double cand_obj = weighted_objective(
            opt.weight, opt.mu, cand_metrics.rate_sum, cand_metrics.crb_sum);
        if (cand_obj < obj) continue;
        auto cand_prob = fam.build(*cand);
        const double cand_kkt =
            solver::kkt_residual(cand_prob.spec, fam.lift(cand_prob, *cand));
        if (cand_kkt < kkt) {
          next = *cand;
          cur_metrics = cand_metrics;
          obj = cand_obj;
          prob_next = std::move(cand_prob);
          kkt = cand_kkt;
        }
      }
    }
    if (obj < run.trajectory.back() - 1e-9) {
      throw std::logic_error("sca: objective decreased at iteration " +
                             std::to_string(t));
    }
    const double prev = run.trajectory.back();
    run.trajectory.push_back(obj);

    ScaTraceRow row;
    row.iteration = t;
    row.objective = obj;
    row.rate_sum = cur_metrics.rate_sum;
    row.crb_sum = cur_metrics.crb_sum;
    row.kkt_residual = kkt;
    row.tap_comm_power = fam.tap_powers(next);
    run.trace.push_back(row);

    cur = std::move(next);
    prob = std::move(prob_next);
    run.iterations = t;
    run.kkt_residual = kkt;

    const bool stalled =
        std::abs(obj - prev) <= opt.objective_tol * std::max(1.0, std::abs(obj));
    if (stalled && kkt <= opt.kkt_tol) {
      run.converged = true;
      break;
    }
  }
  run.design = fam.design_of(cur);
  run.objective = run.trajectory.back();
  run.rate_sum = cur_metrics.rate_sum;
  run.crb_sum = cur_metrics.crb_sum;
  fam.stash(cur, run);
  return run;
}

template <class Family>
ScaResult run_sca_restarts(const Family& fam, const ScaOptions& opt) {
  if (opt.weight < 0.0 || opt.weight > 1.0) throw std::invalid_argument("sca: weight must lie in [0, 1]");
  ScaResult result;
  int best = -1;
  for (int r = 0; r < std::max(1, opt.restarts); ++r) {
    result.runs.push_back(run_sca_once(fam, opt, r));
    if (best < 0 || result.runs.back().objective > result.runs[best].objective) {
      best = r;
    }
  }
  result.best = result.runs[best];
  return result;
}

}  // namespace isac::detail
