// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include "isac/metrics.hpp"
#include "isac/rng.hpp"

namespace isac {

/// Test oracles: brute-force Fisher information from explicitly constructed
/// sample covariance matrices, and a symbol-level SINR simulation. These are
/// validation paths only; the closed forms in metrics.hpp are the production
/// path. All constructions are dense and deliberately size-capped.

enum class ExecPolicy { serial, parallel };

/// Fisher information for the direction at transceiver k, computed by
/// building the stacked-sample covariances for a small CPI of 2*half_cpi
/// samples and evaluating
///   J = 2 rho_s |alpha|^2 tr((I (x) adot) R_z^-1 (I (x) adot^H) R_X).
/// The Doppler rotation (phase `doppler_phase_step` per sample) is applied
/// explicitly; it must cancel. Requires half_cpi <= 16.
double fim_bruteforce_narrowband(const TransmitDesign& design,
                                 const NarrowbandChannels& channels,
                                 const LinkBudget& budget, int k, int half_cpi,
                                 double doppler_phase_step = 0.0);

struct WidebandFimResult {
  double fisher = 0.0;       // total, auto + cross
  double cross_trace = 0.0;  // contribution of the delay-induced cross terms
};

/// Wideband counterpart over `pri_count` PRIs of 2*pri_half samples each.
/// The delay pre-compensated path beams introduce nonzero off-diagonal
/// correlation blocks; their diagonal M x M blocks vanish, so `cross_trace`
/// must come out (numerically) zero. Caps the dense size at 2048 rows.
WidebandFimResult fim_bruteforce_wideband(const TransmitDesign& design,
                                          const WidebandChannels& channels,
                                          const LinkBudget& budget, int k,
                                          int pri_count, int pri_half,
                                          double doppler_phase_step = 0.0);

/// Sample SINR of the decode path at receiver k in interval i: unit-power
/// Gaussian symbols, dedicated-sensing samples drawn from R, Doppler-rotated
/// echo, residual-SI noise of variance rho_si * Phi, then dedicated-sensing
/// pre-cancellation (and, wideband, delay alignment). Requires >= 1000
/// symbols. Chunked so the parallel and serial policies are bit-identical.
double empirical_sinr_narrowband(const TransmitDesign& design,
                                 const NarrowbandChannels& channels,
                                 const LinkBudget& budget, int k, int i,
                                 std::int64_t num_symbols, std::uint64_t seed,
                                 double doppler_phase_step = 0.0,
                                 ExecPolicy policy = ExecPolicy::parallel);

double empirical_sinr_wideband(const TransmitDesign& design,
                               const WidebandChannels& channels,
                               const LinkBudget& budget, int k, int i,
                               std::int64_t num_symbols, std::uint64_t seed,
                               double doppler_phase_step = 0.0,
                               ExecPolicy policy = ExecPolicy::parallel);

/// Random feasible design (power, PSD, duplex pattern, wideband ZF all
/// satisfied); used by oracle comparisons and the validation suite.
TransmitDesign random_design(const NarrowbandChannels& channels,
                             DuplexMode mode, Rng& rng);
TransmitDesign random_design(const WidebandChannels& channels, DuplexMode mode,
                             Rng& rng);

struct RejectionBest {
  double best_objective = -1.0e300;
  std::int64_t feasible = 0;  // samples that satisfied every constraint
};

/// Best subproblem objective over random feasible (Q, w) draws with the
/// auxiliaries set to their per-sample optima (the objective is monotone in
/// them). A lower-bound oracle for solver optimality checks.
RejectionBest rejection_sample_subproblem(const TransmitDesign& expansion,
                                          const NarrowbandChannels& channels,
                                          const LinkBudget& budget,
                                          double weight, DuplexMode mode,
                                          double mu, std::int64_t samples,
                                          std::uint64_t seed,
                                          ExecPolicy policy = ExecPolicy::parallel);

/// Best true weighted objective over random feasible designs; a lower-bound
/// oracle for the full SCA pipeline on tiny instances.
RejectionBest rejection_sample_true_objective(const NarrowbandChannels& channels,
                                              const LinkBudget& budget,
                                              double weight, DuplexMode mode,
                                              double mu, std::int64_t samples,
                                              std::uint64_t seed,
                                              ExecPolicy policy = ExecPolicy::parallel);

}  // namespace isac
