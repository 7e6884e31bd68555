// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "isac/sca.hpp"

namespace isac {

/// Path-based beamforming with delay pre-compensation: tap l carries the
/// symbol delayed by kappa_l = L - l, and the tap-l beamformer is confined to
/// the orthogonal complement of the other taps' channels so no inter-symbol
/// interference survives. Per-tap covariance splits Q_{k,i} = sum_l Q_{k,i,l}
/// carry the Schur lift tap by tap.

/// Orthonormal basis of the subspace orthogonal to {h_{l'} : l' != l}, one
/// basis per tap; each has M - (L-1) columns. Throws if the excluded taps are
/// rank deficient (reports which taps are dependent).
std::vector<Eigen::MatrixXcd> zf_nullspace_basis(
    const std::vector<Eigen::VectorXcd>& h_taps);

struct WidebandProblem {
  solver::SubproblemSpec spec;
  // Per-tap matrix/vector ids: slot (k, i, l) -> id, -1 when silenced.
  std::array<std::array<std::vector<int>, 2>, 2> q_var;
  std::array<std::array<std::vector<int>, 2>, 2> w_var;
  std::array<std::array<int, 2>, 2> r_var;
  std::array<std::array<int, 2>, 2> g_var;
  std::array<std::array<int, 2>, 2> d_var;
  double crb_coeff = 0.0;
};

/// Expansion state: the design plus its per-tap covariance split (aggregate
/// Q_{k,i} is always the exact sum of the per-tap blocks).
struct WidebandScaState {
  std::array<std::array<std::vector<Eigen::MatrixXcd>, 2>, 2> q_taps;
};

WidebandProblem build_subproblem_wideband(const TransmitDesign& expansion,
                                          const WidebandScaState& state,
                                          const WidebandChannels& channels,
                                          const LinkBudget& budget,
                                          double weight, DuplexMode mode,
                                          double mu);

struct WidebandScaResult {
  ScaResult result;
  WidebandScaState best_state;
};

WidebandScaResult run_sca_wideband(const WidebandChannels& channels,
                                   const LinkBudget& budget,
                                   const ScaOptions& options);

double design_kkt_residual(const TransmitDesign& design,
                           const WidebandScaState& state,
                           const WidebandChannels& channels,
                           const LinkBudget& budget, double weight,
                           DuplexMode mode, double mu);

}  // namespace isac
