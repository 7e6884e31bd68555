// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <vector>

#include "isac/metrics.hpp"
#include "isac/solver.hpp"

namespace isac {

/// Successive convex approximation over the lifted beamforming problem:
/// linearize the quadratic-over-linear SINR and Fisher terms at the current
/// iterate, solve the resulting concave subproblem, repeat. Iterates are
/// feasible throughout and the objective never decreases.

struct ScaOptions {
  double weight = 0.5;            // rate-vs-CRB tradeoff weight in [0, 1]
  DuplexMode mode = DuplexMode::full;
  double mu = 5.0e5;              // CRB scaling in the weighted objective
  double objective_tol = 1e-4;    // relative stall threshold
  double kkt_tol = 1e-4;          // certificate target at convergence
  int max_iterations = 50;
  int restarts = 5;
  double solver_tol = 1e-10;
  std::uint64_t seed = 0;         // restart initialization stream
  std::optional<TransmitDesign> initial_design;  // replaces restart 0 init
};

struct ScaTraceRow {
  int iteration = 0;
  double objective = 0.0;
  double rate_sum = 0.0;
  double crb_sum = 0.0;
  double kkt_residual = 0.0;
  std::vector<double> tap_comm_power;  // per-tap columns (wideband)
};

struct ScaRun {
  TransmitDesign design;
  std::vector<double> trajectory;  // true weighted objective, init first
  std::vector<ScaTraceRow> trace;
  int iterations = 0;
  bool converged = false;
  double kkt_residual = 0.0;
  double objective = 0.0;
  double rate_sum = 0.0;
  double crb_sum = 0.0;
};

struct ScaResult {
  ScaRun best;                // best final objective across restarts
  std::vector<ScaRun> runs;   // every restart; runs[0] is the single-run row
};

/// Tangent lower bound of a^2/b at (a_e, b_e), b_e > 0:
///   a^2/b >= slope_a * a + slope_b * b,  tight at the expansion point.
struct QolBound {
  double slope_a = 0.0;
  double slope_b = 0.0;
  double eval(double a, double b) const { return slope_a * a + slope_b * b; }
};

QolBound linearize_quadratic_over_linear(double a_e, double b_e);

/// Affine surrogates for the SINR and per-interval Fisher ratio at a given
/// expansion design, evaluable on arbitrary designs for bound checks.
class NarrowbandSurrogates {
 public:
  NarrowbandSurrogates(const TransmitDesign& expansion,
                       const NarrowbandChannels& channels,
                       const LinkBudget& budget);

  double gamma_surrogate(int k, int i, const TransmitDesign& at) const;
  double gamma_true(int k, int i, const TransmitDesign& at) const;
  /// D = g^2 / (rho_si Phi_{k,i} + 1) and its tangent bound.
  double d_surrogate(int k, int i, double g, const TransmitDesign& at) const;
  double d_true(int k, int i, double g, const TransmitDesign& at) const;

  double expansion_g(int k, int i) const { return g_e_[k][i]; }
  const Eigen::VectorXcd& gamma_vector_coeff(int k, int i) const {
    return gamma_vec_coeff_[k][i];
  }
  const Eigen::MatrixXcd& gamma_matrix_coeff(int k, int i) const {
    return gamma_mat_coeff_[k][i];
  }
  double gamma_constant(int k, int i) const { return gamma_const_[k][i]; }
  const QolBound& d_tangent(int k, int i) const { return d_bound_[k][i]; }

 private:
  const NarrowbandChannels* channels_;
  LinkBudget budget_;
  std::array<std::array<Eigen::VectorXcd, 2>, 2> gamma_vec_coeff_;  // on w_{k',i}
  std::array<std::array<Eigen::MatrixXcd, 2>, 2> gamma_mat_coeff_;  // on Q_{k,i}
  std::array<std::array<double, 2>, 2> gamma_const_;
  std::array<std::array<QolBound, 2>, 2> d_bound_;
  std::array<std::array<double, 2>, 2> g_e_;
};

/// Structured subproblem plus the variable bookkeeping needed to extract
/// designs and audit the construction.
struct NarrowbandProblem {
  solver::SubproblemSpec spec;
  std::array<std::array<int, 2>, 2> q_var;  // slot -> matrix id (-1 silenced)
  std::array<std::array<int, 2>, 2> w_var;
  std::array<std::array<int, 2>, 2> r_var;  // -1 = pinned to zero
  std::array<std::array<int, 2>, 2> g_var;
  std::array<std::array<int, 2>, 2> d_var;
  double crb_coeff = 0.0;  // (1 - w) mu / (2 rho_s N)
};

NarrowbandProblem build_subproblem(const TransmitDesign& expansion,
                                   const NarrowbandChannels& channels,
                                   const LinkBudget& budget, double weight,
                                   DuplexMode mode, double mu);

/// R = Q - sum_l w_l w_l^H with tiny negative eigenvalues clipped to zero.
/// Rejects violations beyond -1e-6 (a solver failure, not roundoff).
Eigen::MatrixXcd extract_sensing_covariance(
    const Eigen::MatrixXcd& Q, const std::vector<Eigen::VectorXcd>& beams);

ScaResult run_sca(const NarrowbandChannels& channels, const LinkBudget& budget,
                  const ScaOptions& options);

/// KKT residual of the weighted tradeoff problem at an arbitrary feasible
/// design (surrogates re-expanded there, so values and gradients coincide
/// with the true constraints).
double design_kkt_residual(const TransmitDesign& design,
                           const NarrowbandChannels& channels,
                           const LinkBudget& budget, double weight,
                           DuplexMode mode, double mu);

}  // namespace isac
