// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "isac/rng.hpp"

namespace isac::solver {

/// Structured convex subproblem: maximize a concave objective in
///   - nonnegative-ish scalars (r, g, d with lower bounds),
///   - Hermitian matrix blocks (transmit covariances),
///   - complex vectors expressed in an orthonormal basis (beamformers;
///     the basis restricts them to an affine feasible subspace, e.g. ZF),
/// subject to affine inequalities, quadratic cones F(x) >= s^2, and Schur
/// blocks [[Q, w], [w^H, 1]] >= 0.
///
/// Equalities (duplex ties, ZF, zero patterns) never appear here: builders
/// express them by sharing variables, pinning slots, or reducing bases, so
/// they hold to machine precision by construction.

struct ScalarDecl {
  double lower = 0.0;
  std::string name;
};

struct MatrixDecl {
  int dim = 0;  // Hermitian dim x dim
  std::string name;
};

struct VectorDecl {
  int ambient = 0;
  Eigen::MatrixXcd basis;  // ambient x reduced, orthonormal columns
  std::string name;
};

/// Real-valued affine functional:
///   constant + sum a_s x_s + sum tr(A_m Q_m) + sum Re(c_v^H w_v),
/// with every A Hermitian (so each trace is real) and w = basis * v.
struct AffineExpr {
  double constant = 0.0;
  std::vector<std::pair<int, double>> scalars;
  std::vector<std::pair<int, Eigen::MatrixXcd>> matrices;
  std::vector<std::pair<int, Eigen::VectorXcd>> vectors;
};

/// value(x) - x_{scalar}^2 >= 0.
struct QuadCone {
  AffineExpr value;
  int scalar = -1;
  std::string name;
};

/// [[Q_matrix, w_vector], [w_vector^H, 1]] >= 0 (complex Hermitian, handled
/// through its real symmetric embedding of size 2(dim+1)).
struct SchurBlock {
  int matrix = -1;
  int vector = -1;
  std::string name;
};

/// maximize linear(x) + log_weight * sum log2(1 + x_r)
///          - inv_weight * sum_groups 1 / (sum_{d in group} x_d).
struct Objective {
  AffineExpr linear;
  double log_weight = 0.0;
  std::vector<int> log_scalars;
  double inv_weight = 0.0;
  std::vector<std::vector<int>> inv_groups;
};

struct SubproblemSpec;

/// Structured variable values. Vector entries are the reduced coordinates v;
/// the ambient beam is basis * v.
struct Point {
  std::vector<double> scalars;
  std::vector<Eigen::MatrixXcd> matrices;
  std::vector<Eigen::VectorXcd> vectors;

  Eigen::VectorXcd ambient(const SubproblemSpec& spec, int vec_id) const;
};

struct SubproblemSpec {
  std::vector<ScalarDecl> scalars;
  std::vector<MatrixDecl> matrices;
  std::vector<VectorDecl> vectors;
  std::vector<AffineExpr> inequalities;  // each >= 0
  std::vector<QuadCone> cones;
  std::vector<SchurBlock> schur_blocks;
  Objective objective;
  /// Matrix/vector parts of an interior witness, supplied by the builder
  /// (the spec is constructed around a feasible expansion point, so the
  /// builder always knows one); strictly_feasible_start fills the scalars.
  std::optional<Point> interior_hint;

  int num_real_vars() const;
};

Point zero_point(const SubproblemSpec& spec);

double eval_affine(const SubproblemSpec& spec, const AffineExpr& e, const Point& p);
double eval_objective(const SubproblemSpec& spec, const Point& p);

enum class SolveStatus { optimal, max_iter, infeasible_start };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::max_iter: return "max-iter";
    default: return "infeasible-start";
  }
}

struct SolveOptions {
  double tol = 1e-8;          // duality-gap target (barrier count / t)
  double newton_tol = 1e-9;   // on half the squared Newton decrement
  double barrier_mult = 10.0;
  int max_newton = 200;       // combined inner/outer cap
  bool record_merit = false;  // keep per-step barrier merit for tests
};

struct SubproblemSolution {
  Point point;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  SolveStatus status = SolveStatus::optimal;
  /// (stage, merit) per accepted Newton step when record_merit is set; the
  /// merit must be nondecreasing within a stage.
  std::vector<std::pair<int, double>> merit_trace;
};

/// Barrier path-following from a strictly feasible start. Never leaves the
/// feasible region; returns with status max_iter when the Newton-step cap is
/// reached first.
SubproblemSolution solve(const SubproblemSpec& spec, const Point& start,
                         const SolveOptions& options = {});

/// Max of stationarity residual (multipliers recovered by least squares over
/// constraints active within activity_tol), complementary-slackness products,
/// and feasibility violations.
double kkt_residual(const SubproblemSpec& spec, const Point& p,
                    double activity_tol = 1e-6);

/// Leaves every inequality/cone/PSD constraint with this relative margin or
/// better; throws after 20 repair attempts (a spec-construction bug).
Point strictly_feasible_start(const SubproblemSpec& spec, Rng& rng);

/// Strict margin of the least-satisfied constraint (negative = infeasible).
double feasibility_margin(const SubproblemSpec& spec, const Point& p);

/// Debug dump (dimensions plus compiled dense constraint rows, row-major)
/// as a serialized JSON document for external cross-checking.
std::string to_json_string(const SubproblemSpec& spec);

}  // namespace isac::solver
