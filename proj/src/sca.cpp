// SPDX-License-Identifier: Apache-2.0

#include "isac/sca.hpp"

#include <cmath>
#include <stdexcept>

#include "sca_detail.hpp"

namespace isac {

namespace {

constexpr double kDLower = 1e-12;  // keeps (sum d)^-1 finite at weight ~ 1

double quad(const Eigen::VectorXcd& v, const Eigen::MatrixXcd& Q) {
  return std::real(v.dot(Q * v));
}

// Shift a dead expansion beam so the linearized SINR keeps a usable slope.
Eigen::VectorXcd floor_beam(const Eigen::VectorXcd& w_e,
                            const Eigen::VectorXcd& h) {
  const std::complex<double> gain = h.dot(w_e);
  if (std::abs(gain) >= detail::kExpansionFloor) return w_e;
  const std::complex<double> phase =
      std::abs(gain) > 0.0 ? gain / std::abs(gain) : std::complex<double>(1.0);
  return w_e + (detail::kExpansionFloor / h.squaredNorm()) * phase * h;
}

}  // namespace

QolBound linearize_quadratic_over_linear(double a_e, double b_e) {
  if (!(b_e > 0.0)) throw std::invalid_argument("linearize_quadratic_over_linear: expansion denominator must be positive");
  QolBound q;
  q.slope_a = 2.0 * a_e / b_e;
  q.slope_b = -(a_e / b_e) * (a_e / b_e);
  return q;
}

NarrowbandSurrogates::NarrowbandSurrogates(const TransmitDesign& expansion,
                                           const NarrowbandChannels& channels,
                                           const LinkBudget& budget)
    : channels_(&channels), budget_(budget) {
  const int M = channels.num_antennas;
  for (int k = 0; k < 2; ++k) {
    const int kp = 1 - k;
    const auto steer =
        steering_vector(channels.theta[k], M, channels.spacing_ratio).entries;
    const auto adot =
        steering_derivative(channels.theta[k], M, channels.spacing_ratio);
    const double alpha2 = std::norm(channels.alpha[k]);
    std::span<const Eigen::VectorXcd> si(&channels.g[k], 1);
    for (int i = 0; i < 2; ++i) {
      const Eigen::VectorXcd w_f =
          floor_beam(expansion.beams[kp][i][0], channels.h[kp]);
      const double phi_e =
          residual_si_power(expansion.Q[k][i], si, budget.eta);
      const double interference_e = budget.rho_s * quad(steer, expansion.Q[k][i]) +
                                    budget.rho_si * phi_e + 1.0;
      const std::complex<double> gain_e = channels.h[kp].dot(w_f);
      const double kappa =
          budget.rho_c * std::norm(gain_e) / (interference_e * interference_e);
      gamma_vec_coeff_[k][i] =
          (2.0 * budget.rho_c / interference_e) * (channels.h[kp] * gain_e);
      gamma_mat_coeff_[k][i] =
          -kappa * (budget.rho_s * steer * steer.adjoint() +
                    budget.rho_si * budget.eta * channels.g[k] * channels.g[k].adjoint());
      gamma_const_[k][i] = -kappa;

      const double fisher_e = alpha2 * quad(adot, expansion.Q[k][i]);
      g_e_[k][i] = std::max(std::sqrt(std::max(fisher_e, 0.0)),
                            detail::kExpansionFloor);
      d_bound_[k][i] =
          linearize_quadratic_over_linear(g_e_[k][i], budget.rho_si * phi_e + 1.0);
    }
  }
}

double NarrowbandSurrogates::gamma_surrogate(int k, int i,
                                             const TransmitDesign& at) const {
  const int kp = 1 - k;
  double v = gamma_const_[k][i];
  v += std::real(gamma_vec_coeff_[k][i].dot(at.beams[kp][i][0]));
  v += std::real((gamma_mat_coeff_[k][i] * at.Q[k][i]).trace());
  return v;
}

double NarrowbandSurrogates::gamma_true(int k, int i,
                                        const TransmitDesign& at) const {
  return sinr_narrowband(at, *channels_, budget_, k, i);
}

double NarrowbandSurrogates::d_surrogate(int k, int i, double g,
                                         const TransmitDesign& at) const {
  std::span<const Eigen::VectorXcd> si(&channels_->g[k], 1);
  const double phi = residual_si_power(at.Q[k][i], si, budget_.eta);
  return d_bound_[k][i].eval(g, budget_.rho_si * phi + 1.0);
}

double NarrowbandSurrogates::d_true(int k, int i, double g,
                                    const TransmitDesign& at) const {
  std::span<const Eigen::VectorXcd> si(&channels_->g[k], 1);
  const double phi = residual_si_power(at.Q[k][i], si, budget_.eta);
  return g * g / (budget_.rho_si * phi + 1.0);
}

NarrowbandProblem build_subproblem(const TransmitDesign& expansion,
                                   const NarrowbandChannels& channels,
                                   const LinkBudget& budget, double weight,
                                   DuplexMode mode, double mu) {
  const int M = channels.num_antennas;
  NarrowbandProblem prob;
  prob.crb_coeff = weight < 1.0
                       ? (1.0 - weight) * mu /
                             (2.0 * budget.rho_s * static_cast<double>(budget.half_cpi))
                       : 0.0;
  auto& spec = prob.spec;
  for (auto& row : prob.q_var) row.fill(-1);
  for (auto& row : prob.w_var) row.fill(-1);
  for (auto& row : prob.r_var) row.fill(-1);
  for (auto& row : prob.g_var) row.fill(-1);
  for (auto& row : prob.d_var) row.fill(-1);

  const NarrowbandSurrogates sur(expansion, channels, budget);

  // Transmit variables; duplex ties are variable sharing, silenced slots stay
  // unmapped so their zero pattern is structural.
  for (int k = 0; k < 2; ++k) {
    const std::string kn = k == 0 ? "A" : "B";
    if (mode == DuplexMode::full) {
      const int q = static_cast<int>(spec.matrices.size());
      spec.matrices.push_back({M, "Q_" + kn});
      const int w = static_cast<int>(spec.vectors.size());
      spec.vectors.push_back({M, Eigen::MatrixXcd::Identity(M, M), "w_" + kn});
      prob.q_var[k] = {q, q};
      prob.w_var[k] = {w, w};
    } else {
      const int i = k == 0 ? 0 : 1;
      const int q = static_cast<int>(spec.matrices.size());
      spec.matrices.push_back({M, "Q_" + kn + std::to_string(i + 1)});
      const int w = static_cast<int>(spec.vectors.size());
      spec.vectors.push_back(
          {M, Eigen::MatrixXcd::Identity(M, M), "w_" + kn + std::to_string(i + 1)});
      prob.q_var[k][i] = q;
      prob.w_var[k][i] = w;
    }
  }

  // Auxiliary scalars, only where the slot and the objective make them live.
  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i < 2; ++i) {
      const std::string tag =
          (k == 0 ? "A" : "B") + std::to_string(i + 1);
      if (weight > 0.0 && prob.w_var[1 - k][i] >= 0) {
        prob.r_var[k][i] = static_cast<int>(spec.scalars.size());
        spec.scalars.push_back({0.0, "r_" + tag});
      }
      if (weight < 1.0 && prob.q_var[k][i] >= 0) {
        prob.g_var[k][i] = static_cast<int>(spec.scalars.size());
        spec.scalars.push_back({0.0, "g_" + tag});
        prob.d_var[k][i] = static_cast<int>(spec.scalars.size());
        spec.scalars.push_back({kDLower, "d_" + tag});
      }
    }
  }

  // Average power per transceiver across the CPI.
  for (int k = 0; k < 2; ++k) {
    solver::AffineExpr power;
    power.constant = 2.0;
    for (int i = 0; i < 2; ++i) {
      if (prob.q_var[k][i] >= 0) {
        power.matrices.emplace_back(prob.q_var[k][i],
                                    -Eigen::MatrixXcd::Identity(M, M));
      }
    }
    spec.inequalities.push_back(std::move(power));
  }

  for (int k = 0; k < 2; ++k) {
    const int kp = 1 - k;
    const auto adot =
        steering_derivative(channels.theta[k], M, channels.spacing_ratio);
    const double alpha2 = std::norm(channels.alpha[k]);
    for (int i = 0; i < 2; ++i) {
      if (prob.r_var[k][i] >= 0) {
        solver::AffineExpr gamma;  // surrogate SINR - r >= 0
        gamma.constant = sur.gamma_constant(k, i);
        gamma.vectors.emplace_back(prob.w_var[kp][i], sur.gamma_vector_coeff(k, i));
        if (prob.q_var[k][i] >= 0) {
          gamma.matrices.emplace_back(prob.q_var[k][i], sur.gamma_matrix_coeff(k, i));
        }
        gamma.scalars.emplace_back(prob.r_var[k][i], -1.0);
        spec.inequalities.push_back(std::move(gamma));
      }
      if (prob.d_var[k][i] >= 0) {
        const auto& bound = sur.d_tangent(k, i);
        solver::AffineExpr dexpr;  // surrogate Fisher ratio - d >= 0
        dexpr.constant = bound.slope_b;
        dexpr.scalars.emplace_back(prob.g_var[k][i], bound.slope_a);
        dexpr.scalars.emplace_back(prob.d_var[k][i], -1.0);
        dexpr.matrices.emplace_back(
            prob.q_var[k][i], bound.slope_b * budget.rho_si * budget.eta *
                                  (channels.g[k] * channels.g[k].adjoint()));
        spec.inequalities.push_back(std::move(dexpr));

        solver::QuadCone cone;  // alpha^2 adot^H Q adot >= g^2
        cone.value.matrices.emplace_back(prob.q_var[k][i],
                                         alpha2 * (adot * adot.adjoint()));
        cone.scalar = prob.g_var[k][i];
        cone.name = "fisher_" + std::string(k == 0 ? "A" : "B") + std::to_string(i + 1);
        spec.cones.push_back(std::move(cone));
      }
      if (prob.q_var[k][i] >= 0) {
        spec.schur_blocks.push_back({prob.q_var[k][i], prob.w_var[k][i],
                                     "schur_" + std::string(k == 0 ? "A" : "B") +
                                         std::to_string(i + 1)});
      }
    }
  }

  spec.objective.log_weight = weight / 2.0;
  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i < 2; ++i) {
      if (prob.r_var[k][i] >= 0) spec.objective.log_scalars.push_back(prob.r_var[k][i]);
    }
  }
  spec.objective.inv_weight = prob.crb_coeff;
  if (prob.crb_coeff > 0.0) {
    for (int k = 0; k < 2; ++k) {
      std::vector<int> group;
      for (int i = 0; i < 2; ++i) {
        if (prob.d_var[k][i] >= 0) group.push_back(prob.d_var[k][i]);
      }
      spec.objective.inv_groups.push_back(std::move(group));
    }
  }

  // Interior witness: the expansion blended toward a small identity
  // covariance; the solver fills the scalar slots from their windows.
  solver::Point hint = solver::zero_point(spec);
  const int n_act = mode == DuplexMode::full ? 2 : 1;
  const Eigen::MatrixXcd safe =
      (0.9 / (n_act * M)) * Eigen::MatrixXcd::Identity(M, M);
  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i < 2; ++i) {
      if (prob.q_var[k][i] < 0) continue;
      hint.matrices[prob.q_var[k][i]] = 0.95 * expansion.Q[k][i] + 0.05 * safe;
      // Floored like the surrogate coefficients, so a dead expansion beam
      // still leaves the linearized-SINR window open at the start.
      hint.vectors[prob.w_var[k][i]] =
          0.95 * floor_beam(expansion.beams[k][i][0], channels.h[k]);
    }
  }
  spec.interior_hint = std::move(hint);
  return prob;
}

Eigen::MatrixXcd extract_sensing_covariance(
    const Eigen::MatrixXcd& Q, const std::vector<Eigen::VectorXcd>& beams) {
  Eigen::MatrixXcd R = Q;
  for (const auto& w : beams) R -= w * w.adjoint();
  R = 0.5 * (R + R.adjoint().eval());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(R);
  const double min_eig = es.eigenvalues().minCoeff();
  if (min_eig < -1e-6) {
    throw std::runtime_error("extract_sensing_covariance: covariance deficit beyond tolerance");
  }
  const Eigen::VectorXd clipped = es.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXcd repaired =
      es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().adjoint();
  if (std::abs(repaired.real().trace() - R.real().trace()) > 1e-8) {
    throw std::runtime_error("extract_sensing_covariance: repair moved the trace");
  }
  return repaired;
}

// ---------------------------------------------------------------------------
// SCA driver pieces shared with the wideband pipeline via detail::run_sca_*.
// ---------------------------------------------------------------------------

namespace {

struct NarrowbandFamilyImpl {
  using Iterate = TransmitDesign;
  using Metrics = DesignMetrics;
  using Problem = NarrowbandProblem;

  const NarrowbandChannels* ch;
  LinkBudget budget;
  ScaOptions opt;

  TransmitDesign initial(int restart, Rng& rng) const {
    if (restart == 0 && opt.initial_design) {
      if (opt.initial_design->band != Band::narrow || opt.initial_design->mode != opt.mode) {
        throw std::invalid_argument("run_sca: initial design band/mode mismatch");
      }
      return *opt.initial_design;
    }
    const int M = ch->num_antennas;
    TransmitDesign d;
    d.mode = opt.mode;
    d.band = Band::narrow;
    d.num_antennas = M;
    d.taps = 1;
    for (int k = 0; k < 2; ++k) {
      const int n_act = opt.mode == DuplexMode::full ? 2 : 1;
      const double p_int = 0.98 * 2.0 / n_act;
      Eigen::VectorXcd dir(M);
      for (int m = 0; m < M; ++m) dir(m) = rng.next_cgaussian();
      dir /= dir.norm();
      const Eigen::VectorXcd w = std::sqrt(0.1 * p_int) * dir;
      const Eigen::MatrixXcd base =
          (0.9 * p_int / M) * Eigen::MatrixXcd::Identity(M, M);
      for (int i = 0; i < 2; ++i) {
        if (detail::slot_active(opt.mode, Band::narrow, k, i)) {
          d.beams[k][i] = {w};
          d.R[k][i] = base;
          d.Q[k][i] = w * w.adjoint() + base;
        } else {
          d.beams[k][i] = {Eigen::VectorXcd::Zero(M)};
          d.R[k][i] = Eigen::MatrixXcd::Zero(M, M);
          d.Q[k][i] = Eigen::MatrixXcd::Zero(M, M);
        }
      }
    }
    return d;
  }

  Problem build(const TransmitDesign& at) const {
    return build_subproblem(at, *ch, budget, opt.weight, opt.mode, opt.mu);
  }

  solver::Point start(const Problem& prob, const TransmitDesign&, Rng& rng) const {
    return solver::strictly_feasible_start(prob.spec, rng);
  }

  TransmitDesign extract(const Problem& prob, const solver::Point& sol) const {
    const int M = ch->num_antennas;
    TransmitDesign d;
    d.mode = opt.mode;
    d.band = Band::narrow;
    d.num_antennas = M;
    d.taps = 1;
    for (int k = 0; k < 2; ++k) {
      for (int i = 0; i < 2; ++i) {
        if (prob.q_var[k][i] < 0) {
          d.Q[k][i] = Eigen::MatrixXcd::Zero(M, M);
          d.beams[k][i] = {Eigen::VectorXcd::Zero(M)};
          d.R[k][i] = Eigen::MatrixXcd::Zero(M, M);
          continue;
        }
        const Eigen::MatrixXcd& Q = sol.matrices[prob.q_var[k][i]];
        // Beam absorption: given Q, the rate-optimal beam is Q h scaled to
        // the Schur boundary; it can only improve the objective and resolves
        // the w/R split degeneracy at the weight endpoints.
        const Eigen::VectorXcd& h = ch->h[k];
        const double hqh = std::real(h.dot(Q * h));
        Eigen::VectorXcd w = Eigen::VectorXcd::Zero(M);
        if (hqh > 1e-14) w = (Q * h) / std::sqrt(hqh);
        d.Q[k][i] = Q;
        d.beams[k][i] = {w};
        d.R[k][i] = extract_sensing_covariance(Q, d.beams[k][i]);
      }
    }
    return d;
  }

  solver::Point lift(const Problem& prob, const TransmitDesign& at) const {
    solver::Point p = solver::zero_point(prob.spec);
    const NarrowbandSurrogates sur(at, *ch, budget);
    const int M = ch->num_antennas;
    for (int k = 0; k < 2; ++k) {
      const auto adot =
          steering_derivative(ch->theta[k], M, ch->spacing_ratio);
      for (int i = 0; i < 2; ++i) {
        if (prob.q_var[k][i] >= 0) {
          p.matrices[prob.q_var[k][i]] = at.Q[k][i];
          p.vectors[prob.w_var[k][i]] = at.beams[k][i][0];
        }
        if (prob.r_var[k][i] >= 0) {
          p.scalars[prob.r_var[k][i]] =
              std::max(0.0, sur.gamma_surrogate(k, i, at));
        }
        if (prob.g_var[k][i] >= 0) {
          const double fisher = std::norm(ch->alpha[k]) * quad(adot, at.Q[k][i]);
          const double g = std::sqrt(std::max(fisher, 0.0));
          p.scalars[prob.g_var[k][i]] = g;
          p.scalars[prob.d_var[k][i]] =
              std::max(kDLower, sur.d_surrogate(k, i, g, at));
        }
      }
    }
    return p;
  }

  DesignMetrics metrics(const TransmitDesign& d) const {
    return evaluate_design(d, *ch, budget);
  }

  // next + factor * (next - prev) on the covariances, eigen-clipped to the
  // cone, with beams re-absorbed from the extrapolated covariance.
  std::optional<TransmitDesign> extrapolate(const TransmitDesign& prev,
                                            const TransmitDesign& next,
                                            double factor) const {
    const int M = ch->num_antennas;
    TransmitDesign cand = next;
    for (int k = 0; k < 2; ++k) {
      double power = 0.0;
      std::array<Eigen::MatrixXcd, 2> clipped;
      for (int i = 0; i < 2; ++i) {
        if (!detail::slot_active(opt.mode, Band::narrow, k, i)) continue;
        Eigen::MatrixXcd Q =
            next.Q[k][i] + factor * (next.Q[k][i] - prev.Q[k][i]);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Q);
        clipped[i] = es.eigenvectors() *
                     es.eigenvalues().cwiseMax(0.0).asDiagonal() *
                     es.eigenvectors().adjoint();
        power += clipped[i].real().trace();
      }
      const double scale = power > 2.0 ? 2.0 / power : 1.0;
      for (int i = 0; i < 2; ++i) {
        if (!detail::slot_active(opt.mode, Band::narrow, k, i)) continue;
        const Eigen::MatrixXcd Q = scale * clipped[i];
        const Eigen::VectorXcd& h = ch->h[k];
        const double hqh = std::real(h.dot(Q * h));
        Eigen::VectorXcd w = Eigen::VectorXcd::Zero(M);
        if (hqh > 1e-14) w = (Q * h) / std::sqrt(hqh);
        cand.Q[k][i] = Q;
        cand.beams[k][i] = {w};
        try {
          cand.R[k][i] = extract_sensing_covariance(Q, cand.beams[k][i]);
        } catch (const std::exception&) {
          return std::nullopt;
        }
      }
    }
    return cand;
  }

  const TransmitDesign& design_of(const TransmitDesign& d) const { return d; }

  std::vector<double> tap_powers(const TransmitDesign&) const { return {}; }

  void stash(const TransmitDesign&, ScaRun&) const {}
};

}  // namespace

ScaResult run_sca(const NarrowbandChannels& channels, const LinkBudget& budget,
                  const ScaOptions& options) {
  budget.check();
  NarrowbandFamilyImpl fam{&channels, budget, options};
  return detail::run_sca_restarts(fam, options);
}

double design_kkt_residual(const TransmitDesign& design,
                           const NarrowbandChannels& channels,
                           const LinkBudget& budget, double weight,
                           DuplexMode mode, double mu) {
  ScaOptions opt;
  opt.weight = weight;
  opt.mode = mode;
  opt.mu = mu;
  NarrowbandFamilyImpl fam{&channels, budget, opt};
  const auto prob = fam.build(design);
  return solver::kkt_residual(prob.spec, fam.lift(prob, design));
}

}  // namespace isac
