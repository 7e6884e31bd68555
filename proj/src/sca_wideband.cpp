// SPDX-License-Identifier: Apache-2.0

#include "isac/sca_wideband.hpp"

#include <cmath>
#include <stdexcept>

#include "sca_detail.hpp"

namespace isac {

namespace {

constexpr double kDLower = 1e-12;

double quad(const Eigen::VectorXcd& v, const Eigen::MatrixXcd& Q) {
  return std::real(v.dot(Q * v));
}

// Aligned-sum floor: when the expansion beams carry no gain toward the own
// channel, shift the tap with the strongest in-subspace channel component.
std::vector<Eigen::VectorXcd> floor_beams(
    const std::vector<Eigen::VectorXcd>& w_e,
    const std::vector<Eigen::VectorXcd>& h_taps,
    const std::vector<Eigen::MatrixXcd>& bases) {
  const int L = static_cast<int>(h_taps.size());
  std::complex<double> aligned = 0.0;
  for (int l = 0; l < L; ++l) aligned += h_taps[l].dot(w_e[l]);
  if (std::abs(aligned) >= detail::kExpansionFloor) return w_e;
  int best = 0;
  double best_norm = -1.0;
  for (int l = 0; l < L; ++l) {
    const double n = (bases[l].adjoint() * h_taps[l]).squaredNorm();
    if (n > best_norm) {
      best_norm = n;
      best = l;
    }
  }
  if (best_norm <= 0.0) return w_e;
  auto out = w_e;
  const std::complex<double> phase =
      std::abs(aligned) > 0.0 ? aligned / std::abs(aligned)
                              : std::complex<double>(1.0);
  out[best] += (detail::kExpansionFloor / best_norm) * phase *
               (bases[best] * (bases[best].adjoint() * h_taps[best]));
  return out;
}

// Rate-optimal tap beam given its covariance share: w = Q^1/2 u with u the
// unit vector maximizing |h^H Q^1/2 u| subject to Q^1/2 u staying inside the
// ZF subspace. Built from eigen/QR factors only.
Eigen::VectorXcd zf_absorbed_beam(const Eigen::MatrixXcd& Q,
                                  const Eigen::MatrixXcd& basis,
                                  const Eigen::VectorXcd& h) {
  const int M = static_cast<int>(Q.rows());
  const int r = static_cast<int>(basis.cols());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Q);
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXcd sqrt_q =
      es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().adjoint();
  Eigen::VectorXcd u;
  if (r == M) {
    u = sqrt_q * h;
  } else {
    // Orthonormal complement of the ZF subspace from a full QR of the basis.
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(basis);
    const Eigen::MatrixXcd full_q = qr.householderQ();
    const Eigen::MatrixXcd perp = full_q.rightCols(M - r);
    const Eigen::MatrixXcd blocked = perp.adjoint() * sqrt_q;  // must hit ~zero
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(blocked, Eigen::ComputeFullV);
    const double scale = svd.singularValues().size() > 0
                             ? svd.singularValues()(0)
                             : 0.0;
    // Directions leaking less than ~1e-4 of the dominant blocked energy are
    // usable: the snap below removes the leak and the metric rescale keeps
    // the beam inside the cone.
    int rank = 0;
    for (int s = 0; s < svd.singularValues().size(); ++s) {
      if (svd.singularValues()(s) > std::max(1e-4 * scale, 1e-300)) ++rank;
    }
    const Eigen::MatrixXcd null_basis = svd.matrixV().rightCols(M - rank);
    u = null_basis * (null_basis.adjoint() * (sqrt_q * h));
  }
  const double norm = u.norm();
  if (norm < 1e-12) return Eigen::VectorXcd::Zero(M);
  Eigen::VectorXcd w = sqrt_q * (u / norm);
  // Snap the tiny residue back onto the ZF subspace so the cross products
  // vanish at basis precision.
  if (r < M) w = basis * (basis.adjoint() * w).eval();
  // Exact cone check in the Q metric: ||Q^{+1/2} w|| <= 1.
  const double ev_cut = 1e-14 * std::max(ev.maxCoeff(), 1e-300);
  double metric = 0.0;
  const Eigen::VectorXcd w_modes = es.eigenvectors().adjoint() * w;
  for (int m = 0; m < M; ++m) {
    if (ev(m) > ev_cut) metric += std::norm(w_modes(m)) / ev(m);
  }
  if (metric > 1.0) w /= std::sqrt(metric);
  const std::complex<double> gain = h.dot(w);
  if (std::abs(gain) > 0.0) w *= std::conj(gain) / std::abs(gain);
  return w;
}

struct WideSurrogates {
  // gamma surrogate for receiver slot (k, i): sum over transmitter taps of
  // Re(cvec_l^H w_{k',i',l}) plus tr(mat . Q_{k,i,l}) per tap plus constant.
  std::array<std::array<std::vector<Eigen::VectorXcd>, 2>, 2> gamma_vec;
  std::array<std::array<Eigen::MatrixXcd, 2>, 2> gamma_mat;  // per-tap weight
  std::array<std::array<double, 2>, 2> gamma_const;
  std::array<std::array<QolBound, 2>, 2> d_bound;
  std::array<std::array<double, 2>, 2> g_e;
};

WideSurrogates make_surrogates(const TransmitDesign& expansion,
                               const WidebandChannels& ch,
                               const LinkBudget& budget,
                               const std::array<std::vector<Eigen::MatrixXcd>, 2>& bases) {
  WideSurrogates s;
  const int M = ch.num_antennas;
  const int L = ch.taps;
  for (int k = 0; k < 2; ++k) {
    const int kp = 1 - k;
    const auto steer = steering_vector(ch.theta[k], M, ch.spacing_ratio).entries;
    const auto adot = steering_derivative(ch.theta[k], M, ch.spacing_ratio);
    const double alpha2 = std::norm(ch.alpha[k]);
    Eigen::MatrixXcd si_outer = Eigen::MatrixXcd::Zero(M, M);
    for (const auto& g : ch.g_taps[k]) si_outer += g * g.adjoint();
    for (int i = 0; i < 2; ++i) {
      const int ip = i == 0 ? 1 : 0;
      const auto w_f =
          floor_beams(expansion.beams[kp][ip], ch.h_taps[kp], bases[kp]);
      std::complex<double> aligned = 0.0;
      for (int l = 0; l < L; ++l) aligned += ch.h_taps[kp][l].dot(w_f[l]);
      const double phi_e =
          residual_si_power(expansion.Q[k][i], ch.g_taps[k], budget.eta);
      const double interference_e = budget.rho_s * quad(steer, expansion.Q[k][i]) +
                                    budget.rho_si * phi_e + 1.0;
      const double kappa =
          budget.rho_c * std::norm(aligned) / (interference_e * interference_e);
      s.gamma_vec[k][i].resize(L);
      for (int l = 0; l < L; ++l) {
        s.gamma_vec[k][i][l] =
            (2.0 * budget.rho_c / interference_e) * (ch.h_taps[kp][l] * aligned);
      }
      s.gamma_mat[k][i] = -kappa * (budget.rho_s * steer * steer.adjoint() +
                                    budget.rho_si * budget.eta * si_outer);
      s.gamma_const[k][i] = -kappa;

      const double fisher = alpha2 * quad(adot, expansion.Q[k][i]);
      s.g_e[k][i] =
          std::max(std::sqrt(std::max(fisher, 0.0)), detail::kExpansionFloor);
      s.d_bound[k][i] = linearize_quadratic_over_linear(
          s.g_e[k][i], budget.rho_si * phi_e + 1.0);
    }
  }
  return s;
}

}  // namespace

std::vector<Eigen::MatrixXcd> zf_nullspace_basis(
    const std::vector<Eigen::VectorXcd>& h_taps) {
  const int L = static_cast<int>(h_taps.size());
  if (L == 0) throw std::invalid_argument("zf_nullspace_basis: no taps");
  const int M = static_cast<int>(h_taps[0].size());
  if (L > M) throw std::invalid_argument("zf_nullspace_basis: more taps than antennas");
  std::vector<Eigen::MatrixXcd> bases(L);
  for (int l = 0; l < L; ++l) {
    if (L == 1) {
      bases[l] = Eigen::MatrixXcd::Identity(M, M);
      continue;
    }
    Eigen::MatrixXcd excluded(L - 1, M);  // rows h_{l'}^H for l' != l
    int row = 0;
    for (int lp = 0; lp < L; ++lp) {
      if (lp == l) continue;
      excluded.row(row++) = h_taps[lp].adjoint();
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(excluded, Eigen::ComputeFullV);
    const double thresh = 1e-12 * svd.singularValues()(0);
    int rank = 0;
    for (int r = 0; r < svd.singularValues().size(); ++r) {
      if (svd.singularValues()(r) > thresh) ++rank;
    }
    if (rank < L - 1) {
      throw std::runtime_error(
          "zf_nullspace_basis: channel taps excluding tap " + std::to_string(l) +
          " are rank deficient");
    }
    bases[l] = svd.matrixV().rightCols(M - (L - 1));
  }
  return bases;
}

WidebandProblem build_subproblem_wideband(const TransmitDesign& expansion,
                                          const WidebandScaState& state,
                                          const WidebandChannels& channels,
                                          const LinkBudget& budget,
                                          double weight, DuplexMode mode,
                                          double mu) {
  const int M = channels.num_antennas;
  const int L = channels.taps;
  WidebandProblem prob;
  prob.crb_coeff = weight < 1.0
                       ? (1.0 - weight) * mu /
                             (2.0 * budget.rho_s * static_cast<double>(budget.half_cpi))
                       : 0.0;
  auto& spec = prob.spec;
  for (auto& row : prob.r_var) row.fill(-1);
  for (auto& row : prob.g_var) row.fill(-1);
  for (auto& row : prob.d_var) row.fill(-1);

  std::array<std::vector<Eigen::MatrixXcd>, 2> bases = {
      zf_nullspace_basis(channels.h_taps[0]), zf_nullspace_basis(channels.h_taps[1])};
  const WideSurrogates sur = make_surrogates(expansion, channels, budget, bases);

  // Per-tap covariance and reduced-beam variables; full duplex shares them
  // across intervals, half duplex only has the first interval.
  for (int k = 0; k < 2; ++k) {
    const std::string kn = k == 0 ? "A" : "B";
    std::vector<int> q_ids(L), w_ids(L);
    for (int l = 0; l < L; ++l) {
      q_ids[l] = static_cast<int>(spec.matrices.size());
      spec.matrices.push_back({M, "Q_" + kn + "_tap" + std::to_string(l)});
      w_ids[l] = static_cast<int>(spec.vectors.size());
      spec.vectors.push_back({M, bases[k][l], "w_" + kn + "_tap" + std::to_string(l)});
    }
    for (int i = 0; i < 2; ++i) {
      if (detail::slot_active(mode, Band::wide, k, i)) {
        prob.q_var[k][i] = q_ids;
        prob.w_var[k][i] = w_ids;
      } else {
        prob.q_var[k][i].assign(L, -1);
        prob.w_var[k][i].assign(L, -1);
      }
    }
  }

  auto slot_live = [&](int k, int i) { return prob.q_var[k][i][0] >= 0; };

  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i < 2; ++i) {
      const int ip = i == 0 ? 1 : 0;
      const std::string tag = (k == 0 ? "A" : "B") + std::to_string(i + 1);
      if (weight > 0.0 && prob.w_var[1 - k][ip][0] >= 0) {
        prob.r_var[k][i] = static_cast<int>(spec.scalars.size());
        spec.scalars.push_back({0.0, "r_" + tag});
      }
      if (weight < 1.0 && slot_live(k, i)) {
        prob.g_var[k][i] = static_cast<int>(spec.scalars.size());
        spec.scalars.push_back({0.0, "g_" + tag});
        prob.d_var[k][i] = static_cast<int>(spec.scalars.size());
        spec.scalars.push_back({kDLower, "d_" + tag});
      }
    }
  }

  for (int k = 0; k < 2; ++k) {
    solver::AffineExpr power;
    power.constant = 2.0;
    for (int i = 0; i < 2; ++i) {
      if (!slot_live(k, i)) continue;
      for (int l = 0; l < L; ++l) {
        power.matrices.emplace_back(prob.q_var[k][i][l],
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
    Eigen::MatrixXcd si_outer = Eigen::MatrixXcd::Zero(M, M);
    for (const auto& g : channels.g_taps[k]) si_outer += g * g.adjoint();
    for (int i = 0; i < 2; ++i) {
      const int ip = i == 0 ? 1 : 0;
      if (prob.r_var[k][i] >= 0) {
        solver::AffineExpr gamma;
        gamma.constant = sur.gamma_const[k][i];
        for (int l = 0; l < L; ++l) {
          gamma.vectors.emplace_back(prob.w_var[kp][ip][l], sur.gamma_vec[k][i][l]);
        }
        if (slot_live(k, i)) {
          for (int l = 0; l < L; ++l) {
            gamma.matrices.emplace_back(prob.q_var[k][i][l], sur.gamma_mat[k][i]);
          }
        }
        gamma.scalars.emplace_back(prob.r_var[k][i], -1.0);
        spec.inequalities.push_back(std::move(gamma));
      }
      if (prob.d_var[k][i] >= 0) {
        const auto& bound = sur.d_bound[k][i];
        solver::AffineExpr dexpr;
        dexpr.constant = bound.slope_b;
        dexpr.scalars.emplace_back(prob.g_var[k][i], bound.slope_a);
        dexpr.scalars.emplace_back(prob.d_var[k][i], -1.0);
        for (int l = 0; l < L; ++l) {
          dexpr.matrices.emplace_back(
              prob.q_var[k][i][l],
              bound.slope_b * budget.rho_si * budget.eta * si_outer);
        }
        spec.inequalities.push_back(std::move(dexpr));

        solver::QuadCone cone;
        for (int l = 0; l < L; ++l) {
          cone.value.matrices.emplace_back(prob.q_var[k][i][l],
                                           alpha2 * (adot * adot.adjoint()));
        }
        cone.scalar = prob.g_var[k][i];
        cone.name = "fisher_" + std::string(k == 0 ? "A" : "B") + std::to_string(i + 1);
        spec.cones.push_back(std::move(cone));
      }
      if (slot_live(k, i)) {
        for (int l = 0; l < L; ++l) {
          spec.schur_blocks.push_back(
              {prob.q_var[k][i][l], prob.w_var[k][i][l],
               "schur_" + std::string(k == 0 ? "A" : "B") + std::to_string(i + 1) +
                   "_tap" + std::to_string(l)});
        }
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

  solver::Point hint = solver::zero_point(spec);
  const int n_act = mode == DuplexMode::full ? 2 : 1;
  const Eigen::MatrixXcd safe =
      (0.9 / (n_act * L * M)) * Eigen::MatrixXcd::Identity(M, M);
  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i < 2; ++i) {
      if (prob.q_var[k][i][0] < 0) continue;
      const auto floored =
          floor_beams(expansion.beams[k][i], channels.h_taps[k], bases[k]);
      for (int l = 0; l < L; ++l) {
        hint.matrices[prob.q_var[k][i][l]] =
            0.95 * state.q_taps[k][i][l] + 0.05 * safe;
        hint.vectors[prob.w_var[k][i][l]] =
            0.95 * (bases[k][l].adjoint() * floored[l]);
      }
    }
  }
  spec.interior_hint = std::move(hint);
  return prob;
}

namespace {

struct WideIterate {
  TransmitDesign design;
  WidebandScaState state;
};

struct WidebandFamilyImpl {
  using Iterate = WideIterate;
  using Metrics = DesignMetrics;
  using Problem = WidebandProblem;

  const WidebandChannels* ch;
  LinkBudget budget;
  ScaOptions opt;
  std::array<std::vector<Eigen::MatrixXcd>, 2> bases;
  mutable std::vector<WidebandScaState> finals;  // one per completed restart

  WideIterate initial(int restart, Rng& rng) const {
    const int M = ch->num_antennas;
    const int L = ch->taps;
    WideIterate it;
    auto& d = it.design;
    if (restart == 0 && opt.initial_design) {
      if (opt.initial_design->band != Band::wide || opt.initial_design->mode != opt.mode) {
        throw std::invalid_argument("run_sca_wideband: initial design band/mode mismatch");
      }
      d = *opt.initial_design;
      // Per-tap split: beams own their rank-one parts, the sensing remainder
      // is spread evenly across taps.
      for (int k = 0; k < 2; ++k) {
        for (int i = 0; i < 2; ++i) {
          it.state.q_taps[k][i].assign(L, Eigen::MatrixXcd::Zero(M, M));
          Eigen::MatrixXcd rest = d.Q[k][i];
          for (int l = 0; l < L; ++l) {
            rest -= d.beams[k][i][l] * d.beams[k][i][l].adjoint();
          }
          for (int l = 0; l < L; ++l) {
            it.state.q_taps[k][i][l] =
                d.beams[k][i][l] * d.beams[k][i][l].adjoint() + rest / L;
          }
        }
      }
      return it;
    }
    d.mode = opt.mode;
    d.band = Band::wide;
    d.num_antennas = M;
    d.taps = L;
    for (int k = 0; k < 2; ++k) {
      const int n_act = opt.mode == DuplexMode::full ? 2 : 1;
      const double p_int = 0.98 * 2.0 / n_act;
      std::vector<Eigen::VectorXcd> beams(L);
      for (int l = 0; l < L; ++l) {
        const int rdim = static_cast<int>(bases[k][l].cols());
        Eigen::VectorXcd dir(rdim);
        for (int j = 0; j < rdim; ++j) dir(j) = rng.next_cgaussian();
        dir /= dir.norm();
        beams[l] = bases[k][l] * (std::sqrt(0.1 * p_int / L) * dir);
      }
      const Eigen::MatrixXcd base =
          (0.88 * p_int / (L * M)) * Eigen::MatrixXcd::Identity(M, M);
      for (int i = 0; i < 2; ++i) {
        if (detail::slot_active(opt.mode, Band::wide, k, i)) {
          d.beams[k][i] = beams;
          it.state.q_taps[k][i].resize(L);
          Eigen::MatrixXcd q_sum = Eigen::MatrixXcd::Zero(M, M);
          for (int l = 0; l < L; ++l) {
            it.state.q_taps[k][i][l] = beams[l] * beams[l].adjoint() + base;
            q_sum += it.state.q_taps[k][i][l];
          }
          d.Q[k][i] = q_sum;
          d.R[k][i] = extract_sensing_covariance(q_sum, beams);
        } else {
          d.beams[k][i].assign(L, Eigen::VectorXcd::Zero(M));
          it.state.q_taps[k][i].assign(L, Eigen::MatrixXcd::Zero(M, M));
          d.Q[k][i] = Eigen::MatrixXcd::Zero(M, M);
          d.R[k][i] = Eigen::MatrixXcd::Zero(M, M);
        }
      }
    }
    return it;
  }

  Problem build(const WideIterate& at) const {
    return build_subproblem_wideband(at.design, at.state, *ch, budget, opt.weight,
                                     opt.mode, opt.mu);
  }

  solver::Point start(const Problem& prob, const WideIterate&, Rng& rng) const {
    return solver::strictly_feasible_start(prob.spec, rng);
  }

  // Shared finishing pass: per-tap beam absorption, aggregate sensing
  // remainder, canonical per-tap split. Silenced slots must hold zero taps.
  // Solver extractions run strict (covariance deficits are contract
  // violations); extrapolated candidates run lenient, where polish noise is
  // clipped away and the power budget re-imposed by scaling.
  WideIterate finalize(
      const std::array<std::array<std::vector<Eigen::MatrixXcd>, 2>, 2>& raw_taps,
      bool strict = true) const {
    const int M = ch->num_antennas;
    const int L = ch->taps;
    WideIterate it;
    auto& d = it.design;
    d.mode = opt.mode;
    d.band = Band::wide;
    d.num_antennas = M;
    d.taps = L;
    for (int k = 0; k < 2; ++k) {
      for (int i = 0; i < 2; ++i) {
        if (!detail::slot_active(opt.mode, Band::wide, k, i)) {
          d.beams[k][i].assign(L, Eigen::VectorXcd::Zero(M));
          it.state.q_taps[k][i].assign(L, Eigen::MatrixXcd::Zero(M, M));
          d.Q[k][i] = Eigen::MatrixXcd::Zero(M, M);
          d.R[k][i] = Eigen::MatrixXcd::Zero(M, M);
          continue;
        }
        it.state.q_taps[k][i].resize(L);
        d.beams[k][i].resize(L);
        Eigen::MatrixXcd q_sum = Eigen::MatrixXcd::Zero(M, M);
        for (int l = 0; l < L; ++l) {
          const Eigen::MatrixXcd& Ql = raw_taps[k][i][l];
          q_sum += Ql;
          // In-subspace beam absorption: maximize |h_l^H w| over w = Q_l^1/2 u
          // with ||u|| <= 1 and w inside the ZF subspace. The projection form
          // never inverts Q_l, so near-singular taps stay numerically inside
          // the cone.
          d.beams[k][i][l] = zf_absorbed_beam(Ql, bases[k][l], ch->h_taps[k][l]);
        }
        if (strict) {
          d.R[k][i] = extract_sensing_covariance(q_sum, d.beams[k][i]);
        } else {
          Eigen::MatrixXcd rest = q_sum;
          for (const auto& beam : d.beams[k][i]) rest -= beam * beam.adjoint();
          rest = 0.5 * (rest + rest.adjoint().eval());
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rest);
          if (es.eigenvalues().minCoeff() <
              -1e-4 * std::max(1.0, q_sum.real().trace())) {
            throw std::runtime_error("finalize: candidate far outside the cone");
          }
          d.R[k][i] = es.eigenvectors() *
                      es.eigenvalues().cwiseMax(0.0).asDiagonal() *
                      es.eigenvectors().adjoint();
        }
        // Canonical per-tap split: rank-one beam parts plus an even share of
        // the sensing remainder. The metrics only see the aggregate, so this
        // removes a degenerate drift direction between iterations; the
        // aggregate is re-defined as the exact tap sum.
        d.Q[k][i] = Eigen::MatrixXcd::Zero(M, M);
        for (int l = 0; l < L; ++l) {
          it.state.q_taps[k][i][l] =
              d.beams[k][i][l] * d.beams[k][i][l].adjoint() + d.R[k][i] / L;
          d.Q[k][i] += it.state.q_taps[k][i][l];
        }
      }
    }
    if (!strict) {
      // Clipping can nudge the trace up; scale back inside the budget.
      for (int k = 0; k < 2; ++k) {
        double power = 0.0;
        for (int i = 0; i < 2; ++i) power += d.Q[k][i].real().trace();
        if (power <= 2.0) continue;
        const double scale = 2.0 / power;
        for (int i = 0; i < 2; ++i) {
          d.Q[k][i] *= scale;
          d.R[k][i] *= scale;
          for (auto& beam : d.beams[k][i]) beam *= std::sqrt(scale);
          for (auto& tap : it.state.q_taps[k][i]) tap *= scale;
        }
      }
    }
    return it;
  }

  WideIterate extract(const Problem& prob, const solver::Point& sol) const {
    const int M = ch->num_antennas;
    const int L = ch->taps;
    std::array<std::array<std::vector<Eigen::MatrixXcd>, 2>, 2> raw;
    for (int k = 0; k < 2; ++k) {
      for (int i = 0; i < 2; ++i) {
        raw[k][i].assign(L, Eigen::MatrixXcd::Zero(M, M));
        if (prob.q_var[k][i][0] < 0) continue;
        for (int l = 0; l < L; ++l) {
          raw[k][i][l] = sol.matrices[prob.q_var[k][i][l]];
        }
      }
    }
    return finalize(raw);
  }

  std::optional<WideIterate> extrapolate(const WideIterate& prev,
                                         const WideIterate& next,
                                         double factor) const {
    const int M = ch->num_antennas;
    const int L = ch->taps;
    // Extrapolate the canonical per-tap blocks, clip each back onto the PSD
    // cone, and let finalize() re-absorb beams and re-split; only the power
    // budget can still reject a candidate.
    std::array<std::array<std::vector<Eigen::MatrixXcd>, 2>, 2> raw;
    for (int k = 0; k < 2; ++k) {
      double power = 0.0;
      for (int i = 0; i < 2; ++i) {
        raw[k][i].assign(L, Eigen::MatrixXcd::Zero(M, M));
        if (!detail::slot_active(opt.mode, Band::wide, k, i)) continue;
        for (int l = 0; l < L; ++l) {
          Eigen::MatrixXcd tap =
              next.state.q_taps[k][i][l] +
              factor * (next.state.q_taps[k][i][l] - prev.state.q_taps[k][i][l]);
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(tap);
          raw[k][i][l] = es.eigenvectors() *
                         es.eigenvalues().cwiseMax(0.0).asDiagonal() *
                         es.eigenvectors().adjoint();
          power += raw[k][i][l].real().trace();
        }
      }
      // Extrapolating along a drift that rides the power boundary overshoots
      // the budget by a sliver; scale back instead of rejecting.
      if (power > 2.0) {
        const double scale = 2.0 / power;
        for (int i = 0; i < 2; ++i) {
          for (auto& tap : raw[k][i]) tap *= scale;
        }
      }
    }
    try {
      return finalize(raw, /*strict=*/false);
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }

  solver::Point lift(const Problem& prob, const WideIterate& at) const {
    const int M = ch->num_antennas;
    const int L = ch->taps;
    solver::Point p = solver::zero_point(prob.spec);
    const WideSurrogates sur = make_surrogates(at.design, *ch, budget, bases);
    for (int k = 0; k < 2; ++k) {
      const int kp = 1 - k;
      const auto adot = steering_derivative(ch->theta[k], M, ch->spacing_ratio);
      for (int i = 0; i < 2; ++i) {
        const int ip = i == 0 ? 1 : 0;
        if (prob.q_var[k][i][0] >= 0) {
          for (int l = 0; l < L; ++l) {
            p.matrices[prob.q_var[k][i][l]] = at.state.q_taps[k][i][l];
            p.vectors[prob.w_var[k][i][l]] =
                bases[k][l].adjoint() * at.design.beams[k][i][l];
          }
        }
        if (prob.r_var[k][i] >= 0) {
          double gs = sur.gamma_const[k][i];
          for (int l = 0; l < L; ++l) {
            gs += std::real(sur.gamma_vec[k][i][l].dot(at.design.beams[kp][ip][l]));
          }
          gs += std::real((sur.gamma_mat[k][i] * at.design.Q[k][i]).trace());
          p.scalars[prob.r_var[k][i]] = std::max(0.0, gs);
        }
        if (prob.g_var[k][i] >= 0) {
          const double fisher =
              std::norm(ch->alpha[k]) * quad(adot, at.design.Q[k][i]);
          const double g = std::sqrt(std::max(fisher, 0.0));
          const double phi =
              residual_si_power(at.design.Q[k][i], ch->g_taps[k], budget.eta);
          p.scalars[prob.g_var[k][i]] = g;
          p.scalars[prob.d_var[k][i]] = std::max(
              kDLower, sur.d_bound[k][i].eval(g, budget.rho_si * phi + 1.0));
        }
      }
    }
    return p;
  }

  DesignMetrics metrics(const WideIterate& it) const {
    return evaluate_design(it.design, *ch, budget);
  }

  const TransmitDesign& design_of(const WideIterate& it) const { return it.design; }

  std::vector<double> tap_powers(const WideIterate& it) const {
    std::vector<double> powers(ch->taps, 0.0);
    for (int k = 0; k < 2; ++k) {
      for (int i = 0; i < 2; ++i) {
        for (int l = 0; l < ch->taps; ++l) {
          powers[l] += it.design.beams[k][i][l].squaredNorm();
        }
      }
    }
    return powers;
  }

  void stash(const WideIterate& it, ScaRun&) const { finals.push_back(it.state); }
};

}  // namespace

WidebandScaResult run_sca_wideband(const WidebandChannels& channels,
                                   const LinkBudget& budget,
                                   const ScaOptions& options) {
  budget.check();
  WidebandFamilyImpl fam{&channels,
                         budget,
                         options,
                         {zf_nullspace_basis(channels.h_taps[0]),
                          zf_nullspace_basis(channels.h_taps[1])},
                         {}};
  WidebandScaResult out;
  out.result = detail::run_sca_restarts(fam, options);
  int best = 0;
  for (std::size_t r = 1; r < out.result.runs.size(); ++r) {
    if (out.result.runs[r].objective > out.result.runs[best].objective) {
      best = static_cast<int>(r);
    }
  }
  out.best_state = fam.finals.at(best);
  return out;
}

double design_kkt_residual(const TransmitDesign& design,
                           const WidebandScaState& state,
                           const WidebandChannels& channels,
                           const LinkBudget& budget, double weight,
                           DuplexMode mode, double mu) {
  ScaOptions opt;
  opt.weight = weight;
  opt.mode = mode;
  opt.mu = mu;
  WidebandFamilyImpl fam{&channels,
                         budget,
                         opt,
                         {zf_nullspace_basis(channels.h_taps[0]),
                          zf_nullspace_basis(channels.h_taps[1])},
                         {}};
  const WideIterate it{design, state};
  const auto prob = fam.build(it);
  return solver::kkt_residual(prob.spec, fam.lift(prob, it));
}

}  // namespace isac
