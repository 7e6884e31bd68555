// SPDX-License-Identifier: Apache-2.0

#include "isac/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace isac {

namespace {
constexpr double kZfTol = 1e-8;

double quadratic_form(const Eigen::VectorXcd& v, const Eigen::MatrixXcd& Q) {
  return std::real(v.dot(Q * v));  // v^H Q v
}

// Interval pairing for wideband reception: the symbol decoded in the first
// half interval was sent in the second half of the previous PRI and vice versa.
constexpr int kPairedInterval[2] = {1, 0};
}  // namespace

void LinkBudget::check() const {
  if (!(rho_c > 0.0) || !(rho_s > 0.0) || !(eta > 0.0) || !(rho_si >= 0.0)) {
    throw std::invalid_argument("LinkBudget: SNR/INR factors must be positive");
  }
  if (half_cpi < 1) throw std::invalid_argument("LinkBudget: need at least one sample per half CPI");
}

double TransmitDesign::comm_power(int k, int i) const {
  double p = 0.0;
  for (const auto& w : beams[k][i]) p += w.squaredNorm();
  return p;
}

double TransmitDesign::sensing_power(int k, int i) const {
  return R[k][i].size() > 0 ? R[k][i].real().trace() : 0.0;
}

double TransmitDesign::total_power(int k) const {
  double p = 0.0;
  for (int i = 0; i < 2; ++i) {
    if (Q[k][i].size() > 0) p += Q[k][i].real().trace();
  }
  return p;
}

void TransmitDesign::check(double tol) const {
  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i < 2; ++i) {
      const auto& q = Q[k][i];
      if (q.rows() != num_antennas || q.cols() != num_antennas) {
        throw std::runtime_error("TransmitDesign: covariance dimension mismatch");
      }
      if ((q - q.adjoint()).cwiseAbs().maxCoeff() > 1e-10) {
        throw std::runtime_error("TransmitDesign: covariance not Hermitian");
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(q, Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -tol) {
        throw std::runtime_error("TransmitDesign: covariance not PSD");
      }
      Eigen::MatrixXcd rr = q;
      for (const auto& w : beams[k][i]) rr -= w * w.adjoint();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> er(rr, Eigen::EigenvaluesOnly);
      if (er.eigenvalues().minCoeff() < -tol) {
        throw std::runtime_error("TransmitDesign: sensing covariance not PSD");
      }
    }
    if (total_power(k) > 2.0 + tol) throw std::runtime_error("TransmitDesign: power budget exceeded");
  }
  if (mode == DuplexMode::full) {
    for (int k = 0; k < 2; ++k) {
      if ((Q[k][0] - Q[k][1]).cwiseAbs().maxCoeff() != 0.0) {
        throw std::runtime_error("TransmitDesign: full-duplex intervals must match exactly");
      }
    }
  } else if (band == Band::narrow) {
    if (Q[0][1].cwiseAbs().maxCoeff() != 0.0 || Q[1][0].cwiseAbs().maxCoeff() != 0.0) {
      throw std::runtime_error("TransmitDesign: half-duplex narrowband zero pattern violated");
    }
  } else {
    if (Q[0][1].cwiseAbs().maxCoeff() != 0.0 || Q[1][1].cwiseAbs().maxCoeff() != 0.0) {
      throw std::runtime_error("TransmitDesign: half-duplex wideband zero pattern violated");
    }
  }
}

double residual_si_power(const Eigen::MatrixXcd& Q,
                         std::span<const Eigen::VectorXcd> g_taps, double eta) {
  double phi = 0.0;
  for (const auto& g : g_taps) phi += quadratic_form(g, Q);
  phi *= eta;
  if (phi < -1e-10) throw std::runtime_error("residual_si_power: negative power, covariance not PSD");
  return std::max(phi, 0.0);
}

namespace {
// Shared SINR denominator: rho_s a^H Q a + rho_si Phi + 1.
double interference_floor(const Eigen::MatrixXcd& Q,
                          std::span<const Eigen::VectorXcd> g_taps,
                          const Eigen::VectorXcd& steer, const LinkBudget& budget) {
  const double echo = budget.rho_s * quadratic_form(steer, Q);
  const double phi = residual_si_power(Q, g_taps, budget.eta);
  return echo + budget.rho_si * phi + 1.0;
}
}  // namespace

double sinr_narrowband(const TransmitDesign& design,
                       const NarrowbandChannels& channels,
                       const LinkBudget& budget, int k, int i) {
  const int kp = 1 - k;
  const std::complex<double> gain = channels.h[kp].dot(design.beams[kp][i][0]);
  const double num = budget.rho_c * std::norm(gain);
  const auto steer = steering_vector(channels.theta[k], channels.num_antennas,
                                     channels.spacing_ratio);
  std::span<const Eigen::VectorXcd> si(&channels.g[k], 1);
  return num / interference_floor(design.Q[k][i], si, steer.entries, budget);
}

double zf_residual(const TransmitDesign& design, const WidebandChannels& channels,
                   int k) {
  double worst = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int l = 0; l < channels.taps; ++l) {
      for (int lp = 0; lp < channels.taps; ++lp) {
        if (l == lp) continue;
        worst = std::max(worst,
                         std::abs(channels.h_taps[k][l].dot(design.beams[k][i][lp])));
      }
    }
  }
  return worst;
}

double sinr_wideband(const TransmitDesign& design,
                     const WidebandChannels& channels, const LinkBudget& budget,
                     int k, int i) {
  const int kp = 1 - k;
  if (std::max(zf_residual(design, channels, 0), zf_residual(design, channels, 1)) >
      kZfTol) {
    throw std::runtime_error("sinr_wideband: ZF residual too large, closed form invalid");
  }
  const int ip = kPairedInterval[i];
  std::complex<double> gain = 0.0;
  for (int l = 0; l < channels.taps; ++l) {
    gain += channels.h_taps[kp][l].dot(design.beams[kp][ip][l]);
  }
  const double num = budget.rho_c * std::norm(gain);
  const auto steer = steering_vector(channels.theta[k], channels.num_antennas,
                                     channels.spacing_ratio);
  return num / interference_floor(design.Q[k][i], channels.g_taps[k],
                                  steer.entries, budget);
}

double achievable_rate(double gamma_1, double gamma_2) {
  if (gamma_1 < 0.0 || gamma_2 < 0.0) throw std::invalid_argument("achievable_rate: SINR must be nonnegative");
  return 0.5 * (std::log2(1.0 + gamma_1) + std::log2(1.0 + gamma_2));
}

namespace {
double crb_core(const std::array<const Eigen::MatrixXcd*, 2>& Q,
                const std::array<double, 2>& phi, const Eigen::VectorXcd& adot,
                double alpha_sq, const LinkBudget& budget) {
  double fisher_sum = 0.0;
  for (int i = 0; i < 2; ++i) {
    fisher_sum +=
        alpha_sq * quadratic_form(adot, *Q[i]) / (budget.rho_si * phi[i] + 1.0);
  }
  if (fisher_sum <= 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / (2.0 * budget.rho_s * static_cast<double>(budget.half_cpi) * fisher_sum);
}
}  // namespace

double crb(const TransmitDesign& design, const NarrowbandChannels& channels,
           const LinkBudget& budget, int k) {
  const auto adot = steering_derivative(channels.theta[k], channels.num_antennas,
                                        channels.spacing_ratio);
  std::span<const Eigen::VectorXcd> si(&channels.g[k], 1);
  std::array<double, 2> phi = {residual_si_power(design.Q[k][0], si, budget.eta),
                               residual_si_power(design.Q[k][1], si, budget.eta)};
  return crb_core({&design.Q[k][0], &design.Q[k][1]}, phi, adot,
                  std::norm(channels.alpha[k]), budget);
}

double crb(const TransmitDesign& design, const WidebandChannels& channels,
           const LinkBudget& budget, int k) {
  const auto adot = steering_derivative(channels.theta[k], channels.num_antennas,
                                        channels.spacing_ratio);
  std::array<double, 2> phi = {
      residual_si_power(design.Q[k][0], channels.g_taps[k], budget.eta),
      residual_si_power(design.Q[k][1], channels.g_taps[k], budget.eta)};
  return crb_core({&design.Q[k][0], &design.Q[k][1]}, phi, adot,
                  std::norm(channels.alpha[k]), budget);
}

template <typename Channels>
static DesignMetrics evaluate_impl(const TransmitDesign& design,
                                   const Channels& channels,
                                   const LinkBudget& budget) {
  DesignMetrics m;
  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i < 2; ++i) {
      if constexpr (std::is_same_v<Channels, NarrowbandChannels>) {
        m.sinr[k][i] = sinr_narrowband(design, channels, budget, k, i);
      } else {
        m.sinr[k][i] = sinr_wideband(design, channels, budget, k, i);
      }
    }
    m.rate_sum += achievable_rate(m.sinr[k][0], m.sinr[k][1]);
    m.crb_sum += crb(design, channels, budget, k);
  }
  return m;
}

DesignMetrics evaluate_design(const TransmitDesign& design,
                              const NarrowbandChannels& channels,
                              const LinkBudget& budget) {
  return evaluate_impl(design, channels, budget);
}

DesignMetrics evaluate_design(const TransmitDesign& design,
                              const WidebandChannels& channels,
                              const LinkBudget& budget) {
  return evaluate_impl(design, channels, budget);
}

}  // namespace isac
