// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "isac/channel.hpp"

namespace isac {

enum class DuplexMode { full, half };
enum class Band { narrow, wide };

inline const char* to_string(DuplexMode m) {
  return m == DuplexMode::full ? "full" : "half";
}
inline const char* to_string(Band b) { return b == Band::narrow ? "narrow" : "wide"; }

/// Link-level constants, all linear scale. `half_cpi` is N, the number of
/// samples per half of the coherent processing interval.
struct LinkBudget {
  double rho_c = 1.0;    // communication SNR
  double rho_s = 1.0;    // sensing echo SNR
  double eta = 1.0;      // self-interference INR
  double rho_si = 0.0;   // receiver dynamic-range factor
  std::int64_t half_cpi = 1;  // N

  void check() const;
};

/// One optimized transmit configuration for both transceivers and intervals.
/// Index convention: k in {0 = A, 1 = B}, i in {0, 1} for the two intervals.
/// beams[k][i] holds one vector per channel tap (a single vector narrowband).
/// Q is the full transmit covariance, R = Q - sum_l w_l w_l^H the dedicated
/// sensing part.
struct TransmitDesign {
  DuplexMode mode = DuplexMode::full;
  Band band = Band::narrow;
  int num_antennas = 0;
  int taps = 1;
  std::array<std::array<std::vector<Eigen::VectorXcd>, 2>, 2> beams;
  std::array<std::array<Eigen::MatrixXcd, 2>, 2> Q;
  std::array<std::array<Eigen::MatrixXcd, 2>, 2> R;

  double comm_power(int k, int i) const;     // sum_l ||w_{k,i,l}||^2
  double sensing_power(int k, int i) const;  // tr(R_{k,i})
  double total_power(int k) const;           // sum_i tr(Q_{k,i})

  /// Throws if Hermitian/PSD/power/mode-pattern invariants are violated.
  void check(double tol = 1e-8) const;
};

/// Residual self-interference power Phi = eta * sum_l g_l^H Q g_l.
/// Throws if the value is below -1e-10 (numerical PSD violation).
double residual_si_power(const Eigen::MatrixXcd& Q,
                         std::span<const Eigen::VectorXcd> g_taps, double eta);

/// Narrowband SINR at receiver k in interval i:
///   gamma = rho_c |h_{k'}^H w_{k',i}|^2
///           / (rho_s a^H(theta_k) Q_{k,i} a(theta_k) + rho_si Phi_{k,i} + 1).
double sinr_narrowband(const TransmitDesign& design,
                       const NarrowbandChannels& channels,
                       const LinkBudget& budget, int k, int i);

/// Wideband SINR with delay-aligned path beams; the desired symbol received
/// in interval i was transmitted in interval i' (0 <-> 1). Requires the
/// design's ZF residuals to be below 1e-8, otherwise the closed form is not
/// valid and this throws.
double sinr_wideband(const TransmitDesign& design,
                     const WidebandChannels& channels, const LinkBudget& budget,
                     int k, int i);

/// Worst |h_{k,l}^H w_{k,i,l'}| over l != l' for transmitter k.
double zf_residual(const TransmitDesign& design, const WidebandChannels& channels,
                   int k);

/// R_k = 1/2 * sum_i log2(1 + gamma_i).
double achievable_rate(double gamma_1, double gamma_2);

/// Direction-estimation CRB at transceiver k:
///   C_k = (2 rho_s N)^-1 * ( sum_i |alpha|^2 adot^H Q_{k,i} adot
///                                   / (rho_si Phi_{k,i} + 1) )^-1.
/// Returns +infinity when the echo carries no information (never throws for
/// that case, so weight sweeps over degenerate designs can complete).
double crb(const TransmitDesign& design, const NarrowbandChannels& channels,
           const LinkBudget& budget, int k);
double crb(const TransmitDesign& design, const WidebandChannels& channels,
           const LinkBudget& budget, int k);

/// Sum rate and sum CRB of a design under the matching closed forms.
struct DesignMetrics {
  double rate_sum = 0.0;
  double crb_sum = 0.0;  // +inf allowed
  std::array<std::array<double, 2>, 2> sinr{};
};

DesignMetrics evaluate_design(const TransmitDesign& design,
                              const NarrowbandChannels& channels,
                              const LinkBudget& budget);
DesignMetrics evaluate_design(const TransmitDesign& design,
                              const WidebandChannels& channels,
                              const LinkBudget& budget);

}  // namespace isac
