// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <vector>

#include "isac/rng.hpp"

namespace isac {

/// ULA steering vector a(theta): entry m = exp(j 2 pi (d/lambda) m sin theta).
struct SteeringVector {
  Eigen::VectorXcd entries;
  double theta = 0.0;
  double spacing_ratio = 0.5;  // d / lambda
};

SteeringVector steering_vector(double theta, int num_antennas,
                               double spacing_ratio);

/// d a(theta) / d theta:
/// entry m = j 2 pi (d/lambda) m cos(theta) * exp(j 2 pi (d/lambda) m sin theta).
Eigen::VectorXcd steering_derivative(double theta, int num_antennas,
                                     double spacing_ratio);

/// Inputs for channel sampling. Rician factors are linear scale; +infinity
/// selects the pure line-of-sight limit.
struct ChannelParams {
  int num_antennas = 4;
  double spacing_ratio = 0.5;
  std::array<double, 2> theta = {0.0, 0.0};  // radians, transceivers A/B
  double rician_beta = 1.0;                  // narrowband LOS/NLOS power ratio
  std::array<double, 2> doppler_hz = {0.0, 0.0};

  // Wideband only.
  int taps = 1;                        // L, communication channel
  int si_taps = 1;                     // L~, self-interference channel
  double rician_beta0 = 1.0;           // first-tap factor
  Eigen::VectorXd pdp;                 // length L, sums to 1
  Eigen::VectorXd pdp_si;              // length L~, sums to 1
  int si_delay_samples = 0;            // tau_SI
};

/// Flat-fading realization for one coherent processing interval.
/// Index 0 = transceiver A, 1 = transceiver B. h[k] is the channel FROM k to
/// the other transceiver; g[k] is the self-interference channel at k.
struct NarrowbandChannels {
  int num_antennas = 0;
  double spacing_ratio = 0.5;
  std::array<Eigen::VectorXcd, 2> h;
  std::array<Eigen::VectorXcd, 2> g;
  std::array<double, 2> theta = {0.0, 0.0};
  std::array<std::complex<double>, 2> alpha = {1.0, 1.0};
  std::array<double, 2> doppler_hz = {0.0, 0.0};
};

/// Multi-tap realization; h_taps[k][l] and g_taps[k][l] are per-tap vectors.
struct WidebandChannels {
  int num_antennas = 0;
  int taps = 1;
  int si_taps = 1;
  double spacing_ratio = 0.5;
  std::array<std::vector<Eigen::VectorXcd>, 2> h_taps;
  std::array<std::vector<Eigen::VectorXcd>, 2> g_taps;
  Eigen::VectorXd pdp;
  Eigen::VectorXd pdp_si;
  std::array<double, 2> theta = {0.0, 0.0};
  std::array<std::complex<double>, 2> alpha = {1.0, 1.0};
  std::array<double, 2> doppler_hz = {0.0, 0.0};
  int si_delay_samples = 0;
};

/// h_k = sqrt(beta/(beta+1)) a(theta_k) + sqrt(1/(beta+1)) h_w,
/// h_w ~ CN(0, I); g_k ~ CN(0, I).
NarrowbandChannels sample_narrowband(const ChannelParams& params, Rng& rng);

/// Tap 0 Rician with factor beta0 and power pdp[0]; taps l >= 1 and all SI
/// taps Rayleigh with their profile powers. Requires taps <= num_antennas.
WidebandChannels sample_wideband(const ChannelParams& params, Rng& rng);

/// Exponential profile: sigma_l^2 proportional to decay^l, normalized to 1.
Eigen::VectorXd power_delay_profile(int taps, double decay);

/// beta = beta0 sigma0^2 / ((beta0 + 1) sum_{l>=1} sigma_l^2 + sigma0^2).
double modified_rician_factor(double beta0, const Eigen::VectorXd& pdp);

/// Inverse of modified_rician_factor in beta0 (bisection). Throws if the
/// target exceeds the beta0 -> infinity limit sigma0^2 / (1 - sigma0^2).
double invert_modified_rician_factor(double beta, const Eigen::VectorXd& pdp);

}  // namespace isac
