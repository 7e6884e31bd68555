// SPDX-License-Identifier: Apache-2.0

#include "isac/channel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace isac {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

Eigen::VectorXcd cgaussian_vector(int n, Rng& rng) {
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.next_cgaussian();
  return v;
}

// LOS/NLOS mixture with per-entry NLOS variance `power`. beta = +inf selects
// the deterministic LOS component alone.
Eigen::VectorXcd rician_vector(double beta, double power,
                               const Eigen::VectorXcd& los, Rng& rng) {
  const double amp = std::sqrt(power);
  if (std::isinf(beta)) return amp * los;
  const double los_w = std::sqrt(beta / (beta + 1.0));
  const double nlos_w = std::sqrt(1.0 / (beta + 1.0));
  return amp * (los_w * los + nlos_w * cgaussian_vector(los.size(), rng));
}
}  // namespace

SteeringVector steering_vector(double theta, int num_antennas,
                               double spacing_ratio) {
  if (num_antennas < 1) throw std::invalid_argument("steering_vector: need at least one antenna");
  if (spacing_ratio <= 0.0) throw std::invalid_argument("steering_vector: spacing ratio must be positive");
  SteeringVector sv;
  sv.theta = theta;
  sv.spacing_ratio = spacing_ratio;
  sv.entries.resize(num_antennas);
  const double step = kTwoPi * spacing_ratio * std::sin(theta);
  for (int m = 0; m < num_antennas; ++m) {
    sv.entries(m) = std::polar(1.0, step * m);
  }
  return sv;
}

Eigen::VectorXcd steering_derivative(double theta, int num_antennas,
                                     double spacing_ratio) {
  if (num_antennas < 1) throw std::invalid_argument("steering_derivative: need at least one antenna");
  if (spacing_ratio <= 0.0) throw std::invalid_argument("steering_derivative: spacing ratio must be positive");
  Eigen::VectorXcd d(num_antennas);
  const double step = kTwoPi * spacing_ratio * std::sin(theta);
  const double rate = kTwoPi * spacing_ratio * std::cos(theta);
  const std::complex<double> j(0.0, 1.0);
  for (int m = 0; m < num_antennas; ++m) {
    d(m) = j * (rate * m) * std::polar(1.0, step * m);
  }
  return d;
}

NarrowbandChannels sample_narrowband(const ChannelParams& params, Rng& rng) {
  if (params.rician_beta < 0.0) throw std::invalid_argument("sample_narrowband: Rician factor must be nonnegative");
  NarrowbandChannels ch;
  ch.num_antennas = params.num_antennas;
  ch.spacing_ratio = params.spacing_ratio;
  ch.theta = params.theta;
  ch.doppler_hz = params.doppler_hz;
  for (int k = 0; k < 2; ++k) {
    const auto los =
        steering_vector(params.theta[k], params.num_antennas, params.spacing_ratio);
    ch.h[k] = rician_vector(params.rician_beta, 1.0, los.entries, rng);
    ch.g[k] = cgaussian_vector(params.num_antennas, rng);
    ch.alpha[k] = 1.0;  // deterministic unit-power reflection
  }
  return ch;
}

WidebandChannels sample_wideband(const ChannelParams& params, Rng& rng) {
  if (params.taps > params.num_antennas) {
    throw std::invalid_argument("sample_wideband: taps must not exceed antennas (ZF infeasible)");
  }
  if (params.taps < 1 || params.si_taps < 1) throw std::invalid_argument("sample_wideband: need at least one tap");
  if (params.pdp.size() != params.taps || params.pdp_si.size() != params.si_taps) {
    throw std::invalid_argument("sample_wideband: profile length mismatch");
  }
  if (std::abs(params.pdp.sum() - 1.0) > 1e-12 ||
      std::abs(params.pdp_si.sum() - 1.0) > 1e-12) {
    throw std::invalid_argument("sample_wideband: power delay profile must sum to 1");
  }

  WidebandChannels ch;
  ch.num_antennas = params.num_antennas;
  ch.taps = params.taps;
  ch.si_taps = params.si_taps;
  ch.spacing_ratio = params.spacing_ratio;
  ch.pdp = params.pdp;
  ch.pdp_si = params.pdp_si;
  ch.theta = params.theta;
  ch.doppler_hz = params.doppler_hz;
  ch.si_delay_samples = params.si_delay_samples;
  for (int k = 0; k < 2; ++k) {
    const auto los =
        steering_vector(params.theta[k], params.num_antennas, params.spacing_ratio);
    ch.h_taps[k].resize(params.taps);
    ch.h_taps[k][0] = rician_vector(params.rician_beta0, params.pdp(0), los.entries, rng);
    for (int l = 1; l < params.taps; ++l) {
      ch.h_taps[k][l] = std::sqrt(params.pdp(l)) * cgaussian_vector(params.num_antennas, rng);
    }
    ch.g_taps[k].resize(params.si_taps);
    for (int l = 0; l < params.si_taps; ++l) {
      ch.g_taps[k][l] =
          std::sqrt(params.pdp_si(l)) * cgaussian_vector(params.num_antennas, rng);
    }
    ch.alpha[k] = 1.0;
  }
  return ch;
}

Eigen::VectorXd power_delay_profile(int taps, double decay) {
  if (taps < 1) throw std::invalid_argument("power_delay_profile: need at least one tap");
  if (decay <= 0.0) throw std::invalid_argument("power_delay_profile: decay must be positive");
  Eigen::VectorXd p(taps);
  double w = 1.0;
  for (int l = 0; l < taps; ++l) {
    p(l) = w;
    w *= decay;
  }
  return p / p.sum();
}

double modified_rician_factor(double beta0, const Eigen::VectorXd& pdp) {
  if (beta0 < 0.0) throw std::invalid_argument("modified_rician_factor: beta0 must be nonnegative");
  const double sigma0 = pdp(0);
  const double rest = pdp.sum() - sigma0;
  if (std::isinf(beta0)) {
    return rest > 0.0 ? sigma0 / rest : std::numeric_limits<double>::infinity();
  }
  return beta0 * sigma0 / ((beta0 + 1.0) * rest + sigma0);
}

double invert_modified_rician_factor(double beta, const Eigen::VectorXd& pdp) {
  if (beta < 0.0) throw std::invalid_argument("invert_modified_rician_factor: beta must be nonnegative");
  if (beta == 0.0) return 0.0;
  const double limit = modified_rician_factor(std::numeric_limits<double>::infinity(), pdp);
  if (beta >= limit) {
    throw std::invalid_argument("invert_modified_rician_factor: target exceeds profile limit");
  }
  double lo = 0.0, hi = 1.0;
  while (modified_rician_factor(hi, pdp) < beta) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (modified_rician_factor(mid, pdp) < beta ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace isac
