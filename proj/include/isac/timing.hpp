// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "isac/metrics.hpp"

namespace isac {

/// Frame arithmetic derived from bandwidth, coherence time and geometry.
/// Narrowband: the CPI holds round(Delta * W) samples split into two halves.
/// Wideband: the one-way delay is tau = round(D/c * W) samples, each PRI
/// lasts N0 = 2 tau, the CPI holds U = floor(Delta * W / N0) whole PRIs and
/// 2N = U * N0 samples.
struct TimingInfo {
  std::int64_t cpi_samples = 0;  // 2N
  std::int64_t tau = 0;          // one-way delay in samples (wideband)
  std::int64_t pri_samples = 0;  // N0 = 2 tau (wideband)
  std::int64_t pri_count = 0;    // U (wideband)
};

inline constexpr double kSpeedOfLight = 299792458.0;

TimingInfo derive_timing(Band band, double bandwidth_hz, double coherence_time_s,
                         double distance_m);

}  // namespace isac
