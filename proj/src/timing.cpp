// SPDX-License-Identifier: Apache-2.0

#include "isac/timing.hpp"

#include <cmath>
#include <stdexcept>

namespace isac {

TimingInfo derive_timing(Band band, double bandwidth_hz, double coherence_time_s,
                         double distance_m) {
  if (!(bandwidth_hz > 0.0) || !(coherence_time_s > 0.0) || !(distance_m > 0.0)) {
    throw std::invalid_argument("derive_timing: bandwidth, coherence time and distance must be positive");
  }
  TimingInfo t;
  if (band == Band::narrow) {
    t.cpi_samples = std::llround(coherence_time_s * bandwidth_hz);
    if (t.cpi_samples < 2) throw std::invalid_argument("derive_timing: CPI shorter than two samples");
    return t;
  }
  t.tau = std::llround(distance_m / kSpeedOfLight * bandwidth_hz);
  if (t.tau < 1) throw std::invalid_argument("derive_timing: delay below one sample");
  t.pri_samples = 2 * t.tau;
  t.pri_count = static_cast<std::int64_t>(
      std::floor(coherence_time_s * bandwidth_hz / static_cast<double>(t.pri_samples)));
  if (t.pri_count < 1) throw std::invalid_argument("derive_timing: CPI shorter than one PRI");
  t.cpi_samples = t.pri_count * t.pri_samples;
  return t;
}

}  // namespace isac
