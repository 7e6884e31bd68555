// SPDX-License-Identifier: Apache-2.0

#include "isac/rng.hpp"

#include <cmath>

namespace isac {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace

double Rng::next_gaussian() {
  if (has_cache_) {
    has_cache_ = false;
    return cache_;
  }
  const double u1 = next_double_open();
  const double u2 = next_double();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  cache_ = radius * std::sin(kTwoPi * u2);
  has_cache_ = true;
  return radius * std::cos(kTwoPi * u2);
}

std::complex<double> Rng::next_cgaussian() {
  // Polar form: sqrt(-log u) * exp(j 2 pi v) has E|z|^2 = 1 exactly.
  const double u = next_double_open();
  const double v = next_double();
  const double radius = std::sqrt(-std::log(u));
  return {radius * std::cos(kTwoPi * v), radius * std::sin(kTwoPi * v)};
}

std::uint64_t derive_stream(std::uint64_t master,
                            std::initializer_list<std::uint64_t> fields) {
  std::uint64_t h = mix64(master ^ 0x9e3779b97f4a7c15ULL);
  for (std::uint64_t f : fields) {
    h = mix64(h ^ (f + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
  }
  return h;
}

}  // namespace isac
