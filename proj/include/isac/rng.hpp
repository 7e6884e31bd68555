// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>

namespace isac {

/// Deterministic 64-bit generator (splitmix64 core) with Box-Muller normals.
///
/// Standard-library engines and distributions are implementation-defined, so
/// results would not be stable across toolchains. This generator makes every
/// stream bit-reproducible from its seed alone.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in (0, 1]; safe as a log() argument.
  double next_double_open() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Standard real normal N(0, 1).
  double next_gaussian();

  /// Circularly symmetric complex normal CN(0, 1): E|z|^2 = 1.
  std::complex<double> next_cgaussian();

 private:
  std::uint64_t state_;
  bool has_cache_ = false;
  double cache_ = 0.0;
};

/// Derives the seed for stream (master, f0, f1, ...) by hash-chaining fields.
/// Sweep rows seeded this way are independent of execution order, which keeps
/// parallel and serial schedules byte-identical.
std::uint64_t derive_stream(std::uint64_t master,
                            std::initializer_list<std::uint64_t> fields);

inline Rng stream_rng(std::uint64_t master,
                      std::initializer_list<std::uint64_t> fields) {
  return Rng(derive_stream(master, fields));
}

/// Stream purpose tags. Kept in one place so no two call sites collide.
enum class StreamPurpose : std::uint64_t {
  narrowband_channel = 1,
  wideband_channel = 2,
  sca_init = 3,
  empirical_symbols = 4,
  rejection_sampling = 5,
  random_design = 6,
  feasible_start = 7,
  bootstrap = 8,
};

inline std::uint64_t purpose_tag(StreamPurpose p) {
  return static_cast<std::uint64_t>(p);
}

}  // namespace isac
