// SPDX-License-Identifier: Apache-2.0

#include "isac/oracles.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "isac/sca.hpp"
#include "isac/sca_wideband.hpp"

namespace isac {

namespace {

// Doppler phase matrix diag(e^{j phi n}) (x) I_M applied as a congruence.
void apply_doppler(Eigen::MatrixXcd& cov, int samples, int block, double phase_step) {
  if (phase_step == 0.0) return;
  Eigen::VectorXcd d(samples * block);
  for (int n = 0; n < samples; ++n) {
    const std::complex<double> rot = std::polar(1.0, phase_step * (n + 1));
    for (int m = 0; m < block; ++m) d(n * block + m) = rot;
  }
  cov = d.asDiagonal() * cov * d.conjugate().asDiagonal();
}

// tr((I (x) adot) R_z^-1 (I (x) adot^H) R_X) without forming the Kronecker
// factors: the sandwich is block diagonal with blocks adot adot^H / z_n.
double sandwich_trace(const Eigen::VectorXcd& adot,
                      const Eigen::VectorXd& noise_diag,
                      const Eigen::MatrixXcd& cov) {
  const int block = static_cast<int>(adot.size());
  const int samples = static_cast<int>(noise_diag.size());
  const Eigen::MatrixXcd outer = adot * adot.adjoint();
  double total = 0.0;
  for (int n = 0; n < samples; ++n) {
    const auto blk = cov.block(n * block, n * block, block, block);
    total += std::real((outer * blk).trace()) / noise_diag(n);
  }
  return total;
}

Eigen::MatrixXcd matrix_sqrt_psd(const Eigen::MatrixXcd& A) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(A);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() *
         es.eigenvectors().adjoint();
}

}  // namespace

double fim_bruteforce_narrowband(const TransmitDesign& design,
                                 const NarrowbandChannels& channels,
                                 const LinkBudget& budget, int k, int half_cpi,
                                 double doppler_phase_step) {
  if (half_cpi < 1 || half_cpi > 16) {
    throw std::invalid_argument("fim_bruteforce_narrowband: half CPI must be in [1, 16]");
  }
  const int M = channels.num_antennas;
  const int samples = 2 * half_cpi;

  Eigen::MatrixXcd cov = Eigen::MatrixXcd::Zero(samples * M, samples * M);
  for (int n = 0; n < samples; ++n) {
    const int i = n < half_cpi ? 0 : 1;
    cov.block(n * M, n * M, M, M) = design.Q[k][i];
  }
  apply_doppler(cov, samples, M, doppler_phase_step);

  std::span<const Eigen::VectorXcd> si(&channels.g[k], 1);
  Eigen::VectorXd noise(samples);
  for (int n = 0; n < samples; ++n) {
    const int i = n < half_cpi ? 0 : 1;
    noise(n) =
        budget.rho_si * residual_si_power(design.Q[k][i], si, budget.eta) + 1.0;
  }

  const auto adot = steering_derivative(channels.theta[k], M, channels.spacing_ratio);
  return 2.0 * std::norm(channels.alpha[k]) * budget.rho_s *
         sandwich_trace(adot, noise, cov);
}

WidebandFimResult fim_bruteforce_wideband(const TransmitDesign& design,
                                          const WidebandChannels& channels,
                                          const LinkBudget& budget, int k,
                                          int pri_count, int pri_half,
                                          double doppler_phase_step) {
  const int M = channels.num_antennas;
  const int L = channels.taps;
  const int samples = pri_count * 2 * pri_half;
  if (pri_count < 1 || pri_half < 1) throw std::invalid_argument("fim_bruteforce_wideband: empty CPI");
  if (samples * M > 2048) throw std::invalid_argument("fim_bruteforce_wideband: dense construction too large");

  Eigen::MatrixXcd auto_cov = Eigen::MatrixXcd::Zero(samples * M, samples * M);
  Eigen::MatrixXcd cross_cov = Eigen::MatrixXcd::Zero(samples * M, samples * M);

  // Sample n belongs to chunk (q, i); chunks carry independent symbol
  // streams, so correlation exists only inside a chunk. Within a chunk the
  // blocks are Toeplitz: offset kappa_l - kappa_l' pairs tap l with tap l'.
  auto chunk_of = [&](int n) {
    const int in_pri = n % (2 * pri_half);
    return std::pair<int, int>(n / (2 * pri_half), in_pri < pri_half ? 0 : 1);
  };
  for (int n = 0; n < samples; ++n) {
    const auto [q, i] = chunk_of(n);
    auto_cov.block(n * M, n * M, M, M) = design.Q[k][i];
    for (int np = 0; np < samples; ++np) {
      const auto [qp, ip] = chunk_of(np);
      if (q != qp || i != ip) continue;
      for (int l = 0; l < L; ++l) {
        for (int lp = 0; lp < L; ++lp) {
          if (l == lp) continue;
          const int kappa_l = L - l, kappa_lp = L - lp;
          if (n - np != kappa_l - kappa_lp) continue;
          cross_cov.block(n * M, np * M, M, M) +=
              design.beams[k][i][l] * design.beams[k][i][lp].adjoint();
        }
      }
    }
  }
  apply_doppler(auto_cov, samples, M, doppler_phase_step);
  apply_doppler(cross_cov, samples, M, doppler_phase_step);

  Eigen::VectorXd noise(samples);
  for (int n = 0; n < samples; ++n) {
    const auto [q, i] = chunk_of(n);
    noise(n) = budget.rho_si *
                   residual_si_power(design.Q[k][i], channels.g_taps[k], budget.eta) +
               1.0;
  }

  const auto adot = steering_derivative(channels.theta[k], M, channels.spacing_ratio);
  const double scale = 2.0 * std::norm(channels.alpha[k]) * budget.rho_s;
  WidebandFimResult result;
  result.cross_trace = scale * sandwich_trace(adot, noise, cross_cov);
  result.fisher = scale * sandwich_trace(adot, noise, auto_cov) + result.cross_trace;
  return result;
}

namespace {

constexpr std::int64_t kChunk = 4096;

struct SinrAccum {
  double signal = 0.0;
  double interference = 0.0;
};

// Chunked two-pass accumulation; the chunk list and per-chunk streams are
// fixed, so OpenMP and serial execution produce identical bits.
template <typename ChunkFn>
double run_chunked_sinr(std::int64_t num_symbols, ChunkFn&& fn, ExecPolicy policy) {
  const std::int64_t chunks = (num_symbols + kChunk - 1) / kChunk;
  std::vector<SinrAccum> partial(static_cast<std::size_t>(chunks));
  if (policy == ExecPolicy::parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < chunks; ++c) {
      partial[c] = fn(c, std::min(kChunk, num_symbols - c * kChunk));
    }
  } else {
    for (std::int64_t c = 0; c < chunks; ++c) {
      partial[c] = fn(c, std::min(kChunk, num_symbols - c * kChunk));
    }
  }
  SinrAccum total;
  for (const auto& p : partial) {
    total.signal += p.signal;
    total.interference += p.interference;
  }
  return total.interference > 0.0 ? total.signal / total.interference : 0.0;
}

}  // namespace

double empirical_sinr_narrowband(const TransmitDesign& design,
                                 const NarrowbandChannels& channels,
                                 const LinkBudget& budget, int k, int i,
                                 std::int64_t num_symbols, std::uint64_t seed,
                                 double doppler_phase_step, ExecPolicy policy) {
  if (num_symbols < 1000) throw std::invalid_argument("empirical_sinr_narrowband: need at least 1000 symbols");
  const int kp = 1 - k;
  const std::complex<double> gain = channels.h[kp].dot(design.beams[kp][i][0]);
  const double amp_c = std::sqrt(budget.rho_c);
  const double amp_s = std::sqrt(budget.rho_s);
  const auto steer =
      steering_vector(channels.theta[k], channels.num_antennas, channels.spacing_ratio);
  std::span<const Eigen::VectorXcd> si(&channels.g[k], 1);
  const double si_std = std::sqrt(
      budget.rho_si * residual_si_power(design.Q[k][i], si, budget.eta));
  // Echo of the own composite signal: a^H x = (a^H w) c_own + a^H s_own.
  const std::complex<double> echo_beam = steer.entries.dot(design.beams[k][i][0]);
  const Eigen::MatrixXcd sens_sqrt = matrix_sqrt_psd(design.R[k][i]);
  const Eigen::VectorXcd echo_mix = sens_sqrt.adjoint() * steer.entries;

  auto chunk = [&](std::int64_t c, std::int64_t count) {
    Rng rng = stream_rng(seed, {purpose_tag(StreamPurpose::empirical_symbols),
                                static_cast<std::uint64_t>(c)});
    SinrAccum acc;
    for (std::int64_t n = 0; n < count; ++n) {
      const std::int64_t idx = c * kChunk + n;
      const std::complex<double> sym = rng.next_cgaussian();
      const std::complex<double> own_sym = rng.next_cgaussian();
      std::complex<double> echo = echo_beam * own_sym;
      for (int m = 0; m < echo_mix.size(); ++m) {
        echo += std::conj(echo_mix(m)) * rng.next_cgaussian();
      }
      const std::complex<double> rot =
          std::polar(1.0, doppler_phase_step * static_cast<double>(idx + 1));
      std::complex<double> interf = amp_s * channels.alpha[k] * rot * echo;
      interf += si_std * rng.next_cgaussian();
      interf += rng.next_cgaussian();  // unit receiver noise
      acc.signal += std::norm(amp_c * gain * sym);
      acc.interference += std::norm(interf);
    }
    return acc;
  };
  return run_chunked_sinr(num_symbols, chunk, policy);
}

double empirical_sinr_wideband(const TransmitDesign& design,
                               const WidebandChannels& channels,
                               const LinkBudget& budget, int k, int i,
                               std::int64_t num_symbols, std::uint64_t seed,
                               double doppler_phase_step, ExecPolicy policy) {
  if (num_symbols < 1000) throw std::invalid_argument("empirical_sinr_wideband: need at least 1000 symbols");
  const int kp = 1 - k;
  const int ip = i == 0 ? 1 : 0;  // interval the decoded symbol was sent in
  const int L = channels.taps;
  const double amp_c = std::sqrt(budget.rho_c);
  const double amp_s = std::sqrt(budget.rho_s);

  // Desired link: aligned gain plus the residual ISI couplings (tiny under ZF).
  std::complex<double> aligned = 0.0;
  Eigen::MatrixXcd isi = Eigen::MatrixXcd::Zero(L, L);  // (l, l') couplings
  for (int l = 0; l < L; ++l) {
    aligned += channels.h_taps[kp][l].dot(design.beams[kp][ip][l]);
    for (int lp = 0; lp < L; ++lp) {
      if (lp != l) isi(l, lp) = channels.h_taps[kp][l].dot(design.beams[kp][ip][lp]);
    }
  }

  const auto steer =
      steering_vector(channels.theta[k], channels.num_antennas, channels.spacing_ratio);
  const double si_std = std::sqrt(
      budget.rho_si *
      residual_si_power(design.Q[k][i], channels.g_taps[k], budget.eta));
  Eigen::VectorXcd echo_beam(L);
  for (int l = 0; l < L; ++l) echo_beam(l) = steer.entries.dot(design.beams[k][i][l]);
  const Eigen::MatrixXcd sens_sqrt = matrix_sqrt_psd(design.R[k][i]);
  const Eigen::VectorXcd echo_mix = sens_sqrt.adjoint() * steer.entries;

  auto chunk = [&](std::int64_t c, std::int64_t count) {
    Rng rng = stream_rng(seed, {purpose_tag(StreamPurpose::empirical_symbols),
                                static_cast<std::uint64_t>(c)});
    // Symbol buffers with margin so delayed taps index valid entries.
    const std::int64_t len = count + 2 * L;
    std::vector<std::complex<double>> sym(len), own(len);
    for (auto& s : sym) s = rng.next_cgaussian();
    for (auto& s : own) s = rng.next_cgaussian();
    SinrAccum acc;
    for (std::int64_t n = 0; n < count; ++n) {
      const std::int64_t idx = c * kChunk + n;
      const std::int64_t at = n + L;  // aligned symbol index in the buffer
      acc.signal += std::norm(amp_c * aligned * sym[at]);

      std::complex<double> interf = 0.0;
      for (int l = 0; l < L; ++l) {
        for (int lp = 0; lp < L; ++lp) {
          if (lp == l) continue;
          interf += amp_c * isi(l, lp) * sym[at + lp - l];
        }
      }
      // Own echo: delay-precompensated own symbols plus dedicated sensing.
      std::complex<double> echo = 0.0;
      for (int l = 0; l < L; ++l) echo += echo_beam(l) * own[at + l - L];
      for (int m = 0; m < echo_mix.size(); ++m) {
        echo += std::conj(echo_mix(m)) * rng.next_cgaussian();
      }
      const std::complex<double> rot =
          std::polar(1.0, doppler_phase_step * static_cast<double>(idx + 1));
      interf += amp_s * channels.alpha[k] * rot * echo;
      interf += si_std * rng.next_cgaussian();
      interf += rng.next_cgaussian();
      acc.interference += std::norm(interf);
    }
    return acc;
  };
  return run_chunked_sinr(num_symbols, chunk, policy);
}

namespace {

Eigen::MatrixXcd random_psd(int dim, Rng& rng) {
  Eigen::MatrixXcd X(dim, dim);
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) X(r, c) = rng.next_cgaussian();
  }
  Eigen::MatrixXcd P = X * X.adjoint();
  return P / P.real().trace();
}

Eigen::VectorXcd random_direction(int dim, Rng& rng) {
  Eigen::VectorXcd v(dim);
  for (int r = 0; r < dim; ++r) v(r) = rng.next_cgaussian();
  return v / v.norm();
}

bool interval_active(DuplexMode mode, Band band, int k, int i) {
  if (mode == DuplexMode::full) return true;
  if (band == Band::narrow) return (k == 0 && i == 0) || (k == 1 && i == 1);
  return i == 0;
}

}  // namespace

TransmitDesign random_design(const NarrowbandChannels& channels, DuplexMode mode,
                             Rng& rng) {
  const int M = channels.num_antennas;
  TransmitDesign d;
  d.mode = mode;
  d.band = Band::narrow;
  d.num_antennas = M;
  d.taps = 1;
  for (int k = 0; k < 2; ++k) {
    const int active = (mode == DuplexMode::full) ? 2 : 1;
    const double power = (0.2 + 0.8 * rng.next_double()) * 2.0 / active;
    const double comm_frac = rng.next_double();
    const Eigen::VectorXcd w =
        std::sqrt(power * comm_frac) * random_direction(M, rng);
    const Eigen::MatrixXcd R = power * (1.0 - comm_frac) * random_psd(M, rng);
    const Eigen::MatrixXcd Q = w * w.adjoint() + R;
    for (int i = 0; i < 2; ++i) {
      if (interval_active(mode, Band::narrow, k, i)) {
        d.beams[k][i] = {w};
        d.Q[k][i] = Q;
        d.R[k][i] = R;
      } else {
        d.beams[k][i] = {Eigen::VectorXcd::Zero(M)};
        d.Q[k][i] = Eigen::MatrixXcd::Zero(M, M);
        d.R[k][i] = Eigen::MatrixXcd::Zero(M, M);
      }
    }
  }
  return d;
}

namespace {

// Deterministic chunked maximum: per-chunk streams plus an index tie-break
// keep the parallel and serial policies bit-identical.
template <typename SampleFn>
RejectionBest chunked_best(std::int64_t samples, std::uint64_t seed,
                           ExecPolicy policy, SampleFn&& sample) {
  constexpr std::int64_t kBlock = 2048;
  const std::int64_t chunks = (samples + kBlock - 1) / kBlock;
  std::vector<RejectionBest> partial(static_cast<std::size_t>(chunks));
  auto run_chunk = [&](std::int64_t c) {
    Rng rng = stream_rng(seed, {purpose_tag(StreamPurpose::rejection_sampling),
                                static_cast<std::uint64_t>(c)});
    RejectionBest best;
    const std::int64_t count = std::min(kBlock, samples - c * kBlock);
    for (std::int64_t s = 0; s < count; ++s) {
      double value;
      if (sample(rng, value)) {
        ++best.feasible;
        if (value > best.best_objective) best.best_objective = value;
      }
    }
    return best;
  };
  if (policy == ExecPolicy::parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < chunks; ++c) partial[c] = run_chunk(c);
  } else {
    for (std::int64_t c = 0; c < chunks; ++c) partial[c] = run_chunk(c);
  }
  RejectionBest total;
  for (const auto& p : partial) {
    total.feasible += p.feasible;
    if (p.best_objective > total.best_objective) total.best_objective = p.best_objective;
  }
  return total;
}

}  // namespace

RejectionBest rejection_sample_subproblem(const TransmitDesign& expansion,
                                          const NarrowbandChannels& channels,
                                          const LinkBudget& budget,
                                          double weight, DuplexMode mode,
                                          double mu, std::int64_t samples,
                                          std::uint64_t seed, ExecPolicy policy) {
  const NarrowbandSurrogates sur(expansion, channels, budget);
  const double crb_coeff =
      weight < 1.0 ? (1.0 - weight) * mu /
                         (2.0 * budget.rho_s * static_cast<double>(budget.half_cpi))
                   : 0.0;
  const int M = channels.num_antennas;
  auto sample = [&](Rng& rng, double& value) {
    const TransmitDesign d = random_design(channels, mode, rng);
    double obj = 0.0;
    for (int k = 0; k < 2; ++k) {
      const auto adot =
          steering_derivative(channels.theta[k], M, channels.spacing_ratio);
      double d_sum = 0.0;
      for (int i = 0; i < 2; ++i) {
        const bool rx_live = weight > 0.0 && d.beams[1 - k][i][0].squaredNorm() > 0.0;
        if (rx_live) {
          const double gs = sur.gamma_surrogate(k, i, d);
          if (gs < 0.0) return false;  // no feasible r for this draw
          obj += 0.5 * weight * std::log2(1.0 + gs);
        }
        const bool tx_live = weight < 1.0 && d.Q[k][i].size() > 0 &&
                             d.Q[k][i].cwiseAbs().maxCoeff() > 0.0;
        if (tx_live) {
          const double fisher =
              std::norm(channels.alpha[k]) * std::real(adot.dot(d.Q[k][i] * adot));
          const double g = std::sqrt(std::max(fisher, 0.0));
          const double ds = sur.d_surrogate(k, i, g, d);
          if (ds < 1e-12) return false;  // no feasible d for this draw
          d_sum += ds;
        }
      }
      if (weight < 1.0) {
        if (d_sum <= 0.0) return false;
        obj -= crb_coeff / d_sum;
      }
    }
    value = obj;
    return true;
  };
  return chunked_best(samples, seed, policy, sample);
}

RejectionBest rejection_sample_true_objective(const NarrowbandChannels& channels,
                                              const LinkBudget& budget,
                                              double weight, DuplexMode mode,
                                              double mu, std::int64_t samples,
                                              std::uint64_t seed,
                                              ExecPolicy policy) {
  auto sample = [&](Rng& rng, double& value) {
    const TransmitDesign d = random_design(channels, mode, rng);
    const auto m = evaluate_design(d, channels, budget);
    if (weight >= 1.0) {
      value = m.rate_sum;
    } else {
      if (!std::isfinite(m.crb_sum)) return false;
      value = weight * m.rate_sum - (1.0 - weight) * mu * m.crb_sum;
    }
    return true;
  };
  return chunked_best(samples, seed, policy, sample);
}

TransmitDesign random_design(const WidebandChannels& channels, DuplexMode mode,
                             Rng& rng) {
  const int M = channels.num_antennas;
  const int L = channels.taps;
  TransmitDesign d;
  d.mode = mode;
  d.band = Band::wide;
  d.num_antennas = M;
  d.taps = L;
  for (int k = 0; k < 2; ++k) {
    const auto bases = zf_nullspace_basis(channels.h_taps[k]);
    const int active = (mode == DuplexMode::full) ? 2 : 1;
    const double power = (0.2 + 0.8 * rng.next_double()) * 2.0 / active;
    const double comm_frac = rng.next_double();
    std::vector<Eigen::VectorXcd> beams(L);
    Eigen::MatrixXcd comm_cov = Eigen::MatrixXcd::Zero(M, M);
    for (int l = 0; l < L; ++l) {
      const int rdim = static_cast<int>(bases[l].cols());
      beams[l] = bases[l] * (std::sqrt(power * comm_frac / L) *
                             random_direction(rdim, rng));
      comm_cov += beams[l] * beams[l].adjoint();
    }
    const Eigen::MatrixXcd R = power * (1.0 - comm_frac) * random_psd(M, rng);
    const Eigen::MatrixXcd Q = comm_cov + R;
    for (int i = 0; i < 2; ++i) {
      if (interval_active(mode, Band::wide, k, i)) {
        d.beams[k][i] = beams;
        d.Q[k][i] = Q;
        d.R[k][i] = R;
      } else {
        d.beams[k][i].assign(L, Eigen::VectorXcd::Zero(M));
        d.Q[k][i] = Eigen::MatrixXcd::Zero(M, M);
        d.R[k][i] = Eigen::MatrixXcd::Zero(M, M);
      }
    }
  }
  return d;
}

}  // namespace isac
