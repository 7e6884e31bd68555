// SPDX-License-Identifier: Apache-2.0

#include "isac/validate.hpp"

#include <cmath>
#include <sstream>

#include "isac/oracles.hpp"
#include "isac/sweep.hpp"

namespace isac {

namespace {

ValidationCheck check(const std::string& name, double measured, double bound,
                      const std::string& detail = "") {
  ValidationCheck c;
  c.name = name;
  c.measured = measured;
  c.bound = bound;
  c.pass = measured <= bound;
  c.detail = detail;
  return c;
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace

ValidationReport validate(const SystemConfig& config) {
  ValidationReport report;
  const std::uint64_t seed = config.master_seed;

  {  // Timing identities for the parameter-table inputs.
    const auto narrow = derive_timing(Band::narrow, 1.0e5, 1.0e-3, 300.0);
    const auto wide = derive_timing(Band::wide, 1.0e8, 1.0e-3, 300.0);
    const bool ok = narrow.cpi_samples == 100 && wide.tau == 100 &&
                    wide.pri_samples == 200 && wide.pri_count == 500 &&
                    wide.cpi_samples == 100000;
    report.checks.push_back(check("timing-constants", ok ? 0.0 : 1.0, 0.5,
                                  "2N=100 narrow; tau=100, N0=200, 2N=1e5 wide"));
  }

  const LinkBudget budget = [&] {
    LinkBudget b;
    b.rho_c = config.rho_c;
    b.rho_s = config.rho_s;
    b.eta = config.eta;
    b.rho_si = config.rho_si;
    b.half_cpi = 8;  // oracle-friendly small CPI
    return b;
  }();

  {  // Closed-form CRB vs brute-force Fisher information, narrowband.
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      Rng rng = stream_rng(seed, {purpose_tag(StreamPurpose::random_design),
                                  static_cast<std::uint64_t>(trial)});
      ChannelParams params = config.channel_params();
      params.num_antennas = 2 + trial % 3;
      params.taps = 1;
      params.si_taps = 1;
      params.pdp = power_delay_profile(1, 1.0);
      params.pdp_si = power_delay_profile(1, 1.0);
      const auto ch = sample_narrowband(params, rng);
      const auto mode = trial % 2 == 0 ? DuplexMode::full : DuplexMode::half;
      const auto design = random_design(ch, mode, rng);
      for (int k = 0; k < 2; ++k) {
        const double closed = crb(design, ch, budget, k);
        const double fisher = fim_bruteforce_narrowband(design, ch, budget, k, 8,
                                                        config.doppler_phase_step());
        worst = std::max(worst, rel_err(closed, 1.0 / fisher));
      }
    }
    report.checks.push_back(
        check("crb-fim-narrowband", worst, 1e-8, "10 random design/channel pairs"));
  }

  {  // Wideband counterpart plus the cross-term cancellation.
    double worst = 0.0;
    double worst_cross = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
      Rng rng = stream_rng(seed, {purpose_tag(StreamPurpose::random_design),
                                  100 + static_cast<std::uint64_t>(trial)});
      ChannelParams params = config.channel_params();
      params.num_antennas = 3 + trial % 2;
      params.taps = 2;
      params.si_taps = 2;
      params.pdp = power_delay_profile(2, config.pdp_decay);
      params.pdp_si = power_delay_profile(2, config.pdp_decay);
      params.rician_beta0 = 1.0;
      const auto ch = sample_wideband(params, rng);
      const auto mode = trial % 2 == 0 ? DuplexMode::full : DuplexMode::half;
      const auto design = random_design(ch, mode, rng);
      LinkBudget wb = budget;
      wb.half_cpi = 2 * 4;  // U_small = 2 PRIs of 2*4 samples
      for (int k = 0; k < 2; ++k) {
        const double closed = crb(design, ch, wb, k);
        const auto fim = fim_bruteforce_wideband(design, ch, wb, k, 2, 4,
                                                 config.doppler_phase_step());
        worst = std::max(worst, rel_err(closed, 1.0 / fim.fisher));
        worst_cross = std::max(worst_cross, std::abs(fim.cross_trace));
      }
    }
    report.checks.push_back(
        check("crb-fim-wideband", worst, 1e-8, "5 random DAM design pairs"));
    report.checks.push_back(check("wideband-cross-term", worst_cross, 1e-10,
                                  "delay-induced cross-correlation trace"));
  }

  {  // Surrogate tightness at the expansion and global lower bound.
    Rng rng = stream_rng(seed, {purpose_tag(StreamPurpose::random_design), 200});
    ChannelParams params = config.channel_params();
    params.num_antennas = 3;
    const auto ch = sample_narrowband(params, rng);
    const auto expansion = random_design(ch, DuplexMode::full, rng);
    const NarrowbandSurrogates sur(expansion, ch, budget);
    double worst_tight = 0.0;
    double worst_bound = 0.0;
    for (int k = 0; k < 2; ++k) {
      for (int i = 0; i < 2; ++i) {
        worst_tight = std::max(worst_tight,
                               std::abs(sur.gamma_surrogate(k, i, expansion) -
                                        sur.gamma_true(k, i, expansion)));
      }
    }
    for (int trial = 0; trial < 100; ++trial) {
      const auto probe = random_design(ch, DuplexMode::full, rng);
      const double g = rng.next_double() * 2.0;
      for (int k = 0; k < 2; ++k) {
        for (int i = 0; i < 2; ++i) {
          worst_bound = std::max(worst_bound, sur.gamma_surrogate(k, i, probe) -
                                                  sur.gamma_true(k, i, probe));
          worst_bound = std::max(worst_bound, sur.d_surrogate(k, i, g, probe) -
                                                  sur.d_true(k, i, g, probe));
        }
      }
    }
    report.checks.push_back(check("surrogate-tightness", worst_tight, 1e-9));
    report.checks.push_back(check("surrogate-lower-bound", worst_bound, 1e-9,
                                  "100 random probe designs"));
  }

  {  // Solver vs rejection sampling on tiny subproblems.
    double worst_gap = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
      Rng rng = stream_rng(seed, {purpose_tag(StreamPurpose::random_design),
                                  300 + static_cast<std::uint64_t>(trial)});
      ChannelParams params = config.channel_params();
      params.num_antennas = 2;
      const auto ch = sample_narrowband(params, rng);
      const auto mode = trial % 2 == 0 ? DuplexMode::full : DuplexMode::half;
      const double weight = 0.2 + 0.6 * rng.next_double();
      const auto expansion = random_design(ch, mode, rng);
      const auto prob =
          build_subproblem(expansion, ch, budget, weight, mode, config.mu);
      const auto start = solver::strictly_feasible_start(prob.spec, rng);
      const auto sol = solver::solve(prob.spec, start);
      const auto best = rejection_sample_subproblem(
          expansion, ch, budget, weight, mode, config.mu, 20000,
          derive_stream(seed, {400 + static_cast<std::uint64_t>(trial)}));
      worst_gap = std::max(worst_gap, best.best_objective - sol.objective);
    }
    report.checks.push_back(check("solver-vs-sampling", worst_gap, 1e-3,
                                  "5 random M=2 subproblems, 2e4 samples"));
  }

  {  // Closed-form SINR vs the symbol-level simulation.
    double worst = 0.0;
    for (int trial = 0; trial < 2; ++trial) {
      Rng rng = stream_rng(seed, {purpose_tag(StreamPurpose::random_design),
                                  500 + static_cast<std::uint64_t>(trial)});
      ChannelParams params = config.channel_params();
      params.num_antennas = 3;
      const auto ch = sample_narrowband(params, rng);
      const auto design = random_design(ch, DuplexMode::full, rng);
      for (int k = 0; k < 2; ++k) {
        const double closed = sinr_narrowband(design, ch, budget, k, 0);
        const double sampled = empirical_sinr_narrowband(
            design, ch, budget, k, 0, 100000,
            derive_stream(seed, {600 + static_cast<std::uint64_t>(trial),
                                 static_cast<std::uint64_t>(k)}),
            config.doppler_phase_step());
        worst = std::max(worst, rel_err(closed, sampled));
      }
      params.taps = 2;
      params.si_taps = 2;
      params.pdp = power_delay_profile(2, config.pdp_decay);
      params.pdp_si = power_delay_profile(2, config.pdp_decay);
      params.rician_beta0 = 1.0;
      const auto wch = sample_wideband(params, rng);
      const auto wdesign = random_design(wch, DuplexMode::full, rng);
      for (int k = 0; k < 2; ++k) {
        const double closed = sinr_wideband(wdesign, wch, budget, k, 0);
        const double sampled = empirical_sinr_wideband(
            wdesign, wch, budget, k, 0, 100000,
            derive_stream(seed, {700 + static_cast<std::uint64_t>(trial),
                                 static_cast<std::uint64_t>(k)}),
            config.doppler_phase_step());
        worst = std::max(worst, rel_err(closed, sampled));
      }
    }
    report.checks.push_back(
        check("empirical-sinr", worst, 0.03, "1e5 symbols per design"));
  }

  return report;
}

std::string to_string(const ValidationReport& report) {
  std::ostringstream out;
  for (const auto& c : report.checks) {
    out << (c.pass ? "PASS" : "FAIL") << "  " << c.name << "  measured="
        << c.measured << "  bound=" << c.bound;
    if (!c.detail.empty()) out << "  (" << c.detail << ")";
    out << '\n';
  }
  out << (report.all_pass() ? "validation: all checks passed"
                            : "validation: FAILURES present")
      << '\n';
  return out.str();
}

}  // namespace isac
