// SPDX-License-Identifier: Apache-2.0
//
// Compares the serial reference implementations against the OpenMP kernels
// on the three data-parallel hot paths: sweep rows, the symbol-level SINR
// oracle, and the rejection sampler. Results must match bitwise; timings and
// speedups are printed per kernel.

#include <chrono>
#include <cstdio>
#include <omp.h>

#include "isac/oracles.hpp"
#include "isac/sweep.hpp"

using namespace isac;

namespace {

template <typename Fn>
double time_run(Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(const char* name, double serial_s, double parallel_s, bool identical) {
  std::printf("%-24s serial %8.3fs  parallel %8.3fs  speedup %5.2fx  identical %s\n",
              name, serial_s, parallel_s, serial_s / parallel_s,
              identical ? "yes" : "NO");
}

}  // namespace

int main() {
  std::printf("isacsim benchmark (%d OpenMP threads)\n", omp_get_max_threads());

  {  // Tradeoff sweep rows.
    auto cfg = parse_config(R"({
      "antennas": 4, "trials": 4, "weights": [0.3, 0.7],
      "sca": {"restarts": 2}
    })");
    const DuplexMode modes[] = {DuplexMode::full, DuplexMode::half};
    std::vector<TradeoffPoint> serial_rows, parallel_rows;
    const double ts = time_run(
        [&] { serial_rows = tradeoff_sweep(cfg, modes, ExecPolicy::serial); });
    const double tp = time_run(
        [&] { parallel_rows = tradeoff_sweep(cfg, modes, ExecPolicy::parallel); });
    report("tradeoff sweep", ts, tp,
           tradeoff_csv(cfg, serial_rows) == tradeoff_csv(cfg, parallel_rows));
  }

  {  // Symbol-level SINR oracle.
    ChannelParams params;
    params.num_antennas = 4;
    params.rician_beta = 1.0;
    Rng crng(3);
    const auto ch = sample_narrowband(params, crng);
    LinkBudget b;
    b.rho_c = db_to_linear(15.0);
    b.rho_s = db_to_linear(7.0);
    b.eta = db_to_linear(50.0);
    b.rho_si = db_to_linear(-80.0);
    b.half_cpi = 50;
    Rng drng(4);
    const auto design = random_design(ch, DuplexMode::full, drng);
    double serial_v = 0.0, parallel_v = 0.0;
    const double ts = time_run([&] {
      serial_v = empirical_sinr_narrowband(design, ch, b, 0, 0, 2000000, 5, 0.1,
                                           ExecPolicy::serial);
    });
    const double tp = time_run([&] {
      parallel_v = empirical_sinr_narrowband(design, ch, b, 0, 0, 2000000, 5, 0.1,
                                             ExecPolicy::parallel);
    });
    report("empirical SINR", ts, tp, serial_v == parallel_v);
  }

  {  // Rejection sampler.
    ChannelParams params;
    params.num_antennas = 2;
    params.rician_beta = 1.0;
    Rng crng(6);
    const auto ch = sample_narrowband(params, crng);
    LinkBudget b;
    b.rho_c = db_to_linear(15.0);
    b.rho_s = db_to_linear(7.0);
    b.eta = db_to_linear(50.0);
    b.rho_si = db_to_linear(-80.0);
    b.half_cpi = 50;
    Rng drng(7);
    const auto expansion = random_design(ch, DuplexMode::full, drng);
    RejectionBest serial_v, parallel_v;
    const double ts = time_run([&] {
      serial_v = rejection_sample_subproblem(expansion, ch, b, 0.5, DuplexMode::full,
                                             5e5, 1000000, 8, ExecPolicy::serial);
    });
    const double tp = time_run([&] {
      parallel_v = rejection_sample_subproblem(expansion, ch, b, 0.5, DuplexMode::full,
                                               5e5, 1000000, 8, ExecPolicy::parallel);
    });
    report("rejection sampler", ts, tp,
           serial_v.best_objective == parallel_v.best_objective &&
               serial_v.feasible == parallel_v.feasible);
  }
  return 0;
}
