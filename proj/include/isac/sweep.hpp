// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "isac/config.hpp"
#include "isac/oracles.hpp"
#include "isac/sca_wideband.hpp"

namespace isac {

/// One optimized operating point of a sweep. Power columns are per
/// (transceiver, interval); `rate_single`/`crb_single` report restart 0 while
/// the headline numbers keep the best restart.
struct TradeoffPoint {
  Band band = Band::narrow;
  DuplexMode mode = DuplexMode::full;
  double weight = 0.0;
  int seed = 0;  // trial index under the master seed
  std::string status = "ok";
  double objective = 0.0;
  double rate_sum = 0.0;
  double crb_sum = 0.0;
  double root_crb_deg = 0.0;
  double comm_power[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  double sens_power[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  int iterations = 0;
  double kkt_residual = 0.0;
  double rate_single = 0.0;
  double crb_single = 0.0;
};

/// The config's band parameters adjusted to another band (desk-scale
/// bandwidth/coherence defaults for the switched band).
SystemConfig with_band(SystemConfig config, Band band);

/// One (mode, weight, trial) cell: sample the trial's channels, run the
/// matching SCA pipeline, evaluate the closed-form metrics.
TradeoffPoint run_tradeoff_cell(const SystemConfig& config, DuplexMode mode,
                                double weight, int trial);

/// Rows ordered by (mode, weight, seed); failures are recorded in `status`
/// and the sweep continues. Serial and parallel execution are byte-identical
/// because every row derives its own random streams.
std::vector<TradeoffPoint> tradeoff_sweep(const SystemConfig& config,
                                          std::span<const DuplexMode> modes,
                                          ExecPolicy policy = ExecPolicy::parallel);

std::string tradeoff_csv(const SystemConfig& config,
                         std::span<const TradeoffPoint> rows);

struct RicianRow {
  Band band = Band::narrow;
  DuplexMode mode = DuplexMode::full;
  double weight = 0.0;
  double beta_db = 0.0;
  std::string status = "ok";
  int trials = 0;
  double mean_rate = 0.0;
  double se_rate = 0.0;
  double mean_root_crb_deg = 0.0;
  double se_root_crb_deg = 0.0;
};

/// Rate and root-CRB against the Rician factor in the communication-prior
/// (w = 0.9) and sensing-prior (w = 0.1) regimes.
std::vector<RicianRow> rician_sweep(const SystemConfig& config,
                                    std::span<const double> betas_db,
                                    std::span<const DuplexMode> modes,
                                    ExecPolicy policy = ExecPolicy::parallel);

std::string rician_csv(const SystemConfig& config, std::span<const RicianRow> rows);

struct PowerRow {
  Band band = Band::narrow;
  DuplexMode mode = DuplexMode::full;
  double weight = 0.0;
  int seed = 0;
  std::string status = "ok";
  double comm_power = 0.0;  // sum_{k,i} ||w||^2
  double sens_power = 0.0;  // sum_{k,i} tr(R)
  double total_power = 0.0;
};

/// Communication/dedicated-sensing power split per run for the requested
/// bands (the trace identity total = comm + sensing holds per row).
std::vector<PowerRow> power_report(const SystemConfig& config,
                                   std::span<const Band> bands,
                                   std::span<const DuplexMode> modes,
                                   ExecPolicy policy = ExecPolicy::parallel);

std::string power_csv(const SystemConfig& config, std::span<const PowerRow> rows);

/// Per-iteration trace of a single run.
std::vector<ScaTraceRow> convergence_trace(const SystemConfig& config,
                                           DuplexMode mode, double weight,
                                           int trial);

std::string convergence_csv(const SystemConfig& config,
                            std::span<const ScaTraceRow> rows, int taps);

/// Percentile bootstrap over per-seed values.
struct BootstrapSummary {
  double mean = 0.0;
  double se = 0.0;
  double lo95 = 0.0;
  double hi95 = 0.0;
};

BootstrapSummary bootstrap_mean(std::span<const double> values,
                                std::uint64_t seed, int resamples = 2000);
/// Bootstrap of mean(a - b) over paired samples.
BootstrapSummary bootstrap_paired_diff(std::span<const double> a,
                                       std::span<const double> b,
                                       std::uint64_t seed, int resamples = 2000);

}  // namespace isac
