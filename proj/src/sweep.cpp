// SPDX-License-Identifier: Apache-2.0

#include "isac/sweep.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace isac {

namespace {

constexpr double kPi = 3.14159265358979323846;

#ifndef ISACSIM_GIT_DESCRIBE
#define ISACSIM_GIT_DESCRIBE "unknown"
#endif

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::uint64_t weight_bits(double w) { return std::bit_cast<std::uint64_t>(w); }

double root_crb_degrees(double crb_sum) {
  return std::sqrt(crb_sum) * 180.0 / kPi;  // inf stays inf
}

// Channel realization for one trial; identical across modes and weights so
// duplex comparisons are paired.
NarrowbandChannels trial_channels_narrow(const SystemConfig& cfg, int trial) {
  Rng rng = stream_rng(cfg.master_seed,
                       {purpose_tag(StreamPurpose::narrowband_channel),
                        static_cast<std::uint64_t>(trial)});
  return sample_narrowband(cfg.channel_params(), rng);
}

WidebandChannels trial_channels_wide(const SystemConfig& cfg, int trial) {
  Rng rng = stream_rng(cfg.master_seed,
                       {purpose_tag(StreamPurpose::wideband_channel),
                        static_cast<std::uint64_t>(trial)});
  return sample_wideband(cfg.channel_params(), rng);
}

std::uint64_t run_seed(const SystemConfig& cfg, DuplexMode mode, double weight,
                       int trial) {
  return derive_stream(cfg.master_seed,
                       {purpose_tag(StreamPurpose::sca_init),
                        static_cast<std::uint64_t>(cfg.band == Band::wide),
                        static_cast<std::uint64_t>(mode == DuplexMode::half),
                        weight_bits(weight), static_cast<std::uint64_t>(trial)});
}

void fill_from_run(TradeoffPoint& row, const ScaResult& result,
                   const TransmitDesign& design) {
  row.objective = result.best.objective;
  row.rate_sum = result.best.rate_sum;
  row.crb_sum = result.best.crb_sum;
  row.root_crb_deg = root_crb_degrees(row.crb_sum);
  row.iterations = result.best.iterations;
  row.kkt_residual = result.best.kkt_residual;
  row.rate_single = result.runs.front().rate_sum;
  row.crb_single = result.runs.front().crb_sum;
  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i < 2; ++i) {
      row.comm_power[k][i] = design.comm_power(k, i);
      row.sens_power[k][i] = design.sensing_power(k, i);
    }
  }
}

template <typename Row, typename Fn>
void run_rows(std::vector<Row>& rows, Fn&& fn, ExecPolicy policy) {
  const std::int64_t n = static_cast<std::int64_t>(rows.size());
  if (policy == ExecPolicy::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) fn(rows[static_cast<std::size_t>(i)]);
  } else {
    for (std::int64_t i = 0; i < n; ++i) fn(rows[static_cast<std::size_t>(i)]);
  }
}

}  // namespace

SystemConfig with_band(SystemConfig config, Band band) {
  if (config.band == band) return config;
  config.band = band;
  if (band == Band::narrow) {
    config.bandwidth_hz = 1.0e5;
    config.coherence_time_s = 1.0e-3;
  } else {
    // Desk-scale wideband: tau = 5 samples, N0 = 10, 2N = 1000.
    config.bandwidth_hz = 5.0e6;
    config.coherence_time_s = 2.0e-4;
  }
  return config;
}

TradeoffPoint run_tradeoff_cell(const SystemConfig& config, DuplexMode mode,
                                double weight, int trial) {
  TradeoffPoint row;
  row.band = config.band;
  row.mode = mode;
  row.weight = weight;
  row.seed = trial;
  try {
    ScaOptions opt = config.sca_options(weight, mode);
    opt.seed = run_seed(config, mode, weight, trial);
    const LinkBudget budget = config.budget();
    if (config.band == Band::narrow) {
      const auto channels = trial_channels_narrow(config, trial);
      const ScaResult result = run_sca(channels, budget, opt);
      fill_from_run(row, result, result.best.design);
    } else {
      const auto channels = trial_channels_wide(config, trial);
      const WidebandScaResult result = run_sca_wideband(channels, budget, opt);
      fill_from_run(row, result.result, result.result.best.design);
    }
  } catch (const std::exception& e) {
    row.status = std::string("error: ") + e.what();
  }
  return row;
}

std::vector<TradeoffPoint> tradeoff_sweep(const SystemConfig& config,
                                          std::span<const DuplexMode> modes,
                                          ExecPolicy policy) {
  std::vector<TradeoffPoint> rows;
  for (DuplexMode mode : modes) {
    for (double w : config.weights) {
      for (int t = 0; t < config.trials; ++t) {
        TradeoffPoint r;
        r.band = config.band;
        r.mode = mode;
        r.weight = w;
        r.seed = t;
        rows.push_back(r);
      }
    }
  }
  run_rows(rows, [&](TradeoffPoint& r) {
    r = run_tradeoff_cell(config, r.mode, r.weight, r.seed);
  }, policy);
  return rows;
}

std::string tradeoff_csv(const SystemConfig& config,
                         std::span<const TradeoffPoint> rows) {
  std::ostringstream out;
  out << "band,mode,weight,seed,status,objective,rate_sum,crb_sum,root_crb_deg,"
         "comm_power_A1,comm_power_A2,comm_power_B1,comm_power_B2,"
         "sens_power_A1,sens_power_A2,sens_power_B1,sens_power_B2,"
         "iterations,kkt_residual,rate_single,crb_single,git_describe,config_hash\n";
  const std::string meta =
      std::string(ISACSIM_GIT_DESCRIBE) + "," + config.hash();
  for (const auto& r : rows) {
    out << to_string(r.band) << ',' << to_string(r.mode) << ','
        << format_double(r.weight) << ',' << r.seed << ',' << r.status << ','
        << format_double(r.objective) << ',' << format_double(r.rate_sum) << ','
        << format_double(r.crb_sum) << ',' << format_double(r.root_crb_deg);
    for (int k = 0; k < 2; ++k) {
      for (int i = 0; i < 2; ++i) out << ',' << format_double(r.comm_power[k][i]);
    }
    for (int k = 0; k < 2; ++k) {
      for (int i = 0; i < 2; ++i) out << ',' << format_double(r.sens_power[k][i]);
    }
    out << ',' << r.iterations << ',' << format_double(r.kkt_residual) << ','
        << format_double(r.rate_single) << ',' << format_double(r.crb_single)
        << ',' << meta << '\n';
  }
  return out.str();
}

std::vector<RicianRow> rician_sweep(const SystemConfig& config,
                                    std::span<const double> betas_db,
                                    std::span<const DuplexMode> modes,
                                    ExecPolicy policy) {
  struct Cell {
    RicianRow row;
    std::vector<double> rates;
    std::vector<double> root_crbs;
  };
  static constexpr double kRegimes[2] = {0.1, 0.9};
  std::vector<Cell> cells;
  for (double beta_db : betas_db) {
    for (DuplexMode mode : modes) {
      for (double w : kRegimes) {
        Cell c;
        c.row.band = config.band;
        c.row.mode = mode;
        c.row.weight = w;
        c.row.beta_db = beta_db;
        cells.push_back(std::move(c));
      }
    }
  }
  run_rows(cells, [&](Cell& cell) {
    SystemConfig cfg = config;
    cfg.rician_beta = db_to_linear(cell.row.beta_db);
    // The factor changes the channel law, so draws get a beta-specific stream.
    cfg.master_seed = derive_stream(
        config.master_seed, {weight_bits(cell.row.beta_db), 0x52494349ULL});
    try {
      for (int t = 0; t < cfg.trials; ++t) {
        const TradeoffPoint p =
            run_tradeoff_cell(cfg, cell.row.mode, cell.row.weight, t);
        if (p.status != "ok") throw std::runtime_error(p.status);
        cell.rates.push_back(p.rate_sum);
        cell.root_crbs.push_back(p.root_crb_deg);
      }
      cell.row.trials = static_cast<int>(cell.rates.size());
      const auto rs = bootstrap_mean(cell.rates, config.master_seed);
      const auto cs = bootstrap_mean(cell.root_crbs, config.master_seed + 1);
      cell.row.mean_rate = rs.mean;
      cell.row.se_rate = rs.se;
      cell.row.mean_root_crb_deg = cs.mean;
      cell.row.se_root_crb_deg = cs.se;
    } catch (const std::exception& e) {
      cell.row.status = std::string("error: ") + e.what();
    }
  }, policy);
  std::vector<RicianRow> rows;
  rows.reserve(cells.size());
  for (auto& c : cells) rows.push_back(c.row);
  return rows;
}

std::string rician_csv(const SystemConfig& config, std::span<const RicianRow> rows) {
  std::ostringstream out;
  out << "band,mode,weight,beta_db,status,trials,mean_rate,se_rate,"
         "mean_root_crb_deg,se_root_crb_deg,git_describe,config_hash\n";
  const std::string meta =
      std::string(ISACSIM_GIT_DESCRIBE) + "," + config.hash();
  for (const auto& r : rows) {
    out << to_string(r.band) << ',' << to_string(r.mode) << ','
        << format_double(r.weight) << ',' << format_double(r.beta_db) << ','
        << r.status << ',' << r.trials << ',' << format_double(r.mean_rate)
        << ',' << format_double(r.se_rate) << ','
        << format_double(r.mean_root_crb_deg) << ','
        << format_double(r.se_root_crb_deg) << ',' << meta << '\n';
  }
  return out.str();
}

std::vector<PowerRow> power_report(const SystemConfig& config,
                                   std::span<const Band> bands,
                                   std::span<const DuplexMode> modes,
                                   ExecPolicy policy) {
  std::vector<PowerRow> rows;
  for (Band band : bands) {
    for (DuplexMode mode : modes) {
      for (double w : config.weights) {
        for (int t = 0; t < config.trials; ++t) {
          PowerRow r;
          r.band = band;
          r.mode = mode;
          r.weight = w;
          r.seed = t;
          rows.push_back(r);
        }
      }
    }
  }
  run_rows(rows, [&](PowerRow& r) {
    const SystemConfig cfg = with_band(config, r.band);
    const TradeoffPoint p = run_tradeoff_cell(cfg, r.mode, r.weight, r.seed);
    r.status = p.status;
    for (int k = 0; k < 2; ++k) {
      for (int i = 0; i < 2; ++i) {
        r.comm_power += p.comm_power[k][i];
        r.sens_power += p.sens_power[k][i];
      }
    }
    r.total_power = r.comm_power + r.sens_power;
  }, policy);
  return rows;
}

std::string power_csv(const SystemConfig& config, std::span<const PowerRow> rows) {
  std::ostringstream out;
  out << "band,mode,weight,seed,status,comm_power,sens_power,total_power,"
         "git_describe,config_hash\n";
  const std::string meta =
      std::string(ISACSIM_GIT_DESCRIBE) + "," + config.hash();
  for (const auto& r : rows) {
    out << to_string(r.band) << ',' << to_string(r.mode) << ','
        << format_double(r.weight) << ',' << r.seed << ',' << r.status << ','
        << format_double(r.comm_power) << ',' << format_double(r.sens_power)
        << ',' << format_double(r.total_power) << ',' << meta << '\n';
  }
  return out.str();
}

std::vector<ScaTraceRow> convergence_trace(const SystemConfig& config,
                                           DuplexMode mode, double weight,
                                           int trial) {
  ScaOptions opt = config.sca_options(weight, mode);
  opt.seed = run_seed(config, mode, weight, trial);
  opt.restarts = 1;
  const LinkBudget budget = config.budget();
  if (config.band == Band::narrow) {
    const auto channels = trial_channels_narrow(config, trial);
    return run_sca(channels, budget, opt).best.trace;
  }
  const auto channels = trial_channels_wide(config, trial);
  return run_sca_wideband(channels, budget, opt).result.best.trace;
}

std::string convergence_csv(const SystemConfig& config,
                            std::span<const ScaTraceRow> rows, int taps) {
  std::ostringstream out;
  out << "iteration,objective,rate_sum,crb_sum,kkt_residual";
  for (int l = 0; l < taps; ++l) out << ",tap_comm_power_" << l;
  out << ",git_describe,config_hash\n";
  const std::string meta =
      std::string(ISACSIM_GIT_DESCRIBE) + "," + config.hash();
  for (const auto& r : rows) {
    out << r.iteration << ',' << format_double(r.objective) << ','
        << format_double(r.rate_sum) << ',' << format_double(r.crb_sum) << ','
        << format_double(r.kkt_residual);
    for (int l = 0; l < taps; ++l) {
      out << ',' << (l < static_cast<int>(r.tap_comm_power.size())
                         ? format_double(r.tap_comm_power[l])
                         : "0");
    }
    out << ',' << meta << '\n';
  }
  return out.str();
}

BootstrapSummary bootstrap_mean(std::span<const double> values,
                                std::uint64_t seed, int resamples) {
  BootstrapSummary s;
  const std::size_t n = values.size();
  if (n == 0) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(n);
  if (n == 1) {
    s.lo95 = s.hi95 = s.mean;
    return s;
  }
  Rng rng = stream_rng(seed, {purpose_tag(StreamPurpose::bootstrap)});
  std::vector<double> means(resamples);
  for (int b = 0; b < resamples; ++b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += values[rng.next_u64() % n];
    }
    means[b] = acc / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  double var = 0.0;
  for (double m : means) var += (m - s.mean) * (m - s.mean);
  s.se = std::sqrt(var / resamples);
  s.lo95 = means[static_cast<std::size_t>(0.025 * (resamples - 1))];
  s.hi95 = means[static_cast<std::size_t>(0.975 * (resamples - 1))];
  return s;
}

BootstrapSummary bootstrap_paired_diff(std::span<const double> a,
                                       std::span<const double> b,
                                       std::uint64_t seed, int resamples) {
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  return bootstrap_mean(diff, seed, resamples);
}

}  // namespace isac
