// SPDX-License-Identifier: Apache-2.0
//
// isacsim: bidirectional sensing-and-communication tradeoff experiments.
//
//   isacsim tradeoff --config cfg.json --out results/
//   isacsim rician   --config cfg.json --betas -10,-5,0,5,10,15
//   isacsim power    --config cfg.json --band narrow,wide
//   isacsim converge --config cfg.json --weight 0.5 --mode full
//   isacsim validate --config cfg.json

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "isac/sweep.hpp"
#include "isac/validate.hpp"

namespace {

using namespace isac;

std::vector<DuplexMode> parse_modes(const std::string& text) {
  std::vector<DuplexMode> modes;
  std::istringstream in(text);
  std::string token;
  while (std::getline(in, token, ',')) {
    if (token == "full") {
      modes.push_back(DuplexMode::full);
    } else if (token == "half") {
      modes.push_back(DuplexMode::half);
    } else {
      throw CLI::ValidationError("--modes expects full,half");
    }
  }
  if (modes.empty()) throw CLI::ValidationError("--modes expects full,half");
  return modes;
}

std::vector<Band> parse_bands(const std::string& text) {
  std::vector<Band> bands;
  std::istringstream in(text);
  std::string token;
  while (std::getline(in, token, ',')) {
    if (token == "narrow") {
      bands.push_back(Band::narrow);
    } else if (token == "wide") {
      bands.push_back(Band::wide);
    } else {
      throw CLI::ValidationError("--band expects narrow,wide");
    }
  }
  if (bands.empty()) throw CLI::ValidationError("--band expects narrow,wide");
  return bands;
}

void write_file(const std::string& dir, const std::string& name,
                const std::string& contents) {
  std::filesystem::create_directories(dir);
  const auto path = std::filesystem::path(dir) / name;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << contents;
  std::cerr << "wrote " << path.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bidirectional ISAC tradeoff simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::string modes_text = "full,half";
  std::string bands_text;
  std::string weights_text;
  std::string betas_text = "-10,-5,0,5,10,15";
  std::uint64_t seed_override = 0;
  bool seed_set = false;
  int trials_override = 0;
  bool degrees = false;
  bool serial = false;

  app.add_option("--config", config_path, "JSON configuration file")->required();
  app.add_option("--out", out_dir, "output directory for CSV files");
  app.add_option("--modes", modes_text, "duplex modes to run (full,half)");
  app.add_option("--band", bands_text, "band override (narrow,wide)");
  app.add_option("--weights", weights_text, "weight grid, e.g. 0:1:0.1");
  app.add_option("--trials", trials_override, "number of channel realizations");
  app.add_option("--seed", seed_override, "master seed override")
      ->each([&](const std::string&) { seed_set = true; });
  app.add_flag("--degrees", degrees, "print root CRB in degrees in summaries");
  app.add_flag("--serial", serial, "run the serial reference executor");

  auto* cmd_tradeoff = app.add_subcommand("tradeoff", "S&C tradeoff sweep");
  auto* cmd_rician = app.add_subcommand("rician", "Rician-factor sweep");
  auto* cmd_power = app.add_subcommand("power", "power allocation report");
  auto* cmd_converge = app.add_subcommand("converge", "single-run iteration trace");
  auto* cmd_validate = app.add_subcommand("validate", "oracle self-checks");

  cmd_rician->add_option("--betas", betas_text, "Rician factors in dB, comma separated");
  double conv_weight = 0.5;
  std::string conv_mode = "full";
  int conv_trial = 0;
  cmd_converge->add_option("--weight", conv_weight, "tradeoff weight");
  cmd_converge->add_option("--mode", conv_mode, "duplex mode (full|half)");
  cmd_converge->add_option("--trial", conv_trial, "channel realization index");

  CLI11_PARSE(app, argc, argv);

  try {
    SystemConfig config = load_config(config_path);
    if (seed_set) config.master_seed = seed_override;
    if (trials_override > 0) config.trials = trials_override;
    if (!weights_text.empty()) config.weights = parse_weight_grid(weights_text);
    const auto modes = parse_modes(modes_text);
    const auto policy = serial ? ExecPolicy::serial : ExecPolicy::parallel;

    if (cmd_tradeoff->parsed()) {
      const auto bands = bands_text.empty()
                             ? std::vector<Band>{config.band}
                             : parse_bands(bands_text);
      for (Band band : bands) {
        const SystemConfig cfg = with_band(config, band);
        const auto rows = tradeoff_sweep(cfg, modes, policy);
        write_file(out_dir, std::string("tradeoff_") + to_string(band) + ".csv",
                   tradeoff_csv(cfg, rows));
        if (degrees) {
          for (const auto& r : rows) {
            std::cout << to_string(r.band) << ' ' << to_string(r.mode) << " w="
                      << r.weight << " seed=" << r.seed
                      << " rate=" << r.rate_sum
                      << " root_crb_deg=" << r.root_crb_deg << '\n';
          }
        }
      }
    } else if (cmd_rician->parsed()) {
      std::vector<double> betas;
      std::istringstream in(betas_text);
      std::string token;
      while (std::getline(in, token, ',')) betas.push_back(std::stod(token));
      const auto bands = bands_text.empty()
                             ? std::vector<Band>{config.band}
                             : parse_bands(bands_text);
      for (Band band : bands) {
        const SystemConfig cfg = with_band(config, band);
        const auto rows = rician_sweep(cfg, betas, modes, policy);
        write_file(out_dir, std::string("rician_") + to_string(band) + ".csv",
                   rician_csv(cfg, rows));
      }
    } else if (cmd_power->parsed()) {
      const auto bands = bands_text.empty()
                             ? std::vector<Band>{Band::narrow, Band::wide}
                             : parse_bands(bands_text);
      const auto rows = power_report(config, bands, modes, policy);
      write_file(out_dir, "power.csv", power_csv(config, rows));
    } else if (cmd_converge->parsed()) {
      const DuplexMode mode =
          conv_mode == "half" ? DuplexMode::half : DuplexMode::full;
      const auto rows = convergence_trace(config, mode, conv_weight, conv_trial);
      write_file(out_dir, "converge.csv",
                 convergence_csv(config, rows,
                                 config.band == Band::wide ? config.taps : 0));
    } else if (cmd_validate->parsed()) {
      const auto report = validate(config);
      std::cout << to_string(report);
      return report.all_pass() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
