// SPDX-License-Identifier: Apache-2.0

#include "isac/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace isac {

namespace {
constexpr double kPi = 3.14159265358979323846;

std::vector<double> default_weights() {
  std::vector<double> w;
  for (int i = 0; i <= 10; ++i) w.push_back(0.1 * i);
  return w;
}
}  // namespace

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

TimingInfo SystemConfig::timing() const {
  return derive_timing(band, bandwidth_hz, coherence_time_s, distance_m);
}

LinkBudget SystemConfig::budget() const {
  LinkBudget b;
  b.rho_c = rho_c;
  b.rho_s = rho_s;
  b.eta = eta;
  b.rho_si = rho_si;
  b.half_cpi = timing().cpi_samples / 2;
  return b;
}

ChannelParams SystemConfig::channel_params() const {
  ChannelParams p;
  p.num_antennas = antennas;
  p.spacing_ratio = spacing_ratio;
  p.theta = {theta_a_deg * kPi / 180.0, theta_b_deg * kPi / 180.0};
  const double wavelength = kSpeedOfLight / carrier_hz;
  const double doppler = 2.0 * speed_mps / wavelength;
  p.doppler_hz = {doppler, doppler};
  p.rician_beta = rician_beta;
  if (band == Band::wide) {
    p.taps = taps;
    p.si_taps = si_taps;
    p.pdp = power_delay_profile(taps, pdp_decay);
    p.pdp_si = power_delay_profile(si_taps, pdp_decay);
    p.rician_beta0 = invert_modified_rician_factor(rician_beta, p.pdp);
    p.si_delay_samples = 0;
  }
  return p;
}

double SystemConfig::doppler_phase_step() const {
  const double wavelength = kSpeedOfLight / carrier_hz;
  return 2.0 * kPi * (2.0 * speed_mps / wavelength) / bandwidth_hz;
}

ScaOptions SystemConfig::sca_options(double weight, DuplexMode mode) const {
  ScaOptions o;
  o.weight = weight;
  o.mode = mode;
  o.mu = mu;
  o.objective_tol = sca_objective_tol;
  o.kkt_tol = sca_kkt_tol;
  o.max_iterations = sca_max_iterations;
  o.restarts = sca_restarts;
  o.solver_tol = sca_solver_tol;
  return o;
}

std::string SystemConfig::canonical_json() const {
  nlohmann::json j;  // std::map-backed: keys serialize sorted
  j["antennas"] = antennas;
  j["band"] = band == Band::narrow ? "narrow" : "wide";
  j["bandwidth_hz"] = bandwidth_hz;
  j["coherence_time_s"] = coherence_time_s;
  j["distance_m"] = distance_m;
  j["theta_a_deg"] = theta_a_deg;
  j["theta_b_deg"] = theta_b_deg;
  j["spacing_ratio"] = spacing_ratio;
  j["rho_c"] = rho_c;
  j["rho_s"] = rho_s;
  j["eta"] = eta;
  j["rho_si"] = rho_si;
  j["mu"] = mu;
  j["rician_beta"] = rician_beta;
  j["taps"] = taps;
  j["si_taps"] = si_taps;
  j["pdp_decay"] = pdp_decay;
  j["speed_mps"] = speed_mps;
  j["carrier_hz"] = carrier_hz;
  j["trials"] = trials;
  j["master_seed"] = master_seed;
  j["weights"] = weights;
  j["sca_objective_tol"] = sca_objective_tol;
  j["sca_kkt_tol"] = sca_kkt_tol;
  j["sca_max_iterations"] = sca_max_iterations;
  j["sca_restarts"] = sca_restarts;
  j["sca_solver_tol"] = sca_solver_tol;
  return j.dump();
}

std::string SystemConfig::hash() const {
  const std::string s = canonical_json();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

std::vector<double> parse_weight_grid(const std::string& text) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    double start = 0.0, end = 0.0, step = 0.0;
    char c1 = 0, c2 = 0;
    std::istringstream in(text);
    if (!(in >> start >> c1 >> end >> c2 >> step) || c1 != ':' || c2 != ':' ||
        !(step > 0.0)) {
      throw std::invalid_argument("parse_weight_grid: expected start:end:step");
    }
    for (double w = start; w <= end + 1e-12; w += step) {
      out.push_back(std::min(std::max(std::round(w / step) * step, 0.0), 1.0));
    }
  } else {
    std::istringstream in(text);
    std::string token;
    while (std::getline(in, token, ',')) {
      if (!token.empty()) out.push_back(std::stod(token));
    }
  }
  if (out.empty()) throw std::invalid_argument("parse_weight_grid: empty grid");
  for (double w : out) {
    if (w < 0.0 || w > 1.0) throw std::invalid_argument("parse_weight_grid: weights must lie in [0, 1]");
  }
  return out;
}

SystemConfig parse_config(const std::string& json_text) {
  const nlohmann::json j = nlohmann::json::parse(json_text);
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");

  static const std::set<std::string> known = {
      "antennas",      "band",           "bandwidth_hz",  "coherence_time_s",
      "distance_m",    "theta_a_deg",    "theta_b_deg",   "spacing_ratio",
      "rho_c_db",      "rho_s_db",       "eta_db",        "rho_si_db",
      "mu",            "rician_beta_db", "taps",          "si_taps",
      "pdp_decay",     "speed_mps",      "carrier_hz",    "trials",
      "master_seed",   "weights",        "sca"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!known.count(key)) {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }

  SystemConfig c;
  c.weights = default_weights();
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).template get<std::decay_t<decltype(field)>>();
  };
  get("antennas", c.antennas);
  if (j.contains("band")) {
    const std::string b = j.at("band").get<std::string>();
    if (b == "narrow") {
      c.band = Band::narrow;
    } else if (b == "wide") {
      c.band = Band::wide;
    } else {
      throw std::invalid_argument("config: band must be 'narrow' or 'wide'");
    }
  }
  get("bandwidth_hz", c.bandwidth_hz);
  get("coherence_time_s", c.coherence_time_s);
  get("distance_m", c.distance_m);
  get("theta_a_deg", c.theta_a_deg);
  get("theta_b_deg", c.theta_b_deg);
  get("spacing_ratio", c.spacing_ratio);
  get("mu", c.mu);
  get("taps", c.taps);
  get("si_taps", c.si_taps);
  get("pdp_decay", c.pdp_decay);
  get("speed_mps", c.speed_mps);
  get("carrier_hz", c.carrier_hz);
  get("trials", c.trials);
  get("master_seed", c.master_seed);

  c.rho_c = db_to_linear(j.value("rho_c_db", 15.0));
  c.rho_s = db_to_linear(j.value("rho_s_db", 7.0));
  c.eta = db_to_linear(j.value("eta_db", 50.0));
  c.rho_si = db_to_linear(j.value("rho_si_db", -80.0));
  c.rician_beta = db_to_linear(j.value("rician_beta_db", 0.0));

  if (j.contains("weights")) {
    const auto& w = j.at("weights");
    if (w.is_string()) {
      c.weights = parse_weight_grid(w.get<std::string>());
    } else {
      c.weights = w.get<std::vector<double>>();
    }
  }
  if (j.contains("sca")) {
    const auto& s = j.at("sca");
    static const std::set<std::string> sca_known = {
        "objective_tol", "kkt_tol", "max_iterations", "restarts", "solver_tol"};
    for (const auto& [key, value] : s.items()) {
      (void)value;
      if (!sca_known.count(key)) {
        throw std::invalid_argument("config: unknown key 'sca." + key + "'");
      }
    }
    c.sca_objective_tol = s.value("objective_tol", c.sca_objective_tol);
    c.sca_kkt_tol = s.value("kkt_tol", c.sca_kkt_tol);
    c.sca_max_iterations = s.value("max_iterations", c.sca_max_iterations);
    c.sca_restarts = s.value("restarts", c.sca_restarts);
    c.sca_solver_tol = s.value("solver_tol", c.sca_solver_tol);
  }

  if (c.antennas < 1) throw std::invalid_argument("config: need at least one antenna");
  if (c.band == Band::wide && c.taps > c.antennas) {
    throw std::invalid_argument("config: taps must not exceed antennas");
  }
  if (c.trials < 1) throw std::invalid_argument("config: need at least one trial");
  for (double w : c.weights) {
    if (w < 0.0 || w > 1.0) throw std::invalid_argument("config: weights must lie in [0, 1]");
  }
  return c;
}

SystemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace isac
