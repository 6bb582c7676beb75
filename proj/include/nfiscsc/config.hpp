#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nfiscsc/common.hpp"
#include "nfiscsc/metrics.hpp"

namespace nfiscsc {

// Fresnel/Fraunhofer boundary 2 D^2 / lambda for an aperture of extent D.
inline double rayleigh_distance(double aperture_m, double wavelength_m) {
  require(aperture_m >= 0.0, "rayleigh_distance: aperture must be non-negative");
  require(wavelength_m > 0.0, "rayleigh_distance: wavelength must be positive");
  return 2.0 * aperture_m * aperture_m / wavelength_m;
}

struct SystemConfig {
  double carrier_hz = 50e9;
  int tx_nx = 3, tx_nz = 3;
  int rx_nx = 5, rx_nz = 5;
  int frames = 100;
  double movable_area_m2 = 0.0025;
  int users = 5;
  int targets = 2;
  int scatterers = 6;
  double cluster_radius_m = 0.25;
  double total_power_dbm = 25.0;
  double comm_noise_dbm = -30.0;
  double radar_noise_dbm = -40.0;
  double crb_limit = 0.5;
  double max_latency_s = 0.02;
  double task_bits = 0.5e6;
  double cycles_per_bit = 110.0;
  double compute_kappa = 1e-31;           // cubic frequency power coefficient, mW per Hz^3
  double compute_nu_mw = 20.0;            // compression power per nat, mW
  double semantic_units_per_bit = 1.0;
  double freq_max_hz = 10e9;
  double freq_floor_hz = 0.0;
  double similarity_floor = 0.2;
  std::vector<double> group_weights{0.25, 0.25, 0.25, 0.25};
  std::vector<double> group_probs{0.9, 0.9, 0.9, 0.9};
  bool semantic_enabled = true;

  double sca_tol = 1e-4;
  double kkt_tol = 1e-6;
  double bisection_tol = 1e-8;
  double ao_tol = 1e-3;
  double grad_fd_step = 1e-6;
  double tau_min = 1e-8;
  double armijo_c = 1e-4;
  double shrink_factor = 0.5;
  double softmin_beta = 50.0;
  double curvature_eps = 1e-12;
  int max_ao_epochs = 50;
  int max_sca_epochs = 80;
  int max_bfgs_iters = 200;
  int max_benchmark_steps = 12;
  int randomization_samples = 50;
  int mc_trials = 300;

  double wavelength() const { return kSpeedOfLight / carrier_hz; }
  double total_power_mw() const { return dbm_to_linear(total_power_dbm); }
  double comm_noise_mw() const { return dbm_to_linear(comm_noise_dbm); }
  double radar_noise_mw() const { return dbm_to_linear(radar_noise_dbm); }
  double rho_floor() const {
    return rho_lower_bound(similarity_floor, group_weights, group_probs);
  }
  // Smallest CPU frequency meeting the latency deadline.
  double min_frequency_hz() const {
    return freq_floor_hz + task_bits * cycles_per_bit / max_latency_s;
  }
  int tx_count() const { return tx_nx * tx_nz; }
  int rx_count() const { return rx_nx * rx_nz; }
  double movable_range_m() const { return std::sqrt(movable_area_m2); }
};

inline void validate(const SystemConfig& c) {
  require(c.carrier_hz > 0.0, "config: carrier_hz must be positive");
  require(c.tx_nx >= 1 && c.tx_nz >= 1, "config: transmit grid counts must be at least 1");
  require(c.rx_nx >= 1 && c.rx_nz >= 1, "config: receive grid counts must be at least 1");
  require(c.users >= 1, "config: users must be at least 1");
  require(c.targets >= 1, "config: targets must be at least 1");
  require(c.scatterers >= 1, "config: scatterers must be at least 1");
  require(c.users + c.targets <= c.tx_count(),
          "config: users + targets must not exceed transmit antenna count");
  require(c.tx_count() < c.rx_count(),
          "config: receive antenna count must exceed transmit antenna count");
  require(c.frames > c.tx_count(), "config: frames must exceed transmit antenna count");
  require(c.movable_area_m2 >= 0.0, "config: movable_area_m2 must be non-negative");
  require(c.cluster_radius_m >= 0.0, "config: cluster_radius_m must be non-negative");
  require(c.crb_limit > 0.0, "config: crb_limit must be positive");
  require(c.max_latency_s > 0.0, "config: max_latency_s must be positive");
  require(c.task_bits > 0.0, "config: task_bits must be positive");
  require(c.cycles_per_bit > 0.0, "config: cycles_per_bit must be positive");
  require(c.compute_kappa >= 0.0, "config: compute_kappa must be non-negative");
  require(c.compute_nu_mw >= 0.0, "config: compute_nu_mw must be non-negative");
  require(c.semantic_units_per_bit > 0.0, "config: semantic_units_per_bit must be positive");
  require(c.freq_max_hz > 0.0, "config: freq_max_hz must be positive");
  require(c.freq_floor_hz >= 0.0, "config: freq_floor_hz must be non-negative");
  require(c.freq_floor_hz < c.freq_max_hz, "config: freq_floor_hz must stay below freq_max_hz");
  require(c.sca_tol > 0.0 && c.kkt_tol > 0.0 && c.bisection_tol > 0.0 && c.ao_tol > 0.0,
          "config: tolerances must be positive");
  require(c.grad_fd_step > 0.0 && c.tau_min > 0.0, "config: step sizes must be positive");
  require(c.armijo_c > 0.0 && c.armijo_c < 1.0, "config: armijo_c must lie in (0,1)");
  require(c.shrink_factor > 0.0 && c.shrink_factor < 1.0,
          "config: shrink_factor must lie in (0,1)");
  require(c.softmin_beta > 0.0, "config: softmin_beta must be positive");
  require(c.curvature_eps > 0.0, "config: curvature_eps must be positive");
  require(c.max_ao_epochs >= 1 && c.max_sca_epochs >= 1 && c.max_bfgs_iters >= 1 &&
              c.max_benchmark_steps >= 1,
          "config: iteration caps must be at least 1");
  require(c.randomization_samples >= 1, "config: randomization_samples must be at least 1");
  require(c.mc_trials >= 1, "config: mc_trials must be at least 1");
  c.rho_floor();  // throws when the semantic parameters are inconsistent
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' has non-numeric value '" + v + "'");
  }
  if (used != v.size())
    throw std::invalid_argument("config: key '" + key + "' has trailing junk in value '" + v + "'");
  return out;
}

inline int parse_int(const std::string& key, const std::string& v) {
  const double d = parse_double(key, v);
  const int i = static_cast<int>(d);
  if (static_cast<double>(i) != d)
    throw std::invalid_argument("config: key '" + key + "' must be an integer, got '" + v + "'");
  return i;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on") return true;
  if (v == "0" || v == "false" || v == "off") return false;
  throw std::invalid_argument("config: key '" + key + "' must be a boolean, got '" + v + "'");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  if (out.empty()) throw std::invalid_argument("config: key '" + key + "' has an empty list");
  return out;
}

}  // namespace detail

// Flat "key = value" file; '#' starts a comment; vectors are comma-separated.
// Unknown keys are rejected so typos never silently fall back to defaults.
inline SystemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_config: cannot open '" + path + "'");
  SystemConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("load_config: line " + std::to_string(lineno) +
                                  " is not 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    using detail::parse_bool;
    using detail::parse_double;
    using detail::parse_int;
    using detail::parse_list;
    if (key == "carrier_hz") c.carrier_hz = parse_double(key, val);
    else if (key == "tx_nx") c.tx_nx = parse_int(key, val);
    else if (key == "tx_nz") c.tx_nz = parse_int(key, val);
    else if (key == "rx_nx") c.rx_nx = parse_int(key, val);
    else if (key == "rx_nz") c.rx_nz = parse_int(key, val);
    else if (key == "frames") c.frames = parse_int(key, val);
    else if (key == "movable_area_m2") c.movable_area_m2 = parse_double(key, val);
    else if (key == "users") c.users = parse_int(key, val);
    else if (key == "targets") c.targets = parse_int(key, val);
    else if (key == "scatterers") c.scatterers = parse_int(key, val);
    else if (key == "cluster_radius_m") c.cluster_radius_m = parse_double(key, val);
    else if (key == "total_power_dbm") c.total_power_dbm = parse_double(key, val);
    else if (key == "comm_noise_dbm") c.comm_noise_dbm = parse_double(key, val);
    else if (key == "radar_noise_dbm") c.radar_noise_dbm = parse_double(key, val);
    else if (key == "crb_limit") c.crb_limit = parse_double(key, val);
    else if (key == "max_latency_s") c.max_latency_s = parse_double(key, val);
    else if (key == "task_bits") c.task_bits = parse_double(key, val);
    else if (key == "cycles_per_bit") c.cycles_per_bit = parse_double(key, val);
    else if (key == "compute_kappa") c.compute_kappa = parse_double(key, val);
    else if (key == "compute_nu_mw") c.compute_nu_mw = parse_double(key, val);
    else if (key == "semantic_units_per_bit") c.semantic_units_per_bit = parse_double(key, val);
    else if (key == "freq_max_hz") c.freq_max_hz = parse_double(key, val);
    else if (key == "freq_floor_hz") c.freq_floor_hz = parse_double(key, val);
    else if (key == "similarity_floor") c.similarity_floor = parse_double(key, val);
    else if (key == "group_weights") c.group_weights = parse_list(key, val);
    else if (key == "group_probs") c.group_probs = parse_list(key, val);
    else if (key == "semantic_enabled") c.semantic_enabled = parse_bool(key, val);
    else if (key == "sca_tol") c.sca_tol = parse_double(key, val);
    else if (key == "kkt_tol") c.kkt_tol = parse_double(key, val);
    else if (key == "bisection_tol") c.bisection_tol = parse_double(key, val);
    else if (key == "ao_tol") c.ao_tol = parse_double(key, val);
    else if (key == "grad_fd_step") c.grad_fd_step = parse_double(key, val);
    else if (key == "tau_min") c.tau_min = parse_double(key, val);
    else if (key == "armijo_c") c.armijo_c = parse_double(key, val);
    else if (key == "shrink_factor") c.shrink_factor = parse_double(key, val);
    else if (key == "softmin_beta") c.softmin_beta = parse_double(key, val);
    else if (key == "curvature_eps") c.curvature_eps = parse_double(key, val);
    else if (key == "max_ao_epochs") c.max_ao_epochs = parse_int(key, val);
    else if (key == "max_sca_epochs") c.max_sca_epochs = parse_int(key, val);
    else if (key == "max_bfgs_iters") c.max_bfgs_iters = parse_int(key, val);
    else if (key == "max_benchmark_steps") c.max_benchmark_steps = parse_int(key, val);
    else if (key == "randomization_samples") c.randomization_samples = parse_int(key, val);
    else if (key == "mc_trials") c.mc_trials = parse_int(key, val);
    else
      throw std::invalid_argument("load_config: unknown key '" + key + "' at line " +
                                  std::to_string(lineno));
  }
  validate(c);
  return c;
}

}  // namespace nfiscsc
