#pragma once

#include <atomic>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <functional>
#include <thread>

#include "nfiscsc/ao.hpp"

namespace nfiscsc {

enum class ExperimentId {
  convergence,
  per_antenna_gain,
  mse_vs_crb,
  ssr_vs_crb,
  compute_tradeoff,
  antenna_scaling,
};

inline const char* experiment_name(ExperimentId id) {
  switch (id) {
    case ExperimentId::convergence: return "convergence";
    case ExperimentId::per_antenna_gain: return "per-antenna-gain";
    case ExperimentId::mse_vs_crb: return "mse-vs-crb";
    case ExperimentId::ssr_vs_crb: return "ssr-vs-crb";
    case ExperimentId::compute_tradeoff: return "compute-tradeoff";
    case ExperimentId::antenna_scaling: return "antenna-scaling";
  }
  throw std::logic_error("experiment_name: bad id");
}

inline ExperimentId parse_experiment_id(const std::string& s) {
  for (ExperimentId id :
       {ExperimentId::convergence, ExperimentId::per_antenna_gain, ExperimentId::mse_vs_crb,
        ExperimentId::ssr_vs_crb, ExperimentId::compute_tradeoff, ExperimentId::antenna_scaling})
    if (s == experiment_name(id)) return id;
  throw std::invalid_argument("parse_experiment_id: unknown experiment '" + s + "'");
}

// Sweep meaning per experiment: convergence and per-antenna-gain sweep the
// movable range in meters, mse-vs-crb and ssr-vs-crb the CRB upper bound,
// compute-tradeoff the per-target task size in bits, antenna-scaling the
// transmit antenna count.
inline std::vector<double> default_grid(ExperimentId id, const SystemConfig& cfg) {
  switch (id) {
    case ExperimentId::convergence: return {cfg.movable_range_m()};
    case ExperimentId::per_antenna_gain: return {0.0, 0.025, 0.05, 0.1};
    case ExperimentId::mse_vs_crb: return {0.3, 0.5, 0.8, 1.0};
    case ExperimentId::ssr_vs_crb: return {0.3, 0.4, 0.5, 0.7, 1.0};
    case ExperimentId::compute_tradeoff: return {0.25e6, 0.5e6, 1.0e6, 1.8e6};
    case ExperimentId::antenna_scaling: return {7, 8, 9};
  }
  throw std::logic_error("default_grid: bad id");
}

struct ExperimentSpec {
  ExperimentId id = ExperimentId::convergence;
  std::vector<double> grid;
  std::vector<std::uint64_t> seeds{0};
  std::string out_path;
};

struct ResultRow {
  std::string experiment;
  std::uint64_t seed = 0;
  double sweep_value = 0.0;
  std::string metric;
  double value = 0.0;
  double wall_seconds = 0.0;
};

namespace detail {

// Round-trip safe decimal rendering.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Short rendering for metric labels.
inline std::string format_label(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

inline const char* csv_header() { return "experiment,seed,sweep_value,metric,value,wall_time_s"; }

inline void emit_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("emit_csv: cannot open '" + path + "' for writing");
  out << csv_header() << '\n';
  for (const ResultRow& r : rows)
    out << detail::csv_field(r.experiment) << ',' << r.seed << ','
        << detail::format_double(r.sweep_value) << ',' << detail::csv_field(r.metric) << ','
        << detail::format_double(r.value) << ',' << detail::format_double(r.wall_seconds) << '\n';
  out.flush();
  if (!out) throw std::runtime_error("emit_csv: write to '" + path + "' failed");
}

inline std::vector<ResultRow> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_csv: '" + path + "' is empty");
  if (line != csv_header())
    throw std::runtime_error("read_csv: '" + path + "' has an unexpected header");
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 6)
      throw std::runtime_error("read_csv: malformed row in '" + path + "'");
    ResultRow r;
    r.experiment = f[0];
    r.seed = std::stoull(f[1]);
    r.sweep_value = std::stod(f[2]);
    r.metric = f[3];
    r.value = std::stod(f[4]);
    r.wall_seconds = std::stod(f[5]);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline AoOptions pipeline_options(const SystemConfig& cfg, PositionMethod positions) {
  AoOptions opt;
  opt.positions = positions;
  opt.fix_ratio = !cfg.semantic_enabled;
  return opt;
}

// Fixed-position baseline: every antenna frozen at its nominal grid point.
inline AoResult baseline_fpa(const SystemConfig& cfg, const Arrays& arrays,
                             const Placement& placement, std::uint64_t seed = 0) {
  Arrays a = arrays;
  a.tx.pos = a.tx.nominal;
  a.tx = a.tx.collapsed();
  return run_ao(cfg, a, placement, pipeline_options(cfg, PositionMethod::none), seed);
}

// Antenna positions drawn uniformly inside their boxes, then frozen; the rest
// of the pipeline runs as usual. Deterministic per seed.
inline Arrays randomize_positions(const Arrays& arrays, std::uint64_t seed) {
  Arrays a = arrays;
  Rng rng(detail::mix_seed(seed, 0x0fa));
  for (int i = 0; i < a.tx.count(); ++i)
    for (int axis = 0; axis < 2; ++axis)
      a.tx.pos(i, axis) = a.tx.box_lo(i, axis) == a.tx.box_hi(i, axis)
                              ? a.tx.box_lo(i, axis)
                              : rng.uniform(a.tx.box_lo(i, axis), a.tx.box_hi(i, axis));
  a.tx = a.tx.collapsed();
  return a;
}

inline AoResult baseline_random_fa(const SystemConfig& cfg, const Arrays& arrays,
                                   const Placement& placement, std::uint64_t seed) {
  return run_ao(cfg, randomize_positions(arrays, seed), placement,
                pipeline_options(cfg, PositionMethod::none), seed);
}

// Fixed uniform planar array with an explicit element pitch (dense lambda/2
// or a sparse approximation) and no movable boxes.
inline Arrays upa_arrays(const SystemConfig& cfg, double pitch) {
  require(pitch > 0.0, "upa_arrays: pitch must be positive");
  SystemConfig c = cfg;
  c.movable_area_m2 = 0.0;
  Arrays a = build_arrays(c);
  a.tx.pos *= pitch / (c.wavelength() / 2.0);
  a.tx.nominal = a.tx.pos;
  a.tx.box_lo = a.tx.pos;
  a.tx.box_hi = a.tx.pos;
  return a;
}

// Mean squared error of the least-squares response estimate under stochastic
// transmit frames, averaged over `trials` draws of both frames and noise.
inline double monte_carlo_mse(const MatrixXcd& g, const MatrixXcd& r_x, int frames,
                              double sigma_r2, int trials, std::uint64_t seed) {
  require(trials >= 1, "monte_carlo_mse: need at least one trial");
  const int nr = static_cast<int>(g.rows());
  double acc = 0.0;
  for (int t = 0; t < trials; ++t) {
    const MatrixXcd x = synthesize_transmit(r_x, frames, TransmitMode::kStochastic,
                                            detail::mix_seed(seed, 2 * t));
    Rng noise(detail::mix_seed(seed, 2 * t + 1));
    MatrixXcd z = g * x;
    for (int m = 0; m < nr; ++m)
      for (int f = 0; f < frames; ++f) z(m, f) += std::sqrt(sigma_r2) * noise.complex_gaussian();
    acc += (ls_estimate(z, x) - g).squaredNorm();
  }
  return acc / trials;
}

namespace detail {

inline double now_seconds(const std::chrono::steady_clock::time_point& from) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - from).count();
}

// One job per (seed, grid point); jobs land in index-order slots so the row
// stream is independent of scheduling.
inline std::vector<std::vector<ResultRow>> run_jobs(
    size_t count, const std::function<std::vector<ResultRow>(size_t)>& job) {
  std::vector<std::vector<ResultRow>> slots(count);
  const unsigned workers =
      std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                      static_cast<unsigned>(count)));
  if (workers <= 1) {
    for (size_t i = 0; i < count; ++i) slots[i] = job(i);
    return slots;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) slots[i] = job(i);
    });
  for (std::thread& t : pool) t.join();
  return slots;
}

inline ResultRow make_row(const ExperimentSpec& spec, std::uint64_t seed, double sweep,
                          const std::string& metric, double value, double wall) {
  ResultRow r;
  r.experiment = experiment_name(spec.id);
  r.seed = seed;
  r.sweep_value = sweep;
  r.metric = metric;
  r.value = value;
  r.wall_seconds = wall;
  return r;
}

inline bool aborted(const AoResult& res) {
  return !res.trace.abort_reason.empty() || res.trace.epochs.empty();
}

// nx * nz = n with the most square factorization available.
inline void factor_grid(int n, int& nx, int& nz) {
  nx = static_cast<int>(std::sqrt(static_cast<double>(n)));
  while (nx > 1 && n % nx != 0) --nx;
  nz = n / nx;
}

inline std::vector<ResultRow> convergence_job(const ExperimentSpec& spec, SystemConfig cfg,
                                              std::uint64_t seed, double range_m) {
  cfg.movable_area_m2 = range_m * range_m;
  validate(cfg);
  const Arrays arrays = build_arrays(cfg);
  const Placement placement = generate_placements(cfg, arrays, seed);
  const AoResult res =
      run_ao(cfg, arrays, placement, pipeline_options(cfg, PositionMethod::bfgs), seed);
  if (aborted(res)) throw std::runtime_error("convergence: " + res.trace.abort_reason);
  std::vector<ResultRow> rows;
  const std::string metric = "worst_ssr_range_" + format_label(range_m);
  for (size_t e = 0; e < res.trace.epochs.size(); ++e) {
    const AoEpoch& ep = res.trace.epochs[e];
    rows.push_back(make_row(spec, seed, static_cast<double>(e + 1), metric, ep.ratios_ssr,
                            ep.beam_seconds + ep.position_seconds + ep.ratio_seconds));
  }
  return rows;
}

inline std::vector<ResultRow> gain_job(const ExperimentSpec& spec, SystemConfig cfg,
                                       std::uint64_t seed, double range_m) {
  cfg.movable_area_m2 = range_m * range_m;
  validate(cfg);
  const Arrays arrays = build_arrays(cfg);
  const Placement placement = generate_placements(cfg, arrays, seed);

  struct Run {
    const char* tag;
    AoResult res;
    double wall = 0.0;
  };
  std::vector<Run> runs;
  const auto record = [&](const char* tag, const std::function<AoResult()>& fn) {
    const auto tick = std::chrono::steady_clock::now();
    runs.push_back({tag, fn(), 0.0});
    runs.back().wall = now_seconds(tick);
  };
  record("fpa", [&] { return baseline_fpa(cfg, arrays, placement, seed); });
  record("random", [&] { return baseline_random_fa(cfg, arrays, placement, seed); });
  record("bfgs", [&] {
    return run_ao(cfg, arrays, placement, pipeline_options(cfg, PositionMethod::bfgs), seed);
  });
  record("benchmark", [&] {
    return run_ao(cfg, arrays, placement, pipeline_options(cfg, PositionMethod::benchmark), seed);
  });
  for (const Run& r : runs)
    if (aborted(r.res))
      throw std::runtime_error(std::string("per-antenna-gain ") + r.tag + ": " +
                               r.res.trace.abort_reason);

  std::vector<ResultRow> rows;
  for (const Run& r : runs)
    rows.push_back(make_row(spec, seed, range_m, std::string("ssr_") + r.tag, r.res.objective,
                            r.wall));
  const double fpa = runs[0].res.objective;
  const double per_antenna = fpa * cfg.tx_count();
  for (size_t i = 1; i < runs.size(); ++i)
    rows.push_back(make_row(spec, seed, range_m, std::string("gain_") + runs[i].tag,
                            100.0 * (runs[i].res.objective - fpa) / per_antenna, runs[i].wall));
  return rows;
}

inline std::vector<ResultRow> mse_job(const ExperimentSpec& spec, SystemConfig cfg,
                                      std::uint64_t seed, double xi) {
  cfg.crb_limit = xi;
  validate(cfg);
  const auto tick = std::chrono::steady_clock::now();
  const Arrays arrays = build_arrays(cfg);
  const Placement placement = generate_placements(cfg, arrays, seed);
  const AoResult res =
      run_ao(cfg, arrays, placement, pipeline_options(cfg, PositionMethod::bfgs), seed);
  if (aborted(res)) throw std::runtime_error("mse-vs-crb: " + res.trace.abort_reason);
  const double crb = crb_extended(res.beams.r_x, cfg.radar_noise_mw(), cfg.frames, cfg.rx_nx,
                                  cfg.rx_nz);
  const double mse = monte_carlo_mse(res.channels.echo, res.beams.r_x, cfg.frames,
                                     cfg.radar_noise_mw(), cfg.mc_trials,
                                     mix_seed(seed, 0x3c));
  const double wall = now_seconds(tick);
  return {make_row(spec, seed, xi, "crb", crb, wall),
          make_row(spec, seed, xi, "mse", mse, wall),
          make_row(spec, seed, xi, "mse_over_crb", mse / crb, wall)};
}

inline std::vector<ResultRow> ssr_crb_job(const ExperimentSpec& spec, SystemConfig cfg,
                                          std::uint64_t seed, double xi) {
  cfg.crb_limit = xi;
  validate(cfg);
  const auto tick = std::chrono::steady_clock::now();
  const Arrays arrays = build_arrays(cfg);
  const Placement placement = generate_placements(cfg, arrays, seed);
  const AoResult res =
      run_ao(cfg, arrays, placement, pipeline_options(cfg, PositionMethod::bfgs), seed);
  if (aborted(res)) throw std::runtime_error("ssr-vs-crb: " + res.trace.abort_reason);
  const double wall = now_seconds(tick);
  return {make_row(spec, seed, xi, "worst_ssr", res.objective, wall),
          make_row(spec, seed, xi, "worst_ssr_randomized", res.randomized_objective, wall),
          make_row(spec, seed, xi, "rho", res.rho.front(), wall)};
}

inline std::vector<ResultRow> compute_job(const ExperimentSpec& spec, SystemConfig cfg,
                                          std::uint64_t seed, double bits) {
  cfg.task_bits = bits;
  validate(cfg);
  const auto tick = std::chrono::steady_clock::now();
  const Arrays arrays = build_arrays(cfg);
  const Placement placement = generate_placements(cfg, arrays, seed);
  const AoResult res =
      run_ao(cfg, arrays, placement, pipeline_options(cfg, PositionMethod::bfgs), seed);
  if (aborted(res)) throw std::runtime_error("compute-tradeoff: " + res.trace.abort_reason);
  double cube_mw = 0.0;
  for (double f : res.beams.f_hz) cube_mw += cfg.compute_kappa * f * f * f;
  const double wall = now_seconds(tick);
  return {make_row(spec, seed, bits, "worst_ssr", res.objective, wall),
          make_row(spec, seed, bits, "rho", res.rho.front(), wall),
          make_row(spec, seed, bits, "compute_power_mw", cube_mw, wall)};
}

inline std::vector<ResultRow> scaling_job(const ExperimentSpec& spec, SystemConfig cfg,
                                          std::uint64_t seed, double n_value) {
  const int n = static_cast<int>(std::llround(n_value));
  require(n >= 1 && std::abs(n_value - n) < 1e-9,
          "antenna-scaling: grid values must be integer antenna counts");
  factor_grid(n, cfg.tx_nx, cfg.tx_nz);
  validate(cfg);
  const Arrays fa = build_arrays(cfg);
  const Placement placement = generate_placements(cfg, fa, seed);
  const double lam = cfg.wavelength();

  std::vector<ResultRow> rows;
  const auto record = [&](const char* tag, const Arrays& arrays, PositionMethod method) {
    const auto tick = std::chrono::steady_clock::now();
    const AoResult res = run_ao(cfg, arrays, placement, pipeline_options(cfg, method), seed);
    if (aborted(res))
      throw std::runtime_error(std::string("antenna-scaling ") + tag + ": " +
                               res.trace.abort_reason);
    rows.push_back(make_row(spec, seed, n, std::string("ssr_") + tag, res.objective,
                            now_seconds(tick)));
  };
  record("fa_bfgs", fa, PositionMethod::bfgs);
  record("dense_upa", upa_arrays(cfg, lam / 2.0), PositionMethod::none);
  record("sparse_upa", upa_arrays(cfg, 4.0 * lam), PositionMethod::none);
  return rows;
}

}  // namespace detail

// Runs every (seed, grid point) job of the sweep. Failed jobs contribute a
// single row with metric "error" and value 1 and the sweep continues; all
// values are reproducible from (spec, config, seeds), wall times are not.
inline std::vector<ResultRow> run_experiment(const ExperimentSpec& spec,
                                             const SystemConfig& cfg) {
  require(!spec.grid.empty(), "run_experiment: empty grid");
  require(!spec.seeds.empty(), "run_experiment: empty seed list");
  const size_t jobs = spec.seeds.size() * spec.grid.size();
  const auto slots = detail::run_jobs(jobs, [&](size_t j) -> std::vector<ResultRow> {
    const std::uint64_t seed = spec.seeds[j / spec.grid.size()];
    const double sweep = spec.grid[j % spec.grid.size()];
    const auto tick = std::chrono::steady_clock::now();
    try {
      switch (spec.id) {
        case ExperimentId::convergence: return detail::convergence_job(spec, cfg, seed, sweep);
        case ExperimentId::per_antenna_gain: return detail::gain_job(spec, cfg, seed, sweep);
        case ExperimentId::mse_vs_crb: return detail::mse_job(spec, cfg, seed, sweep);
        case ExperimentId::ssr_vs_crb: return detail::ssr_crb_job(spec, cfg, seed, sweep);
        case ExperimentId::compute_tradeoff: return detail::compute_job(spec, cfg, seed, sweep);
        case ExperimentId::antenna_scaling: return detail::scaling_job(spec, cfg, seed, sweep);
      }
      throw std::logic_error("run_experiment: bad id");
    } catch (const std::exception&) {
      return {detail::make_row(spec, seed, sweep, "error", 1.0, detail::now_seconds(tick))};
    }
  });
  std::vector<ResultRow> rows;
  for (const auto& slot : slots) rows.insert(rows.end(), slot.begin(), slot.end());
  return rows;
}

inline int count_failures(const std::vector<ResultRow>& rows) {
  int n = 0;
  for (const ResultRow& r : rows) n += r.metric == "error" ? 1 : 0;
  return n;
}

}  // namespace nfiscsc
