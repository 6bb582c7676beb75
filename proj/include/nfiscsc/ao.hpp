#pragma once

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "nfiscsc/beamforming.hpp"
#include "nfiscsc/fa_position.hpp"
#include "nfiscsc/ratio.hpp"
#include "nfiscsc/sensing.hpp"

namespace nfiscsc {

enum class PositionMethod { bfgs, benchmark, none };

struct AoOptions {
  PositionMethod positions = PositionMethod::bfgs;
  bool fix_ratio = false;   // pin every extraction ratio at 1 (no-semantic run)
  double varsigma = -1.0;   // stop when the worst-case rate moves by less
  int max_epochs = -1;
  bool randomize_final = true;
};

struct AoEpoch {
  double beams_ssr = 0.0;      // worst-case rate after each stage, relaxed
  double positions_ssr = 0.0;
  double ratios_ssr = 0.0;
  double zeta = -kInf;
  double rho_common = 1.0;
  VectorXd u;                  // antenna coordinates after the epoch
  double power_margin_mw = 0.0;
  double crb_margin = 0.0;
  double beam_seconds = 0.0;
  double position_seconds = 0.0;
  double ratio_seconds = 0.0;
  int sca_epochs = 0;
  int position_iters = 0;
  bool positions_accepted = false;
};

struct AoTrace {
  double initial_objective = 0.0;  // worst-case rate of the canonical start
  std::vector<AoEpoch> epochs;
  bool converged = false;
  std::string abort_reason;  // non-empty when a sub-problem failed
};

// Inclusive plateau test on the last step of the objective series (the
// canonical-start value counts as the step-zero entry).
inline bool convergence_check(const AoTrace& trace, double varsigma) {
  require(!trace.epochs.empty(), "convergence_check: no epochs recorded");
  const size_t n = trace.epochs.size();
  const double prev =
      n >= 2 ? trace.epochs[n - 2].ratios_ssr : trace.initial_objective;
  return std::abs(trace.epochs[n - 1].ratios_ssr - prev) <= varsigma;
}

struct AoResult {
  BeamformingSolution beams;
  PositionResult positions;
  RatioSolution ratios;
  AoTrace trace;
  Arrays arrays;        // final geometry
  ChannelSet channels;  // channels at the final geometry
  std::vector<double> rho;
  double objective = 0.0;             // final worst-case rate, relaxed covariances
  double randomized_objective = 0.0;  // after rank-one extraction
  bool randomized_feasible = false;
};

namespace detail {

inline double stage_seconds(const std::chrono::steady_clock::time_point& from) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - from).count();
}

inline double worst_rate(const ChannelSet& ch, const SystemConfig& cfg,
                         const std::vector<MatrixXcd>& w, const MatrixXcd& r_x,
                         const std::vector<double>& rho) {
  return worst_case_ssr(ch.users, ch.eaves, w, r_x, rho, cfg.comm_noise_mw(),
                        cfg.semantic_units_per_bit)
      .worst;
}

}  // namespace detail

// Alternating optimization over beamformers, antenna positions, and
// extraction ratios. Stops once the worst-case semantic secrecy rate moves by
// at most varsigma between consecutive epochs (inclusive), or at the epoch
// cap. `seed` only feeds the final rank-one randomization; the loop itself is
// deterministic.
inline AoResult run_ao(const SystemConfig& cfg, Arrays arrays, const Placement& placement,
                       const AoOptions& options = {}, std::uint64_t seed = 0) {
  const double varsigma = options.varsigma >= 0.0 ? options.varsigma : cfg.ao_tol;
  const int max_epochs = options.max_epochs > 0 ? options.max_epochs : cfg.max_ao_epochs;
  const int users = static_cast<int>(placement.users.size());
  const int eaves = static_cast<int>(placement.targets.size());

  AoResult res;
  res.rho.assign(static_cast<size_t>(users), 1.0);
  ChannelSet ch = build_channels(arrays, placement, cfg.wavelength());

  {
    const CanonicalPoint start =
        canonical_covariances(derive_budget(cfg, res.rho, users, eaves));
    res.trace.initial_objective = detail::worst_rate(ch, cfg, start.w, start.rx, res.rho);
  }

  const bool movable = !arrays.tx.movable_coordinates().empty();
  BeamformingSolution warm;
  for (int epoch = 0; epoch < max_epochs; ++epoch) {
    AoEpoch row;

    auto tick = std::chrono::steady_clock::now();
    try {
      res.beams = sca_iterate(ch, cfg, res.rho, warm.x.size() > 0 ? &warm : nullptr);
    } catch (const std::exception& e) {
      res.trace.abort_reason = e.what();
      break;
    }
    row.beam_seconds = detail::stage_seconds(tick);
    row.sca_epochs = static_cast<int>(res.beams.zeta_trace.size());
    row.zeta = res.beams.zeta;
    row.beams_ssr = detail::worst_rate(ch, cfg, res.beams.w_mat, res.beams.r_x, res.rho);

    row.positions_ssr = row.beams_ssr;
    tick = std::chrono::steady_clock::now();
    if (options.positions != PositionMethod::none && movable) {
      const PositionContext ctx = make_position_context(cfg, arrays.tx, placement,
                                                        res.beams.w_mat, res.beams.r_x, res.rho);
      const VectorXd u0 = arrays.tx.coordinates();
      VectorXd cand;
      double cand_hard = -kInf;
      if (options.positions == PositionMethod::bfgs) {
        res.positions = projected_bfgs(ctx, u0);
        cand = res.positions.u;
        cand_hard = res.positions.hard;
        row.position_iters = res.positions.iterations;
      } else {
        const BenchmarkResult b = benchmark_positions(ctx, u0);
        cand = b.u;
        cand_hard = b.hard;
        row.position_iters = b.steps;
        res.positions = PositionResult{};
        res.positions.u = cand;
        res.positions.hard = b.hard;
        res.positions.smooth = fa_smooth_objective(ctx, cand);
      }
      // The smoothed ascent can trade away a little of the hard minimum;
      // keep the previous geometry unless the true objective improved.
      if (cand_hard >= row.beams_ssr) {
        arrays.tx.set_coordinates(cand);
        ch = build_channels(arrays, placement, cfg.wavelength());
        row.positions_ssr = cand_hard;
        row.positions_accepted = true;
      }
    }
    row.position_seconds = detail::stage_seconds(tick);

    tick = std::chrono::steady_clock::now();
    if (!options.fix_ratio) {
      // Budget from the epigraph power values, not the raw cubic terms, so
      // the beamforming point stays power-feasible as a warm start.
      double budget = cfg.total_power_mw() - cs_power(res.beams.r_x);
      for (double t : res.beams.t_mw) budget -= t;
      res.ratios = bisection_solve(std::max(budget, 0.0), cfg.compute_nu_mw, users,
                                   cfg.rho_floor(), cfg.bisection_tol);
      res.rho = res.ratios.rho;
    } else {
      res.ratios = RatioSolution{};
      res.ratios.rho = res.rho;
      res.ratios.binding = RatioBinding::unity;
    }
    row.ratio_seconds = detail::stage_seconds(tick);
    row.rho_common = res.rho.front();
    row.ratios_ssr = detail::worst_rate(ch, cfg, res.beams.w_mat, res.beams.r_x, res.rho);

    row.u = arrays.tx.coordinates();
    double spent = cs_power(res.beams.r_x) + compute_power(res.rho, cfg.compute_nu_mw);
    for (double t : res.beams.t_mw) spent += t;
    row.power_margin_mw = cfg.total_power_mw() - spent;
    row.crb_margin =
        cfg.crb_limit - crb_extended(res.beams.r_x, cfg.radar_noise_mw(), cfg.frames,
                                     cfg.rx_nx, cfg.rx_nz);
    res.trace.epochs.push_back(std::move(row));

    warm = res.beams;
    if (convergence_check(res.trace, varsigma)) {
      res.trace.converged = true;
      break;
    }
  }

  if (options.positions == PositionMethod::none || !movable || res.positions.u.size() == 0) {
    res.positions.u = arrays.tx.coordinates();
    if (!res.trace.epochs.empty()) {
      res.positions.hard = res.trace.epochs.back().positions_ssr;
      res.positions.converged = true;
    }
  }

  res.arrays = std::move(arrays);
  res.channels = std::move(ch);
  if (!res.trace.epochs.empty()) {
    res.objective = res.trace.epochs.back().ratios_ssr;
    if (options.randomize_final && res.beams.x.size() > 0) {
      const RandomizeOutcome ro = gaussian_randomize(res.channels, cfg, res.rho, res.beams.w_mat,
                                                     res.beams.r_x, cfg.randomization_samples,
                                                     seed);
      res.beams.w_vec = ro.w;
      res.beams.recovered_objective = ro.objective;
      res.beams.recovery_feasible = ro.feasible;
      res.randomized_objective = std::max(ro.objective, 0.0);
      res.randomized_feasible = ro.feasible;
    }
  }
  return res;
}

}  // namespace nfiscsc
