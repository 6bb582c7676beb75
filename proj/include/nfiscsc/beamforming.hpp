#pragma once

#include <optional>

#include "nfiscsc/channel.hpp"
#include "nfiscsc/config.hpp"
#include "nfiscsc/convex.hpp"
#include "nfiscsc/metrics.hpp"

namespace nfiscsc {

// Affine functional of one beamformer block and the transmit covariance:
// value = Re Tr(cw W_k) + Re Tr(cr R_x) + c0. Zero-size matrices drop out.
struct AffineWR {
  MatrixXcd cw, cr;
  double c0 = 0.0;

  double value(const MatrixXcd& w, const MatrixXcd& rx) const {
    double v = c0;
    if (cw.size() > 0) v += (cw * w).trace().real();
    if (cr.size() > 0) v += (cr * rx).trace().real();
    return v;
  }
};

// First-order surrogate of every (user, eavesdropper) pair objective around
// one expansion point: the concave logs stay exact, the convex -log terms are
// replaced by their tangents at (b_exp, d_exp).
struct LinearizedTerms {
  int users = 0, eaves = 0;
  std::vector<double> gamma;             // iota / (rho_k ln 2): ln -> semantic units
  std::vector<AffineWR> a, b;            // per user
  std::vector<AffineWR> d;               // per eavesdropper
  std::vector<std::vector<AffineWR>> c;  // [user][eavesdropper]
  VectorXd b_exp, d_exp;

  double exact(int k, int l, const MatrixXcd& w_k, const MatrixXcd& rx) const {
    const size_t ku = static_cast<size_t>(k), lu = static_cast<size_t>(l);
    return gamma[ku] * (std::log(a[ku].value(w_k, rx)) - std::log(b[ku].value(w_k, rx)) +
                        std::log(c[ku][lu].value(w_k, rx)) - std::log(d[lu].value(w_k, rx)));
  }

  double minorant(int k, int l, const MatrixXcd& w_k, const MatrixXcd& rx) const {
    const size_t ku = static_cast<size_t>(k), lu = static_cast<size_t>(l);
    const double bv = b[ku].value(w_k, rx), dv = d[lu].value(w_k, rx);
    return gamma[ku] * (std::log(a[ku].value(w_k, rx)) + std::log(c[ku][lu].value(w_k, rx)) -
                        std::log(b_exp(k)) - (bv - b_exp(k)) / b_exp(k) - std::log(d_exp(l)) -
                        (dv - d_exp(l)) / d_exp(l));
  }

  double exact_min(const std::vector<MatrixXcd>& w, const MatrixXcd& rx) const {
    double worst = kInf;
    for (int k = 0; k < users; ++k)
      for (int l = 0; l < eaves; ++l)
        worst = std::min(worst, exact(k, l, w[static_cast<size_t>(k)], rx));
    return worst;
  }

  double minorant_min(const std::vector<MatrixXcd>& w, const MatrixXcd& rx) const {
    double worst = kInf;
    for (int k = 0; k < users; ++k)
      for (int l = 0; l < eaves; ++l)
        worst = std::min(worst, minorant(k, l, w[static_cast<size_t>(k)], rx));
    return worst;
  }
};

inline LinearizedTerms linearize(const ChannelSet& ch, const std::vector<MatrixXcd>& w_e,
                                 const MatrixXcd& rx_e, const std::vector<double>& rho,
                                 double iota, double noise_mw) {
  const int nk = static_cast<int>(ch.users.size());
  const int nl = static_cast<int>(ch.eaves.size());
  require(static_cast<int>(w_e.size()) == nk, "linearize: one beamformer per user");
  require(static_cast<int>(rho.size()) == nk, "linearize: one ratio per user");

  LinearizedTerms t;
  t.users = nk;
  t.eaves = nl;
  t.b_exp.resize(nk);
  t.d_exp.resize(nl);
  std::vector<MatrixXcd> hu, he;
  for (int k = 0; k < nk; ++k) {
    const RowVectorXcd& h = ch.users[static_cast<size_t>(k)];
    hu.push_back(h.adjoint() * h);
    t.gamma.push_back(iota / (rho[static_cast<size_t>(k)] * std::log(2.0)));
    t.a.push_back({MatrixXcd(), hu.back(), noise_mw});
    t.b.push_back({-hu.back(), hu.back(), noise_mw});
  }
  for (int l = 0; l < nl; ++l) {
    const RowVectorXcd& g = ch.eaves[static_cast<size_t>(l)];
    he.push_back(g.adjoint() * g);
    t.d.push_back({MatrixXcd(), he.back(), noise_mw});
  }
  t.c.resize(static_cast<size_t>(nk));
  for (int k = 0; k < nk; ++k)
    for (int l = 0; l < nl; ++l)
      t.c[static_cast<size_t>(k)].push_back({-he[static_cast<size_t>(l)],
                                             he[static_cast<size_t>(l)], noise_mw});

  for (int k = 0; k < nk; ++k) {
    t.b_exp(k) = t.b[static_cast<size_t>(k)].value(w_e[static_cast<size_t>(k)], rx_e);
    require(t.b_exp(k) > 0.0, "linearize: expansion point has a non-positive residual power");
  }
  for (int l = 0; l < nl; ++l) {
    t.d_exp(l) = t.d[static_cast<size_t>(l)].value(MatrixXcd(), rx_e);
    require(t.d_exp(l) > 0.0, "linearize: expansion point has a non-positive intercept power");
  }
  return t;
}

// Problem-level scalars shared by the assembly and the canonical start.
// Frequencies are carried in GHz so the cubic compute term stays at unit
// scale next to milliwatt powers.
struct BudgetScalars {
  int nt = 0, users = 0, eaves = 0;
  double cubic_coef = 0.0;       // mW per GHz^3
  double f_floor_ghz = 0.0;
  double freq_budget_ghz = 0.0;
  double power_budget_mw = 0.0;  // transmit + compute-epigraph budget
  double crb_trace_cap = 0.0;
};

inline BudgetScalars derive_budget(const SystemConfig& cfg, const std::vector<double>& rho,
                                   int users, int eaves) {
  BudgetScalars b;
  b.nt = cfg.tx_count();
  b.users = users;
  b.eaves = eaves;
  b.cubic_coef = cfg.compute_kappa * cfg.cycles_per_bit * 1e27;
  b.f_floor_ghz = cfg.min_frequency_hz() / 1e9;
  b.freq_budget_ghz = cfg.freq_max_hz / 1e9;
  b.power_budget_mw = cfg.total_power_mw() - compute_power(rho, cfg.compute_nu_mw);
  b.crb_trace_cap = cfg.frames * cfg.crb_limit / (cfg.radar_noise_mw() * cfg.rx_count());

  if (eaves * b.f_floor_ghz >= b.freq_budget_ghz)
    throw std::runtime_error("derive_budget: frequency budget cannot meet the latency floor");
  const double proc_floor =
      eaves * b.cubic_coef * b.f_floor_ghz * b.f_floor_ghz * b.f_floor_ghz;
  if (proc_floor >= b.power_budget_mw)
    throw std::runtime_error("derive_budget: compute load exhausts the power budget");
  const double p_avail = b.power_budget_mw - proc_floor;
  if (1.15 * b.nt * b.nt / b.crb_trace_cap >= p_avail)
    throw std::runtime_error("derive_budget: CRB limit too tight for a strictly interior start");
  return b;
}

// Assembled convex sub-problem plus the indexing needed to read solutions
// back out of the flat parameter vector.
struct SubProblem {
  Program prog;
  BudgetScalars budget;
  std::vector<int> w_block;
  int rx_block = -1, y_block = -1;
  std::vector<int> f_index, t_index;
  int zeta_index = -1;

  std::vector<MatrixXcd> unpack_w(const VectorXd& x) const {
    std::vector<MatrixXcd> w;
    for (int k = 0; k < budget.users; ++k)
      w.push_back(prog.vars.unpack(x, w_block[static_cast<size_t>(k)]));
    return w;
  }
  MatrixXcd unpack_rx(const VectorXd& x) const { return prog.vars.unpack(x, rx_block); }
  std::vector<double> f_ghz(const VectorXd& x) const {
    std::vector<double> f;
    for (int idx : f_index) f.push_back(x(idx));
    return f;
  }
};

inline SubProblem assemble_subproblem(const LinearizedTerms& terms, const SystemConfig& cfg,
                                      const std::vector<double>& rho) {
  const int nt = cfg.tx_count();
  const int nk = terms.users, nl = terms.eaves;
  SubProblem sp;
  sp.budget = derive_budget(cfg, rho, nk, nl);
  const double f_lb = sp.budget.f_floor_ghz;

  VariableSpace vs;
  for (int k = 0; k < nk; ++k) sp.w_block.push_back(vs.add_block("w" + std::to_string(k), nt));
  sp.rx_block = vs.add_block("rx", nt);
  sp.y_block = vs.add_block("y", nt);
  for (int l = 0; l < nl; ++l)
    sp.f_index.push_back(vs.scalar_index(vs.add_scalar("f" + std::to_string(l))));
  for (int l = 0; l < nl; ++l)
    sp.t_index.push_back(vs.scalar_index(vs.add_scalar("t" + std::to_string(l))));
  sp.zeta_index = vs.scalar_index(vs.add_scalar("zeta"));

  sp.prog.vars = vs;
  sp.prog.c = VectorXd::Zero(vs.dim());
  sp.prog.c(sp.zeta_index) = 1.0;
  auto& cons = sp.prog.constraints;

  auto affine_of = [&](const AffineWR& f, int k) {
    Affine a{VectorXd::Zero(vs.dim()), f.c0};
    if (f.cw.size() > 0) vs.add_trace_coeffs(sp.w_block[static_cast<size_t>(k)], f.cw, 1.0, a.a);
    if (f.cr.size() > 0) vs.add_trace_coeffs(sp.rx_block, f.cr, 1.0, a.a);
    return a;
  };

  for (int k = 0; k < nk; ++k)
    cons.push_back(std::make_unique<PsdConstraint>(
        sp.prog.vars, "beam psd " + std::to_string(k), MatrixXcd::Zero(nt, nt),
        std::vector<BlockPlacement>{{sp.w_block[static_cast<size_t>(k)], 1.0, 0}}));

  std::vector<BlockPlacement> sensing{{sp.rx_block, 1.0, 0}};
  for (int k = 0; k < nk; ++k) sensing.push_back({sp.w_block[static_cast<size_t>(k)], -1.0, 0});
  cons.push_back(std::make_unique<PsdConstraint>(sp.prog.vars, "sensing psd",
                                                 MatrixXcd::Zero(nt, nt), sensing));

  MatrixXcd schur0 = MatrixXcd::Zero(2 * nt, 2 * nt);
  schur0.block(0, nt, nt, nt) = MatrixXcd::Identity(nt, nt);
  schur0.block(nt, 0, nt, nt) = MatrixXcd::Identity(nt, nt);
  cons.push_back(std::make_unique<PsdConstraint>(
      sp.prog.vars, "crb schur", schur0,
      std::vector<BlockPlacement>{{sp.y_block, 1.0, 0}, {sp.rx_block, 1.0, nt}}));

  std::vector<std::pair<int, double>> ytr;
  const int yoff = vs.block(sp.y_block).offset;
  for (int i = 0; i < nt; ++i) ytr.emplace_back(yoff + i, 1.0);
  cons.push_back(std::make_unique<LinearConstraint>("crb cap", ytr, sp.budget.crb_trace_cap));

  std::vector<std::pair<int, double>> power;
  const int rxoff = vs.block(sp.rx_block).offset;
  for (int i = 0; i < nt; ++i) power.emplace_back(rxoff + i, 1.0);
  for (int ti : sp.t_index) power.emplace_back(ti, 1.0);
  cons.push_back(
      std::make_unique<LinearConstraint>("power budget", power, sp.budget.power_budget_mw));

  std::vector<std::pair<int, double>> fsum;
  for (int l = 0; l < nl; ++l) {
    cons.push_back(std::make_unique<CubicConstraint>("compute epigraph " + std::to_string(l),
                                                     sp.t_index[static_cast<size_t>(l)],
                                                     sp.f_index[static_cast<size_t>(l)],
                                                     sp.budget.cubic_coef));
    cons.push_back(LinearConstraint::lower_bound("latency floor " + std::to_string(l),
                                                 sp.f_index[static_cast<size_t>(l)], f_lb));
    fsum.emplace_back(sp.f_index[static_cast<size_t>(l)], 1.0);
  }
  cons.push_back(std::make_unique<LinearConstraint>("frequency budget", fsum,
                                                    sp.budget.freq_budget_ghz));

  for (int k = 0; k < nk; ++k)
    for (int l = 0; l < nl; ++l) {
      const size_t ku = static_cast<size_t>(k), lu = static_cast<size_t>(l);
      const double g = terms.gamma[ku];
      Affine base{VectorXd::Zero(vs.dim()),
                  g * (2.0 - std::log(terms.b_exp(k)) - std::log(terms.d_exp(l)))};
      base.a(sp.zeta_index) = -1.0;
      const Affine bf = affine_of(terms.b[ku], k);
      const Affine df = affine_of(terms.d[lu], k);
      base.a.noalias() += (-g / terms.b_exp(k)) * bf.a;
      base.b += (-g / terms.b_exp(k)) * bf.b;
      base.a.noalias() += (-g / terms.d_exp(l)) * df.a;
      base.b += (-g / terms.d_exp(l)) * df.b;
      std::vector<Affine> args{affine_of(terms.a[ku], k), affine_of(terms.c[ku][lu], k)};
      cons.push_back(std::make_unique<LogPairConstraint>(
          "pair " + std::to_string(k) + "," + std::to_string(l), base, std::move(args),
          std::vector<double>{g, g}));
    }
  return sp;
}

// Strictly interior default: isotropic covariances at half the spare power,
// frequencies nudged above the latency floor, Y comfortably above inverse(R_x).
struct CanonicalPoint {
  std::vector<MatrixXcd> w;
  MatrixXcd rx;
  std::vector<double> f_ghz;
};

inline CanonicalPoint canonical_covariances(const BudgetScalars& b) {
  CanonicalPoint c;
  const int nt = b.nt;
  const double f_start =
      b.f_floor_ghz +
      std::min(0.001 * b.f_floor_ghz,
               (b.freq_budget_ghz - b.eaves * b.f_floor_ghz) / (2.0 * b.eaves));
  double t_total = 0.0;
  for (int l = 0; l < b.eaves; ++l) {
    c.f_ghz.push_back(f_start);
    t_total += b.cubic_coef * f_start * f_start * f_start * 1.001;
  }
  const double p0 = 0.5 * (b.power_budget_mw - t_total);
  double alpha = std::max(p0 / nt, 1.15 * nt / b.crb_trace_cap);
  alpha = std::min(alpha, 0.95 * (b.power_budget_mw - t_total) / nt);
  c.rx = alpha * MatrixXcd::Identity(nt, nt);
  const double beam = std::min(p0, alpha * nt) / (2.0 * b.users * nt);
  for (int k = 0; k < b.users; ++k) c.w.push_back(beam * MatrixXcd::Identity(nt, nt));
  return c;
}

inline VectorXd pack_point(const SubProblem& sp, const CanonicalPoint& c,
                           const LinearizedTerms& terms) {
  VectorXd x = VectorXd::Zero(sp.prog.vars.dim());
  for (int k = 0; k < sp.budget.users; ++k)
    sp.prog.vars.pack(c.w[static_cast<size_t>(k)], sp.w_block[static_cast<size_t>(k)], x);
  sp.prog.vars.pack(c.rx, sp.rx_block, x);
  sp.prog.vars.pack(1.08 * c.rx.inverse(), sp.y_block, x);
  for (int l = 0; l < sp.budget.eaves; ++l) {
    const double f = c.f_ghz[static_cast<size_t>(l)];
    x(sp.f_index[static_cast<size_t>(l)]) = f;
    x(sp.t_index[static_cast<size_t>(l)]) = sp.budget.cubic_coef * f * f * f * 1.001;
  }
  // the surrogate value, not the exact one: away from the expansion point the
  // minorant can sit below the exact objective, and the packed point must be
  // interior for the surrogate constraints
  x(sp.zeta_index) = terms.minorant_min(c.w, c.rx) - 1.0;
  return x;
}

struct BeamformingSolution {
  std::vector<MatrixXcd> w_mat;   // relaxed PSD beamformers
  std::vector<VectorXcd> w_vec;   // rank-one recovery, filled by randomization
  MatrixXcd r_x;
  MatrixXcd sensing;              // R_x - sum W_k
  std::vector<double> f_hz;
  std::vector<double> t_mw;       // per-task compute power epigraph values
  double zeta = -kInf;
  double kkt_residual = kInf;
  bool converged = false;
  int newton_iters = 0;
  double barrier_t = 0.0;
  std::vector<double> zeta_trace;
  std::vector<std::string> active;
  VectorXd x;                     // raw parameters, reusable as a warm start
  double recovered_objective = std::numeric_limits<double>::quiet_NaN();
  bool recovery_feasible = false;
};

namespace detail {

// Reuse a previous solution as a start for a re-linearized sub-problem: the
// compute slacks are re-tightened and zeta drops to the new surrogate value
// at the old point, which keeps every constraint strictly satisfied as long
// as the old point was interior for the shared (non-surrogate) constraints.
inline VectorXd warm_start(const SubProblem& sp, const LinearizedTerms& terms,
                           const VectorXd& prev) {
  VectorXd x = prev;
  for (int l = 0; l < sp.budget.eaves; ++l) {
    const double f = x(sp.f_index[static_cast<size_t>(l)]);
    x(sp.t_index[static_cast<size_t>(l)]) =
        sp.budget.cubic_coef * f * f * f * (1.0 + 1e-9) + 1e-12;
  }
  const double sur = terms.minorant_min(sp.unpack_w(x), sp.unpack_rx(x));
  x(sp.zeta_index) = sur - 1e-6 * (1.0 + std::abs(sur));
  return x;
}

}  // namespace detail

// One convex solve of the assembled sub-problem.
inline BeamformingSolution solve_convex(const SubProblem& sp, const VectorXd& x0,
                                        double kkt_tol, double t0 = 1.0) {
  SolveOptions opt;
  opt.kkt_tol = kkt_tol;
  opt.mu = 30.0;
  opt.t0 = t0;
  opt.max_newton = 2000;
  const SolveReport rep = solve(sp.prog, x0, opt);
  if (!rep.feasible_start) {
    std::string what = "solve_convex: infeasible start;";
    for (const auto& v : rep.violated) what += " " + v;
    throw std::runtime_error(what);
  }
  BeamformingSolution s;
  s.w_mat = sp.unpack_w(rep.x);
  s.r_x = sp.unpack_rx(rep.x);
  s.sensing = s.r_x;
  for (const auto& w : s.w_mat) s.sensing -= w;
  for (double f : sp.f_ghz(rep.x)) s.f_hz.push_back(f * 1e9);
  for (int t : sp.t_index) s.t_mw.push_back(rep.x(t));
  s.zeta = rep.objective;
  s.kkt_residual = rep.gap;
  s.converged = rep.converged;
  s.newton_iters = rep.newton_iters;
  s.barrier_t = rep.barrier_t;
  s.x = rep.x;
  for (const auto& a : rep.active) s.active.push_back(a.name);
  return s;
}

// Successive convex approximation: relinearize at each solution until the
// surrogate stops improving on the exact pair objective.
inline BeamformingSolution sca_iterate(const ChannelSet& ch, const SystemConfig& cfg,
                                       const std::vector<double>& rho,
                                       const BeamformingSolution* warm = nullptr,
                                       int max_epochs = -1, double sca_tol = -1.0) {
  if (max_epochs < 0) max_epochs = cfg.max_sca_epochs;
  if (sca_tol < 0.0) sca_tol = cfg.sca_tol;
  const double noise = cfg.comm_noise_mw();
  const double iota = cfg.semantic_units_per_bit;

  std::vector<MatrixXcd> w_e;
  MatrixXcd rx_e;
  bool have_warm = warm != nullptr && warm->x.size() > 0;
  if (have_warm) {
    w_e = warm->w_mat;
    rx_e = warm->r_x;
  }

  BeamformingSolution sol;
  std::vector<double> trace;
  VectorXd prev_x;
  double last_improvement = kInf;
  for (int epoch = 0; epoch < max_epochs; ++epoch) {
    if (epoch == 0 && !have_warm) {
      const CanonicalPoint c = canonical_covariances(derive_budget(
          cfg, rho, static_cast<int>(ch.users.size()), static_cast<int>(ch.eaves.size())));
      w_e = c.w;
      rx_e = c.rx;
    }
    const LinearizedTerms terms = linearize(ch, w_e, rx_e, rho, iota, noise);
    SubProblem sp = assemble_subproblem(terms, cfg, rho);

    double gw = 0.0;
    for (const auto& c : sp.prog.constraints) gw += c->gap_weight();

    VectorXd x0;
    double t0 = 1.0;
    bool warmed = false;
    if (prev_x.size() == sp.prog.vars.dim()) {
      x0 = detail::warm_start(sp, terms, prev_x);
      warmed = true;
    } else if (have_warm && warm->x.size() == sp.prog.vars.dim()) {
      x0 = detail::warm_start(sp, terms, warm->x);
      warmed = true;
    }
    if (warmed && std::isfinite(detail::barrier_total(sp.prog, x0))) {
      // match the barrier parameter to the estimated suboptimality of the
      // warm point so path following resumes instead of restarting
      t0 = std::clamp(gw / std::max(last_improvement, 1e-5), 300.0, 3e6);
    } else {
      const CanonicalPoint canon = canonical_covariances(sp.budget);
      x0 = pack_point(sp, canon, terms);
      t0 = 1.0;
    }

    const double expansion_value = terms.exact_min(w_e, rx_e);
    sol = solve_convex(sp, x0, cfg.kkt_tol, t0);
    trace.push_back(sol.zeta);
    w_e = sol.w_mat;
    rx_e = sol.r_x;
    prev_x = sol.x;
    last_improvement = sol.zeta - expansion_value;
    if (last_improvement < sca_tol) break;
  }
  sol.zeta_trace = trace;
  return sol;
}

struct RandomizeOutcome {
  std::vector<VectorXcd> w;
  std::vector<MatrixXcd> w_mat;
  double objective = -kInf;  // min pair value at the best candidate
  bool feasible = false;
  int best_sample = -1;
};

// Rank-one recovery: candidate beamformers are sampled from the relaxed
// covariances (sample 0 is the deterministic principal eigenvector set),
// rescaled to their relaxed traces, and jointly shrunk so the stream sum
// stays dominated by R_x; the exact pair objective picks the winner.
inline RandomizeOutcome gaussian_randomize(const ChannelSet& ch, const SystemConfig& cfg,
                                           const std::vector<double>& rho,
                                           const std::vector<MatrixXcd>& w_relaxed,
                                           const MatrixXcd& r_x, int n_samples,
                                           std::uint64_t seed) {
  const int nk = static_cast<int>(w_relaxed.size());
  const int nt = static_cast<int>(r_x.rows());
  const double noise = cfg.comm_noise_mw();
  const double iota = cfg.semantic_units_per_bit;

  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(r_x);
  const VectorXd lam = es.eigenvalues();
  const double thresh = std::max(lam.maxCoeff(), 0.0) * 1e-12;
  MatrixXcd range_proj = MatrixXcd::Zero(nt, nt);
  MatrixXcd inv_root = MatrixXcd::Zero(nt, nt);
  for (int i = 0; i < nt; ++i) {
    if (lam(i) <= thresh) continue;
    const MatrixXcd vv = es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
    range_proj += vv;
    inv_root += vv / std::sqrt(lam(i));
  }

  std::vector<MatrixXcd> roots;
  std::vector<double> traces;
  for (const auto& w : w_relaxed) {
    roots.push_back(hermitian_sqrt(w));
    traces.push_back(w.trace().real());
  }

  Rng rng(seed);
  RandomizeOutcome out;
  for (int s = 0; s <= n_samples; ++s) {
    std::vector<VectorXcd> cand(static_cast<size_t>(nk));
    bool degenerate = false;
    MatrixXcd sum = MatrixXcd::Zero(nt, nt);
    for (int k = 0; k < nk; ++k) {
      VectorXcd v(nt);
      if (s == 0) {
        Eigen::SelfAdjointEigenSolver<MatrixXcd> ew(w_relaxed[static_cast<size_t>(k)]);
        v = ew.eigenvectors().col(nt - 1) * std::sqrt(std::max(ew.eigenvalues()(nt - 1), 0.0));
      } else {
        VectorXcd g(nt);
        for (int i = 0; i < nt; ++i) g(i) = rng.complex_gaussian();
        v = roots[static_cast<size_t>(k)] * g;
      }
      v = range_proj * v;
      const double n2 = v.squaredNorm();
      if (traces[static_cast<size_t>(k)] > 0.0) {
        if (n2 <= 0.0) {
          degenerate = true;
          break;
        }
        v *= std::sqrt(traces[static_cast<size_t>(k)] / n2);
      } else {
        v.setZero();
      }
      cand[static_cast<size_t>(k)] = v;
      sum += v * v.adjoint();
    }
    if (degenerate) continue;

    const double overshoot = -min_eigenvalue(-(inv_root * sum * inv_root));
    const double beta = overshoot > 1.0 ? 1.0 / std::sqrt(overshoot) : 1.0;
    std::vector<MatrixXcd> w_mats;
    for (auto& v : cand) {
      v *= beta;
      w_mats.push_back(v * v.adjoint());
    }
    const SsrBreakdown eval = worst_case_ssr(ch.users, ch.eaves, w_mats, r_x, rho, noise, iota);
    const double obj = eval.pair_values.minCoeff();
    if (!out.feasible || obj > out.objective) {
      out.feasible = true;
      out.objective = obj;
      out.w = cand;
      out.w_mat = w_mats;
      out.best_sample = s;
    }
  }
  return out;
}

}  // namespace nfiscsc
