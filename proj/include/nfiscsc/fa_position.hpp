#pragma once

#include <cassert>
#include <cmath>
#include <utility>
#include <vector>

#include "nfiscsc/channel.hpp"
#include "nfiscsc/convex.hpp"
#include "nfiscsc/metrics.hpp"

namespace nfiscsc {

// Componentwise clamp onto the box [lo, hi].
inline VectorXd project(const VectorXd& u, const VectorXd& lo, const VectorXd& hi) {
  require(u.size() == lo.size() && u.size() == hi.size(), "project: mismatched box bounds");
  return u.cwiseMax(lo).cwiseMin(hi);
}

inline VectorXd box_lower(const TxArray& tx) {
  VectorXd lo(2 * tx.count());
  lo.head(tx.count()) = tx.box_lo.col(0);
  lo.tail(tx.count()) = tx.box_lo.col(1);
  return lo;
}

inline VectorXd box_upper(const TxArray& tx) {
  VectorXd hi(2 * tx.count());
  hi.head(tx.count()) = tx.box_hi.col(0);
  hi.tail(tx.count()) = tx.box_hi.col(1);
  return hi;
}

// Everything the position objective depends on besides the coordinates
// themselves: geometry, beamformers, transmit covariance, extraction ratios,
// and the per-coordinate boxes. Coordinates with lo == hi never move.
struct PositionContext {
  SystemConfig cfg;
  Placement placement;
  std::vector<MatrixXcd> w;  // beamformer outer products, one per user
  MatrixXcd r_x;             // total transmit covariance
  std::vector<double> rho;
  VectorXd lo, hi;
  int count = 0;

  MatrixXd positions(const VectorXd& u) const {
    require(u.size() == 2 * count, "positions: wrong coordinate length");
    MatrixXd pos(count, 2);
    pos.col(0) = u.head(count);
    pos.col(1) = u.tail(count);
    return pos;
  }

  std::vector<int> movable() const {
    std::vector<int> idx;
    for (int i = 0; i < 2 * count; ++i)
      if (hi(i) > lo(i)) idx.push_back(i);
    return idx;
  }
};

inline PositionContext make_position_context(const SystemConfig& cfg, const TxArray& tx,
                                             const Placement& p, std::vector<MatrixXcd> w,
                                             MatrixXcd r_x, std::vector<double> rho) {
  const int n = tx.count();
  require(static_cast<int>(p.users.size()) == static_cast<int>(w.size()),
          "make_position_context: one beamformer per user");
  require(w.size() == rho.size(), "make_position_context: one ratio per user");
  require(!p.targets.empty(), "make_position_context: need at least one target");
  require(r_x.rows() == n && r_x.cols() == n, "make_position_context: covariance size mismatch");
  for (double r : rho) require(r > 0.0 && r <= 1.0, "make_position_context: ratio outside (0,1]");
  PositionContext ctx;
  ctx.cfg = cfg;
  ctx.placement = p;
  ctx.w = std::move(w);
  ctx.r_x = std::move(r_x);
  ctx.rho = std::move(rho);
  ctx.lo = box_lower(tx);
  ctx.hi = box_upper(tx);
  ctx.count = n;
  return ctx;
}

namespace detail {

// Channel row of one receive entity together with the per-element derivative
// of h_i with respect to its own coordinates. Only element i depends on
// (x_i, z_i), so a row captures the full Jacobian.
struct EntityRows {
  RowVectorXcd h, dx, dz;
};

inline EntityRows entity_rows(const MatrixXd& pos, const Entity& e, double wavelength,
                              bool derivs) {
  const int n = static_cast<int>(pos.rows());
  EntityRows out;
  out.h.resize(n);
  if (derivs) {
    out.dx.resize(n);
    out.dz.resize(n);
  }
  const double ct = std::cos(e.theta), sp = std::sin(e.phi), cp = std::cos(e.phi);
  const double k = 2.0 * kPi / wavelength;
  const double ax = 1.0 - ct * ct * sp * sp;
  const Eigen::Vector3d b = e.cartesian();
  const double amp = 1.0 / std::sqrt(4.0 * kPi);
  for (int i = 0; i < n; ++i) {
    const double x = pos(i, 0), z = pos(i, 1);
    const double psi = steering_phase(x, z, e.theta, e.phi, e.dist, wavelength);
    const double r = element_range(pos, i, b);
    const cxd hi = std::polar(amp / r, psi);
    out.h(i) = hi;
    if (derivs) {
      // d h_i = h_i (d ln amplitude + j d psi) per coordinate.
      out.dx(i) = hi * cxd(-(x - b.x()) / (r * r), k * (ct * sp - x * ax / e.dist));
      out.dz(i) = hi * cxd(-(z - b.z()) / (r * r), k * (cp - z * sp * sp / e.dist));
    }
  }
  return out;
}

// Rows for every user followed by every eavesdropping target (scatterer sum).
inline std::vector<EntityRows> comm_rows(const MatrixXd& pos, const Placement& p,
                                         double wavelength, bool derivs) {
  std::vector<EntityRows> rows;
  rows.reserve(p.users.size() + p.targets.size());
  for (const Entity& e : p.users) rows.push_back(entity_rows(pos, e, wavelength, derivs));
  for (const TargetPlacement& t : p.targets) {
    require(!t.scatterers.empty(), "comm_rows: target has no scatterers");
    EntityRows sum = entity_rows(pos, t.scatterers.front(), wavelength, derivs);
    for (size_t s = 1; s < t.scatterers.size(); ++s) {
      const EntityRows r = entity_rows(pos, t.scatterers[s], wavelength, derivs);
      sum.h += r.h;
      if (derivs) {
        sum.dx += r.dx;
        sum.dz += r.dz;
      }
    }
    rows.push_back(std::move(sum));
  }
  return rows;
}

}  // namespace detail

// Full secrecy-rate breakdown with channels rebuilt at the coordinates u.
inline SsrBreakdown fa_ssr(const PositionContext& ctx, const VectorXd& u) {
  const auto rows = detail::comm_rows(ctx.positions(u), ctx.placement, ctx.cfg.wavelength(),
                                      false);
  const size_t nk = ctx.placement.users.size();
  std::vector<RowVectorXcd> users, eaves;
  for (size_t i = 0; i < rows.size(); ++i)
    (i < nk ? users : eaves).push_back(rows[i].h);
  return worst_case_ssr(users, eaves, ctx.w, ctx.r_x, ctx.rho, ctx.cfg.comm_noise_mw(),
                        ctx.cfg.semantic_units_per_bit);
}

// Unclamped pair-value matrix (users x eavesdroppers) at u.
inline MatrixXd fa_pair_values(const PositionContext& ctx, const VectorXd& u) {
  return fa_ssr(ctx, u).pair_values;
}

// Worst-case secrecy rate at u: the quantity the positioning stage reports.
inline double fa_objective(const PositionContext& ctx, const VectorXd& u) {
  return fa_ssr(ctx, u).worst;
}

// Soft minimum of the matrix entries: a log-sum-exp lower bound on the hard
// minimum, within ln(size)/beta of it.
inline double softmin_lse(const MatrixXd& s, double beta) {
  require(beta > 0.0, "softmin_lse: sharpness must be positive");
  const double m = s.minCoeff();
  double acc = 0.0;
  for (int k = 0; k < s.rows(); ++k)
    for (int l = 0; l < s.cols(); ++l) acc += std::exp(-beta * (s(k, l) - m));
  return m - std::log(acc) / beta;
}

// Differentiable stand-in for the worst pair value; the optimizer climbs this
// and the hard value is reported separately.
inline double fa_smooth_objective(const PositionContext& ctx, const VectorXd& u) {
  return softmin_lse(fa_pair_values(ctx, u), ctx.cfg.softmin_beta);
}

namespace detail {

// Pair values and their analytic coordinate gradients, evaluated from cached
// matrix-vector products rather than the metrics-module quadratic forms.
struct PairEval {
  MatrixXd s;                  // users x eavesdroppers
  std::vector<VectorXd> grad;  // index k * eaves + l, length 2n
};

inline PairEval pair_eval(const PositionContext& ctx, const VectorXd& u) {
  const int n = ctx.count;
  const MatrixXd pos = ctx.positions(u);
  const auto rows = comm_rows(pos, ctx.placement, ctx.cfg.wavelength(), true);
  const int nk = static_cast<int>(ctx.placement.users.size());
  const int nl = static_cast<int>(ctx.placement.targets.size());
  const double noise = ctx.cfg.comm_noise_mw();
  const double ln2 = std::log(2.0);

  std::vector<VectorXcd> rhu(static_cast<size_t>(nk)), whu(static_cast<size_t>(nk));
  std::vector<VectorXcd> rhe(static_cast<size_t>(nl));
  std::vector<std::vector<VectorXcd>> whe(static_cast<size_t>(nk));
  for (int k = 0; k < nk; ++k) {
    const VectorXcd hh = rows[static_cast<size_t>(k)].h.adjoint();
    rhu[static_cast<size_t>(k)] = ctx.r_x * hh;
    whu[static_cast<size_t>(k)] = ctx.w[static_cast<size_t>(k)] * hh;
  }
  for (int l = 0; l < nl; ++l) {
    const VectorXcd hh = rows[static_cast<size_t>(nk + l)].h.adjoint();
    rhe[static_cast<size_t>(l)] = ctx.r_x * hh;
    for (int k = 0; k < nk; ++k)
      whe[static_cast<size_t>(k)].push_back(ctx.w[static_cast<size_t>(k)] * hh);
  }

  PairEval out;
  out.s.resize(nk, nl);
  out.grad.assign(static_cast<size_t>(nk * nl), VectorXd::Zero(2 * n));
  for (int k = 0; k < nk; ++k) {
    const EntityRows& uk = rows[static_cast<size_t>(k)];
    const double a = (uk.h * rhu[static_cast<size_t>(k)]).value().real() + noise;
    const double b = a - (uk.h * whu[static_cast<size_t>(k)]).value().real();
    require(a > 0.0 && b > 0.0, "pair_eval: non-positive user log argument");
    const double gamma = ctx.cfg.semantic_units_per_bit / (ctx.rho[static_cast<size_t>(k)] * ln2);
    for (int l = 0; l < nl; ++l) {
      const EntityRows& el = rows[static_cast<size_t>(nk + l)];
      const double d = (el.h * rhe[static_cast<size_t>(l)]).value().real() + noise;
      const double c = d - (el.h * whe[static_cast<size_t>(k)][static_cast<size_t>(l)]).value().real();
      require(c > 0.0 && d > 0.0, "pair_eval: non-positive eavesdropper log argument");
      out.s(k, l) = gamma * (std::log(a) - std::log(b) + std::log(c) - std::log(d));
      VectorXd& g = out.grad[static_cast<size_t>(k * nl + l)];
      for (int i = 0; i < n; ++i) {
        const double dax = 2.0 * (uk.dx(i) * rhu[static_cast<size_t>(k)](i)).real();
        const double dbx = dax - 2.0 * (uk.dx(i) * whu[static_cast<size_t>(k)](i)).real();
        const double ddx = 2.0 * (el.dx(i) * rhe[static_cast<size_t>(l)](i)).real();
        const double dcx =
            ddx - 2.0 * (el.dx(i) * whe[static_cast<size_t>(k)][static_cast<size_t>(l)](i)).real();
        g(i) = gamma * (dax / a - dbx / b + dcx / c - ddx / d);
        const double daz = 2.0 * (uk.dz(i) * rhu[static_cast<size_t>(k)](i)).real();
        const double dbz = daz - 2.0 * (uk.dz(i) * whu[static_cast<size_t>(k)](i)).real();
        const double ddz = 2.0 * (el.dz(i) * rhe[static_cast<size_t>(l)](i)).real();
        const double dcz =
            ddz - 2.0 * (el.dz(i) * whe[static_cast<size_t>(k)][static_cast<size_t>(l)](i)).real();
        g(n + i) = gamma * (daz / a - dbz / b + dcz / c - ddz / d);
      }
    }
  }
  return out;
}

}  // namespace detail

// Analytic gradient of the smoothed objective. Coordinates whose box is
// degenerate are zeroed so they never move.
inline VectorXd fa_gradient(const PositionContext& ctx, const VectorXd& u) {
  const detail::PairEval pe = detail::pair_eval(ctx, u);
  const double beta = ctx.cfg.softmin_beta;
  const double m = pe.s.minCoeff();
  const int nl = static_cast<int>(pe.s.cols());
  double wsum = 0.0;
  VectorXd g = VectorXd::Zero(2 * ctx.count);
  for (int k = 0; k < pe.s.rows(); ++k)
    for (int l = 0; l < nl; ++l) {
      const double w = std::exp(-beta * (pe.s(k, l) - m));
      wsum += w;
      g += w * pe.grad[static_cast<size_t>(k * nl + l)];
    }
  g /= wsum;
  for (int i = 0; i < g.size(); ++i)
    if (ctx.hi(i) <= ctx.lo(i)) g(i) = 0.0;
  return g;
}

struct BfgsOptions {
  double tau0 = 1.0;
  double armijo_c = 1e-4;
  double shrink_factor = 0.5;
  double tau_min = 1e-8;
  double tol = 1e-6;  // projected-gradient stationarity norm
  double curvature_eps = 1e-12;
  int max_iters = 60;
};

inline BfgsOptions bfgs_options(const SystemConfig& cfg, int max_iters = -1) {
  BfgsOptions o;
  o.armijo_c = cfg.armijo_c;
  o.shrink_factor = cfg.shrink_factor;
  o.tau_min = cfg.tau_min;
  o.tol = cfg.kkt_tol;
  o.curvature_eps = cfg.curvature_eps;
  o.max_iters = max_iters > 0 ? max_iters : cfg.max_bfgs_iters;
  return o;
}

// Rank-two secant update of the inverse Hessian, maximization convention:
// y is the previous gradient minus the current one. Skipped (returns false)
// when the curvature s.y is too small to keep the matrix positive definite.
inline bool bfgs_update(MatrixXd& h_inv, const VectorXd& s, const VectorXd& y, double eps) {
  const double sy = s.dot(y);
  if (!(sy > eps)) return false;
  const double r = 1.0 / sy;
  const VectorXd hy = h_inv * y;
  const double yhy = y.dot(hy);
  h_inv += (1.0 + r * yhy) * r * (s * s.transpose()) -
           r * (hy * s.transpose() + s * hy.transpose());
  h_inv = (0.5 * (h_inv + h_inv.transpose())).eval();
  assert(Eigen::LLT<MatrixXd>(h_inv).info() == Eigen::Success);
  return true;
}

struct LineSearchOutcome {
  double tau = 0.0;
  double value = 0.0;
  VectorXd u;
  bool stalled = false;
};

// Projected backtracking line search with a sufficient-increase rule:
// accept tau when f(P(u + tau d)) >= f(u) + c tau grad.d. A non-ascent
// direction stalls immediately; the caller is expected to fall back to the
// projected gradient.
template <class F>
LineSearchOutcome backtracking_search(F&& value, const VectorXd& u, const VectorXd& d,
                                      const VectorXd& grad, double f0, const VectorXd& lo,
                                      const VectorXd& hi, const BfgsOptions& opt) {
  LineSearchOutcome out;
  out.u = u;
  out.value = f0;
  const double slope = grad.dot(d);
  if (!(slope > 0.0)) {
    out.stalled = true;
    return out;
  }
  for (double tau = opt.tau0; tau >= opt.tau_min; tau *= opt.shrink_factor) {
    VectorXd cand = project(u + tau * d, lo, hi);
    const double f = value(cand);
    if (f >= f0 + opt.armijo_c * tau * slope) {
      out.tau = tau;
      out.value = f;
      out.u = std::move(cand);
      return out;
    }
  }
  out.tau = opt.tau_min;
  out.stalled = true;
  return out;
}

struct PositionResult {
  VectorXd u;
  MatrixXd h_inv;
  VectorXd gradient;
  double smooth = 0.0;        // smoothed objective at u
  double hard = 0.0;          // worst-case secrecy rate at u
  std::vector<double> trace;  // smoothed objective per iterate, start included
  int iterations = 0;
  bool converged = false;     // projected-gradient norm below tol
  bool stalled = false;
};

// Projected BFGS ascent over a box. Falls back to the projected gradient
// (with the inverse Hessian reset to identity) whenever the quasi-Newton
// direction is non-ascent or its line search stalls.
template <class F, class G>
PositionResult maximize_box_bfgs(F&& value, G&& grad, VectorXd u, const VectorXd& lo,
                                 const VectorXd& hi, const BfgsOptions& opt) {
  PositionResult res;
  u = project(u, lo, hi);
  double f = value(u);
  VectorXd g = grad(u);
  MatrixXd h_inv = MatrixXd::Identity(u.size(), u.size());
  res.trace.push_back(f);
  // Zero direction components pointing out of the box at active bounds, so
  // the Armijo slope only charges for displacement the projection can keep.
  const auto clip = [&](VectorXd d, const VectorXd& at) {
    for (int i = 0; i < d.size(); ++i)
      if ((at(i) <= lo(i) && d(i) < 0.0) || (at(i) >= hi(i) && d(i) > 0.0)) d(i) = 0.0;
    return d;
  };
  for (int it = 0; it < opt.max_iters; ++it) {
    const VectorXd pg = project(u + g, lo, hi) - u;
    if (pg.norm() <= opt.tol) {
      res.converged = true;
      break;
    }
    VectorXd d = clip(h_inv * g, u);
    bool steepest = false;
    if (!(g.dot(d) > 0.0)) {
      h_inv.setIdentity();
      d = pg;
      steepest = true;
    }
    LineSearchOutcome ls = backtracking_search(value, u, d, g, f, lo, hi, opt);
    if (ls.stalled && !steepest) {
      h_inv.setIdentity();
      d = pg;
      ls = backtracking_search(value, u, d, g, f, lo, hi, opt);
    }
    if (ls.stalled) {
      res.stalled = true;
      break;
    }
    VectorXd g_new = grad(ls.u);
    bfgs_update(h_inv, ls.u - u, g - g_new, opt.curvature_eps);
    u = std::move(ls.u);
    f = ls.value;
    g = std::move(g_new);
    res.trace.push_back(f);
    res.iterations = it + 1;
  }
  res.u = std::move(u);
  res.smooth = f;
  res.gradient = std::move(g);
  res.h_inv = std::move(h_inv);
  return res;
}

inline PositionResult projected_bfgs(const PositionContext& ctx, VectorXd u, int max_iters = -1) {
  const BfgsOptions opt = bfgs_options(ctx.cfg, max_iters);
  PositionResult res = maximize_box_bfgs(
      [&](const VectorXd& v) { return fa_smooth_objective(ctx, v); },
      [&](const VectorXd& v) { return fa_gradient(ctx, v); }, std::move(u), ctx.lo, ctx.hi, opt);
  res.hard = fa_objective(ctx, res.u);
  return res;
}

namespace detail {

// Natural logs of every pair log argument at the given positions, ordered
// [A_1..A_K, B_1..B_K, C_11..C_KL (eavesdropper fastest), D_1..D_L].
inline VectorXd log_terms(const PositionContext& ctx, const MatrixXd& pos) {
  const auto rows = comm_rows(pos, ctx.placement, ctx.cfg.wavelength(), false);
  const int nk = static_cast<int>(ctx.placement.users.size());
  const int nl = static_cast<int>(ctx.placement.targets.size());
  const double noise = ctx.cfg.comm_noise_mw();
  VectorXd f(2 * nk + nk * nl + nl);
  for (int k = 0; k < nk; ++k) {
    const RowVectorXcd& h = rows[static_cast<size_t>(k)].h;
    const double a = quad_form(h, ctx.r_x) + noise;
    const double b = a - quad_form(h, ctx.w[static_cast<size_t>(k)]);
    require(a > 0.0 && b > 0.0, "log_terms: non-positive user log argument");
    f(k) = std::log(a);
    f(nk + k) = std::log(b);
  }
  for (int l = 0; l < nl; ++l) {
    const RowVectorXcd& h = rows[static_cast<size_t>(nk + l)].h;
    const double d = quad_form(h, ctx.r_x) + noise;
    require(d > 0.0, "log_terms: non-positive eavesdropper log argument");
    f(2 * nk + nk * nl + l) = std::log(d);
    for (int k = 0; k < nk; ++k) {
      const double c = d - quad_form(h, ctx.w[static_cast<size_t>(k)]);
      require(c > 0.0, "log_terms: non-positive eavesdropper log argument");
      f(2 * nk + k * nl + l) = std::log(c);
    }
  }
  return f;
}

}  // namespace detail

// Concave quadratic minorant of every pair value around an expansion point,
// restricted to the movable coordinates. The curvature scalar of a pair sums
// the clamped extreme eigenvalues of finite-difference Hessians of its four
// log terms, so the surrogate dips below the exact value away from the
// expansion point while matching it (and its gradient) there.
struct BenchmarkModel {
  std::vector<int> coords;     // movable coordinate indices into u
  VectorXd center;             // expansion point restricted to coords
  int eaves = 0;
  MatrixXd value;              // pair values at the expansion point
  std::vector<VectorXd> grad;  // index k * eaves + l, restricted to coords
  MatrixXd curvature;          // non-negative scalar per pair

  double pair_surrogate(int k, int l, const VectorXd& v) const {
    const VectorXd d = v - center;
    return value(k, l) + grad[static_cast<size_t>(k * eaves + l)].dot(d) -
           0.5 * curvature(k, l) * d.squaredNorm();
  }
};

inline BenchmarkModel build_benchmark_model(const PositionContext& ctx, const VectorXd& u_e) {
  BenchmarkModel mdl;
  mdl.coords = ctx.movable();
  const int m = static_cast<int>(mdl.coords.size());
  mdl.center.resize(m);
  for (int i = 0; i < m; ++i) mdl.center(i) = u_e(mdl.coords[static_cast<size_t>(i)]);

  const detail::PairEval pe = detail::pair_eval(ctx, u_e);
  const int nk = static_cast<int>(pe.s.rows());
  const int nl = static_cast<int>(pe.s.cols());
  mdl.eaves = nl;
  mdl.value = pe.s;
  mdl.grad.reserve(pe.grad.size());
  for (const VectorXd& g : pe.grad) {
    VectorXd r(m);
    for (int i = 0; i < m; ++i) r(i) = g(mdl.coords[static_cast<size_t>(i)]);
    mdl.grad.push_back(std::move(r));
  }
  mdl.curvature = MatrixXd::Zero(nk, nl);
  if (m == 0) return mdl;

  const double h = ctx.cfg.grad_fd_step;
  const int terms = 2 * nk + nk * nl + nl;
  const auto eval = [&](const VectorXd& v) { return detail::log_terms(ctx, ctx.positions(v)); };
  const VectorXd f0 = eval(u_e);
  std::vector<MatrixXd> hess(static_cast<size_t>(terms), MatrixXd::Zero(m, m));
  for (int i = 0; i < m; ++i) {
    VectorXd up = u_e, um = u_e;
    up(mdl.coords[static_cast<size_t>(i)]) += h;
    um(mdl.coords[static_cast<size_t>(i)]) -= h;
    const VectorXd dii = (eval(up) - 2.0 * f0 + eval(um)) / (h * h);
    for (int t = 0; t < terms; ++t) hess[static_cast<size_t>(t)](i, i) = dii(t);
  }
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      VectorXd pp = u_e, pm = u_e, mp = u_e, mm = u_e;
      const int ci = mdl.coords[static_cast<size_t>(i)], cj = mdl.coords[static_cast<size_t>(j)];
      pp(ci) += h;
      pp(cj) += h;
      pm(ci) += h;
      pm(cj) -= h;
      mp(ci) -= h;
      mp(cj) += h;
      mm(ci) -= h;
      mm(cj) -= h;
      const VectorXd dij = (eval(pp) - eval(pm) - eval(mp) + eval(mm)) / (4.0 * h * h);
      for (int t = 0; t < terms; ++t) {
        hess[static_cast<size_t>(t)](i, j) = dij(t);
        hess[static_cast<size_t>(t)](j, i) = dij(t);
      }
    }

  // Terms entering the pair value positively bound concavity loss through
  // the top eigenvalue of -H; negated terms (B, D) through that of +H.
  VectorXd bound(terms);
  for (int t = 0; t < terms; ++t) {
    const bool positive = t < nk || (t >= 2 * nk && t < 2 * nk + nk * nl);
    const MatrixXd signed_h = positive ? MatrixXd(-hess[static_cast<size_t>(t)])
                                       : hess[static_cast<size_t>(t)];
    const Eigen::SelfAdjointEigenSolver<MatrixXd> es(signed_h, Eigen::EigenvaluesOnly);
    bound(t) = std::max(es.eigenvalues().maxCoeff(), 0.0);
  }
  const double ln2 = std::log(2.0);
  for (int k = 0; k < nk; ++k) {
    const double gamma = ctx.cfg.semantic_units_per_bit / (ctx.rho[static_cast<size_t>(k)] * ln2);
    for (int l = 0; l < nl; ++l)
      mdl.curvature(k, l) = gamma * (bound(k) + bound(nk + k) + bound(2 * nk + k * nl + l) +
                                     bound(2 * nk + nk * nl + l));
  }
  return mdl;
}

// Maximize the worst surrogate pair value over the boxes (epigraph form, one
// concave quadratic constraint per pair) and return the full coordinate
// vector with the movable entries replaced by the maximizer.
inline VectorXd maximize_benchmark_model(const BenchmarkModel& mdl, VectorXd u_e,
                                         const VectorXd& lo, const VectorXd& hi, double tol) {
  const int m = static_cast<int>(mdl.coords.size());
  if (m == 0) return u_e;

  Program prog;
  std::vector<int> upos(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i)
    upos[static_cast<size_t>(i)] =
        prog.vars.scalar_index(prog.vars.add_scalar("u" + std::to_string(i)));
  const int xi = prog.vars.scalar_index(prog.vars.add_scalar("xi"));
  const int dim = prog.vars.dim();
  prog.c = VectorXd::Zero(dim);
  prog.c(xi) = 1.0;

  const int nk = static_cast<int>(mdl.value.rows());
  for (int k = 0; k < nk; ++k)
    for (int l = 0; l < mdl.eaves; ++l) {
      const VectorXd& g = mdl.grad[static_cast<size_t>(k * mdl.eaves + l)];
      Affine base;
      base.a = VectorXd::Zero(dim);
      for (int i = 0; i < m; ++i) base.a(upos[static_cast<size_t>(i)]) = g(i);
      base.a(xi) = -1.0;
      base.b = mdl.value(k, l) - g.dot(mdl.center);
      std::vector<ConcaveQuadConstraint::Curvature> curv;
      if (mdl.curvature(k, l) > 0.0)
        for (int i = 0; i < m; ++i)
          curv.push_back({upos[static_cast<size_t>(i)], mdl.curvature(k, l), mdl.center(i)});
      prog.constraints.push_back(std::make_unique<ConcaveQuadConstraint>(
          "pair " + std::to_string(k) + "," + std::to_string(l), std::move(base),
          std::move(curv)));
    }
  for (int i = 0; i < m; ++i) {
    const int c = mdl.coords[static_cast<size_t>(i)];
    prog.constraints.push_back(
        LinearConstraint::upper_bound("box hi " + std::to_string(c), upos[static_cast<size_t>(i)], hi(c)));
    prog.constraints.push_back(
        LinearConstraint::lower_bound("box lo " + std::to_string(c), upos[static_cast<size_t>(i)], lo(c)));
  }

  VectorXd x = VectorXd::Zero(dim);
  VectorXd v0(m);
  for (int i = 0; i < m; ++i) {
    const int c = mdl.coords[static_cast<size_t>(i)];
    const double pad = 1e-9 * (hi(c) - lo(c));
    v0(i) = std::clamp(mdl.center(i), lo(c) + pad, hi(c) - pad);
    x(upos[static_cast<size_t>(i)]) = v0(i);
  }
  double qmin = kInf;
  for (int k = 0; k < nk; ++k)
    for (int l = 0; l < mdl.eaves; ++l) qmin = std::min(qmin, mdl.pair_surrogate(k, l, v0));
  x(xi) = qmin - 1.0;

  SolveOptions opt;
  opt.kkt_tol = tol;
  const SolveReport rep = solve(prog, x, opt);
  for (int i = 0; i < m; ++i) {
    const int c = mdl.coords[static_cast<size_t>(i)];
    u_e(c) = std::clamp(rep.x(upos[static_cast<size_t>(i)]), lo(c), hi(c));
  }
  return u_e;
}

inline VectorXd benchmark_step(const PositionContext& ctx, const VectorXd& u_e) {
  return maximize_benchmark_model(build_benchmark_model(ctx, u_e), u_e, ctx.lo, ctx.hi,
                                  ctx.cfg.kkt_tol);
}

struct BenchmarkResult {
  VectorXd u;
  double hard = 0.0;          // worst-case secrecy rate at u
  double min_pair = 0.0;      // unclamped worst pair value at u
  std::vector<double> trace;  // hard objective per iterate, start included
  int steps = 0;
};

// Iterated benchmark updates. The curvature bounds certify the surrogate only
// near each expansion point, so a step can overshoot; the best iterate by
// exact objective is kept.
inline BenchmarkResult benchmark_positions(const PositionContext& ctx, VectorXd u,
                                           int max_steps = -1) {
  if (max_steps < 0) max_steps = ctx.cfg.max_benchmark_steps;
  u = project(u, ctx.lo, ctx.hi);
  BenchmarkResult res;
  res.u = u;
  res.min_pair = fa_pair_values(ctx, u).minCoeff();
  res.trace.push_back(std::max(res.min_pair, 0.0));
  for (int step = 0; step < max_steps; ++step) {
    const VectorXd next = benchmark_step(ctx, u);
    const double delta = (next - u).norm();
    u = next;
    res.steps = step + 1;
    const double sc = fa_pair_values(ctx, u).minCoeff();
    res.trace.push_back(std::max(sc, 0.0));
    if (sc > res.min_pair) {
      res.min_pair = sc;
      res.u = u;
    }
    if (delta <= 1e-9 * (1.0 + u.norm())) break;
  }
  res.hard = std::max(res.min_pair, 0.0);
  return res;
}

}  // namespace nfiscsc
