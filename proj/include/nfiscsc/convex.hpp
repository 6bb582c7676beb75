#pragma once

#include <limits>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "nfiscsc/common.hpp"

namespace nfiscsc {

// Real parameter space for a mix of Hermitian matrix blocks and scalars. A
// block of size n contributes n diagonal entries followed by (re, im) pairs
// for i < j in row-major order, so every Hermitian matrix maps bijectively to
// n^2 reals.
struct HermitianBlock {
  std::string name;
  int n = 0;
  int offset = 0;
  std::vector<std::pair<int, int>> pairs;  // row-major enumeration of i < j

  int size() const { return n * n; }
};

// One elementary-matrix component of d M / d x_p in block coordinates.
struct Dyad {
  int r = 0, c = 0;
  cxd a;
};

class VariableSpace {
 public:
  int add_block(const std::string& name, int n) {
    require(n >= 1, "add_block: size must be at least 1");
    HermitianBlock b{name, n, dim_, {}};
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) b.pairs.emplace_back(i, j);
    blocks_.push_back(std::move(b));
    dim_ += n * n;
    return static_cast<int>(blocks_.size()) - 1;
  }

  int add_scalar(const std::string& name) {
    scalar_names_.push_back(name);
    scalar_index_.push_back(dim_);
    dim_ += 1;
    return static_cast<int>(scalar_index_.size()) - 1;
  }

  int dim() const { return dim_; }
  int block_count() const { return static_cast<int>(blocks_.size()); }
  const HermitianBlock& block(int b) const { return blocks_.at(static_cast<size_t>(b)); }
  int scalar_index(int s) const { return scalar_index_.at(static_cast<size_t>(s)); }
  const std::string& scalar_name(int s) const { return scalar_names_.at(static_cast<size_t>(s)); }

  MatrixXcd unpack(const VectorXd& x, int bi) const {
    const HermitianBlock& b = block(bi);
    MatrixXcd m(b.n, b.n);
    for (int i = 0; i < b.n; ++i) m(i, i) = x(b.offset + i);
    int p = b.offset + b.n;
    for (const auto& [i, j] : b.pairs) {
      const cxd v(x(p), x(p + 1));
      m(i, j) = v;
      m(j, i) = std::conj(v);
      p += 2;
    }
    return m;
  }

  void pack(const MatrixXcd& m, int bi, VectorXd& x) const {
    const HermitianBlock& b = block(bi);
    require(m.rows() == b.n && m.cols() == b.n, "pack: matrix size mismatch");
    for (int i = 0; i < b.n; ++i) x(b.offset + i) = m(i, i).real();
    int p = b.offset + b.n;
    for (const auto& [i, j] : b.pairs) {
      x(p) = m(i, j).real();
      x(p + 1) = m(i, j).imag();
      p += 2;
    }
  }

  // d M / d x of a local block parameter as at most two elementary dyads.
  int param_dyads(int bi, int local, Dyad out[2]) const {
    const HermitianBlock& b = block(bi);
    if (local < b.n) {
      out[0] = {local, local, cxd(1.0, 0.0)};
      return 1;
    }
    const int q = local - b.n;
    const auto& [i, j] = b.pairs[static_cast<size_t>(q / 2)];
    if (q % 2 == 0) {
      out[0] = {i, j, cxd(1.0, 0.0)};
      out[1] = {j, i, cxd(1.0, 0.0)};
    } else {
      out[0] = {i, j, cxd(0.0, 1.0)};
      out[1] = {j, i, cxd(0.0, -1.0)};
    }
    return 2;
  }

  // Gradient of scale * Tr(C M_b(x)) for Hermitian C, accumulated into `into`.
  void add_trace_coeffs(int bi, const MatrixXcd& c, double scale, VectorXd& into) const {
    const HermitianBlock& b = block(bi);
    require(c.rows() == b.n && c.cols() == b.n, "add_trace_coeffs: coefficient size mismatch");
    for (int i = 0; i < b.n; ++i) into(b.offset + i) += scale * c(i, i).real();
    int p = b.offset + b.n;
    for (const auto& [i, j] : b.pairs) {
      into(p) += scale * 2.0 * c(i, j).real();
      into(p + 1) += scale * 2.0 * c(i, j).imag();
      p += 2;
    }
  }

 private:
  std::vector<HermitianBlock> blocks_;
  std::vector<std::string> scalar_names_;
  std::vector<int> scalar_index_;
  int dim_ = 0;
};

// Real affine functional a.x + b on the parameter vector.
struct Affine {
  VectorXd a;
  double b = 0.0;

  double value(const VectorXd& x) const { return a.dot(x) + b; }
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// A convex inequality with a self-concordant-style log barrier. margin() > 0
// means strictly feasible; barrier() is +inf outside the feasible set;
// add_derivs accumulates the barrier gradient and Hessian at a strictly
// feasible point.
class Constraint {
 public:
  virtual ~Constraint() = default;
  virtual const std::string& name() const = 0;
  virtual double gap_weight() const = 0;
  virtual double margin(const VectorXd& x) const = 0;
  virtual double barrier(const VectorXd& x) const = 0;
  virtual void add_derivs(const VectorXd& x, VectorXd& grad, MatrixXd& hess) const = 0;
};

// sum_i a_i x_i <= ub, stored sparsely.
class LinearConstraint : public Constraint {
 public:
  LinearConstraint(std::string name, std::vector<std::pair<int, double>> terms, double ub)
      : name_(std::move(name)), terms_(std::move(terms)), ub_(ub) {}

  static std::unique_ptr<LinearConstraint> upper_bound(std::string name, int idx, double ub) {
    return std::make_unique<LinearConstraint>(std::move(name),
                                              std::vector<std::pair<int, double>>{{idx, 1.0}}, ub);
  }
  static std::unique_ptr<LinearConstraint> lower_bound(std::string name, int idx, double lb) {
    return std::make_unique<LinearConstraint>(std::move(name),
                                              std::vector<std::pair<int, double>>{{idx, -1.0}},
                                              -lb);
  }

  const std::string& name() const override { return name_; }
  double gap_weight() const override { return 1.0; }

  double margin(const VectorXd& x) const override {
    double g = ub_;
    for (const auto& [i, a] : terms_) g -= a * x(i);
    return g;
  }

  double barrier(const VectorXd& x) const override {
    const double g = margin(x);
    return g > 0.0 ? -std::log(g) : kInf;
  }

  void add_derivs(const VectorXd& x, VectorXd& grad, MatrixXd& hess) const override {
    const double g = margin(x);
    for (const auto& [i, a] : terms_) grad(i) += a / g;
    for (const auto& [i, a] : terms_)
      for (const auto& [j, b] : terms_) hess(i, j) += a * b / (g * g);
  }

 private:
  std::string name_;
  std::vector<std::pair<int, double>> terms_;
  double ub_;
};

// M0 + sum_p scale_p * Block_p >= 0, each block placed as a principal
// submatrix at a diagonal offset.
struct BlockPlacement {
  int block = 0;
  double scale = 1.0;
  int offset = 0;
};

class PsdConstraint : public Constraint {
 public:
  PsdConstraint(const VariableSpace& vs, std::string name, MatrixXcd m0,
                std::vector<BlockPlacement> places)
      : name_(std::move(name)), m_(static_cast<int>(m0.rows())), m0_(std::move(m0)),
        places_(std::move(places)) {
    require(m0_.rows() == m0_.cols(), "PsdConstraint: constant term must be square");
    std::map<int, std::vector<Dyad>> by_param;
    for (const auto& pl : places_) {
      const HermitianBlock& b = vs.block(pl.block);
      require(pl.offset >= 0 && pl.offset + b.n <= m_, "PsdConstraint: placement out of range");
      for (int lp = 0; lp < b.size(); ++lp) {
        Dyad d[2];
        const int cnt = vs.param_dyads(pl.block, lp, d);
        auto& list = by_param[b.offset + lp];
        for (int u = 0; u < cnt; ++u)
          list.push_back({d[u].r + pl.offset, d[u].c + pl.offset, d[u].a * pl.scale});
      }
    }
    for (auto& [p, list] : by_param) {
      params_.push_back(p);
      entries_.push_back(std::move(list));
    }
  }

  MatrixXcd matrix(const VectorXd& x) const {
    MatrixXcd m = m0_;
    for (size_t p = 0; p < params_.size(); ++p) {
      const double v = x(params_[p]);
      for (const Dyad& e : entries_[p]) m(e.r, e.c) += v * e.a;
    }
    return m;
  }

  const std::string& name() const override { return name_; }
  double gap_weight() const override { return static_cast<double>(m_); }
  double margin(const VectorXd& x) const override { return min_eigenvalue(matrix(x)); }

  double barrier(const VectorXd& x) const override {
    Eigen::LLT<MatrixXcd> llt(matrix(x));
    if (llt.info() != Eigen::Success) return kInf;
    double logdet = 0.0;
    const auto& l = llt.matrixLLT();
    for (int i = 0; i < m_; ++i) {
      const double d = l(i, i).real();
      if (!(d > 0.0)) return kInf;
      logdet += std::log(d);
    }
    return -2.0 * logdet;
  }

  void add_derivs(const VectorXd& x, VectorXd& grad, MatrixXd& hess) const override {
    Eigen::LLT<MatrixXcd> llt(matrix(x));
    const MatrixXcd minv = llt.solve(MatrixXcd::Identity(m_, m_));
    const int np = static_cast<int>(params_.size());
    for (int p = 0; p < np; ++p) {
      cxd acc(0.0, 0.0);
      for (const Dyad& e : entries_[static_cast<size_t>(p)]) acc += e.a * minv(e.c, e.r);
      grad(params_[static_cast<size_t>(p)]) -= acc.real();
    }
    for (int p = 0; p < np; ++p) {
      for (int q = p; q < np; ++q) {
        cxd acc(0.0, 0.0);
        for (const Dyad& e : entries_[static_cast<size_t>(p)])
          for (const Dyad& f : entries_[static_cast<size_t>(q)])
            acc += e.a * f.a * minv(f.c, e.r) * minv(e.c, f.r);
        const double v = acc.real();
        hess(params_[static_cast<size_t>(p)], params_[static_cast<size_t>(q)]) += v;
        if (q != p) hess(params_[static_cast<size_t>(q)], params_[static_cast<size_t>(p)]) += v;
      }
    }
  }

 private:
  std::string name_;
  int m_;
  MatrixXcd m0_;
  std::vector<BlockPlacement> places_;
  std::vector<int> params_;
  std::vector<std::vector<Dyad>> entries_;
};

// base(x) + sum_t gamma_t * ln(arg_t(x)) >= 0 with gamma_t > 0: the concave
// surrogate constraints of the beamforming sub-problem.
class LogPairConstraint : public Constraint {
 public:
  LogPairConstraint(std::string name, Affine base, std::vector<Affine> args,
                    std::vector<double> gammas)
      : name_(std::move(name)), base_(std::move(base)), args_(std::move(args)),
        gammas_(std::move(gammas)) {
    require(args_.size() == gammas_.size(), "LogPairConstraint: one weight per log argument");
    for (double g : gammas_) require(g > 0.0, "LogPairConstraint: weights must be positive");
  }

  double g_value(const VectorXd& x) const {
    double g = base_.value(x);
    for (size_t t = 0; t < args_.size(); ++t) {
      const double u = args_[t].value(x);
      if (!(u > 0.0)) return -kInf;
      g += gammas_[t] * std::log(u);
    }
    return g;
  }

  const std::string& name() const override { return name_; }
  double gap_weight() const override { return 1.0; }
  double margin(const VectorXd& x) const override { return g_value(x); }

  double barrier(const VectorXd& x) const override {
    const double g = g_value(x);
    return g > 0.0 ? -std::log(g) : kInf;
  }

  void add_derivs(const VectorXd& x, VectorXd& grad, MatrixXd& hess) const override {
    const double g = g_value(x);
    VectorXd dg = base_.a;
    for (size_t t = 0; t < args_.size(); ++t) {
      const double u = args_[t].value(x);
      dg.noalias() += (gammas_[t] / u) * args_[t].a;
      // -d2g/g contribution: + gamma/u^2 * a a^T / g
      hess.noalias() += (gammas_[t] / (u * u * g)) * (args_[t].a * args_[t].a.transpose());
    }
    grad.noalias() -= dg / g;
    hess.noalias() += (dg * dg.transpose()) / (g * g);
  }

 private:
  std::string name_;
  Affine base_;
  std::vector<Affine> args_;
  std::vector<double> gammas_;
};

// x_t - c * x_f^3 >= floor, convex for x_f >= 0 (enforce a positive lower
// bound on x_f separately).
class CubicConstraint : public Constraint {
 public:
  CubicConstraint(std::string name, int t_idx, int f_idx, double coef, double floor = 0.0)
      : name_(std::move(name)), t_(t_idx), f_(f_idx), coef_(coef), floor_(floor) {
    require(coef_ > 0.0, "CubicConstraint: coefficient must be positive");
  }

  const std::string& name() const override { return name_; }
  double gap_weight() const override { return 1.0; }

  double margin(const VectorXd& x) const override {
    const double f = x(f_);
    return x(t_) - coef_ * f * f * f - floor_;
  }

  double barrier(const VectorXd& x) const override {
    const double g = margin(x);
    return g > 0.0 ? -std::log(g) : kInf;
  }

  void add_derivs(const VectorXd& x, VectorXd& grad, MatrixXd& hess) const override {
    const double f = x(f_);
    const double g = margin(x);
    const double df = -3.0 * coef_ * f * f;  // dg/df
    grad(t_) += -1.0 / g;
    grad(f_) += -df / g;
    hess(t_, t_) += 1.0 / (g * g);
    hess(t_, f_) += df / (g * g);
    hess(f_, t_) += df / (g * g);
    hess(f_, f_) += df * df / (g * g) + 6.0 * coef_ * f / g;
  }

 private:
  std::string name_;
  int t_, f_;
  double coef_, floor_;
};

// c0 + a.x - 1/2 sum_i m_i (x_i - u_i)^2 >= 0 over an index set.
class ConcaveQuadConstraint : public Constraint {
 public:
  struct Curvature {
    int idx = 0;
    double weight = 0.0;  // m_i >= 0
    double center = 0.0;  // u_i
  };

  ConcaveQuadConstraint(std::string name, Affine base, std::vector<Curvature> curv)
      : name_(std::move(name)), base_(std::move(base)), curv_(std::move(curv)) {
    for (const auto& c : curv_) require(c.weight >= 0.0, "ConcaveQuad: negative curvature weight");
  }

  double g_value(const VectorXd& x) const {
    double g = base_.value(x);
    for (const auto& c : curv_) {
      const double d = x(c.idx) - c.center;
      g -= 0.5 * c.weight * d * d;
    }
    return g;
  }

  const std::string& name() const override { return name_; }
  double gap_weight() const override { return 1.0; }
  double margin(const VectorXd& x) const override { return g_value(x); }

  double barrier(const VectorXd& x) const override {
    const double g = g_value(x);
    return g > 0.0 ? -std::log(g) : kInf;
  }

  void add_derivs(const VectorXd& x, VectorXd& grad, MatrixXd& hess) const override {
    const double g = g_value(x);
    VectorXd dg = base_.a;
    for (const auto& c : curv_) {
      dg(c.idx) -= c.weight * (x(c.idx) - c.center);
      hess(c.idx, c.idx) += c.weight / g;
    }
    grad.noalias() -= dg / g;
    hess.noalias() += (dg * dg.transpose()) / (g * g);
  }

 private:
  std::string name_;
  Affine base_;
  std::vector<Curvature> curv_;
};

struct Program {
  VariableSpace vars;
  VectorXd c;  // maximize c.x
  std::vector<std::unique_ptr<Constraint>> constraints;

  double objective(const VectorXd& x) const { return c.dot(x); }
};

struct SolveOptions {
  double kkt_tol = 1e-6;
  double t0 = 1.0;
  double mu = 20.0;
  double newton_tol = 1e-9;
  int max_newton = 800;
  int max_stages = 40;
};

struct ActiveInfo {
  std::string name;
  double multiplier = 0.0;
  double margin = 0.0;
};

struct SolveReport {
  bool feasible_start = true;
  bool converged = false;
  bool hit_iteration_cap = false;
  std::string message;
  VectorXd x;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double gap = kInf;
  double newton_decrement = kInf;
  int newton_iters = 0;
  double barrier_t = 0.0;
  std::vector<ActiveInfo> active;
  std::vector<std::string> violated;
};

namespace detail {

inline double barrier_total(const Program& p, const VectorXd& x) {
  double b = 0.0;
  for (const auto& c : p.constraints) {
    b += c->barrier(x);
    if (!std::isfinite(b)) return kInf;
  }
  return b;
}

}  // namespace detail

// Primal log-barrier path following: minimize t*(-c.x) + sum(-ln margins),
// escalating t by mu until the duality-gap surrogate (sum of barrier
// parameters)/t clears kkt_tol. Requires a strictly feasible start; an
// infeasible one yields a diagnostic report naming the violated constraints.
inline SolveReport solve(const Program& prog, VectorXd x, const SolveOptions& opt = {}) {
  const int n = prog.vars.dim();
  require(x.size() == n, "solve: start vector has wrong dimension");
  SolveReport rep;

  if (!std::isfinite(detail::barrier_total(prog, x))) {
    rep.feasible_start = false;
    rep.converged = false;
    rep.x = x;
    rep.message = "initial point is not strictly feasible";
    for (const auto& c : prog.constraints)
      if (!(c->margin(x) > 0.0)) rep.violated.push_back(c->name());
    return rep;
  }

  double gap_weight = 0.0;
  for (const auto& c : prog.constraints) gap_weight += c->gap_weight();

  double t = opt.t0;
  VectorXd grad(n);
  MatrixXd hess(n, n);
  int iters = 0;
  double decrement = kInf;

  // Damped Newton centering at the current t, stopping once half the Newton
  // decrement falls below ctol or the step budget runs out. Intermediate
  // stages only need rough centering; the final stage is re-run at
  // opt.newton_tol with a small budget, since at high t rounding noise in the
  // Hessian can keep the decrement from ever reaching a tight tolerance.
  const auto center = [&](double ctol, int budget) {
    for (int local = 0; local < budget; ++local) {
      if (iters >= opt.max_newton) {
        rep.hit_iteration_cap = true;
        return;
      }
      grad = -t * prog.c;
      hess.setZero();
      for (const auto& c : prog.constraints) c->add_derivs(x, grad, hess);

      VectorXd step;
      double ridge = 0.0;
      const double scale = std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff());
      for (int attempt = 0; attempt < 10; ++attempt) {
        MatrixXd h = hess;
        if (ridge > 0.0) h.diagonal().array() += ridge;
        Eigen::LLT<MatrixXd> llt(h);
        step = llt.solve(-grad);
        decrement = -grad.dot(step);
        if (llt.info() == Eigen::Success && std::isfinite(decrement) && decrement >= 0.0) break;
        ridge = ridge == 0.0 ? 1e-12 * scale : ridge * 100.0;
      }
      ++iters;
      if (!std::isfinite(decrement) || decrement * 0.5 <= ctol) return;

      const double phi0 = -t * prog.c.dot(x) + detail::barrier_total(prog, x);
      double alpha = 1.0;
      const double slope = grad.dot(step);  // negative along a descent step
      bool accepted = false;
      for (int halve = 0; halve < 60; ++halve) {
        const VectorXd cand = x + alpha * step;
        const double phi = -t * prog.c.dot(cand) + detail::barrier_total(prog, cand);
        if (std::isfinite(phi) && phi <= phi0 + 0.25 * alpha * slope) {
          x = cand;
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) return;  // stalled line search: treat as centered
    }
  };

  for (int stage = 0; stage < opt.max_stages; ++stage) {
    center(std::max(3e-3, opt.newton_tol), opt.max_newton);
    rep.gap = gap_weight / t;
    const double obj = prog.objective(x);
    if (rep.gap <= opt.kkt_tol * (1.0 + std::abs(obj))) {
      if (!rep.hit_iteration_cap) center(opt.newton_tol, 15);
      rep.converged = true;
      break;
    }
    if (rep.hit_iteration_cap) break;
    // land the last stage exactly at the needed barrier parameter instead of
    // overshooting into badly conditioned territory
    const double t_needed = gap_weight / (opt.kkt_tol * (1.0 + std::abs(obj)));
    t = std::min(t * opt.mu, std::max(1.02 * t_needed, 1.5 * t));
  }

  rep.x = x;
  rep.objective = prog.objective(x);
  rep.newton_iters = iters;
  rep.newton_decrement = decrement;
  rep.barrier_t = t;
  if (!rep.converged && !rep.hit_iteration_cap) rep.message = "stage limit reached";
  if (rep.hit_iteration_cap) rep.message = "newton iteration cap reached";

  // approximate multipliers from the final barrier: lambda = w / (t * margin)
  double max_mult = 0.0;
  std::vector<ActiveInfo> info;
  for (const auto& c : prog.constraints) {
    const double m = c->margin(x);
    const double mult = m > 0.0 ? c->gap_weight() / (t * m) : kInf;
    info.push_back({c->name(), mult, m});
    if (std::isfinite(mult)) max_mult = std::max(max_mult, mult);
  }
  for (auto& a : info)
    if (a.multiplier >= 1e-3 * std::max(max_mult, 1e-300)) rep.active.push_back(a);
  return rep;
}

}  // namespace nfiscsc
