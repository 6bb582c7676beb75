#pragma once

#include <unsupported/Eigen/KroneckerProduct>
#include <vector>

#include "nfiscsc/channel.hpp"

namespace nfiscsc {

inline void require_psd(const MatrixXcd& m, const std::string& who) {
  require(m.rows() == m.cols(), who + ": matrix must be square");
  require((m - m.adjoint()).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + m.cwiseAbs().maxCoeff()),
          who + ": matrix must be Hermitian");
  const double floor = -1e-9 * (1.0 + m.cwiseAbs().maxCoeff());
  if (min_eigenvalue(m) < floor) throw std::invalid_argument(who + ": matrix must be PSD");
}

// Fisher information of the vectorized response-matrix estimate:
// (F / sigma^2) * R_x^T kron I_{n_r}.
inline MatrixXcd fim_extended(const MatrixXcd& r_x, double sigma_r2, int frames, int n_r) {
  require(sigma_r2 > 0.0, "fim_extended: noise power must be positive");
  require(frames >= 1 && n_r >= 1, "fim_extended: counts must be positive");
  require_psd(r_x, "fim_extended");
  const MatrixXcd eye = MatrixXcd::Identity(n_r, n_r);
  return (static_cast<double>(frames) / sigma_r2) *
         Eigen::kroneckerProduct(r_x.transpose(), eye).eval();
}

// Scalar estimation bound sigma^2 n_rx n_rz / F * Tr(R_x^{-1}).
inline double crb_extended(const MatrixXcd& r_x, double sigma_r2, int frames, int n_rx,
                           int n_rz) {
  require(sigma_r2 > 0.0, "crb_extended: noise power must be positive");
  require(frames >= 1 && n_rx >= 1 && n_rz >= 1, "crb_extended: counts must be positive");
  require_psd(r_x, "crb_extended");
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(r_x);
  const VectorXd lam = es.eigenvalues();
  if (lam.minCoeff() <= 1e-12 * std::max(lam.maxCoeff(), 1.0))
    throw std::invalid_argument("crb_extended: singular covariance, rank condition violated");
  double tr_inv = 0.0;
  for (int i = 0; i < lam.size(); ++i) tr_inv += 1.0 / lam(i);
  return sigma_r2 * n_rx * n_rz / static_cast<double>(frames) * tr_inv;
}

namespace detail {

// Partials of the near-field element phase with respect to (theta, phi, d).
inline Eigen::Vector3d phase_partials(double x, double z, double theta, double phi, double d,
                                      double wavelength) {
  const double k = 2.0 * kPi / wavelength;
  const double ct = std::cos(theta), st = std::sin(theta);
  const double sp = std::sin(phi), cp = std::cos(phi);
  const double ax = 1.0 - ct * ct * sp * sp;
  Eigen::Vector3d g;
  g(0) = k * (-x * st * sp - x * x * ct * st * sp * sp / d);
  g(1) = k * (x * ct * cp + x * x * ct * ct * sp * cp / d - z * sp - z * z * sp * cp / d);
  g(2) = k * (x * x * ax / (2.0 * d * d) + z * z * sp * sp / (2.0 * d * d));
  return g;
}

// db/dp for b = d [cos(theta) sin(phi), sin(theta) sin(phi), cos(phi)].
inline Eigen::Matrix3d position_partials(double theta, double phi, double d) {
  const double ct = std::cos(theta), st = std::sin(theta);
  const double sp = std::sin(phi), cp = std::cos(phi);
  Eigen::Matrix3d j;
  j.col(0) = d * Eigen::Vector3d(-st * sp, ct * sp, 0.0);
  j.col(1) = d * Eigen::Vector3d(ct * cp, st * cp, -sp);
  j.col(2) = Eigen::Vector3d(ct * sp, st * sp, cp);
  return j;
}

}  // namespace detail

// Point-target response without the scatterer sum: optionally carries the
// two-hop path loss. Used for the position-dependent point FIM.
inline MatrixXcd point_response(const Entity& e, const TxArray& tx, const RxArray& rx,
                                double wavelength, bool include_path_loss) {
  const RowVectorXcd at = tx_steering(tx, e, wavelength);
  const RowVectorXcd ar = rx_steering(rx, e, wavelength);
  MatrixXcd g = ar.adjoint() * at;
  if (include_path_loss) {
    const Eigen::Vector3d b = e.cartesian();
    VectorXd inv_rt(tx.count()), inv_rr(rx.count());
    for (int i = 0; i < tx.count(); ++i) inv_rt(i) = 1.0 / element_range(tx.pos, i, b);
    for (int m = 0; m < rx.count(); ++m) inv_rr(m) = 1.0 / element_range(rx.pos, m, b);
    g = g.cwiseProduct(((inv_rr * inv_rt.transpose()) / (4.0 * kPi)).cast<cxd>());
  }
  return g;
}

// 3x3 Fisher information over (theta, phi, d) of a single point target:
// J_pq = (2F / sigma^2) Re Tr(dG/dp R_x (dG/dq)^H). Analytic phase chain
// rule; path loss ignored by default.
inline Eigen::Matrix3d point_target_fim(const Entity& e, const TxArray& tx, const RxArray& rx,
                                        const MatrixXcd& r_x, double sigma_r2, int frames,
                                        double wavelength, bool include_path_loss = false) {
  require(e.dist > 0.0, "point_target_fim: range must be positive");
  require(sigma_r2 > 0.0, "point_target_fim: noise power must be positive");
  require_psd(r_x, "point_target_fim");
  const int nt = tx.count(), nr = rx.count();
  const RowVectorXcd at = tx_steering(tx, e, wavelength);
  const RowVectorXcd ar = rx_steering(rx, e, wavelength);

  MatrixXd dpsi_t(nt, 3), dpsi_r(nr, 3);
  for (int i = 0; i < nt; ++i)
    dpsi_t.row(i) =
        detail::phase_partials(tx.pos(i, 0), tx.pos(i, 1), e.theta, e.phi, e.dist, wavelength)
            .transpose();
  for (int m = 0; m < nr; ++m)
    dpsi_r.row(m) =
        detail::phase_partials(rx.pos(m, 0), rx.pos(m, 1), e.theta, e.phi, e.dist, wavelength)
            .transpose();

  MatrixXd amp = MatrixXd::Ones(nr, nt);
  MatrixXd dlog_amp_t = MatrixXd::Zero(nt, 3), dlog_amp_r = MatrixXd::Zero(nr, 3);
  if (include_path_loss) {
    const Eigen::Vector3d b = e.cartesian();
    const Eigen::Matrix3d db = detail::position_partials(e.theta, e.phi, e.dist);
    VectorXd rt(nt), rr(nr);
    // r = |u - b(p)|, so d log(1/r)/dp = (u - b)^T (db/dp) / r^2.
    for (int i = 0; i < nt; ++i) {
      rt(i) = element_range(tx.pos, i, b);
      const Eigen::Vector3d diff(tx.pos(i, 0) - b.x(), -b.y(), tx.pos(i, 1) - b.z());
      dlog_amp_t.row(i) = diff.transpose() * db / (rt(i) * rt(i));
    }
    for (int m = 0; m < nr; ++m) {
      rr(m) = element_range(rx.pos, m, b);
      const Eigen::Vector3d diff(rx.pos(m, 0) - b.x(), -b.y(), rx.pos(m, 1) - b.z());
      dlog_amp_r.row(m) = diff.transpose() * db / (rr(m) * rr(m));
    }
    for (int m = 0; m < nr; ++m)
      for (int i = 0; i < nt; ++i) amp(m, i) = 1.0 / (4.0 * kPi * rt(i) * rr(m));
  }

  std::vector<MatrixXcd> dg(3);
  for (int p = 0; p < 3; ++p) {
    dg[p].resize(nr, nt);
    for (int m = 0; m < nr; ++m)
      for (int i = 0; i < nt; ++i) {
        const cxd base = std::conj(ar(m)) * at(i) * amp(m, i);
        const cxd dphase = cxd(0.0, dpsi_t(i, p) - dpsi_r(m, p));
        const double damp = dlog_amp_t(i, p) + dlog_amp_r(m, p);
        dg[p](m, i) = base * (dphase + damp);
      }
  }

  Eigen::Matrix3d j;
  for (int p = 0; p < 3; ++p)
    for (int q = 0; q < 3; ++q)
      j(p, q) = 2.0 * frames / sigma_r2 * (dg[p] * r_x * dg[q].adjoint()).trace().real();
  return 0.5 * (j + j.transpose());
}

// Least-squares (maximum-likelihood) estimate of G from Z = G X + N.
inline MatrixXcd ls_estimate(const MatrixXcd& z, const MatrixXcd& x) {
  require(x.cols() >= x.rows(), "ls_estimate: fewer frames than transmit antennas");
  require(z.cols() == x.cols(), "ls_estimate: frame count mismatch");
  const MatrixXcd gram = x * x.adjoint();
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(gram);
  const VectorXd lam = es.eigenvalues();
  if (lam.minCoeff() <= 1e-12 * std::max(lam.maxCoeff(), 1.0))
    throw std::invalid_argument("ls_estimate: transmit matrix is rank deficient");
  return z * x.adjoint() * gram.inverse();
}

enum class TransmitMode { kExact, kStochastic };

// Transmit frames with sample covariance exactly F*R_x (exact mode: matrix
// square root times a scaled partial-DFT semi-unitary) or drawn i.i.d. with
// covariance R_x (stochastic mode).
inline MatrixXcd synthesize_transmit(const MatrixXcd& r_x, int frames, TransmitMode mode,
                                     std::uint64_t seed) {
  require_psd(r_x, "synthesize_transmit");
  const int nt = static_cast<int>(r_x.rows());
  require(frames >= nt, "synthesize_transmit: need at least as many frames as antennas");
  const MatrixXcd root = hermitian_sqrt(r_x);
  MatrixXcd x(nt, frames);
  if (mode == TransmitMode::kExact) {
    MatrixXcd s(nt, frames);
    for (int i = 0; i < nt; ++i)
      for (int f = 0; f < frames; ++f)
        s(i, f) = std::polar(1.0 / std::sqrt(static_cast<double>(frames)),
                             -2.0 * kPi * i * f / frames);
    x = std::sqrt(static_cast<double>(frames)) * root * s;
  } else {
    Rng rng(seed);
    for (int f = 0; f < frames; ++f) {
      VectorXcd g(nt);
      for (int i = 0; i < nt; ++i) g(i) = rng.complex_gaussian();
      x.col(f) = root * g;
    }
  }
  return x;
}

}  // namespace nfiscsc
