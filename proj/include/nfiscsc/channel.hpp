#pragma once

#include <vector>

#include "nfiscsc/scenario.hpp"

namespace nfiscsc {

// Near-field phase of one antenna element at (x, 0, z) toward an entity at
// (theta, phi, d): second-order expansion of the exact spherical wavefront.
inline double steering_phase(double x, double z, double theta, double phi, double d,
                             double wavelength) {
  require(d > 0.0, "steering_phase: range must be positive");
  const double ct = std::cos(theta), sp = std::sin(phi), cp = std::cos(phi);
  const double k = 2.0 * kPi / wavelength;
  const double ax = 1.0 - ct * ct * sp * sp;
  return k * (x * ct * sp - x * x * ax / (2.0 * d) + z * cp - z * z * sp * sp / (2.0 * d));
}

inline RowVectorXcd steering_vector(const MatrixXd& pos, const Entity& e, double wavelength) {
  RowVectorXcd a(pos.rows());
  for (int i = 0; i < pos.rows(); ++i) {
    const double psi = steering_phase(pos(i, 0), pos(i, 1), e.theta, e.phi, e.dist, wavelength);
    a(i) = std::polar(1.0, psi);
  }
  return a;
}

inline RowVectorXcd tx_steering(const TxArray& tx, const Entity& e, double wavelength) {
  return steering_vector(tx.pos, e, wavelength);
}

inline RowVectorXcd rx_steering(const RxArray& rx, const Entity& e, double wavelength) {
  return steering_vector(rx.pos, e, wavelength);
}

// Exact 3-D distance between an antenna at (x, 0, z) and a point b.
inline double element_range(const MatrixXd& pos, int i, const Eigen::Vector3d& b) {
  const double dx = pos(i, 0) - b.x();
  const double dz = pos(i, 1) - b.z();
  const double r = std::sqrt(dx * dx + b.y() * b.y() + dz * dz);
  require(r > 0.0, "element_range: entity coincides with an antenna element");
  return r;
}

// Per-element free-space amplitude 1 / (sqrt(4 pi) r) toward a user.
inline VectorXd pathloss_user(const MatrixXd& pos, const Eigen::Vector3d& b) {
  VectorXd phi(pos.rows());
  const double c = 1.0 / std::sqrt(4.0 * kPi);
  for (int i = 0; i < pos.rows(); ++i) phi(i) = c / element_range(pos, i, b);
  return phi;
}

// Downlink channel of a user: elementwise path loss times near-field steering.
inline RowVectorXcd user_channel(const TxArray& tx, const Entity& user, double wavelength) {
  const RowVectorXcd a = tx_steering(tx, user, wavelength);
  const VectorXd phi = pathloss_user(tx.pos, user.cartesian());
  return a.cwiseProduct(phi.transpose().cast<cxd>());
}

// Channel toward an eavesdropping target: sum of its scatterer components.
inline RowVectorXcd target_channel(const TxArray& tx, const TargetPlacement& t,
                                   double wavelength) {
  require(!t.scatterers.empty(), "target_channel: target has no scatterers");
  RowVectorXcd h = RowVectorXcd::Zero(tx.count());
  for (const Entity& s : t.scatterers)
    h += user_channel(tx, s, wavelength);
  return h;
}

// Round-trip sensing response: sum over targets and scatterers of the two-hop
// path loss (Hadamard) the receive/transmit steering outer product.
inline MatrixXcd echo_channel(const TxArray& tx, const RxArray& rx,
                              const std::vector<TargetPlacement>& targets, double wavelength) {
  require(!targets.empty(), "echo_channel: no targets");
  MatrixXcd g = MatrixXcd::Zero(rx.count(), tx.count());
  for (const TargetPlacement& t : targets) {
    require(!t.scatterers.empty(), "echo_channel: target has no scatterers");
    for (const Entity& s : t.scatterers) {
      const Eigen::Vector3d b = s.cartesian();
      const RowVectorXcd at = tx_steering(tx, s, wavelength);
      const RowVectorXcd ar = rx_steering(rx, s, wavelength);
      VectorXd inv_rt(tx.count()), inv_rr(rx.count());
      for (int i = 0; i < tx.count(); ++i) inv_rt(i) = 1.0 / element_range(tx.pos, i, b);
      for (int m = 0; m < rx.count(); ++m) inv_rr(m) = 1.0 / element_range(rx.pos, m, b);
      const MatrixXd psi = (inv_rr * inv_rt.transpose()) / (4.0 * kPi);
      g += psi.cast<cxd>().cwiseProduct(ar.adjoint() * at);
    }
  }
  return g;
}

struct ChannelSet {
  std::vector<RowVectorXcd> users;
  std::vector<RowVectorXcd> eaves;  // one combined channel per target
  MatrixXcd echo;                   // rx.count() x tx.count()
};

inline ChannelSet build_channels(const Arrays& arrays, const Placement& p, double wavelength) {
  ChannelSet cs;
  cs.users.reserve(p.users.size());
  for (const Entity& u : p.users) cs.users.push_back(user_channel(arrays.tx, u, wavelength));
  cs.eaves.reserve(p.targets.size());
  for (const TargetPlacement& t : p.targets)
    cs.eaves.push_back(target_channel(arrays.tx, t, wavelength));
  cs.echo = echo_channel(arrays.tx, arrays.rx, p.targets, wavelength);
  return cs;
}

}  // namespace nfiscsc
