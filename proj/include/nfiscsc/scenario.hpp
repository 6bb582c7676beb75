#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "nfiscsc/config.hpp"

namespace nfiscsc {

// Spherical placement of a user, target, or scatterer. theta is the azimuth
// against the x axis, phi the polar angle against the z axis, dist the range
// from the array origin.
struct Entity {
  double theta = 0.0;
  double phi = 0.0;
  double dist = 0.0;

  Eigen::Vector3d cartesian() const {
    return {dist * std::cos(theta) * std::sin(phi), dist * std::sin(theta) * std::sin(phi),
            dist * std::cos(phi)};
  }
};

inline Entity entity_from_cartesian(const Eigen::Vector3d& b) {
  Entity e;
  e.dist = b.norm();
  require(e.dist > 0.0, "entity_from_cartesian: zero range");
  e.phi = std::acos(std::clamp(b.z() / e.dist, -1.0, 1.0));
  e.theta = std::atan2(b.y(), b.x());
  return e;
}

// Transmit array of fluid antennas in the y=0 plane. Row i of `pos` is
// (x_i, z_i); index 0 is the antenna nearest the grid centroid and its box is
// degenerate, so it never moves. box_lo/box_hi bound each antenna's movable
// rectangle and always contain the nominal grid point.
struct TxArray {
  MatrixXd pos;      // n x 2
  MatrixXd nominal;  // n x 2
  MatrixXd box_lo;   // n x 2
  MatrixXd box_hi;   // n x 2

  int count() const { return static_cast<int>(pos.rows()); }

  // Bounding-box diagonal over every reachable antenna position.
  double aperture() const {
    const double dx = box_hi.col(0).maxCoeff() - box_lo.col(0).minCoeff();
    const double dz = box_hi.col(1).maxCoeff() - box_lo.col(1).minCoeff();
    return std::hypot(dx, dz);
  }

  // Coordinate vector layout is [x_0..x_{n-1}, z_0..z_{n-1}].
  VectorXd coordinates() const {
    VectorXd u(2 * count());
    u.head(count()) = pos.col(0);
    u.tail(count()) = pos.col(1);
    return u;
  }

  void set_coordinates(const VectorXd& u) {
    require(u.size() == 2 * count(), "set_coordinates: wrong length");
    pos.col(0) = u.head(count());
    pos.col(1) = u.tail(count());
  }

  std::vector<int> movable_coordinates() const {
    std::vector<int> idx;
    for (int axis = 0; axis < 2; ++axis)
      for (int i = 0; i < count(); ++i)
        if (box_hi(i, axis) > box_lo(i, axis)) idx.push_back(axis * count() + i);
    return idx;
  }

  // Freeze every antenna at its current position (fixed-array baseline).
  TxArray collapsed() const {
    TxArray t = *this;
    t.box_lo = t.pos;
    t.box_hi = t.pos;
    return t;
  }
};

// Receive array: fixed half-wavelength grid anchored at the origin corner.
struct RxArray {
  MatrixXd pos;  // n x 2
  double spacing = 0.0;

  int count() const { return static_cast<int>(pos.rows()); }

  double aperture() const {
    const double dx = pos.col(0).maxCoeff() - pos.col(0).minCoeff();
    const double dz = pos.col(1).maxCoeff() - pos.col(1).minCoeff();
    return std::max(std::hypot(dx, dz), spacing);
  }
};

struct Arrays {
  TxArray tx;
  RxArray rx;
};

// Transmit grid is centred at the origin with pitch equal to the movable
// range, so neighbouring boxes tile without overlapping; the pitch falls back
// to lambda/2 when the range shrinks below it (fixed-array baselines) so
// antennas never coincide. Receive grid index m maps to position m * lambda/2.
inline Arrays build_arrays(const SystemConfig& cfg) {
  const double lam = cfg.wavelength();
  const double range = cfg.movable_range_m();
  const double pitch = std::max(range, lam / 2.0);
  const int nt = cfg.tx_count();

  Arrays a;
  a.tx.pos.resize(nt, 2);
  for (int ix = 0; ix < cfg.tx_nx; ++ix)
    for (int iz = 0; iz < cfg.tx_nz; ++iz) {
      const int i = ix * cfg.tx_nz + iz;
      a.tx.pos(i, 0) = (ix - (cfg.tx_nx - 1) / 2.0) * pitch;
      a.tx.pos(i, 1) = (iz - (cfg.tx_nz - 1) / 2.0) * pitch;
    }
  int centre = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < nt; ++i) {
    const double r = a.tx.pos.row(i).norm();
    if (r < best - 1e-15) {
      best = r;
      centre = i;
    }
  }
  if (centre != 0) a.tx.pos.row(0).swap(a.tx.pos.row(centre));
  a.tx.nominal = a.tx.pos;
  a.tx.box_lo = a.tx.pos.array() - range / 2.0;
  a.tx.box_hi = a.tx.pos.array() + range / 2.0;
  a.tx.box_lo.row(0) = a.tx.pos.row(0);
  a.tx.box_hi.row(0) = a.tx.pos.row(0);

  const int nr = cfg.rx_count();
  a.rx.spacing = lam / 2.0;
  a.rx.pos.resize(nr, 2);
  for (int mx = 0; mx < cfg.rx_nx; ++mx)
    for (int mz = 0; mz < cfg.rx_nz; ++mz) {
      const int m = mx * cfg.rx_nz + mz;
      a.rx.pos(m, 0) = mx * a.rx.spacing;
      a.rx.pos(m, 1) = mz * a.rx.spacing;
    }
  return a;
}

struct TargetPlacement {
  Entity center;
  double cluster_radius = 0.0;
  std::vector<Entity> scatterers;
};

struct Placement {
  std::vector<Entity> users;
  std::vector<TargetPlacement> targets;
};

namespace detail {

inline Entity draw_entity(Rng& rng, double d_lo, double d_hi) {
  Entity e;
  e.theta = rng.uniform(kPi / 6.0, 5.0 * kPi / 6.0);
  e.phi = rng.uniform(kPi / 6.0, 5.0 * kPi / 6.0);
  e.dist = rng.uniform(d_lo, d_hi);
  return e;
}

}  // namespace detail

// Users, target centres, and per-target scatterer clusters, all strictly
// inside the near-field annulus (5 lambda, Rayleigh distance) of the larger
// array aperture and in front of the array (y > 0). Draw order is fixed:
// users, then per target its centre followed by its scatterers.
inline Placement generate_placements(const SystemConfig& cfg, const Arrays& arrays,
                                     std::uint64_t seed) {
  const double lam = cfg.wavelength();
  const double aperture = std::max(arrays.tx.aperture(), arrays.rx.aperture());
  const double rayleigh = rayleigh_distance(aperture, lam);
  const double d_lo = std::max(5.0 * lam, 1.5 * aperture);
  const double d_hi = 0.9 * rayleigh;
  require(d_lo < d_hi,
          "generate_placements: near-field annulus is empty for this aperture/wavelength");

  Rng rng(seed);
  Placement p;
  p.users.reserve(static_cast<size_t>(cfg.users));
  for (int k = 0; k < cfg.users; ++k) p.users.push_back(detail::draw_entity(rng, d_lo, d_hi));

  const double radius = cfg.cluster_radius_m;
  for (int l = 0; l < cfg.targets; ++l) {
    TargetPlacement t;
    t.center = detail::draw_entity(rng, d_lo, d_hi);
    t.cluster_radius = radius;
    const Eigen::Vector3d c = t.center.cartesian();
    for (int s = 0; s < cfg.scatterers; ++s) {
      Entity e;
      bool ok = false;
      for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
        const double z = rng.uniform(-1.0, 1.0);
        const double az = rng.uniform(0.0, 2.0 * kPi);
        const double r = radius * std::cbrt(rng.uniform());
        const double s_xy = std::sqrt(std::max(0.0, 1.0 - z * z));
        const Eigen::Vector3d b =
            c + r * Eigen::Vector3d(s_xy * std::cos(az), s_xy * std::sin(az), z);
        if (b.y() <= 1e-9) continue;
        const double dist = b.norm();
        if (dist <= 5.0 * lam || dist >= 0.95 * rayleigh) continue;
        e = entity_from_cartesian(b);
        ok = true;
      }
      if (!ok)
        throw std::runtime_error(
            "generate_placements: could not place a scatterer inside the near-field annulus");
      t.scatterers.push_back(e);
    }
    p.targets.push_back(std::move(t));
  }
  return p;
}

}  // namespace nfiscsc
