#include <catch2/catch_amalgamated.hpp>

#include "nfiscsc/channel.hpp"

using namespace nfiscsc;

namespace {

TxArray make_tx(const MatrixXd& pos) {
  TxArray t;
  t.pos = pos;
  t.nominal = pos;
  t.box_lo = pos;
  t.box_hi = pos;
  return t;
}

RxArray make_rx(const MatrixXd& pos, double spacing) {
  RxArray r;
  r.pos = pos;
  r.spacing = spacing;
  return r;
}

}  // namespace

TEST_CASE("steering phase closed forms") {
  const double lam = 0.006;
  SECTION("zero coordinate gives unit element") {
    CHECK(steering_phase(0.0, 0.0, 0.7, 1.1, 3.0, lam) == 0.0);
  }
  SECTION("broadside element at x = lambda, d = lambda gives -1") {
    Entity e{kPi / 2.0, kPi / 2.0, lam};
    MatrixXd pos(1, 2);
    pos << lam, 0.0;
    const RowVectorXcd a = steering_vector(pos, e, lam);
    CHECK(a(0).real() == Catch::Approx(-1.0).margin(1e-12));
    CHECK(a(0).imag() == Catch::Approx(0.0).margin(1e-12));
  }
  SECTION("receive element with z = lambda at phi = 0 gives +1") {
    MatrixXd pos(2, 2);
    pos << 0.0, 0.0, 0.0, lam;  // m = 0 and m_z = 2 at lambda/2 spacing
    const RxArray rx = make_rx(pos, lam / 2.0);
    Entity e{0.4, 0.0, 2.0};
    const RowVectorXcd a = rx_steering(rx, e, lam);
    CHECK(a(0).real() == Catch::Approx(1.0).margin(1e-12));
    CHECK(a(1).real() == Catch::Approx(1.0).margin(1e-12));
    CHECK(a(1).imag() == Catch::Approx(0.0).margin(1e-12));
  }
  SECTION("unit modulus for random geometry") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
      MatrixXd pos(4, 2);
      for (int i = 0; i < 4; ++i)
        for (int ax = 0; ax < 2; ++ax) pos(i, ax) = rng.uniform(-0.1, 0.1);
      Entity e{rng.uniform(0.0, kPi), rng.uniform(0.0, kPi), rng.uniform(0.5, 20.0)};
      const RowVectorXcd a = steering_vector(pos, e, lam);
      for (int i = 0; i < a.size(); ++i) CHECK(std::abs(a(i)) == Catch::Approx(1.0).epsilon(1e-14));
    }
  }
  SECTION("non-positive range rejected") {
    CHECK_THROWS_AS(steering_phase(0.01, 0.0, 1.0, 1.0, 0.0, lam), std::invalid_argument);
  }
}

TEST_CASE("separable grid matches the kronecker construction") {
  const double lam = 0.006;
  const int nx = 2, nz = 3;
  MatrixXd pos(nx * nz, 2);
  VectorXd xs(nx), zs(nz);
  xs << -0.01, 0.02;
  zs << -0.03, 0.0, 0.015;
  for (int ix = 0; ix < nx; ++ix)
    for (int iz = 0; iz < nz; ++iz) {
      pos(ix * nz + iz, 0) = xs(ix);
      pos(ix * nz + iz, 1) = zs(iz);
    }
  Entity e{1.1, 0.8, 2.5};
  const RowVectorXcd a = steering_vector(pos, e, lam);
  RowVectorXcd ax(nx), az(nz);
  for (int ix = 0; ix < nx; ++ix)
    ax(ix) = std::polar(1.0, steering_phase(xs(ix), 0.0, e.theta, e.phi, e.dist, lam));
  for (int iz = 0; iz < nz; ++iz)
    az(iz) = std::polar(1.0, steering_phase(0.0, zs(iz), e.theta, e.phi, e.dist, lam));
  for (int ix = 0; ix < nx; ++ix)
    for (int iz = 0; iz < nz; ++iz)
      CHECK(std::abs(a(ix * nz + iz) - ax(ix) * az(iz)) < 1e-12);
}

TEST_CASE("path loss") {
  MatrixXd pos(1, 2);
  pos << 0.0, 0.0;
  SECTION("closed form at 1 m and 2 m") {
    CHECK(pathloss_user(pos, {0.0, 1.0, 0.0})(0) == Catch::Approx(0.2820947917738781).epsilon(1e-12));
    CHECK(pathloss_user(pos, {0.0, 2.0, 0.0})(0) == Catch::Approx(0.1410473958869391).epsilon(1e-12));
  }
  SECTION("coincident point rejected") {
    CHECK_THROWS_AS(pathloss_user(pos, {0.0, 0.0, 0.0}), std::invalid_argument);
  }
  SECTION("monotone in distance") {
    double prev = 1e9;
    for (double d = 0.5; d < 16.0; d *= 2.0) {
      const double v = pathloss_user(pos, {0.3, d, -0.2})(0);
      CHECK(v < prev);
      prev = v;
    }
  }
}

TEST_CASE("user channel equals per-element recomputation") {
  const double lam = 0.006;
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    MatrixXd pos(5, 2);
    for (int i = 0; i < 5; ++i)
      for (int ax = 0; ax < 2; ++ax) pos(i, ax) = rng.uniform(-0.08, 0.08);
    const TxArray tx = make_tx(pos);
    Entity e{rng.uniform(0.3, 2.8), rng.uniform(0.3, 2.8), rng.uniform(0.8, 10.0)};
    const RowVectorXcd h = user_channel(tx, e, lam);
    const Eigen::Vector3d b = e.cartesian();
    for (int i = 0; i < 5; ++i) {
      const double r = std::sqrt((pos(i, 0) - b.x()) * (pos(i, 0) - b.x()) + b.y() * b.y() +
                                 (pos(i, 1) - b.z()) * (pos(i, 1) - b.z()));
      const cxd expect = std::polar(1.0 / std::sqrt(4.0 * kPi) / r,
                                    steering_phase(pos(i, 0), pos(i, 1), e.theta, e.phi, e.dist, lam));
      CHECK(std::abs(h(i) - expect) < 1e-12 * std::abs(expect));
    }
  }
}

TEST_CASE("user channel norm decreases when range doubles") {
  const double lam = 0.006;
  SystemConfig c;
  const Arrays a = build_arrays(c);
  Entity near{1.2, 1.4, 2.0};
  Entity far{1.2, 1.4, 4.0};
  CHECK(user_channel(a.tx, far, lam).norm() < user_channel(a.tx, near, lam).norm());
}

TEST_CASE("target channel") {
  const double lam = 0.006;
  SystemConfig c;
  const Arrays arr = build_arrays(c);
  Entity s1{1.0, 1.1, 3.0};
  Entity s2{1.3, 0.9, 4.0};

  SECTION("single scatterer reduces to the user channel") {
    TargetPlacement t;
    t.center = s1;
    t.scatterers = {s1};
    CHECK((target_channel(arr.tx, t, lam) - user_channel(arr.tx, s1, lam)).norm() < 1e-15);
  }
  SECTION("two identical scatterers double the channel") {
    TargetPlacement t;
    t.center = s1;
    t.scatterers = {s1, s1};
    CHECK((target_channel(arr.tx, t, lam) - 2.0 * user_channel(arr.tx, s1, lam)).norm() < 1e-15);
  }
  SECTION("matches the per-scatterer sum") {
    TargetPlacement t;
    t.center = s1;
    t.scatterers = {s1, s2};
    const RowVectorXcd manual = user_channel(arr.tx, s1, lam) + user_channel(arr.tx, s2, lam);
    CHECK((target_channel(arr.tx, t, lam) - manual).norm() < 1e-15);
  }
}

TEST_CASE("echo channel") {
  const double lam = 0.006;
  SystemConfig c;
  c.rx_nx = 2;
  c.rx_nz = 2;
  const Arrays arr = build_arrays(c);
  Entity s1{1.0, 1.1, 3.0};
  Entity s2{1.4, 0.8, 5.0};

  SECTION("single scatterer matches brute-force entries and is rank one") {
    TargetPlacement t;
    t.center = s1;
    t.scatterers = {s1};
    const MatrixXcd g = echo_channel(arr.tx, arr.rx, {t}, lam);
    REQUIRE(g.rows() == 4);
    REQUIRE(g.cols() == 9);
    const Eigen::Vector3d b = s1.cartesian();
    const RowVectorXcd at = tx_steering(arr.tx, s1, lam);
    const RowVectorXcd ar = rx_steering(arr.rx, s1, lam);
    for (int m = 0; m < 4; ++m)
      for (int i = 0; i < 9; ++i) {
        const double rt = element_range(arr.tx.pos, i, b);
        const double rr = element_range(arr.rx.pos, m, b);
        const cxd expect = std::conj(ar(m)) * at(i) / (4.0 * kPi * rt * rr);
        CHECK(std::abs(g(m, i) - expect) < 1e-14);
      }
    Eigen::JacobiSVD<MatrixXcd> svd(g);
    CHECK(svd.singularValues()(1) < 1e-12 * svd.singularValues()(0));
  }
  SECTION("linear in targets") {
    TargetPlacement t1, t2;
    t1.center = s1;
    t1.scatterers = {s1};
    t2.center = s2;
    t2.scatterers = {s2};
    const MatrixXcd sum =
        echo_channel(arr.tx, arr.rx, {t1}, lam) + echo_channel(arr.tx, arr.rx, {t2}, lam);
    CHECK((echo_channel(arr.tx, arr.rx, {t1, t2}, lam) - sum).norm() < 1e-15);
  }
}

TEST_CASE("channels are continuous in antenna coordinates") {
  const double lam = 0.006;
  SystemConfig c;
  const Arrays arr = build_arrays(c);
  Entity e{1.2, 1.3, 4.0};
  const RowVectorXcd h0 = user_channel(arr.tx, e, lam);
  TxArray tx2 = arr.tx;
  const double delta = 1e-7;
  tx2.pos(3, 0) += delta;
  const RowVectorXcd h1 = user_channel(tx2, e, lam);
  CHECK((h1 - h0).norm() < 1e4 * delta * h0.norm());
  CHECK((h1 - h0).norm() > 0.0);
}

TEST_CASE("build_channels bundles everything") {
  SystemConfig c;
  const Arrays arr = build_arrays(c);
  const Placement p = generate_placements(c, arr, 5);
  const ChannelSet cs = build_channels(arr, p, c.wavelength());
  REQUIRE(cs.users.size() == 5);
  REQUIRE(cs.eaves.size() == 2);
  CHECK(cs.echo.rows() == 25);
  CHECK(cs.echo.cols() == 9);
  for (const auto& h : cs.users) CHECK(h.allFinite());
  for (const auto& h : cs.eaves) CHECK(h.allFinite());
  CHECK(cs.echo.allFinite());
}
