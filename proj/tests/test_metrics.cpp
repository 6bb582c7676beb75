#include <catch2/catch_amalgamated.hpp>

#include "nfiscsc/metrics.hpp"

using namespace nfiscsc;

namespace {

RowVectorXcd random_row(int n, Rng& rng) {
  RowVectorXcd h(n);
  for (int i = 0; i < n; ++i) h(i) = rng.complex_gaussian();
  return h;
}

MatrixXcd random_psd(int n, Rng& rng, double ridge) {
  MatrixXcd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.complex_gaussian();
  return a * a.adjoint() + ridge * MatrixXcd::Identity(n, n);
}

}  // namespace

TEST_CASE("sinr_user closed forms") {
  const int nt = 2;
  std::vector<RowVectorXcd> users{RowVectorXcd::Zero(nt)};
  users[0] << 1.0, 0.0;
  const MatrixXcd zero = MatrixXcd::Zero(nt, nt);

  SECTION("single user, unit desired power, unit noise") {
    std::vector<VectorXcd> w{VectorXcd::Zero(nt)};
    w[0] << 1.0, 0.0;
    CHECK(sinr_user(0, users, w, zero, 1.0) == Catch::Approx(1.0));
  }
  SECTION("zero beamformer gives zero") {
    std::vector<VectorXcd> w{VectorXcd::Zero(nt)};
    CHECK(sinr_user(0, users, w, zero, 1.0) == 0.0);
  }
  SECTION("interference and sensing covariance accumulate in the denominator") {
    users.push_back(users[0]);
    std::vector<VectorXcd> w(2, VectorXcd::Zero(nt));
    w[0] << 2.0, 0.0;
    w[1] << 1.0, 0.0;
    MatrixXcd r = MatrixXcd::Zero(nt, nt);
    r(0, 0) = 0.5;
    // |h w0|^2 / (|h w1|^2 + h R h^H + noise) = 4 / (1 + 0.5 + 0.25)
    CHECK(sinr_user(0, users, w, r, 0.25) == Catch::Approx(4.0 / 1.75));
  }
}

TEST_CASE("rank-one equivalence of matrix and vector beamformers") {
  Rng rng(77);
  const int nt = 4, nk = 3;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<RowVectorXcd> users;
    std::vector<VectorXcd> wv;
    std::vector<MatrixXcd> wm;
    for (int k = 0; k < nk; ++k) {
      users.push_back(random_row(nt, rng));
      VectorXcd w(nt);
      for (int i = 0; i < nt; ++i) w(i) = rng.complex_gaussian();
      wv.push_back(w);
      wm.push_back(w * w.adjoint());
    }
    const MatrixXcd r = random_psd(nt, rng, 0.1);
    for (int k = 0; k < nk; ++k) {
      const double a = sinr_user(k, users, wv, r, 0.3);
      const double b = sinr_user(k, users, wm, r, 0.3);
      REQUIRE(a == Catch::Approx(b).epsilon(1e-10));
      const RowVectorXcd& he = users[static_cast<size_t>((k + 1) % nk)];
      double num = quad_form(he, wv[static_cast<size_t>(k)]);
      double den = 0.3 + quad_form(he, r);
      for (int j = 0; j < nk; ++j)
        if (j != k) den += quad_form(he, wv[static_cast<size_t>(j)]);
      REQUIRE(sinr_intercept(he, k, wm, r, 0.3) == Catch::Approx(num / den).epsilon(1e-10));
    }
  }
}

TEST_CASE("semantic_rate") {
  CHECK(semantic_rate(3.0, 0.5, 1.0) == Catch::Approx(4.0));
  CHECK(semantic_rate(0.0, 0.7, 1.0) == 0.0);
  CHECK(semantic_rate(5.0, 0.25, 1.0) == Catch::Approx(2.0 * semantic_rate(5.0, 0.5, 1.0)));
  CHECK_THROWS_AS(semantic_rate(1.0, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(semantic_rate(1.0, -0.3, 1.0), std::invalid_argument);
}

TEST_CASE("rho_lower_bound") {
  SECTION("closed forms") {
    CHECK(rho_lower_bound(1.0, {1.0}, {1.0}) == Catch::Approx(1.0));
    CHECK(rho_lower_bound(std::exp(-1.0), {1.0}, {1.0}) == Catch::Approx(0.5));
    CHECK(rho_lower_bound(0.2, {0.25, 0.25, 0.25, 0.25}, {0.9, 0.9, 0.9, 0.9}) ==
          Catch::Approx(0.3993487).epsilon(1e-6));
  }
  SECTION("out-of-range result rejected") {
    // 1/(1 - ln 0.9 + ln 0.8) = 1.1335 > 1
    CHECK_THROWS_AS(rho_lower_bound(0.9, {1.0}, {0.8}), std::domain_error);
  }
  SECTION("input validation") {
    CHECK_THROWS_AS(rho_lower_bound(0.0, {1.0}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(rho_lower_bound(0.5, {0.5, 0.5}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(rho_lower_bound(0.5, {0.7, 0.7}, {1.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(rho_lower_bound(0.5, {1.0}, {1.5}), std::invalid_argument);
  }
}

TEST_CASE("secrecy_rate") {
  CHECK(secrecy_rate(5.0, {1.0, 3.0}) == Catch::Approx(2.0));
  CHECK(secrecy_rate(5.0, {5.0, 5.0}) == 0.0);
  CHECK(secrecy_rate(2.0, {6.0}) == 0.0);
  SECTION("monotonicity") {
    CHECK(secrecy_rate(5.0, {1.0, 3.5}) <= secrecy_rate(5.0, {1.0, 3.0}));
    CHECK(secrecy_rate(5.5, {1.0, 3.0}) >= secrecy_rate(5.0, {1.0, 3.0}));
  }
}

TEST_CASE("info_efficiency") {
  CHECK(info_efficiency(2.0, 2.0).value() == Catch::Approx(1.0));
  CHECK(info_efficiency(0.0, 2.0).value() == 0.0);
  CHECK(info_efficiency(0.9984 * 3.0, 3.0).value() == Catch::Approx(0.9984));
  CHECK_FALSE(info_efficiency(1.0, 0.0).has_value());
}

TEST_CASE("power and latency models") {
  SECTION("compute power") {
    CHECK(compute_power({1.0, 1.0}, 20.0) == 0.0);
    CHECK(compute_power({std::exp(-1.0), std::exp(-1.0)}, 1.0) == Catch::Approx(2.0));
    const std::vector<double> rho{0.7, 0.4, 0.9};
    double oracle = 0.0;
    for (double r : rho) oracle += -5.0 * std::log(r);
    CHECK(compute_power(rho, 5.0) == Catch::Approx(oracle).epsilon(1e-14));
    CHECK(compute_power({0.5}, 5.0) > compute_power({0.6}, 5.0));
    CHECK_THROWS_AS(compute_power({0.0}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(compute_power({1.2}, 1.0), std::invalid_argument);
  }
  SECTION("cs power") {
    CHECK(cs_power(MatrixXcd::Identity(9, 9)) == Catch::Approx(9.0));
    CHECK(cs_power(MatrixXcd::Zero(4, 4)) == 0.0);
    Rng rng(13);
    const MatrixXcd r = random_psd(5, rng, 0.0);
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(r);
    CHECK(cs_power(r) == Catch::Approx(es.eigenvalues().sum()).epsilon(1e-12));
  }
  SECTION("latency") {
    CHECK(task_latency(0.5e6, 110.0, 2.75e9, 0.0) == Catch::Approx(0.02));
    CHECK(task_latency(0.5e6, 110.0, 5.5e9, 0.0) == Catch::Approx(0.01));
    CHECK_THROWS_AS(task_latency(0.5e6, 110.0, 1e9, 1e9), std::invalid_argument);
  }
  SECTION("process power") {
    CHECK(process_power(0.0, 110.0, 1e-28) == 0.0);
    CHECK(process_power(1e9, 110.0, 1e-28) == Catch::Approx(11.0));
    CHECK(process_power(2e9, 110.0, 1e-28) == Catch::Approx(88.0));
  }
}

TEST_CASE("pair scores reproduce the rate-difference route") {
  Rng rng(101);
  const int nt = 3, nk = 2, nl = 2;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<RowVectorXcd> users, eaves;
    std::vector<MatrixXcd> w;
    std::vector<double> rho;
    MatrixXcd wsum = MatrixXcd::Zero(nt, nt);
    for (int k = 0; k < nk; ++k) {
      users.push_back(random_row(nt, rng));
      VectorXcd v(nt);
      for (int i = 0; i < nt; ++i) v(i) = rng.complex_gaussian();
      w.push_back(v * v.adjoint());
      wsum += w.back();
      rho.push_back(rng.uniform(0.4, 1.0));
    }
    for (int l = 0; l < nl; ++l) eaves.push_back(random_row(nt, rng));
    const MatrixXcd r_sens = random_psd(nt, rng, 0.05);
    const MatrixXcd r_x = wsum + r_sens;
    const double noise = 0.2, iota = 1.0;

    const SsrBreakdown out = worst_case_ssr(users, eaves, w, r_x, rho, noise, iota);

    // independent route: semantic rates from the SINR definitions
    double worst = std::numeric_limits<double>::infinity();
    for (int k = 0; k < nk; ++k) {
      const double rate = semantic_rate(sinr_user(k, users, w, r_sens, noise), rho[k], iota);
      std::vector<double> leaks;
      for (int l = 0; l < nl; ++l)
        leaks.push_back(
            semantic_rate(sinr_intercept(eaves[l], k, w, r_sens, noise), rho[k], iota));
      const double s = secrecy_rate(rate, leaks);
      REQUIRE(out.per_user(k) == Catch::Approx(s).margin(1e-10));
      worst = std::min(worst, s);
    }
    REQUIRE(out.worst == Catch::Approx(worst).margin(1e-10));
  }
}

TEST_CASE("pair value rejects infeasible covariance splits") {
  PairScore s;
  s.a = 1.0;
  s.b = -0.1;
  s.c = 1.0;
  s.d = 1.0;
  CHECK_THROWS_AS(pair_value(s, 1.0, 1.0), std::invalid_argument);
}
