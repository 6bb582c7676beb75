#include <catch2/catch_amalgamated.hpp>

#include "nfiscsc/beamforming.hpp"
#include "nfiscsc/scenario.hpp"
#include "nfiscsc/sensing.hpp"

using namespace nfiscsc;

namespace {

SystemConfig small_cfg() {
  SystemConfig c;
  c.tx_nx = 2;
  c.tx_nz = 2;
  c.rx_nx = 3;
  c.rx_nz = 3;
  c.users = 2;
  c.targets = 1;
  c.scatterers = 2;
  c.frames = 12;
  validate(c);
  return c;
}

ChannelSet small_channels(const SystemConfig& cfg, std::uint64_t seed) {
  const Arrays arrays = build_arrays(cfg);
  const Placement p = generate_placements(cfg, arrays, seed);
  return build_channels(arrays, p, cfg.wavelength());
}

MatrixXcd random_psd(Rng& rng, int n, double scale) {
  MatrixXcd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.complex_gaussian();
  return scale * (a * a.adjoint()) / n;
}

struct FeasiblePoint {
  std::vector<MatrixXcd> w;
  MatrixXcd rx;
};

// W_k and R_x = sum_k W_k + (positive definite remainder): every log
// argument of the pair objectives stays positive by construction.
FeasiblePoint random_feasible(Rng& rng, int users, int nt, double scale) {
  FeasiblePoint p;
  p.rx = random_psd(rng, nt, scale) + 0.05 * scale * MatrixXcd::Identity(nt, nt);
  for (int k = 0; k < users; ++k) {
    p.w.push_back(random_psd(rng, nt, scale));
    p.rx += p.w.back();
  }
  return p;
}

}  // namespace

TEST_CASE("tangent surrogate matches the exact pair objective at its expansion point") {
  const SystemConfig cfg = small_cfg();
  const ChannelSet ch = small_channels(cfg, 7);
  const std::vector<double> rho{0.8, 0.5};
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const FeasiblePoint p = random_feasible(rng, cfg.users, cfg.tx_count(), 10.0);
    const LinearizedTerms terms =
        linearize(ch, p.w, p.rx, rho, cfg.semantic_units_per_bit, cfg.comm_noise_mw());
    for (int k = 0; k < cfg.users; ++k)
      for (int l = 0; l < cfg.targets; ++l) {
        const double exact = terms.exact(k, l, p.w[static_cast<size_t>(k)], p.rx);
        const double mino = terms.minorant(k, l, p.w[static_cast<size_t>(k)], p.rx);
        CHECK(mino == Catch::Approx(exact).epsilon(1e-12).margin(1e-12));
      }
  }
}

TEST_CASE("tangent surrogate never exceeds the exact pair objective") {
  const SystemConfig cfg = small_cfg();
  const ChannelSet ch = small_channels(cfg, 8);
  const std::vector<double> rho{1.0, 1.0};
  Rng rng(12);
  const FeasiblePoint e = random_feasible(rng, cfg.users, cfg.tx_count(), 10.0);
  const LinearizedTerms terms =
      linearize(ch, e.w, e.rx, rho, cfg.semantic_units_per_bit, cfg.comm_noise_mw());
  for (int trial = 0; trial < 100; ++trial) {
    const FeasiblePoint p = random_feasible(rng, cfg.users, cfg.tx_count(), 30.0 * rng.uniform());
    for (int k = 0; k < cfg.users; ++k)
      for (int l = 0; l < cfg.targets; ++l) {
        const double exact = terms.exact(k, l, p.w[static_cast<size_t>(k)], p.rx);
        const double mino = terms.minorant(k, l, p.w[static_cast<size_t>(k)], p.rx);
        CHECK(mino <= exact + 1e-10 * (1.0 + std::abs(exact)));
      }
  }
}

TEST_CASE("exact pair values agree with the metrics route") {
  const SystemConfig cfg = small_cfg();
  const ChannelSet ch = small_channels(cfg, 9);
  const std::vector<double> rho{0.7, 0.9};
  Rng rng(13);
  const FeasiblePoint p = random_feasible(rng, cfg.users, cfg.tx_count(), 15.0);
  const LinearizedTerms terms =
      linearize(ch, p.w, p.rx, rho, cfg.semantic_units_per_bit, cfg.comm_noise_mw());
  const SsrBreakdown ssr = worst_case_ssr(ch.users, ch.eaves, p.w, p.rx, rho,
                                          cfg.comm_noise_mw(), cfg.semantic_units_per_bit);
  for (int k = 0; k < cfg.users; ++k)
    for (int l = 0; l < cfg.targets; ++l)
      CHECK(terms.exact(k, l, p.w[static_cast<size_t>(k)], p.rx) ==
            Catch::Approx(ssr.pair_values(k, l)).epsilon(1e-11));
  CHECK(terms.exact_min(p.w, p.rx) == Catch::Approx(ssr.pair_values.minCoeff()).epsilon(1e-11));
}

TEST_CASE("assembled constraints reproduce the surrogate and the budgets") {
  const SystemConfig cfg = small_cfg();
  const ChannelSet ch = small_channels(cfg, 10);
  const std::vector<double> rho{1.0, 0.6};
  Rng rng(14);
  const FeasiblePoint e = random_feasible(rng, cfg.users, cfg.tx_count(), 12.0);
  const LinearizedTerms terms =
      linearize(ch, e.w, e.rx, rho, cfg.semantic_units_per_bit, cfg.comm_noise_mw());
  const SubProblem sp = assemble_subproblem(terms, cfg, rho);

  CHECK(sp.prog.vars.dim() ==
        (cfg.users + 2) * cfg.tx_count() * cfg.tx_count() + 2 * cfg.targets + 1);

  const FeasiblePoint p = random_feasible(rng, cfg.users, cfg.tx_count(), 9.0);
  CanonicalPoint cp;
  cp.w = p.w;
  cp.rx = p.rx;
  cp.f_ghz.assign(static_cast<size_t>(cfg.targets), 3.1);
  VectorXd x = pack_point(sp, cp, terms);
  const double zeta = -2.75;
  x(sp.zeta_index) = zeta;

  for (const auto& con : sp.prog.constraints) {
    const std::string& n = con->name();
    if (n.rfind("pair ", 0) == 0) {
      const int k = n[5] - '0';
      const int l = n[7] - '0';
      const double mino = terms.minorant(k, l, p.w[static_cast<size_t>(k)], p.rx);
      CHECK(con->margin(x) == Catch::Approx(mino - zeta).epsilon(1e-10).margin(1e-10));
    } else if (n == "power budget") {
      double expect = sp.budget.power_budget_mw - p.rx.trace().real();
      for (int ti : sp.t_index) expect -= x(ti);
      CHECK(con->margin(x) == Catch::Approx(expect).epsilon(1e-12));
    } else if (n == "frequency budget") {
      CHECK(con->margin(x) ==
            Catch::Approx(sp.budget.freq_budget_ghz - 3.1 * cfg.targets).epsilon(1e-12));
    } else if (n == "sensing psd") {
      MatrixXcd r = p.rx;
      for (const auto& w : p.w) r -= w;
      CHECK(con->margin(x) == Catch::Approx(min_eigenvalue(r)).epsilon(1e-9).margin(1e-12));
    }
  }
}

TEST_CASE("canonical start is strictly interior across seeds") {
  const SystemConfig cfg = small_cfg();
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const ChannelSet ch = small_channels(cfg, seed);
    const std::vector<double> rho{1.0, 1.0};
    const CanonicalPoint c = canonical_covariances(derive_budget(cfg, rho, cfg.users, cfg.targets));
    const LinearizedTerms terms =
        linearize(ch, c.w, c.rx, rho, cfg.semantic_units_per_bit, cfg.comm_noise_mw());
    const SubProblem sp = assemble_subproblem(terms, cfg, rho);
    const VectorXd x0 = pack_point(sp, c, terms);
    for (const auto& con : sp.prog.constraints) {
      INFO("seed " << seed << " constraint " << con->name());
      CHECK(con->margin(x0) > 0.0);
    }
  }
}

TEST_CASE("canonical start stays interior at the full default scale") {
  SystemConfig cfg;  // defaults: 9 transmit antennas, 5 users, 2 targets
  validate(cfg);
  const ChannelSet ch = small_channels(cfg, 3);
  std::vector<double> rho(static_cast<size_t>(cfg.users), 0.5);
  const CanonicalPoint c = canonical_covariances(derive_budget(cfg, rho, cfg.users, cfg.targets));
  const LinearizedTerms terms =
      linearize(ch, c.w, c.rx, rho, cfg.semantic_units_per_bit, cfg.comm_noise_mw());
  const SubProblem sp = assemble_subproblem(terms, cfg, rho);
  CHECK(sp.prog.vars.dim() == 572);
  const VectorXd x0 = pack_point(sp, c, terms);
  for (const auto& con : sp.prog.constraints) {
    INFO(con->name());
    CHECK(con->margin(x0) > 0.0);
  }
}

TEST_CASE("infeasible budgets are rejected at assembly") {
  const SystemConfig base = small_cfg();
  const std::vector<double> rho{1.0, 1.0};

  SystemConfig tight_freq = base;
  tight_freq.freq_max_hz = 2e9;  // below the latency floor of 2.75 GHz
  CHECK_THROWS_AS(derive_budget(tight_freq, rho, base.users, base.targets), std::runtime_error);

  SystemConfig hungry = base;
  hungry.compute_kappa = 1e-26;  // compute at the floor frequency already exceeds the budget
  CHECK_THROWS_AS(derive_budget(hungry, rho, base.users, base.targets), std::runtime_error);

  SystemConfig strict_crb = base;
  strict_crb.crb_limit = 1e-9;
  CHECK_THROWS_AS(derive_budget(strict_crb, rho, base.users, base.targets), std::runtime_error);
}

TEST_CASE("sca solution satisfies every constraint of the original problem") {
  const SystemConfig cfg = small_cfg();
  const ChannelSet ch = small_channels(cfg, 21);
  const std::vector<double> rho{1.0, 1.0};
  const BeamformingSolution sol = sca_iterate(ch, cfg, rho);
  REQUIRE(sol.converged);

  for (const auto& w : sol.w_mat) CHECK(min_eigenvalue(w) >= -1e-8);
  CHECK(min_eigenvalue(sol.sensing) >= -1e-8);

  double power = sol.r_x.trace().real();
  const double c3 = cfg.compute_kappa * cfg.cycles_per_bit;
  double fsum = 0.0;
  for (double f : sol.f_hz) {
    CHECK(f >= cfg.min_frequency_hz() - 1.0);
    power += c3 * f * f * f;
    fsum += f;
  }
  CHECK(fsum <= cfg.freq_max_hz + 1.0);
  CHECK(power <= cfg.total_power_mw() + 1e-6);

  CHECK(crb_extended(sol.r_x, cfg.radar_noise_mw(), cfg.frames, cfg.rx_nx, cfg.rx_nz) <=
        cfg.crb_limit + 1e-8);

  // the surrogate optimum never claims more than the exact objective delivers
  const SsrBreakdown ssr = worst_case_ssr(ch.users, ch.eaves, sol.w_mat, sol.r_x, rho,
                                          cfg.comm_noise_mw(), cfg.semantic_units_per_bit);
  CHECK(sol.zeta <= ssr.pair_values.minCoeff() + 1e-5 * (1.0 + std::abs(sol.zeta)));
}

TEST_CASE("surrogate optimum trace is non-decreasing across relinearizations") {
  const SystemConfig cfg = small_cfg();
  const ChannelSet ch = small_channels(cfg, 22);
  const std::vector<double> rho{1.0, 1.0};
  const BeamformingSolution sol = sca_iterate(ch, cfg, rho);
  REQUIRE(sol.zeta_trace.size() >= 2);
  for (size_t i = 1; i < sol.zeta_trace.size(); ++i)
    CHECK(sol.zeta_trace[i] >= sol.zeta_trace[i - 1] - 1e-6);
  CHECK(sol.zeta_trace.back() >= sol.zeta_trace.front());
}

TEST_CASE("restart from the optimum stops after one epoch") {
  const SystemConfig cfg = small_cfg();
  const ChannelSet ch = small_channels(cfg, 23);
  const std::vector<double> rho{1.0, 1.0};
  const BeamformingSolution sol = sca_iterate(ch, cfg, rho);
  const BeamformingSolution again = sca_iterate(ch, cfg, rho, &sol);
  CHECK(again.zeta_trace.size() == 1);
  CHECK(again.zeta == Catch::Approx(sol.zeta).epsilon(1e-4).margin(1e-6));
}

TEST_CASE("loose caps stay out of the active set") {
  SystemConfig cfg = small_cfg();
  cfg.crb_limit = 1e6;
  const ChannelSet ch = small_channels(cfg, 24);
  const std::vector<double> rho{1.0, 1.0};
  const BeamformingSolution sol = sca_iterate(ch, cfg, rho);
  for (const std::string& n : sol.active) {
    CHECK(n != "crb cap");
    CHECK(n != "frequency budget");
  }
}

TEST_CASE("rank-one relaxed beamformers are recovered exactly") {
  const SystemConfig cfg = small_cfg();
  const ChannelSet ch = small_channels(cfg, 25);
  const std::vector<double> rho{1.0, 1.0};
  const int nt = cfg.tx_count();
  Rng rng(77);
  std::vector<VectorXcd> truth;
  std::vector<MatrixXcd> w;
  MatrixXcd rx = 0.5 * MatrixXcd::Identity(nt, nt);
  for (int k = 0; k < cfg.users; ++k) {
    VectorXcd v(nt);
    for (int i = 0; i < nt; ++i) v(i) = rng.complex_gaussian();
    v *= 3.0 / v.norm();
    truth.push_back(v);
    w.push_back(v * v.adjoint());
    rx += w.back();
  }
  const RandomizeOutcome out = gaussian_randomize(ch, cfg, rho, w, rx, 6, 5);
  REQUIRE(out.feasible);
  const LinearizedTerms terms =
      linearize(ch, w, rx, rho, cfg.semantic_units_per_bit, cfg.comm_noise_mw());
  CHECK(out.objective == Catch::Approx(terms.exact_min(w, rx)).epsilon(1e-9));
  for (int k = 0; k < cfg.users; ++k) {
    const auto& v = out.w[static_cast<size_t>(k)];
    const auto& u = truth[static_cast<size_t>(k)];
    CHECK(std::abs(u.dot(v)) == Catch::Approx(u.norm() * v.norm()).epsilon(1e-8));
    CHECK(v.norm() == Catch::Approx(u.norm()).epsilon(1e-8));
  }
}

TEST_CASE("randomization candidates respect the relaxed covariances") {
  const SystemConfig cfg = small_cfg();
  const ChannelSet ch = small_channels(cfg, 26);
  const std::vector<double> rho{1.0, 1.0};
  const BeamformingSolution sol = sca_iterate(ch, cfg, rho);
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const RandomizeOutcome out = gaussian_randomize(ch, cfg, rho, sol.w_mat, sol.r_x, 8, seed);
    REQUIRE(out.feasible);
    MatrixXcd residual = sol.r_x;
    for (int k = 0; k < cfg.users; ++k) {
      residual -= out.w_mat[static_cast<size_t>(k)];
      CHECK(out.w_mat[static_cast<size_t>(k)].trace().real() <=
            sol.w_mat[static_cast<size_t>(k)].trace().real() * (1.0 + 1e-9));
    }
    CHECK(min_eigenvalue(residual) >= -1e-8);
    CHECK(out.objective <= sol.zeta + 1e-5 * (1.0 + std::abs(sol.zeta)));
  }
}

TEST_CASE("more randomization samples can only improve the best candidate") {
  const SystemConfig cfg = small_cfg();
  const ChannelSet ch = small_channels(cfg, 27);
  const std::vector<double> rho{1.0, 1.0};
  const BeamformingSolution sol = sca_iterate(ch, cfg, rho);
  const RandomizeOutcome a = gaussian_randomize(ch, cfg, rho, sol.w_mat, sol.r_x, 10, 42);
  const RandomizeOutcome b = gaussian_randomize(ch, cfg, rho, sol.w_mat, sol.r_x, 20, 42);
  CHECK(b.objective >= a.objective);
}
