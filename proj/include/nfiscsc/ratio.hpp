#pragma once

#include <cmath>
#include <vector>

#include "nfiscsc/config.hpp"
#include "nfiscsc/metrics.hpp"

namespace nfiscsc {

// Transmit power left for semantic compression once the current covariance
// and CPU frequencies are paid for. May come back negative; the caller must
// treat that state as infeasible.
inline double residual_budget(double total_power_mw, const MatrixXcd& r_x,
                              const std::vector<double>& f_hz, const SystemConfig& cfg) {
  double acc = total_power_mw - cs_power(r_x);
  for (double f : f_hz) acc -= process_power(f, cfg.cycles_per_bit, cfg.compute_kappa);
  return acc;
}

enum class RatioBinding { budget, lower_bound, unity };

struct RatioSolution {
  std::vector<double> rho;
  RatioBinding binding = RatioBinding::unity;
  double residual_mw = 0.0;  // budget handed to the solve
  double used_mw = 0.0;      // compression power at the returned ratios
};

// Minimize the common extraction ratio under the compression power budget
// -nu sum_k ln rho_k <= budget and rho in [rho_lb, 1]. The problem is
// symmetric and strictly convex, so all ratios coincide; bisection runs on
// the common value and always lands on the feasible side of the budget.
inline RatioSolution bisection_solve(double budget_mw, double nu_mw_per_nat, int users,
                                     double rho_lb, double tol) {
  require(budget_mw >= 0.0, "bisection_solve: negative compression budget");
  require(nu_mw_per_nat > 0.0, "bisection_solve: power coefficient must be positive");
  require(users >= 1, "bisection_solve: need at least one user");
  require(rho_lb > 0.0 && rho_lb <= 1.0, "bisection_solve: lower bound outside (0,1]");
  require(tol > 0.0, "bisection_solve: tolerance must be positive");

  const double scale = nu_mw_per_nat * users;
  const auto spend = [&](double rho) { return -scale * std::log(rho); };

  RatioSolution out;
  out.residual_mw = budget_mw;
  double rho = 1.0;
  if (spend(1.0) >= budget_mw - tol) {
    out.binding = RatioBinding::unity;
  } else if (spend(rho_lb) <= budget_mw) {
    rho = rho_lb;
    out.binding = RatioBinding::lower_bound;
  } else {
    double lo = rho_lb, hi = 1.0;  // spend(lo) > budget, spend(hi) < budget
    while (spend(hi) < budget_mw - tol && hi - lo > 1e-15) {
      const double mid = 0.5 * (lo + hi);
      (spend(mid) <= budget_mw ? hi : lo) = mid;
    }
    rho = hi;
    out.binding = RatioBinding::budget;
  }
  out.rho.assign(static_cast<size_t>(users), rho);
  out.used_mw = compute_power(out.rho, nu_mw_per_nat);
  return out;
}

}  // namespace nfiscsc
