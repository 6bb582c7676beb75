#pragma once

#include <algorithm>
#include <limits>
#include <optional>
#include <vector>

#include "nfiscsc/common.hpp"

namespace nfiscsc {

// Real part of the quadratic form h M h^H for a row vector h.
inline double quad_form(const RowVectorXcd& h, const MatrixXcd& m) {
  return ((h * m).cwiseProduct(h.conjugate())).sum().real();
}

inline double quad_form(const RowVectorXcd& h, const VectorXcd& w) {
  const cxd v = (h * w)(0);
  return std::norm(v);
}

// SINR of user k with matrix beamformers. `r_sens` is the dedicated sensing
// covariance (total transmit covariance minus the beamformer sum).
inline double sinr_user(int k, const std::vector<RowVectorXcd>& users,
                        const std::vector<MatrixXcd>& w, const MatrixXcd& r_sens,
                        double noise_mw) {
  require(k >= 0 && k < static_cast<int>(users.size()), "sinr_user: user index out of range");
  const RowVectorXcd& h = users[static_cast<size_t>(k)];
  double num = 0.0, den = noise_mw + quad_form(h, r_sens);
  for (size_t j = 0; j < w.size(); ++j) {
    const double p = quad_form(h, w[j]);
    if (static_cast<int>(j) == k)
      num = p;
    else
      den += p;
  }
  require(den > 0.0, "sinr_user: non-positive interference power");
  return num / den;
}

inline double sinr_user(int k, const std::vector<RowVectorXcd>& users,
                        const std::vector<VectorXcd>& w, const MatrixXcd& r_sens,
                        double noise_mw) {
  std::vector<MatrixXcd> ww;
  ww.reserve(w.size());
  for (const auto& v : w) ww.push_back(v * v.adjoint());
  return sinr_user(k, users, ww, r_sens, noise_mw);
}

// SINR of user-k's stream as intercepted at eavesdropping target l.
inline double sinr_intercept(const RowVectorXcd& h_eave, int k,
                             const std::vector<MatrixXcd>& w, const MatrixXcd& r_sens,
                             double noise_mw) {
  require(k >= 0 && k < static_cast<int>(w.size()), "sinr_intercept: stream index out of range");
  double num = 0.0, den = noise_mw + quad_form(h_eave, r_sens);
  for (size_t j = 0; j < w.size(); ++j) {
    const double p = quad_form(h_eave, w[j]);
    if (static_cast<int>(j) == k)
      num = p;
    else
      den += p;
  }
  require(den > 0.0, "sinr_intercept: non-positive interference power");
  return num / den;
}

// Semantic rate: (units_per_bit / rho) * log2(1 + sinr).
inline double semantic_rate(double sinr, double rho, double units_per_bit) {
  require(rho > 0.0, "semantic_rate: compression ratio must be positive");
  require(sinr > -1.0, "semantic_rate: sinr below -1");
  return units_per_bit / rho * std::log2(1.0 + sinr);
}

// Smallest admissible compression ratio preserving the similarity floor.
// Natural logs in both places; the result must land in (0, 1].
inline double rho_lower_bound(double similarity_floor, const std::vector<double>& group_weights,
                              const std::vector<double>& group_probs) {
  require(similarity_floor > 0.0 && similarity_floor <= 1.0,
          "rho_lower_bound: similarity_floor outside (0,1]");
  require(!group_weights.empty() && group_weights.size() == group_probs.size(),
          "rho_lower_bound: group weights and probabilities must match and be non-empty");
  double wsum = 0.0, wlogp = 0.0;
  for (size_t g = 0; g < group_weights.size(); ++g) {
    require(group_weights[g] >= 0.0, "rho_lower_bound: negative group weight");
    require(group_probs[g] > 0.0 && group_probs[g] <= 1.0,
            "rho_lower_bound: group probability outside (0,1]");
    wsum += group_weights[g];
    wlogp += group_weights[g] * std::log(group_probs[g]);
  }
  require(std::abs(wsum - 1.0) <= 1e-9, "rho_lower_bound: group weights must sum to 1");
  const double denom = 1.0 - std::log(similarity_floor) + wlogp;
  const double value = 1.0 / denom;
  if (!(value > 0.0 && value <= 1.0))
    throw std::domain_error("rho_lower_bound: derived bound outside (0,1], reject configuration");
  return value;
}

// Worst-case semantic secrecy rate of one user: min over eavesdroppers,
// clamped at zero.
inline double secrecy_rate(double rate, const std::vector<double>& leak_rates) {
  double worst = rate;
  for (double leak : leak_rates) worst = std::min(worst, rate - leak);
  return std::max(worst, 0.0);
}

// Semantic information efficiency S/R in [0,1]; absent when the rate is zero.
inline std::optional<double> info_efficiency(double secrecy, double rate) {
  if (rate <= 0.0) return std::nullopt;
  return std::clamp(secrecy / rate, 0.0, 1.0);
}

inline double compute_power(const std::vector<double>& rho, double nu_mw_per_nat) {
  require(nu_mw_per_nat >= 0.0, "compute_power: negative power coefficient");
  double acc = 0.0;
  for (double r : rho) {
    require(r > 0.0 && r <= 1.0, "compute_power: compression ratio outside (0,1]");
    acc -= std::log(r);
  }
  return nu_mw_per_nat * acc;
}

inline double cs_power(const MatrixXcd& r_x) { return r_x.trace().real(); }

inline double task_latency(double bits, double cycles_per_bit, double freq_hz,
                           double freq_floor_hz) {
  require(freq_hz > freq_floor_hz, "task_latency: frequency at or below reserved floor");
  return bits * cycles_per_bit / (freq_hz - freq_floor_hz);
}

inline double process_power(double freq_hz, double cycles_per_bit_rate, double kappa) {
  return kappa * freq_hz * freq_hz * freq_hz * cycles_per_bit_rate;
}

// The four log arguments of one (user, eavesdropper) pair. With total
// transmit covariance r_x and user-k beamformer w_k:
//   a = h_k r_x h_k^H + noise          b = a - h_k w_k h_k^H
//   d = h_l r_x h_l^H + noise          c = d - h_l w_k h_l^H
struct PairScore {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
};

inline PairScore pair_score(const RowVectorXcd& h_user, const RowVectorXcd& h_eave,
                            const MatrixXcd& w_k, const MatrixXcd& r_x, double noise_mw) {
  PairScore s;
  s.a = quad_form(h_user, r_x) + noise_mw;
  s.b = s.a - quad_form(h_user, w_k);
  s.d = quad_form(h_eave, r_x) + noise_mw;
  s.c = s.d - quad_form(h_eave, w_k);
  return s;
}

// Unclamped pair value (units_per_bit/rho) * (log2 a - log2 b + log2 c - log2 d).
// Equals R_k - R_{l|k}.
inline double pair_value(const PairScore& s, double rho, double units_per_bit) {
  require(rho > 0.0, "pair_value: compression ratio must be positive");
  require(s.a > 0.0 && s.b > 0.0 && s.c > 0.0 && s.d > 0.0,
          "pair_value: non-positive log argument, covariance split infeasible");
  return units_per_bit / rho *
         (std::log2(s.a) - std::log2(s.b) + std::log2(s.c) - std::log2(s.d));
}

struct SsrBreakdown {
  MatrixXd pair_values;   // users x eavesdroppers, unclamped
  VectorXd per_user;      // clamped secrecy rate per user
  double worst = 0.0;     // min over users
  int worst_user = 0;
  int worst_eave = 0;
};

inline SsrBreakdown worst_case_ssr(const std::vector<RowVectorXcd>& users,
                                   const std::vector<RowVectorXcd>& eaves,
                                   const std::vector<MatrixXcd>& w, const MatrixXcd& r_x,
                                   const std::vector<double>& rho, double noise_mw,
                                   double units_per_bit) {
  const int nk = static_cast<int>(users.size());
  const int nl = static_cast<int>(eaves.size());
  require(nk >= 1 && nl >= 1, "worst_case_ssr: need at least one user and one eavesdropper");
  require(static_cast<int>(w.size()) == nk, "worst_case_ssr: one beamformer per user required");
  require(static_cast<int>(rho.size()) == nk, "worst_case_ssr: one ratio per user required");
  SsrBreakdown out;
  out.pair_values.resize(nk, nl);
  out.per_user.resize(nk);
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < nk; ++k) {
    double row_min = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (int l = 0; l < nl; ++l) {
      const PairScore s = pair_score(users[static_cast<size_t>(k)], eaves[static_cast<size_t>(l)],
                                     w[static_cast<size_t>(k)], r_x, noise_mw);
      const double v = pair_value(s, rho[static_cast<size_t>(k)], units_per_bit);
      out.pair_values(k, l) = v;
      if (v < row_min) {
        row_min = v;
        arg = l;
      }
    }
    out.per_user(k) = std::max(row_min, 0.0);
    if (out.per_user(k) < worst) {
      worst = out.per_user(k);
      out.worst_user = k;
      out.worst_eave = arg;
    }
  }
  out.worst = worst;
  return out;
}

}  // namespace nfiscsc
