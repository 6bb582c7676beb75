#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace nfiscsc {

using cxd = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::RowVectorXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kSpeedOfLight = 299792458.0;

// Deterministic RNG wrapper. std:: distributions are implementation-defined,
// so uniforms come straight from the 53 high bits of mt19937_64 and Gaussians
// from Box-Muller; outputs are identical on any conforming platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  double uniform() {
    return static_cast<double>(state_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * kPi * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * kPi * u2);
  }

  cxd complex_gaussian() {
    const double re = gaussian();
    const double im = gaussian();
    return cxd(re, im) / std::sqrt(2.0);
  }

  std::uint64_t raw() { return state_(); }

 private:
  std::mt19937_64 state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

inline double dbm_to_linear(double dbm) { return std::pow(10.0, dbm / 10.0); }

inline double linear_to_dbm(double mw) {
  if (mw <= 0.0) throw std::invalid_argument("linear_to_dbm: power must be positive");
  return 10.0 * std::log10(mw);
}

// Hermitian matrix square root via self-adjoint eigendecomposition; tiny
// negative eigenvalues from rounding are clamped to zero.
inline MatrixXcd hermitian_sqrt(const MatrixXcd& a) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(a);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("hermitian_sqrt: eigendecomposition failed");
  VectorXd lam = es.eigenvalues();
  for (int i = 0; i < lam.size(); ++i) lam(i) = lam(i) > 0.0 ? std::sqrt(lam(i)) : 0.0;
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
}

inline double min_eigenvalue(const MatrixXcd& a) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(a);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("min_eigenvalue: eigendecomposition failed");
  return es.eigenvalues().minCoeff();
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace nfiscsc
