#pragma once

// Physical two-way relay instance: relay transmit power and per-terminal SINR
// for an arbitrary complex M x M beamforming matrix.

#include "twr/error.hpp"
#include "twr/quadforms.hpp"

#include <Eigen/Core>

#include <complex>
#include <concepts>
#include <cstdint>
#include <random>
#include <string>
#include <utility>

namespace twr {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

struct PhysicalProblem {
  CVec h1;
  CVec h2;
  double p1 = 1.0;
  double p2 = 1.0;
  double sigmaR2 = 1.0;
  double sigma1_2 = 1.0;
  double sigma2_2 = 1.0;
  /// Linear SINR targets.
  double gamma1 = 1.0;
  double gamma2 = 1.0;

  int antennas() const { return static_cast<int>(h1.size()); }
  const CVec& h(Terminal i) const { return i == Terminal::One ? h1 : h2; }
  double p(Terminal i) const { return i == Terminal::One ? p1 : p2; }
  double sigma2(Terminal i) const { return i == Terminal::One ? sigma1_2 : sigma2_2; }
  double gamma(Terminal i) const { return i == Terminal::One ? gamma1 : gamma2; }

  bool operator==(const PhysicalProblem& o) const {
    return h1 == o.h1 && h2 == o.h2 && p1 == o.p1 && p2 == o.p2 &&
           sigmaR2 == o.sigmaR2 && sigma1_2 == o.sigma1_2 &&
           sigma2_2 == o.sigma2_2 && gamma1 == o.gamma1 && gamma2 == o.gamma2;
  }
};

/// Throws InvalidInput unless the instance is well formed.
inline void validate(const PhysicalProblem& prob) {
  if (prob.h1.size() < 2 || prob.h1.size() != prob.h2.size()) {
    throw Error(ErrorKind::InvalidInput,
                "channel vectors must have equal length >= 2");
  }
  if (!prob.h1.allFinite() || !prob.h2.allFinite()) {
    throw Error(ErrorKind::InvalidInput, "channel vectors must be finite");
  }
  if (prob.h1.squaredNorm() == 0.0 || prob.h2.squaredNorm() == 0.0) {
    throw Error(ErrorKind::InvalidInput, "channel vectors must be nonzero");
  }
  for (double v : {prob.p1, prob.p2, prob.sigmaR2, prob.sigma1_2, prob.sigma2_2,
                   prob.gamma1, prob.gamma2}) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorKind::InvalidInput,
                  "powers, noise variances and SINR targets must be positive");
    }
  }
}

namespace detail {

inline void check_dims(const CMat& a, const PhysicalProblem& prob) {
  const auto m = prob.h1.size();
  if (a.rows() != m || a.cols() != m || prob.h2.size() != m) {
    throw Error(ErrorKind::DimensionMismatch,
                "beamforming matrix is " + std::to_string(a.rows()) + "x" +
                    std::to_string(a.cols()) + ", channels have length " +
                    std::to_string(m));
  }
}

}  // namespace detail

/// |A h1|^2 p1 + |A h2|^2 p2 + Tr[A^H A] sigma_R^2.
inline double relay_power(const CMat& a, const PhysicalProblem& prob) {
  detail::check_dims(a, prob);
  return (a * prob.h1).squaredNorm() * prob.p1 +
         (a * prob.h2).squaredNorm() * prob.p2 + a.squaredNorm() * prob.sigmaR2;
}

namespace detail {

// |h_i^T A h_k|^2 and |h_i^T A|^2.
inline std::pair<double, double> sinr_terms(Terminal i, const CMat& a,
                                            const PhysicalProblem& prob) {
  const CVec& hi = prob.h(i);
  const CVec& hk = prob.h(partner(i));
  const Eigen::RowVectorXcd row = hi.transpose() * a;
  const cplx signal = row * hk;
  return {std::norm(signal), row.squaredNorm()};
}

}  // namespace detail

/// SINR at terminal i after self-interference cancellation.
inline double sinr(Terminal i, const CMat& a, const PhysicalProblem& prob) {
  detail::check_dims(a, prob);
  const auto [signal, leak] = detail::sinr_terms(i, a, prob);
  const Terminal k = partner(i);
  return signal * prob.p(k) / (leak * prob.sigmaR2 + prob.sigma2(i));
}

/// f_i(A) - gamma_i sigma_i^2; nonnegative iff SINR_i >= gamma_i.
inline double constraint_margin(Terminal i, const CMat& a,
                                const PhysicalProblem& prob) {
  detail::check_dims(a, prob);
  const auto [signal, leak] = detail::sinr_terms(i, a, prob);
  const Terminal k = partner(i);
  const double f = signal * prob.p(k) - leak * prob.sigmaR2 * prob.gamma(i);
  return f - prob.gamma(i) * prob.sigma2(i);
}

struct ChannelEnsemble {
  int antennas = 4;
  /// Per-link amplitude scale; entries are CSCG with variance scale^2.
  double scale1 = 1.0;
  double scale2 = 1.0;
  double p1 = 1.0;
  double p2 = 1.0;
  double sigmaR2 = 1.0;
  double sigma1_2 = 1.0;
  double sigma2_2 = 1.0;
  double gamma1 = 1.0;
  double gamma2 = 1.0;
};

/// Draws h1, h2 with i.i.d. unit-variance CSCG entries (times the per-link
/// scale) from the caller's generator.
template <std::uniform_random_bit_generator Rng>
PhysicalProblem random_channels(Rng& rng, const ChannelEnsemble& ens) {
  if (ens.antennas < 2) {
    throw Error(ErrorKind::InvalidInput, "antenna count must be >= 2");
  }
  // Real and imaginary parts each carry half of the unit variance.
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  PhysicalProblem prob;
  prob.h1.resize(ens.antennas);
  prob.h2.resize(ens.antennas);
  for (int m = 0; m < ens.antennas; ++m) {
    const double re = normal(rng);
    const double im = normal(rng);
    prob.h1(m) = ens.scale1 * cplx(re, im);
  }
  for (int m = 0; m < ens.antennas; ++m) {
    const double re = normal(rng);
    const double im = normal(rng);
    prob.h2(m) = ens.scale2 * cplx(re, im);
  }
  prob.p1 = ens.p1;
  prob.p2 = ens.p2;
  prob.sigmaR2 = ens.sigmaR2;
  prob.sigma1_2 = ens.sigma1_2;
  prob.sigma2_2 = ens.sigma2_2;
  prob.gamma1 = ens.gamma1;
  prob.gamma2 = ens.gamma2;
  return prob;
}

/// Seeded convenience overload; identical seeds give identical instances.
inline PhysicalProblem random_channels(std::uint64_t seed, const ChannelEnsemble& ens) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32)};
  std::mt19937_64 rng(seq);
  return random_channels(rng, ens);
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

}  // namespace twr
