#pragma once

// Rank-2 reduction of the physical problem to real coefficients.
//
// With H = [h1 h2] and Gram matrix K = H^H H, every beamformer of the form
//   A = L b R,   L = conj(H) conj(K)^-1 D T^T,   R = T D K^-1 H^H
// (T = [tau1 tau2], D = diag(d1, d2) complex) satisfies
//   h_i^T A h_k   = D_ii D_kk tau_i^T b tau_k
//   |h_i^T A|^2   = |D_ii|^2 |tau_i^T b|^2
//   |A h_j|^2     = |D_jj|^2 |b tau_j|^2
//   Tr[A^H A]     = Tr[b^H b]
// provided D K^-1 conj(D) = (T^T T)^-1. Writing rho = |K12| / sqrt(K11 K22),
// that holds for r^2 = (1 - rho) / (1 + rho), |D_jj|^2 = K_jj (1 + rho) / 2
// and arg D_11 = -arg K12, arg D_22 = 0.

#include "twr/error.hpp"
#include "twr/physical.hpp"
#include "twr/quadforms.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace twr {

/// Maps reduced 2x2 matrices to physical M x M beamformers: A = left b right.
struct LiftData {
  CMat left;   // M x 2
  CMat right;  // 2 x M
};

struct ReducedProblem {
  Coefficients coef;
  /// Physical watts per unit of reduced power G(a).
  double scale = 1.0;
  /// Present only when produced by reduce().
  std::optional<LiftData> lift;
};

inline constexpr double kMaxGramCondition = 1e12;

inline double gram_condition(const PhysicalProblem& prob) {
  const double k11 = prob.h1.squaredNorm();
  const double k22 = prob.h2.squaredNorm();
  const double k12 = std::abs(prob.h1.dot(prob.h2));
  const double hi = 0.5 * (k11 + k22) + std::hypot(0.5 * (k11 - k22), k12);
  // Smaller eigenvalue as det / hi; mid - rad cancels catastrophically.
  const double lo = (k11 * k22 - k12 * k12) / hi;
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

/// Throws DegenerateChannels when the Gram matrix of (h1, h2) has condition
/// number above kMaxGramCondition.
inline ReducedProblem reduce(const PhysicalProblem& prob) {
  validate(prob);
  const double cond = gram_condition(prob);
  if (!(cond <= kMaxGramCondition)) {
    throw Error(ErrorKind::DegenerateChannels,
                "Gram matrix of (h1, h2) is singular to working precision "
                "(condition number " + std::to_string(cond) + ")");
  }

  const double k11 = prob.h1.squaredNorm();
  const double k22 = prob.h2.squaredNorm();
  const cplx k12 = prob.h1.dot(prob.h2);  // h1^H h2
  const double rho = std::abs(k12) / std::sqrt(k11 * k22);
  const double r = std::sqrt((1.0 - rho) / (1.0 + rho));

  const double d1_abs2 = 0.5 * k11 * (1.0 + rho);
  const double d2_abs2 = 0.5 * k22 * (1.0 + rho);
  const cplx phase = std::abs(k12) > 0.0 ? std::conj(k12) / std::abs(k12) : cplx(1.0);
  const cplx d1 = std::sqrt(d1_abs2) * phase;
  const cplx d2 = std::sqrt(d2_abs2);

  ReducedProblem red;
  Coefficients& c = red.coef;
  c.r = r;
  c.q1 = prob.p1 * d1_abs2 / prob.sigmaR2;
  c.q2 = prob.p2 * d2_abs2 / prob.sigmaR2;
  c.c1 = prob.p2 * d1_abs2 * d2_abs2 / (prob.gamma1 * prob.sigma1_2);
  c.c2 = prob.p1 * d1_abs2 * d2_abs2 / (prob.gamma2 * prob.sigma2_2);
  c.d1 = prob.sigmaR2 * d1_abs2 / prob.sigma1_2;
  c.d2 = prob.sigmaR2 * d2_abs2 / prob.sigma2_2;
  red.scale = prob.sigmaR2;

  const int m = prob.antennas();
  CMat h(m, 2);
  h.col(0) = prob.h1;
  h.col(1) = prob.h2;
  Eigen::Matrix2cd gram;
  gram << cplx(k11), k12, std::conj(k12), cplx(k22);
  Eigen::Matrix2cd taus;
  taus << cplx(1.0), cplx(1.0), cplx(r), cplx(-r);
  Eigen::Matrix2cd dmat = Eigen::Matrix2cd::Zero();
  dmat(0, 0) = d1;
  dmat(1, 1) = d2;
  const Eigen::Matrix2cd gram_inv = gram.inverse();

  LiftData lift;
  lift.left = h.conjugate() * gram_inv.conjugate() * dmat * taus.transpose();
  lift.right = taus * dmat * gram_inv * h.adjoint();
  red.lift = std::move(lift);
  return red;
}

/// Lifts a complex reduced matrix to the physical beamformer.
inline CMat lift(const Eigen::Matrix2cd& b, const ReducedProblem& red) {
  if (!red.lift) {
    throw Error(ErrorKind::InvalidInput,
                "reduced problem carries no lift data (not produced by reduce)");
  }
  return red.lift->left * b * red.lift->right;
}

inline CMat lift(const Mat2& b, const ReducedProblem& red) {
  return lift(Eigen::Matrix2cd(b.cast<cplx>()), red);
}

inline CMat lift(const Vec4& a, const ReducedProblem& red) {
  return lift(mat_of(a), red);
}

}  // namespace twr
