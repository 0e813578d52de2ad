#pragma once

// Minimum power subject to one constraint alone: min a^T M a s.t.
// a^T Q_i a = 1. The minimizer is the top generalized eigenvector of
// (Q_i, M) scaled onto the constraint, with power 1 / mu_max. When that point
// also satisfies the other constraint it is globally optimal for the full
// problem, since dropping a constraint can only lower the minimum.

#include "twr/quadforms.hpp"

#include <Eigen/Eigenvalues>

#include <optional>

namespace twr {

struct SingleActiveCandidate {
  Terminal active = Terminal::One;
  Vec4 a = Vec4::Zero();
  double power = 0.0;
  /// Value of the other constraint f_k^(w)(a).
  double other_value = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};

/// Returns nullopt when constraint i cannot be satisfied (Q_i^(w) has no
/// positive generalized eigenvalue).
inline std::optional<SingleActiveCandidate> single_active_candidate(
    const Coefficients& k, Terminal i, double w = 1.0) {
  const QuadForms forms = QuadForms::at(k, w);
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat4> eig(forms.Q(i), forms.M);
  if (eig.info() != Eigen::Success) return std::nullopt;
  const double mu = eig.eigenvalues()(3);
  if (!(mu > 0.0)) return std::nullopt;

  Vec4 a = canonical_sign(eig.eigenvectors().col(3));
  a /= std::sqrt(forms.f(i, a));
  SingleActiveCandidate out;
  out.active = i;
  out.a = a;
  out.power = forms.power(a);
  out.other_value = forms.f(partner(i), a);
  // Stationarity M a = lambda_i Q_i a with a^T Q_i a = 1 gives lambda_i = power.
  (i == Terminal::One ? out.lambda1 : out.lambda2) = out.power;
  return out;
}

}  // namespace twr
