#pragma once

// Closed-form optimum of the reduced problem when d1 = d2 = 0.
//
// With d = 0 each constraint is |row_i . a| >= c_i^(-1/2), where
//   row_1 = [1, -r, r, -r^2],  row_2 = [1, r, -r, -r^2].
// Up to an overall sign there are two planes on which both hold with
// equality (row_2 . a = +c2^(-1/2) or -c2^(-1/2)). Each is
//   b_s + z1 [r^2, 0, 0, 1] + z2 [0, 1, 1, 0]
// and the minimum-power point on it is where the power gradient is
// orthogonal to both directions.

#include "twr/error.hpp"
#include "twr/quadforms.hpp"
#include "twr/reduction.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>

namespace twr {

struct Multipliers {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  /// |M a - lambda1 Q1 a - lambda2 Q2 a|.
  double residual = 0.0;
  /// Set when some multiplier is below -1e-10: not a KKT point with both
  /// constraints active.
  bool negative_multiplier = false;
};

struct ZeroCandidate {
  Vec4 a = Vec4::Zero();
  double power = 0.0;
  /// Sign of row_2 . a on the plane this candidate came from (before sign
  /// canonicalization).
  int sign_choice = +1;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double kkt_residual = 0.0;
  bool negative_multiplier = false;
};

inline constexpr double kNegativeMultiplierTol = 1e-10;

/// Least-squares multipliers for M a = lambda1 Q1^(0) a + lambda2 Q2^(0) a.
inline Multipliers bootstrap_multipliers(const Vec4& a, const ReducedProblem& red,
                                         double w = 0.0) {
  const QuadForms forms = QuadForms::at(red.coef, w);
  Eigen::Matrix<double, 4, 2> basis;
  basis.col(0) = forms.Q1 * a;
  basis.col(1) = forms.Q2 * a;
  const Vec4 target = forms.M * a;
  const Vec2 lambda = basis.colPivHouseholderQr().solve(target);

  Multipliers out;
  out.lambda1 = lambda(0);
  out.lambda2 = lambda(1);
  out.residual = (target - basis * lambda).norm();
  out.negative_multiplier =
      lambda(0) < -kNegativeMultiplierTol || lambda(1) < -kNegativeMultiplierTol;
  return out;
}

inline Vec4 constraint_row(Terminal i, double r) {
  return i == Terminal::One ? Vec4(1.0, -r, r, -r * r) : Vec4(1.0, r, -r, -r * r);
}

/// Both equality-constrained candidates, index 0 for sign +1 and 1 for -1.
inline std::array<ZeroCandidate, 2> solve_zero(const ReducedProblem& red) {
  const Coefficients& k = red.coef;
  if (!(k.r > 0.0) || !(k.c1 > 0.0) || !(k.c2 > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "solve_zero needs r > 0 and c_i > 0");
  }
  const Mat4 M = build_M(k);
  const double u = 1.0 / std::sqrt(k.c1);
  const double v = 1.0 / std::sqrt(k.c2);

  Eigen::Matrix<double, 4, 2> dirs;
  dirs.col(0) = Vec4(k.r * k.r, 0.0, 0.0, 1.0);
  dirs.col(1) = Vec4(0.0, 1.0, 1.0, 0.0);
  const Mat2 tangent = dirs.transpose() * M * dirs;
  const double det = tangent.determinant();
  if (!(std::abs(det) > 1e-14 * tangent.squaredNorm())) {
    throw Error(ErrorKind::SingularTangentSystem,
                "tangent system is singular (det = " + std::to_string(det) + ")");
  }

  std::array<ZeroCandidate, 2> out;
  for (int idx = 0; idx < 2; ++idx) {
    const int s = idx == 0 ? +1 : -1;
    // row_1 . base = u, row_2 . base = s v.
    const Vec4 base((u + s * v) / 2.0, -(u - s * v) / (2.0 * k.r), 0.0, 0.0);
    const Vec2 z = tangent.inverse() * (-(dirs.transpose() * M * base));

    ZeroCandidate& cand = out[idx];
    cand.a = canonical_sign(base + dirs * z);
    cand.sign_choice = s;
    cand.power = quad(M, cand.a);
    const Multipliers mult = bootstrap_multipliers(cand.a, red);
    cand.lambda1 = mult.lambda1;
    cand.lambda2 = mult.lambda2;
    cand.kkt_residual = mult.residual;
    cand.negative_multiplier = mult.negative_multiplier;
  }
  return out;
}

/// The lower-power candidate.
inline const ZeroCandidate& best_of(const std::array<ZeroCandidate, 2>& cands) {
  return cands[1].power < cands[0].power ? cands[1] : cands[0];
}

}  // namespace twr
