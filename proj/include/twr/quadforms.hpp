#pragma once

// Operator algebra for the reduced 2x2 problem: vec / underline / tilde,
// the constant matrices M, T_ki, Q_i^(w), and direct evaluators for the
// objective and constraints.
//
// Convention: vec(a) = [a11, a12, a21, a22] (row-major) everywhere.

#include <Eigen/Core>

#include <algorithm>
#include <cassert>
#include <cmath>

namespace twr {

using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

/// Terminal index, 1 or 2. The partner terminal is 3 - i.
enum class Terminal : int { One = 1, Two = 2 };

constexpr int index_of(Terminal t) { return static_cast<int>(t) - 1; }
constexpr Terminal partner(Terminal t) {
  return t == Terminal::One ? Terminal::Two : Terminal::One;
}

/// Constraint direction tau = [1, sign * r]. tau_1 has sign +1, tau_2 has -1.
struct Tau {
  double r = 1.0;
  int sign = 1;

  Vec2 vector() const { return Vec2(1.0, sign * r); }

  static Tau first(double r) { return {r, +1}; }
  static Tau second(double r) { return {r, -1}; }
};

inline Vec4 vec_of(const Mat2& m) {
  return Vec4(m(0, 0), m(0, 1), m(1, 0), m(1, 1));
}

inline Mat2 mat_of(const Vec4& v) {
  Mat2 m;
  m << v(0), v(1), v(2), v(3);
  return m;
}

/// Block diagonal [[m, 0], [0, m]].
inline Mat4 underline_of(const Mat2& m) {
  Mat4 out = Mat4::Zero();
  out.block<2, 2>(0, 0) = m;
  out.block<2, 2>(2, 2) = m;
  return out;
}

/// [[m11 I, m21 I], [m12 I, m22 I]]. Note the transposed placement of the
/// off-diagonal entries.
inline Mat4 tilde_of(const Mat2& m) {
  Mat4 out = Mat4::Zero();
  const Mat2 id = Mat2::Identity();
  out.block<2, 2>(0, 0) = m(0, 0) * id;
  out.block<2, 2>(0, 2) = m(1, 0) * id;
  out.block<2, 2>(2, 0) = m(0, 1) * id;
  out.block<2, 2>(2, 2) = m(1, 1) * id;
  return out;
}

/// tau tau^T.
inline Mat2 build_tau_outer(const Tau& t) {
  const Vec2 v = t.vector();
  return v * v.transpose();
}

namespace detail {

inline double max_abs(const Mat4& m) { return m.cwiseAbs().maxCoeff(); }

// (m + m^T) / 2; m must already be symmetric up to rounding.
inline Mat4 symmetrized(const Mat4& m) {
  [[maybe_unused]] const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  assert(asym <= 1e-12 * std::max(1.0, max_abs(m)));
  return 0.5 * (m + m.transpose());
}

}  // namespace detail

/// The reduced-problem coefficients that define M and Q_i^(w).
struct Coefficients {
  double q1 = 0.0;
  double q2 = 0.0;
  double c1 = 1.0;
  double c2 = 1.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double r = 1.0;

  Tau tau1() const { return Tau::first(r); }
  Tau tau2() const { return Tau::second(r); }
  Tau tau(Terminal i) const { return i == Terminal::One ? tau1() : tau2(); }
  double c(Terminal i) const { return i == Terminal::One ? c1 : c2; }
  double d(Terminal i) const { return i == Terminal::One ? d1 : d2; }

  bool operator==(const Coefficients&) const = default;
};

/// m = q1 tau_11 + q2 tau_22 + I.
inline Mat2 build_small_m(double q1, double q2, const Tau& t1, const Tau& t2) {
  return q1 * build_tau_outer(t1) + q2 * build_tau_outer(t2) + Mat2::Identity();
}

/// M = underline(m). Symmetric positive definite with eigenvalues >= 1.
inline Mat4 build_M(double q1, double q2, const Tau& t1, const Tau& t2) {
  return underline_of(build_small_m(q1, q2, t1, t2));
}

inline Mat4 build_M(const Coefficients& k) {
  return build_M(k.q1, k.q2, k.tau1(), k.tau2());
}

/// T_ki = underline(tau_kk) * tilde(tau_ii), with k the partner of i.
inline Mat4 build_T(const Tau& ti, const Tau& tk) {
  return detail::symmetrized(underline_of(build_tau_outer(tk)) *
                             tilde_of(build_tau_outer(ti)));
}

/// Q_i^(w) = c_i T_ki - w d_i tilde(tau_ii).
inline Mat4 build_Q(Terminal i, double w, double ci, double di, const Tau& t1,
                    const Tau& t2) {
  const Tau& ti = i == Terminal::One ? t1 : t2;
  const Tau& tk = i == Terminal::One ? t2 : t1;
  return detail::symmetrized(ci * build_T(ti, tk) -
                             w * di * tilde_of(build_tau_outer(ti)));
}

inline Mat4 build_Q(Terminal i, double w, const Coefficients& k) {
  return build_Q(i, w, k.c(i), k.d(i), k.tau1(), k.tau2());
}

/// tilde(tau_ii), the w-derivative direction of Q_i^(w) up to -d_i.
inline Mat4 build_tilde_tau(Terminal i, const Coefficients& k) {
  return tilde_of(build_tau_outer(k.tau(i)));
}

/// G(a) = q1 |a tau1|^2 + q2 |a tau2|^2 + Tr[a^T a].
inline double evaluate_G_direct(const Mat2& a, double q1, double q2,
                                const Tau& t1, const Tau& t2) {
  return q1 * (a * t1.vector()).squaredNorm() +
         q2 * (a * t2.vector()).squaredNorm() + (a.transpose() * a).trace();
}

inline double evaluate_G_direct(const Mat2& a, const Coefficients& k) {
  return evaluate_G_direct(a, k.q1, k.q2, k.tau1(), k.tau2());
}

/// f_i(a) = c_i (tau_i^T a tau_k)^2 - d_i |tau_i^T a|^2.
inline double evaluate_f_direct(Terminal i, const Mat2& a, double ci, double di,
                                const Tau& t1, const Tau& t2) {
  const Vec2 ti = (i == Terminal::One ? t1 : t2).vector();
  const Vec2 tk = (i == Terminal::One ? t2 : t1).vector();
  const double cross = ti.dot(a * tk);
  return ci * cross * cross - di * (ti.transpose() * a).squaredNorm();
}

/// f_i with d_i replaced by w d_i.
inline double evaluate_f_direct(Terminal i, const Mat2& a, const Coefficients& k,
                                double w = 1.0) {
  return evaluate_f_direct(i, a, k.c(i), w * k.d(i), k.tau1(), k.tau2());
}

/// Flips the sign so the first non-negligible component is positive.
inline Vec4 canonical_sign(const Vec4& a) {
  const double tol = 1e-12 * a.cwiseAbs().maxCoeff();
  for (int j = 0; j < 4; ++j) {
    if (std::abs(a(j)) > tol) return a(j) < 0.0 ? Vec4(-a) : a;
  }
  return a;
}

inline double quad(const Mat4& m, const Vec4& v) { return v.dot(m * v); }

/// Precomputed M, Q_1^(w), Q_2^(w) for one homotopy parameter value.
struct QuadForms {
  Mat4 M;
  Mat4 Q1;
  Mat4 Q2;

  static QuadForms at(const Coefficients& k, double w) {
    return {build_M(k), build_Q(Terminal::One, w, k), build_Q(Terminal::Two, w, k)};
  }

  const Mat4& Q(Terminal i) const { return i == Terminal::One ? Q1 : Q2; }
  double power(const Vec4& a) const { return quad(M, a); }
  double f(Terminal i, const Vec4& a) const { return quad(Q(i), a); }
};

/// The w-independent pieces of Q_i^(w) = C_i - w D_i, so that forms at any w
/// are a couple of 4x4 axpys.
struct QuadFormFamily {
  Mat4 M;
  Mat4 C1;
  Mat4 C2;
  /// tilde(tau_ii), without the d_i factor.
  Mat4 Tt1;
  Mat4 Tt2;
  double d1 = 0.0;
  double d2 = 0.0;

  explicit QuadFormFamily(const Coefficients& k)
      : M(build_M(k)),
        C1(build_Q(Terminal::One, 0.0, k)),
        C2(build_Q(Terminal::Two, 0.0, k)),
        Tt1(tilde_of(build_tau_outer(k.tau1()))),
        Tt2(tilde_of(build_tau_outer(k.tau2()))),
        d1(k.d1),
        d2(k.d2) {}

  QuadForms at(double w) const {
    return {M, C1 - (w * d1) * Tt1, C2 - (w * d2) * Tt2};
  }
  const Mat4& tilde_tau(Terminal i) const { return i == Terminal::One ? Tt1 : Tt2; }
};

}  // namespace twr
