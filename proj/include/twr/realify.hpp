#pragma once

// Turning a complex feasible point a = x + j y into a real one v = gx x + gy y
// with the same constraint values (and, for KKT inputs, the same power).
//
// With B_i = [[x'Qi x, x'Qi y], [x'Qi y, y'Qi y]] we need u' B_i u = 1 for
// u = (gx, gy). Along a direction u(phi) = (cos phi, sin phi) the difference
// h(phi) = u' (B1 - B2) u is a traceless quadratic form, so its two roots are
// orthogonal directions and the values of u' B1 u there sum to tr B1 = 1.
// At least one root therefore has u' B1 u >= 1/2 and can be scaled onto both
// constraints.

#include "twr/error.hpp"
#include "twr/quadforms.hpp"
#include "twr/reduction.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <string_view>

namespace twr {

struct ComplexCandidate {
  Vec4 x = Vec4::Zero();
  Vec4 y = Vec4::Zero();

  /// x^T Q x + y^T Q y.
  double form(const Mat4& q) const { return quad(q, x) + quad(q, y); }
};

/// Multiplication by e^{j theta}: x' = cos x - sin y, y' = sin x + cos y.
inline ComplexCandidate rotate(const ComplexCandidate& cand, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {c * cand.x - s * cand.y, s * cand.x + c * cand.y};
}

enum class RealifyCase {
  /// x^T Qi x in (0, 1) for both i.
  A,
  /// In (0, 1) for exactly one i.
  B,
  /// x^T Q1 x >= 1 and x^T Q2 x <= 0 (or with x and y / 1 and 2 swapped).
  C,
  /// x^T Qi x > 1 for both i (or y^T Qi y > 1 for both): x (resp. y) alone
  /// is strictly feasible.
  Dominated,
};

constexpr std::string_view to_string(RealifyCase c) {
  switch (c) {
    case RealifyCase::A: return "A";
    case RealifyCase::B: return "B";
    case RealifyCase::C: return "C";
    case RealifyCase::Dominated: return "dominated";
  }
  return "?";
}

inline constexpr double kCaseTol = 1e-10;
inline constexpr double kSurfaceTol = 1e-8;

struct RealifyResult {
  Vec4 a = Vec4::Zero();
  /// Coefficients on the input's x and y.
  double gamma_x = 0.0;
  double gamma_y = 0.0;
  /// Phase rotation applied before the intersection search (0 unless case C).
  double theta = 0.0;
  RealifyCase kind = RealifyCase::A;
  /// The direction found in the first quadrant was too close to the
  /// constraint's null cone and the orthogonal root was used.
  bool orthogonal_root = false;
};

namespace detail {

struct PairForms {
  Mat2 b1;
  Mat2 b2;
};

inline Mat2 pair_form(const Mat4& q, const ComplexCandidate& c) {
  const double xy = c.x.dot(q * c.y);
  Mat2 b;
  b << quad(q, c.x), xy, xy, quad(q, c.y);
  return b;
}

inline PairForms pair_forms(const QuadForms& forms, const ComplexCandidate& c) {
  return {pair_form(forms.Q1, c), pair_form(forms.Q2, c)};
}

inline double along(const Mat2& b, double phi) {
  const Vec2 u(std::cos(phi), std::sin(phi));
  return u.dot(b * u);
}

// Root of h on [lo, hi] given a sign change; plain bisection to full
// precision.
template <class F>
double bisect(F&& h, double lo, double hi) {
  double hlo = h(lo);
  for (int it = 0; it < 200 && hi - lo > 1e-17; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double hm = h(mid);
    if (hm == 0.0) return mid;
    if ((hm < 0.0) == (hlo < 0.0)) {
      lo = mid;
      hlo = hm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

inline bool in_open_unit(double v) { return v > kCaseTol && v < 1.0 - kCaseTol; }

// theta in [0, pi/2] with x_theta^T Q x_theta = 1/2 for a pair whose forms sum
// to 1. g(0) = X and g(pi/2) = 1 - X straddle 1/2.
inline double balancing_angle(const Mat4& q, const ComplexCandidate& cand) {
  const auto g = [&](double theta) {
    return quad(q, rotate(cand, theta).x) - 0.5;
  };
  const double g0 = g(0.0);
  if (g0 == 0.0) return 0.0;
  double lo = 0.0;
  double hi = std::numbers::pi / 2.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if ((g(mid) < 0.0) == (g0 < 0.0)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

inline RealifyResult from_rotated(const ComplexCandidate& rotated, double theta,
                                  double gx, double gy) {
  RealifyResult out;
  out.theta = theta;
  out.a = gx * rotated.x + gy * rotated.y;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  out.gamma_x = gx * c + gy * s;
  out.gamma_y = -gx * s + gy * c;
  return out;
}

inline void require_surface(const QuadForms& forms, const ComplexCandidate& cand,
                            Terminal i, bool equality) {
  const double v = cand.form(forms.Q(i));
  const bool ok = equality ? std::abs(v - 1.0) <= kSurfaceTol : v >= 1.0 - kSurfaceTol;
  if (!ok || !cand.x.allFinite() || !cand.y.allFinite()) {
    std::ostringstream msg;
    msg << "x'Q" << static_cast<int>(i) << "x + y'Q" << static_cast<int>(i)
        << "y = " << v << (equality ? ", expected 1" : ", expected >= 1");
    throw Error(ErrorKind::NotOnConstraintSurface, msg.str());
  }
}

}  // namespace detail

inline RealifyCase classify(const ComplexCandidate& cand, const Coefficients& k,
                            double w = 1.0) {
  const QuadForms forms = QuadForms::at(k, w);
  const double x1 = quad(forms.Q1, cand.x);
  const double x2 = quad(forms.Q2, cand.x);
  const double y1 = quad(forms.Q1, cand.y);
  const double y2 = quad(forms.Q2, cand.y);
  if (detail::in_open_unit(x1) && detail::in_open_unit(x2)) return RealifyCase::A;
  if ((x1 > 1.0 && x2 > 1.0) || (y1 > 1.0 && y2 > 1.0)) return RealifyCase::Dominated;
  if (detail::in_open_unit(x1) || detail::in_open_unit(x2)) return RealifyCase::B;
  return RealifyCase::C;
}

/// Real v = gx x + gy y with v^T Qi v = 1 for both i. Requires
/// x^T Qi x + y^T Qi y = 1 (to 1e-8) for both i; throws NotOnConstraintSurface
/// otherwise.
inline RealifyResult realify(const ComplexCandidate& cand, const Coefficients& k,
                             double w = 1.0) {
  const QuadForms forms = QuadForms::at(k, w);
  detail::require_surface(forms, cand, Terminal::One, true);
  detail::require_surface(forms, cand, Terminal::Two, true);

  const RealifyCase kind = classify(cand, k, w);
  double theta = 0.0;
  if (kind == RealifyCase::C) theta = detail::balancing_angle(forms.Q1, cand);
  const ComplexCandidate work = theta == 0.0 ? cand : rotate(cand, theta);

  const detail::PairForms b = detail::pair_forms(forms, work);
  // tr(B1 - B2) is zero up to the input's surface tolerance; dropping it
  // keeps both quadrant roots.
  Mat2 diff = b.b1 - b.b2;
  diff -= 0.5 * diff.trace() * Mat2::Identity();
  const auto h = [&](double phi) { return detail::along(diff, phi); };
  const double half_pi = std::numbers::pi / 2.0;

  auto finish = [&](double phi, bool orthogonal) {
    // v and -v are equivalent; report the one with gx > 0 (or gx = 0, gy > 0).
    if (std::cos(phi) < -1e-15 || (std::abs(std::cos(phi)) <= 1e-15 && std::sin(phi) < 0.0)) {
      phi += std::numbers::pi;
    }
    const double b1 = detail::along(b.b1, phi);
    const double scale = 1.0 / std::sqrt(b1);
    RealifyResult out = detail::from_rotated(work, theta, scale * std::cos(phi),
                                             scale * std::sin(phi));
    out.kind = kind;
    out.orthogonal_root = orthogonal;
    return out;
  };

  // A vanishing component contributes nothing; keep the other one.
  if (work.y.squaredNorm() == 0.0 && quad(forms.Q1, work.x) > 0.0) return finish(0.0, false);
  if (work.x.squaredNorm() == 0.0 && quad(forms.Q1, work.y) > 0.0) return finish(half_pi, false);

  // B1 == B2 up to rounding: every direction balances, take the one where
  // u^T B1 u is largest.
  const double diff_norm = diff.cwiseAbs().maxCoeff();
  if (diff_norm <= 1e-12 * std::max(1.0, b.b1.cwiseAbs().maxCoeff())) {
    Eigen::SelfAdjointEigenSolver<Mat2> eig(b.b1);
    const Vec2 u = eig.eigenvectors().col(1);
    return finish(std::atan2(u(1), u(0)), false);
  }

  // First quadrant: h(0) = X1 - X2 and h(pi/2) = Y1 - Y2 differ in sign.
  std::optional<double> first;
  const double h0 = h(0.0);
  const double h90 = h(half_pi);
  if (h0 == 0.0) {
    first = 0.0;
  } else if (h90 == 0.0) {
    first = half_pi;
  } else if ((h0 < 0.0) != (h90 < 0.0)) {
    first = detail::bisect(h, 0.0, half_pi);
  }

  // Accept the first-quadrant root unless it sits near the null cone of Q1,
  // where the scaling would amplify rounding.
  constexpr double kMinForm = 1e-4;
  if (first && detail::along(b.b1, *first) >= kMinForm) return finish(*first, false);

  // The second quadrant holds the other root.
  const double h180 = h(std::numbers::pi);
  std::optional<double> second;
  if (h90 == 0.0) {
    second = half_pi;
  } else if ((h90 < 0.0) != (h180 < 0.0)) {
    second = detail::bisect(h, half_pi, std::numbers::pi);
  }
  if (second && detail::along(b.b1, *second) > 0.0) {
    return finish(*second, first.has_value());
  }
  if (first && detail::along(b.b1, *first) > 0.0) return finish(*first, false);

  std::ostringstream msg;
  msg << "no balanced direction with positive form (case " << to_string(kind)
      << ", h(0)=" << h0 << ", h(pi/2)=" << h90 << ")";
  throw Error(ErrorKind::NoIntersectionFound, msg.str());
}

inline RealifyResult realify(const ComplexCandidate& cand, const ReducedProblem& red,
                             double w = 1.0) {
  return realify(cand, red.coef, w);
}

/// Real point meeting constraint `active` with equality and the other one
/// with (weak) inequality, given x^T Q_a x + y^T Q_a y = 1 and the other form
/// >= 1. Tries the x- or y-side scaling first; otherwise rotates to the basis
/// where both Q_active forms equal 1/2, in which one side always works.
inline RealifyResult realify_single_active(const ComplexCandidate& cand,
                                           const Coefficients& k, Terminal active,
                                           double w = 1.0) {
  const QuadForms forms = QuadForms::at(k, w);
  detail::require_surface(forms, cand, active, true);
  detail::require_surface(forms, cand, partner(active), false);
  const Mat4& qa = forms.Q(active);
  const Mat4& qo = forms.Q(partner(active));
  const RealifyCase kind = classify(cand, k, w);

  auto side = [&](const ComplexCandidate& c, double theta) -> std::optional<RealifyResult> {
    const double xa = quad(qa, c.x);
    const double ya = quad(qa, c.y);
    const double xo = quad(qo, c.x);
    const double yo = quad(qo, c.y);
    const bool x_ok = xa > kCaseTol && xo >= xa;
    const bool y_ok = ya > kCaseTol && yo >= ya;
    if (x_ok && (!y_ok || xa >= ya)) {
      return detail::from_rotated(c, theta, 1.0 / std::sqrt(xa), 0.0);
    }
    if (y_ok) return detail::from_rotated(c, theta, 0.0, 1.0 / std::sqrt(ya));
    return std::nullopt;
  };

  if (auto out = side(cand, 0.0)) {
    out->kind = kind;
    return *out;
  }
  const double theta = detail::balancing_angle(qa, cand);
  if (auto out = side(rotate(cand, theta), theta)) {
    out->kind = kind;
    return *out;
  }
  throw Error(ErrorKind::NoIntersectionFound,
              "neither side of the balanced basis meets the inactive constraint");
}

inline RealifyResult realify_single_active(const ComplexCandidate& cand,
                                           const ReducedProblem& red, Terminal active,
                                           double w = 1.0) {
  return realify_single_active(cand, red.coef, active, w);
}

}  // namespace twr
