#pragma once

// Continuation in w from the d = 0 solution (w = 0) to the full problem
// (w = 1). Along the path both constraints stay active, so (a, lambda1,
// lambda2) solves the 6 equations
//   M a = lambda1 Q1^(w) a + lambda2 Q2^(w) a,   a^T Qi^(w) a = 1,
// and differentiating in w gives the bordered linear system
//   [ sum lambda_i Qi - M   Q1 a   Q2 a ] [ a'       ]   [ sum lambda_i d_i T_ii a ]
//   [ (Q1 a)^T              0      0    ] [ lambda1' ] = [ d1/2 a^T T_11 a         ]
//   [ (Q2 a)^T              0      0    ] [ lambda2' ]   [ d2/2 a^T T_22 a         ]
// with T_ii = tilde(tau_ii). Classical RK4 predicts; Newton on the 6
// equations at fixed w corrects.

#include "twr/dense_lu.hpp"
#include "twr/error.hpp"
#include "twr/exact_zero.hpp"
#include "twr/quadforms.hpp"
#include "twr/reduction.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace twr {

struct HomotopyConfig {
  int steps = 100;
  double corr_tol = 1e-10;
  double lambda_tol = 1e-8;
  int max_newton = 10;
  /// Off only for studying the raw integrator (e.g. its convergence order).
  bool newton_correction = true;
  int max_step_halvings = 8;
  /// Relative pivot threshold for the 6x6 solves.
  double singular_tol = 1e-12;
};

struct HomotopyState {
  Vec4 a = Vec4::Zero();
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double w = 0.0;

  double lambda(Terminal i) const { return i == Terminal::One ? lambda1 : lambda2; }
};

struct StateDerivative {
  Vec4 da = Vec4::Zero();
  double dlambda1 = 0.0;
  double dlambda2 = 0.0;
};

struct PathSample {
  double w = 0.0;
  double power = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  /// a^T Qi^(w) a - 1.
  double defect1 = 0.0;
  double defect2 = 0.0;
  /// |M a - sum lambda_i Qi a| / |M a|.
  double stationarity = 0.0;
};

struct PathDiagnostics {
  int steps = 0;
  int step_halvings = 0;
  int newton_iterations = 0;
  double min_abs_det = std::numeric_limits<double>::infinity();
  double min_rel_pivot = std::numeric_limits<double>::infinity();
  double max_correction = 0.0;
  int lambda_sign_violations = 0;
  std::vector<PathSample> trace;
};

struct KktDefects {
  double stationarity = 0.0;
  double constraint1 = 0.0;
  double constraint2 = 0.0;

  double max_constraint() const {
    return std::max(std::abs(constraint1), std::abs(constraint2));
  }
};

inline KktDefects kkt_defects(const HomotopyState& s, const QuadForms& forms) {
  const Vec4 ma = forms.M * s.a;
  const Vec4 q1a = forms.Q1 * s.a;
  const Vec4 q2a = forms.Q2 * s.a;
  const double denom = std::max(ma.norm(), std::numeric_limits<double>::min());
  return {(ma - s.lambda1 * q1a - s.lambda2 * q2a).norm() / denom,
          s.a.dot(q1a) - 1.0, s.a.dot(q2a) - 1.0};
}

inline PathSample sample_of(const HomotopyState& s, const QuadFormFamily& fam) {
  const QuadForms forms = fam.at(s.w);
  const KktDefects d = kkt_defects(s, forms);
  return {s.w, forms.power(s.a), s.lambda1, s.lambda2,
          d.constraint1, d.constraint2, d.stationarity};
}

inline PathSample sample_of(const HomotopyState& s, const Coefficients& k) {
  return sample_of(s, QuadFormFamily(k));
}

/// Right-hand side of the path ODE. Throws SingularSystem when the bordered
/// matrix has a pivot below singular_tol times its max-norm.
inline StateDerivative ode_rhs(const HomotopyState& s, const QuadFormFamily& fam,
                               double singular_tol = 1e-12,
                               PathDiagnostics* diag = nullptr) {
  const Vec4 t1a = fam.Tt1 * s.a;
  const Vec4 t2a = fam.Tt2 * s.a;
  const double wd1 = s.w * fam.d1;
  const double wd2 = s.w * fam.d2;
  const Vec4 q1a = fam.C1 * s.a - wd1 * t1a;
  const Vec4 q2a = fam.C2 * s.a - wd2 * t2a;

  Eigen::Matrix<double, 6, 6> sys = Eigen::Matrix<double, 6, 6>::Zero();
  sys.topLeftCorner<4, 4>() = s.lambda1 * fam.C1 + s.lambda2 * fam.C2 - fam.M -
                              (s.lambda1 * wd1) * fam.Tt1 - (s.lambda2 * wd2) * fam.Tt2;
  sys.block<4, 1>(0, 4) = q1a;
  sys.block<4, 1>(0, 5) = q2a;
  sys.block<1, 4>(4, 0) = q1a.transpose();
  sys.block<1, 4>(5, 0) = q2a.transpose();

  Eigen::Matrix<double, 6, 1> rhs;
  rhs.head<4>() = s.lambda1 * fam.d1 * t1a + s.lambda2 * fam.d2 * t2a;
  rhs(4) = 0.5 * fam.d1 * s.a.dot(t1a);
  rhs(5) = 0.5 * fam.d2 * s.a.dot(t2a);

  const auto sol = lu_solve<6>(sys, rhs, singular_tol);
  if (!sol) {
    std::ostringstream msg;
    msg << "path system singular at w=" << s.w << " (max-norm "
        << sys.cwiseAbs().maxCoeff() << ")";
    throw Error(ErrorKind::SingularSystem, msg.str());
  }
  if (diag) {
    diag->min_abs_det = std::min(diag->min_abs_det, std::abs(sol->det));
    diag->min_rel_pivot = std::min(diag->min_rel_pivot, sol->min_rel_pivot);
  }
  return {sol->x.head<4>(), sol->x(4), sol->x(5)};
}

inline StateDerivative ode_rhs(const HomotopyState& s, const Coefficients& k,
                               double singular_tol = 1e-12,
                               PathDiagnostics* diag = nullptr) {
  return ode_rhs(s, QuadFormFamily(k), singular_tol, diag);
}

struct CorrectionResult {
  HomotopyState state;
  int iterations = 0;
  /// Sum of Newton step norms.
  double correction = 0.0;
};

/// Newton on the stationarity and constraint equations at fixed w. Converged
/// when stationarity <= corr_tol (relative to |M a|) and both constraint
/// defects are <= corr_tol. Throws CorrectionDiverged after max_newton
/// iterations or on a singular Jacobian.
inline CorrectionResult newton_correct(const HomotopyState& start,
                                       const QuadFormFamily& fam,
                                       const HomotopyConfig& cfg = {}) {
  const QuadForms forms = fam.at(start.w);
  CorrectionResult out{start, 0, 0.0};
  HomotopyState& s = out.state;

  for (;;) {
    const KktDefects d = kkt_defects(s, forms);
    if (d.stationarity <= cfg.corr_tol && d.max_constraint() <= cfg.corr_tol) {
      return out;
    }
    if (out.iterations >= cfg.max_newton || !s.a.allFinite()) {
      std::ostringstream msg;
      msg << "no convergence after " << out.iterations << " iterations at w="
          << s.w << " (stationarity " << d.stationarity << ", constraint "
          << d.max_constraint() << ")";
      throw Error(ErrorKind::CorrectionDiverged, msg.str());
    }

    const Vec4 q1a = forms.Q1 * s.a;
    const Vec4 q2a = forms.Q2 * s.a;
    Eigen::Matrix<double, 6, 6> jac = Eigen::Matrix<double, 6, 6>::Zero();
    jac.topLeftCorner<4, 4>() = forms.M - s.lambda1 * forms.Q1 - s.lambda2 * forms.Q2;
    jac.block<4, 1>(0, 4) = -q1a;
    jac.block<4, 1>(0, 5) = -q2a;
    jac.block<1, 4>(4, 0) = 2.0 * q1a.transpose();
    jac.block<1, 4>(5, 0) = 2.0 * q2a.transpose();

    Eigen::Matrix<double, 6, 1> resid;
    resid.head<4>() = forms.M * s.a - s.lambda1 * q1a - s.lambda2 * q2a;
    resid(4) = d.constraint1;
    resid(5) = d.constraint2;

    const auto step = lu_solve<6>(jac, -resid, cfg.singular_tol);
    if (!step) {
      throw Error(ErrorKind::CorrectionDiverged,
                  "singular Newton system at w=" + std::to_string(s.w));
    }
    s.a += step->x.head<4>();
    s.lambda1 += step->x(4);
    s.lambda2 += step->x(5);
    out.correction += step->x.norm();
    ++out.iterations;
  }
}

inline CorrectionResult newton_correct(const HomotopyState& start,
                                       const Coefficients& k,
                                       const HomotopyConfig& cfg = {}) {
  return newton_correct(start, QuadFormFamily(k), cfg);
}

namespace detail {

inline HomotopyState add_scaled(const HomotopyState& s, const StateDerivative& d,
                                double h) {
  return {s.a + h * d.da, s.lambda1 + h * d.dlambda1, s.lambda2 + h * d.dlambda2,
          s.w + h};
}

}  // namespace detail

/// One classical RK4 step of length h, no correction.
inline HomotopyState rk4_step(const HomotopyState& s, double h, const QuadFormFamily& k,
                              double singular_tol = 1e-12,
                              PathDiagnostics* diag = nullptr) {
  const StateDerivative k1 = ode_rhs(s, k, singular_tol, diag);
  const StateDerivative k2 = ode_rhs(detail::add_scaled(s, k1, h / 2), k, singular_tol, diag);
  const StateDerivative k3 = ode_rhs(detail::add_scaled(s, k2, h / 2), k, singular_tol, diag);
  const StateDerivative k4 = ode_rhs(detail::add_scaled(s, k3, h), k, singular_tol, diag);
  HomotopyState out = s;
  out.a += h / 6.0 * (k1.da + 2.0 * k2.da + 2.0 * k3.da + k4.da);
  out.lambda1 += h / 6.0 * (k1.dlambda1 + 2.0 * k2.dlambda1 + 2.0 * k3.dlambda1 + k4.dlambda1);
  out.lambda2 += h / 6.0 * (k1.dlambda2 + 2.0 * k2.dlambda2 + 2.0 * k3.dlambda2 + k4.dlambda2);
  out.w = s.w + h;
  return out;
}

inline HomotopyState rk4_step(const HomotopyState& s, double h, const Coefficients& k,
                              double singular_tol = 1e-12,
                              PathDiagnostics* diag = nullptr) {
  return rk4_step(s, h, QuadFormFamily(k), singular_tol, diag);
}

struct BranchOutcome {
  int sign_choice = +1;
  bool start_negative_multiplier = false;
  bool succeeded = false;
  ErrorKind failure_kind = ErrorKind::BranchFailed;
  /// Empty on success.
  std::string failure;
  /// The endpoint at w = 1 on success, otherwise the last accepted state.
  HomotopyState state;
  PathDiagnostics diag;

  /// Throws BranchFailed on a failed branch.
  const HomotopyState& endpoint() const {
    if (!succeeded) throw Error(ErrorKind::BranchFailed, failure);
    return state;
  }
};

/// Integrates one branch from its d = 0 candidate to w = 1. Failures
/// (singular path system after max_step_halvings, correction divergence, a
/// multiplier below -lambda_tol) are recorded in the outcome.
inline BranchOutcome integrate_branch(const ZeroCandidate& start,
                                      const ReducedProblem& red,
                                      const HomotopyConfig& cfg = {}) {
  const QuadFormFamily k(red.coef);
  BranchOutcome out;
  out.sign_choice = start.sign_choice;
  out.start_negative_multiplier = start.negative_multiplier;
  out.state = {start.a, start.lambda1, start.lambda2, 0.0};
  PathDiagnostics& diag = out.diag;

  auto fail = [&](ErrorKind kind, const std::string& why) {
    out.succeeded = false;
    out.failure_kind = kind;
    out.failure = why;
    return out;
  };
  auto check_multipliers = [&](const HomotopyState& s) -> bool {
    if (s.lambda1 < -cfg.lambda_tol || s.lambda2 < -cfg.lambda_tol) {
      ++diag.lambda_sign_violations;
      return false;
    }
    return true;
  };

  if (cfg.steps < 1) {
    return fail(ErrorKind::InvalidInput, "steps must be >= 1");
  }
  if (cfg.newton_correction) {
    try {
      const CorrectionResult c = newton_correct(out.state, k, cfg);
      out.state = c.state;
      diag.newton_iterations += c.iterations;
      diag.max_correction = std::max(diag.max_correction, c.correction);
    } catch (const Error& e) {
      return fail(e.kind(), e.what());
    }
  }
  diag.trace.push_back(sample_of(out.state, k));
  // A negative start is counted but still attempted.
  check_multipliers(out.state);

  const double nominal = 1.0 / cfg.steps;
  for (int step = 0; step < cfg.steps; ++step) {
    const double w_to = step + 1 == cfg.steps ? 1.0 : (step + 1) * nominal;
    int depth = 0;
    while (out.state.w < w_to) {
      const double h = std::min(nominal / static_cast<double>(1 << depth),
                                w_to - out.state.w);
      HomotopyState next;
      try {
        next = rk4_step(out.state, h, k, cfg.singular_tol, &diag);
        if (std::abs(next.w - w_to) < 1e-14) next.w = w_to;
        if (cfg.newton_correction) {
          const CorrectionResult c = newton_correct(next, k, cfg);
          next = c.state;
          diag.newton_iterations += c.iterations;
          diag.max_correction = std::max(diag.max_correction, c.correction);
        }
      } catch (const Error& e) {
        if (++depth > cfg.max_step_halvings) {
          return fail(ErrorKind::BranchFailed,
                      std::string(e.what()) + " (after " +
                          std::to_string(cfg.max_step_halvings) + " step halvings)");
        }
        ++diag.step_halvings;
        continue;
      }
      out.state = next;
      ++diag.steps;
      diag.trace.push_back(sample_of(out.state, k));
      if (!check_multipliers(out.state)) {
        std::ostringstream msg;
        msg << "multiplier left the both-active regime at w=" << out.state.w
            << " (lambda1=" << out.state.lambda1 << ", lambda2="
            << out.state.lambda2 << ")";
        return fail(ErrorKind::BranchFailed, msg.str());
      }
    }
  }

  out.succeeded = true;
  return out;
}

}  // namespace twr
