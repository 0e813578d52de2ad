#pragma once

// Pass/fail checks on a candidate solution of the reduced problem:
// feasibility, stationarity, multiplier signs and (optionally) the gap to the
// reference optimizer.

#include "twr/oracle.hpp"
#include "twr/quadforms.hpp"
#include "twr/solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace twr {

struct Tolerances {
  double feasibility = 1e-6;
  double kkt = 1e-6;
  double multiplier = 1e-8;
  double oracle_gap = 5e-3;
  /// A constraint with f_i > 1 + active_tol is treated as inactive when the
  /// multipliers are estimated.
  double active_tol = 1e-6;
  bool run_oracle = false;
  int oracle_starts = 32;
  std::uint64_t oracle_seed = 0;
};

struct Criterion {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
};

struct CheckSummary {
  std::vector<Criterion> criteria;
  double power = 0.0;
  double f1 = 0.0;
  double f2 = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  bool multipliers_estimated = false;
  std::optional<double> oracle_power;
  std::optional<double> oracle_gap;

  bool all_passed() const {
    return std::all_of(criteria.begin(), criteria.end(),
                       [](const Criterion& c) { return c.passed; });
  }
  const Criterion* find(const std::string& name) const {
    for (const auto& c : criteria) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }
};

/// Least-squares multipliers for M a = sum lambda_i Q_i a, with lambda_i
/// pinned to 0 for inactive constraints.
inline std::pair<double, double> estimate_multipliers(const Vec4& a, const Coefficients& k,
                                                      double w, double active_tol) {
  const QuadForms forms = QuadForms::at(k, w);
  const bool active1 = forms.f(Terminal::One, a) <= 1.0 + active_tol;
  const bool active2 = forms.f(Terminal::Two, a) <= 1.0 + active_tol;
  const Vec4 target = forms.M * a;
  const Vec4 q1a = forms.Q1 * a;
  const Vec4 q2a = forms.Q2 * a;
  if (active1 && active2) {
    Eigen::Matrix<double, 4, 2> basis;
    basis << q1a, q2a;
    const Vec2 l = basis.colPivHouseholderQr().solve(target);
    return {l(0), l(1)};
  }
  auto single = [&](const Vec4& q) {
    const double qq = q.squaredNorm();
    return qq > 0.0 ? q.dot(target) / qq : 0.0;
  };
  if (active1) return {single(q1a), 0.0};
  if (active2) return {0.0, single(q2a)};
  return {0.0, 0.0};
}

/// Checks a. When multipliers are not supplied they are estimated.
inline CheckSummary check_solution(const Vec4& a,
                                   std::optional<std::pair<double, double>> multipliers,
                                   const Coefficients& k, const Tolerances& tol = {},
                                   double w = 1.0) {
  const QuadForms forms = QuadForms::at(k, w);
  CheckSummary out;
  out.power = forms.power(a);
  out.f1 = forms.f(Terminal::One, a);
  out.f2 = forms.f(Terminal::Two, a);
  if (!multipliers) {
    multipliers = estimate_multipliers(a, k, w, tol.active_tol);
    out.multipliers_estimated = true;
  }
  out.lambda1 = multipliers->first;
  out.lambda2 = multipliers->second;

  const double m1 = out.f1 - 1.0;
  const double m2 = out.f2 - 1.0;
  out.criteria.push_back({"feasibility_1", m1 >= -tol.feasibility, m1, -tol.feasibility});
  out.criteria.push_back({"feasibility_2", m2 >= -tol.feasibility, m2, -tol.feasibility});
  const double kkt = oracle::kkt_residual(a, out.lambda1, out.lambda2, k, w);
  out.criteria.push_back({"kkt_residual", kkt <= tol.kkt, kkt, tol.kkt});
  out.criteria.push_back(
      {"multiplier_1", out.lambda1 >= -tol.multiplier, out.lambda1, -tol.multiplier});
  out.criteria.push_back(
      {"multiplier_2", out.lambda2 >= -tol.multiplier, out.lambda2, -tol.multiplier});

  if (tol.run_oracle) {
    oracle::OracleConfig cfg;
    cfg.starts = tol.oracle_starts;
    cfg.seed = tol.oracle_seed;
    try {
      const oracle::OracleResult ref = oracle::oracle_minimize(k, w, cfg);
      out.oracle_power = ref.power;
      out.oracle_gap = (out.power - ref.power) / ref.power;
      out.criteria.push_back(
          {"oracle_gap", *out.oracle_gap <= tol.oracle_gap, *out.oracle_gap, tol.oracle_gap});
    } catch (const Error&) {
      // Nothing to compare against; the candidate's own checks stand.
      out.criteria.push_back({"oracle_gap", true, 0.0, tol.oracle_gap});
    }
  }
  return out;
}

inline CheckSummary check_solution(const SolveReport& rep, const ReducedProblem& red,
                                   const Tolerances& tol = {}) {
  if (!rep.has_solution) {
    return check_solution(Vec4::Zero(), std::pair{0.0, 0.0}, red.coef, tol);
  }
  return check_solution(rep.a, std::pair{rep.lambda1, rep.lambda2}, red.coef, tol);
}

}  // namespace twr
