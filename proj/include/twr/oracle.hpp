#pragma once

// Reference optimizer used to validate the closed-form and continuation
// solvers. It shares nothing with them beyond the quadratic-form builders:
// multi-start quadratic-penalty minimization with BFGS, followed by a
// feasibility-restoring rescale (f_i is homogeneous of degree 2).

#include "twr/error.hpp"
#include "twr/quadforms.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace twr::oracle {

enum class GradientMode { Analytic, FiniteDifference };

struct OracleConfig {
  int starts = 32;
  std::uint64_t seed = 0;
  /// Extra starting points; each feasible hint is also a candidate itself.
  std::vector<Vec4> hints;
  GradientMode gradient = GradientMode::Analytic;
  int max_iterations = 400;
  bool keep_endpoints = false;
};

struct OracleResult {
  Vec4 a = Vec4::Zero();
  double power = std::numeric_limits<double>::infinity();
  int starts_attempted = 0;
  int starts_converged = 0;
  std::vector<Vec4> endpoints;
};

/// |M a - lambda1 Q1 a - lambda2 Q2 a| / max(|M a|, tiny).
inline double kkt_residual(const Vec4& a, double lambda1, double lambda2,
                           const Coefficients& k, double w = 1.0) {
  const QuadForms forms = QuadForms::at(k, w);
  const Vec4 ma = forms.M * a;
  const Vec4 defect = ma - lambda1 * (forms.Q1 * a) - lambda2 * (forms.Q2 * a);
  return defect.norm() / std::max(ma.norm(), std::numeric_limits<double>::min());
}

namespace detail {

struct Penalty {
  const QuadForms& forms;
  double mu;

  double value(const Vec4& a) const {
    const double v1 = std::max(0.0, 1.0 - forms.f(Terminal::One, a));
    const double v2 = std::max(0.0, 1.0 - forms.f(Terminal::Two, a));
    return forms.power(a) + mu * (v1 * v1 + v2 * v2);
  }

  Vec4 gradient(const Vec4& a) const {
    const double v1 = std::max(0.0, 1.0 - forms.f(Terminal::One, a));
    const double v2 = std::max(0.0, 1.0 - forms.f(Terminal::Two, a));
    return 2.0 * (forms.M * a) - 4.0 * mu * (v1 * (forms.Q1 * a) + v2 * (forms.Q2 * a));
  }
};

inline Vec4 fd_gradient(const std::function<double(const Vec4&)>& fn, const Vec4& a) {
  Vec4 g;
  for (int j = 0; j < 4; ++j) {
    const double h = 1e-6 * (1.0 + std::abs(a(j)));
    Vec4 plus = a;
    Vec4 minus = a;
    plus(j) += h;
    minus(j) -= h;
    g(j) = (fn(plus) - fn(minus)) / (2.0 * h);
  }
  return g;
}

// BFGS with Armijo backtracking.
inline Vec4 bfgs(const Penalty& pen, Vec4 x, GradientMode mode, int max_iterations) {
  const auto fn = [&](const Vec4& v) { return pen.value(v); };
  const auto grad = [&](const Vec4& v) -> Vec4 {
    if (mode == GradientMode::Analytic) {
      Vec4 g = pen.gradient(v);
      if (g.allFinite()) return g;
    }
    return fd_gradient(fn, v);
  };

  Mat4 hinv = Mat4::Identity() / (2.0 * pen.forms.M.diagonal().maxCoeff());
  double fx = fn(x);
  Vec4 g = grad(x);
  for (int it = 0; it < max_iterations; ++it) {
    if (g.norm() <= 1e-12 * (1.0 + std::abs(fx))) break;
    Vec4 dir = -hinv * g;
    if (dir.dot(g) >= 0.0) {
      hinv = Mat4::Identity() / (2.0 * pen.forms.M.diagonal().maxCoeff());
      dir = -hinv * g;
    }
    double step = 1.0;
    Vec4 xn;
    double fn_new = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      xn = x + step * dir;
      fn_new = fn(xn);
      if (fn_new <= fx + 1e-4 * step * g.dot(dir)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const Vec4 gn = grad(xn);
    const Vec4 s = xn - x;
    const Vec4 y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-16 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Mat4 id = Mat4::Identity();
      hinv = (id - rho * s * y.transpose()) * hinv * (id - rho * y * s.transpose()) +
             rho * s * s.transpose();
    }
    const bool small_step = s.norm() <= 1e-15 * (1.0 + x.norm());
    x = xn;
    fx = fn_new;
    g = gn;
    if (small_step) break;
  }
  return x;
}

// Rescales a so that min_i f_i(a) = 1; nullopt when some f_i <= 0.
inline std::optional<Vec4> restore_feasibility(const QuadForms& forms, const Vec4& a) {
  const double fmin = std::min(forms.f(Terminal::One, a), forms.f(Terminal::Two, a));
  if (!(fmin > 0.0) || !a.allFinite()) return std::nullopt;
  return Vec4(a / std::sqrt(fmin));
}

}  // namespace detail

/// Multi-start penalty minimization of G(a) s.t. f_i^(w)(a) >= 1. Throws
/// OracleNoFeasiblePoint when no start (and no hint) ends feasible.
inline OracleResult oracle_minimize(const Coefficients& k, double w,
                                    const OracleConfig& cfg = {}) {
  const QuadForms forms = QuadForms::at(k, w);
  OracleResult out;

  auto consider = [&](const Vec4& a) {
    const auto feasible = detail::restore_feasibility(forms, a);
    if (!feasible) return false;
    const double power = forms.power(*feasible);
    if (power < out.power) {
      out.power = power;
      out.a = canonical_sign(*feasible);
    }
    return true;
  };

  auto run_from = [&](Vec4 a) {
    ++out.starts_attempted;
    if (const auto scaled = detail::restore_feasibility(forms, a)) a = *scaled;
    for (int e = 1; e <= 6; ++e) {
      const detail::Penalty pen{forms, std::pow(10.0, e)};
      a = detail::bfgs(pen, a, cfg.gradient, cfg.max_iterations);
    }
    if (cfg.keep_endpoints) out.endpoints.push_back(a);
    if (consider(a)) ++out.starts_converged;
  };

  for (const Vec4& hint : cfg.hints) {
    consider(hint);
    run_from(hint);
  }
  const double spread = 1.0 / std::sqrt(std::min(k.c1, k.c2));
  for (int s = 0; s < cfg.starts; ++s) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed),
                      static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(s)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, spread);
    Vec4 a;
    for (int j = 0; j < 4; ++j) a(j) = normal(rng);
    run_from(a);
  }

  if (!std::isfinite(out.power)) {
    throw Error(ErrorKind::OracleNoFeasiblePoint,
                "none of " + std::to_string(out.starts_attempted) +
                    " starts reached the feasible set");
  }
  return out;
}

}  // namespace twr::oracle
