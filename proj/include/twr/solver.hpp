#pragma once

// Full pipeline: d = 0 candidates, continuation of both branches to w = 1,
// single-constraint closed forms, and selection of the cheapest feasible
// endpoint. Falls back to the reference optimizer only when nothing else is
// feasible.

#include "twr/error.hpp"
#include "twr/exact_zero.hpp"
#include "twr/homotopy.hpp"
#include "twr/oracle.hpp"
#include "twr/physical.hpp"
#include "twr/reduction.hpp"
#include "twr/single_active.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace twr {

enum class CandidateKind {
  BothActivePlus,
  BothActiveMinus,
  SingleActive1,
  SingleActive2,
  OracleFallback,
  None,
};

constexpr std::string_view to_string(CandidateKind kind) {
  switch (kind) {
    case CandidateKind::BothActivePlus: return "both-active+";
    case CandidateKind::BothActiveMinus: return "both-active-";
    case CandidateKind::SingleActive1: return "single-active-1";
    case CandidateKind::SingleActive2: return "single-active-2";
    case CandidateKind::OracleFallback: return "oracle-fallback";
    case CandidateKind::None: return "none";
  }
  return "none";
}

enum class SolveStatus { Ok, NoFeasibleBranch };

struct SolveConfig {
  HomotopyConfig homotopy;
  /// Starts for the oracle when it is consulted (fallback or pre-check).
  int oracle_starts = 32;
  std::uint64_t oracle_seed = 0;
  /// Endpoints with f_i < 1 - feasibility_tol are discarded.
  double feasibility_tol = 1e-9;
  bool single_active = true;
};

struct PhysicalOutcome {
  CMat beamformer;
  double power_watts = 0.0;
  double sinr1 = 0.0;
  double sinr2 = 0.0;
};

struct SolveReport {
  SolveStatus status = SolveStatus::Ok;
  CandidateKind chosen = CandidateKind::None;
  bool has_solution = false;

  Vec4 a = Vec4::Zero();
  double power = 0.0;
  /// scale * power.
  double power_watts = 0.0;
  double f1 = 0.0;
  double f2 = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double kkt_residual = 0.0;

  std::array<ZeroCandidate, 2> zero_candidates;
  std::array<std::optional<BranchOutcome>, 2> branches;
  std::array<std::optional<SingleActiveCandidate>, 2> single_active;
  std::vector<std::string> warnings;

  bool oracle_fallback = false;
  std::optional<oracle::OracleResult> oracle;
  /// Best state reached by a failed branch, when every candidate failed.
  std::optional<HomotopyState> last_good_state;

  std::optional<PhysicalOutcome> physical;
};

/// Throws InvalidInput for coefficients outside the problem's domain.
inline void validate(const Coefficients& k) {
  const bool finite = std::isfinite(k.q1) && std::isfinite(k.q2) &&
                      std::isfinite(k.c1) && std::isfinite(k.c2) &&
                      std::isfinite(k.d1) && std::isfinite(k.d2) && std::isfinite(k.r);
  if (!finite || !(k.r > 0.0) || !(k.c1 > 0.0) || !(k.c2 > 0.0) || k.q1 < 0.0 ||
      k.q2 < 0.0 || k.d1 < 0.0 || k.d2 < 0.0) {
    throw Error(ErrorKind::InvalidInput,
                "reduced coefficients need r > 0, c_i > 0, q_i >= 0, d_i >= 0");
  }
}

/// c_i |tau_k|^2 - d_i. Constraint i is satisfiable iff this is positive,
/// since f_i(a) <= (c_i |tau_k|^2 - d_i) |a^T tau_i|^2.
inline double attainability_margin(const Coefficients& k, Terminal i) {
  return k.c(i) * k.tau(partner(i)).vector().squaredNorm() - k.d(i);
}

namespace detail {

inline void adopt(SolveReport& rep, CandidateKind kind, const Vec4& a, double lambda1,
                  double lambda2, const Coefficients& k) {
  const QuadForms forms = QuadForms::at(k, 1.0);
  rep.has_solution = true;
  rep.chosen = kind;
  rep.a = a;
  rep.power = forms.power(a);
  rep.f1 = forms.f(Terminal::One, a);
  rep.f2 = forms.f(Terminal::Two, a);
  rep.lambda1 = lambda1;
  rep.lambda2 = lambda2;
  rep.kkt_residual = oracle::kkt_residual(a, lambda1, lambda2, k, 1.0);
}

}  // namespace detail

inline SolveReport solve(const ReducedProblem& red, const SolveConfig& cfg = {}) {
  const Coefficients& k = red.coef;
  validate(k);
  SolveReport rep;
  const QuadForms final_forms = QuadForms::at(k, 1.0);
  auto feasible = [&](const Vec4& a) {
    return final_forms.f(Terminal::One, a) >= 1.0 - cfg.feasibility_tol &&
           final_forms.f(Terminal::Two, a) >= 1.0 - cfg.feasibility_tol;
  };

  oracle::OracleConfig ocfg;
  ocfg.starts = cfg.oracle_starts;
  ocfg.seed = cfg.oracle_seed;

  for (Terminal i : {Terminal::One, Terminal::Two}) {
    if (attainability_margin(k, i) <= 0.0) {
      rep.warnings.push_back("constraint " + std::to_string(static_cast<int>(i)) +
                             " may be unattainable: c_i |tau_k|^2 - d_i <= 0");
    }
  }
  if (!rep.warnings.empty()) {
    try {
      rep.oracle = oracle::oracle_minimize(k, 1.0, ocfg);
    } catch (const Error&) {
      rep.status = SolveStatus::NoFeasibleBranch;
      rep.warnings.push_back("oracle found no feasible point");
      return rep;
    }
  }

  rep.zero_candidates = solve_zero(red);

  struct Choice {
    CandidateKind kind;
    Vec4 a;
    double power;
    double lambda1;
    double lambda2;
  };
  std::optional<Choice> best;
  auto offer = [&](CandidateKind kind, const Vec4& a, double l1, double l2) {
    if (!feasible(a)) return;
    const double p = final_forms.power(a);
    if (!best || p < best->power) best = Choice{kind, a, p, l1, l2};
  };

  for (int b = 0; b < 2; ++b) {
    rep.branches[b] = integrate_branch(rep.zero_candidates[b], red, cfg.homotopy);
    const BranchOutcome& out = *rep.branches[b];
    if (out.succeeded) {
      offer(b == 0 ? CandidateKind::BothActivePlus : CandidateKind::BothActiveMinus,
            canonical_sign(out.state.a), out.state.lambda1, out.state.lambda2);
    }
  }

  if (cfg.single_active) {
    for (Terminal i : {Terminal::One, Terminal::Two}) {
      auto cand = single_active_candidate(k, i, 1.0);
      if (cand) {
        offer(i == Terminal::One ? CandidateKind::SingleActive1
                                 : CandidateKind::SingleActive2,
              cand->a, cand->lambda1, cand->lambda2);
      }
      rep.single_active[index_of(i)] = std::move(cand);
    }
  }

  if (best) {
    detail::adopt(rep, best->kind, best->a, best->lambda1, best->lambda2, k);
    rep.power_watts = red.scale * rep.power;
    return rep;
  }

  // Nothing feasible: report the furthest-reaching branch state and the
  // oracle's answer so callers still get a usable beamformer.
  rep.status = SolveStatus::NoFeasibleBranch;
  for (const auto& out : rep.branches) {
    if (out && (!rep.last_good_state || out->state.w > rep.last_good_state->w)) {
      rep.last_good_state = out->state;
    }
  }
  try {
    if (!rep.oracle) rep.oracle = oracle::oracle_minimize(k, 1.0, ocfg);
    rep.oracle_fallback = true;
    const Vec4 a = rep.oracle->a;
    const Multipliers mult = bootstrap_multipliers(a, red, 1.0);
    detail::adopt(rep, CandidateKind::OracleFallback, a, mult.lambda1, mult.lambda2, k);
    rep.power_watts = red.scale * rep.power;
  } catch (const Error& e) {
    rep.warnings.push_back(e.what());
  }
  return rep;
}

/// Lifts the chosen reduced solution and evaluates it on the physical model.
inline void attach_physical(SolveReport& rep, const ReducedProblem& red,
                            const PhysicalProblem& prob) {
  if (!rep.has_solution) return;
  PhysicalOutcome phys;
  phys.beamformer = lift(rep.a, red);
  phys.power_watts = relay_power(phys.beamformer, prob);
  phys.sinr1 = sinr(Terminal::One, phys.beamformer, prob);
  phys.sinr2 = sinr(Terminal::Two, phys.beamformer, prob);
  rep.physical = std::move(phys);
}

/// Reduces, solves, and lifts. Throws DegenerateChannels for (numerically)
/// dependent channel vectors.
inline SolveReport solve(const PhysicalProblem& prob, const SolveConfig& cfg = {}) {
  const ReducedProblem red = reduce(prob);
  SolveReport rep = solve(red, cfg);
  attach_physical(rep, red, prob);
  return rep;
}

}  // namespace twr
