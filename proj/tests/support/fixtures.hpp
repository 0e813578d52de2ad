#pragma once

// Fixture builders shared by unit and acceptance tests.

#include "support/random_instances.hpp"
#include "twr/oracle.hpp"
#include "twr/physical.hpp"
#include "twr/realify.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>

namespace twr::testing {

inline PhysicalProblem random_physical(std::uint64_t seed, int antennas) {
  auto rng = make_rng(seed, 2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ChannelEnsemble ens;
  ens.antennas = antennas;
  ens.p1 = 0.5 + unit(rng);
  ens.p2 = 0.5 + unit(rng);
  ens.sigmaR2 = 0.5 + unit(rng);
  ens.sigma1_2 = 0.5 + unit(rng);
  ens.sigma2_2 = 0.5 + unit(rng);
  ens.gamma1 = 0.5 + 3.0 * unit(rng);
  ens.gamma2 = 0.5 + 3.0 * unit(rng);
  return random_channels(rng, ens);
}

inline Mat2 random_mat2(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat2 m;
  m << normal(rng), normal(rng), normal(rng), normal(rng);
  return m;
}

struct ComplexFixture {
  ReducedProblem red;
  ComplexCandidate cand;
  /// Real point the fixture was grown from (the oracle's optimum).
  Vec4 anchor = Vec4::Zero();
};

/// x^T Qi x + y^T Qi y = 1 for both i. x starts at the oracle optimum, y is
/// random; (alpha^2, beta^2) solve the 2x2 linear system for the two forms,
/// then the pair is phase-rotated by a random angle.
inline std::optional<ComplexFixture> complex_equality_fixture(std::uint64_t seed,
                                                              int oracle_starts = 8) {
  ComplexFixture fx;
  fx.red = random_reduced(seed);
  oracle::OracleConfig cfg;
  cfg.starts = oracle_starts;
  cfg.seed = seed;
  fx.anchor = oracle::oracle_minimize(fx.red.coef, 1.0, cfg).a;
  const QuadForms forms = QuadForms::at(fx.red.coef, 1.0);

  auto rng = make_rng(seed, 3);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  for (int attempt = 0; attempt < 64; ++attempt) {
    const Vec4 x = fx.anchor;
    const Vec4 y = random_vec4(rng, fx.anchor.norm() / 2.0);
    Mat2 sys;
    sys << quad(forms.Q1, x), quad(forms.Q1, y), quad(forms.Q2, x), quad(forms.Q2, y);
    if (std::abs(sys.determinant()) < 1e-8 * sys.squaredNorm()) continue;
    const Vec2 sq = sys.inverse() * Vec2(1.0, 1.0);
    if (!(sq(0) > 1e-6 && sq(1) > 1e-6)) continue;
    fx.cand = rotate({std::sqrt(sq(0)) * x, std::sqrt(sq(1)) * y}, angle(rng));
    return fx;
  }
  return std::nullopt;
}

/// Form `active` equal to 1 and the other strictly above 1.
inline std::optional<ComplexFixture> complex_single_active_fixture(std::uint64_t seed,
                                                                   Terminal active) {
  ComplexFixture fx;
  fx.red = random_reduced(seed);
  oracle::OracleConfig cfg;
  cfg.starts = 8;
  cfg.seed = seed;
  fx.anchor = oracle::oracle_minimize(fx.red.coef, 1.0, cfg).a;
  const QuadForms forms = QuadForms::at(fx.red.coef, 1.0);
  auto rng = make_rng(seed, 4);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int attempt = 0; attempt < 256; ++attempt) {
    const Vec4 x = fx.anchor * (1.0 + unit(rng));
    const Vec4 y = random_vec4(rng, fx.anchor.norm());
    ComplexCandidate c{x, y};
    const double fa = c.form(forms.Q(active));
    if (!(fa > 0.0)) continue;
    c.x /= std::sqrt(fa);
    c.y /= std::sqrt(fa);
    if (c.form(forms.Q(partner(active))) > 1.0 + 1e-6) {
      fx.cand = rotate(c, angle(rng));
      return fx;
    }
  }
  return std::nullopt;
}

}  // namespace twr::testing
