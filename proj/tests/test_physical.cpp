#include "support/fixtures.hpp"
#include "twr/physical.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

namespace twr {
namespace {

using testing::make_rng;

CMat random_beam(std::mt19937_64& rng, int m) {
  std::normal_distribution<double> n(0.0, 1.0);
  CMat a(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) a(i, j) = cplx(n(rng), n(rng));
  return a;
}

// Element-wise recomputation with real arithmetic only.
struct ByHand {
  const PhysicalProblem& p;

  // (A h)_row
  std::pair<double, double> ah(const CMat& a, const CVec& h, int row) const {
    double re = 0.0, im = 0.0;
    for (int j = 0; j < h.size(); ++j) {
      re += a(row, j).real() * h(j).real() - a(row, j).imag() * h(j).imag();
      im += a(row, j).real() * h(j).imag() + a(row, j).imag() * h(j).real();
    }
    return {re, im};
  }
  // (h^T A)_col
  std::pair<double, double> ha(const CVec& h, const CMat& a, int col) const {
    double re = 0.0, im = 0.0;
    for (int j = 0; j < h.size(); ++j) {
      re += h(j).real() * a(j, col).real() - h(j).imag() * a(j, col).imag();
      im += h(j).real() * a(j, col).imag() + h(j).imag() * a(j, col).real();
    }
    return {re, im};
  }
  double power(const CMat& a) const {
    const int m = p.antennas();
    double out = 0.0;
    for (int row = 0; row < m; ++row) {
      auto [r1, i1] = ah(a, p.h1, row);
      auto [r2, i2] = ah(a, p.h2, row);
      out += p.p1 * (r1 * r1 + i1 * i1) + p.p2 * (r2 * r2 + i2 * i2);
      for (int j = 0; j < m; ++j) out += p.sigmaR2 * std::norm(a(row, j));
    }
    return out;
  }
  double sinr(Terminal i, const CMat& a) const {
    const CVec& hi = p.h(i);
    const CVec& hk = p.h(partner(i));
    const int m = p.antennas();
    double sre = 0.0, sim = 0.0, leak = 0.0;
    for (int col = 0; col < m; ++col) {
      auto [re, im] = ha(hi, a, col);
      leak += re * re + im * im;
      sre += re * hk(col).real() - im * hk(col).imag();
      sim += re * hk(col).imag() + im * hk(col).real();
    }
    return (sre * sre + sim * sim) * p.p(partner(i)) /
           (leak * p.sigmaR2 + p.sigma2(i));
  }
};

PhysicalProblem orthogonal_pair() {
  PhysicalProblem p;
  p.h1 = CVec::Zero(2);
  p.h2 = CVec::Zero(2);
  p.h1(0) = 1.0;
  p.h2(1) = 1.0;
  return p;
}

TEST(RelayPower, Examples) {
  const PhysicalProblem p = orthogonal_pair();
  EXPECT_EQ(relay_power(CMat::Zero(2, 2), p), 0.0);
  EXPECT_DOUBLE_EQ(relay_power(CMat::Identity(2, 2), p), 4.0);
}

TEST(Sinr, Examples) {
  const PhysicalProblem p = orthogonal_pair();
  EXPECT_EQ(sinr(Terminal::One, CMat::Zero(2, 2), p), 0.0);
  EXPECT_EQ(sinr(Terminal::One, CMat::Identity(2, 2), p), 0.0);
  EXPECT_EQ(sinr(Terminal::Two, CMat::Identity(2, 2), p), 0.0);
}

TEST(RelayPower, MatchesElementwise) {
  auto rng = make_rng(21);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const PhysicalProblem p = testing::random_physical(seed, 2 + seed % 5);
    const CMat a = random_beam(rng, p.antennas());
    const ByHand oracle{p};
    const double expect = oracle.power(a);
    EXPECT_NEAR(relay_power(a, p), expect, 1e-12 * expect);
    for (Terminal i : {Terminal::One, Terminal::Two}) {
      const double s = oracle.sinr(i, a);
      EXPECT_NEAR(sinr(i, a, p), s, 1e-12 * s);
    }
  }
}

TEST(ConstraintMargin, ZeroBeam) {
  PhysicalProblem p = orthogonal_pair();
  p.gamma1 = 2.5;
  p.sigma1_2 = 0.4;
  EXPECT_DOUBLE_EQ(constraint_margin(Terminal::One, CMat::Zero(2, 2), p), -1.0);
}

TEST(ConstraintMargin, ZeroAtTarget) {
  auto rng = make_rng(22);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    PhysicalProblem p = testing::random_physical(seed, 4);
    const CMat a = random_beam(rng, 4);
    p.gamma1 = sinr(Terminal::One, a, p);
    const double scale = p.gamma1 * p.sigma1_2;
    EXPECT_NEAR(constraint_margin(Terminal::One, a, p), 0.0, 1e-12 * std::max(1.0, scale));
  }
}

TEST(ConstraintMargin, SignAgreesWithSinr) {
  auto rng = make_rng(23);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    PhysicalProblem p = testing::random_physical(seed, 3);
    const CMat a = random_beam(rng, 3) * (0.1 + 3.0 * unit(rng));
    for (Terminal i : {Terminal::One, Terminal::Two}) {
      const double s = sinr(i, a, p);
      // Place the target on either side of the achieved SINR.
      (i == Terminal::One ? p.gamma1 : p.gamma2) = s * (seed % 2 ? 0.9 : 1.1);
      const double margin = constraint_margin(i, a, p);
      EXPECT_EQ(margin >= 0.0, sinr(i, a, p) >= p.gamma(i));
    }
  }
}

TEST(RelayPower, HomogeneousDegreeTwo) {
  auto rng = make_rng(24);
  const PhysicalProblem p = testing::random_physical(3, 4);
  const CMat a = random_beam(rng, 4);
  const cplx c(0.7, -1.9);
  EXPECT_NEAR(relay_power(c * a, p), std::norm(c) * relay_power(a, p),
              1e-12 * relay_power(c * a, p));
}

TEST(Sinr, PhaseInvariant) {
  auto rng = make_rng(25);
  const PhysicalProblem p = testing::random_physical(4, 4);
  const CMat a = random_beam(rng, 4);
  for (double theta : {0.3, 1.7, std::numbers::pi}) {
    const CMat b = std::polar(1.0, theta) * a;
    for (Terminal i : {Terminal::One, Terminal::Two}) {
      EXPECT_NEAR(sinr(i, b, p), sinr(i, a, p), 1e-12 * sinr(i, a, p));
    }
  }
}

TEST(RandomChannels, Deterministic) {
  ChannelEnsemble ens;
  EXPECT_EQ(random_channels(5, ens), random_channels(5, ens));
  EXPECT_FALSE(random_channels(5, ens) == random_channels(6, ens));
}

TEST(RandomChannels, UnitVariance) {
  ChannelEnsemble ens;
  ens.antennas = 2;
  std::mt19937_64 rng(99);
  double acc = 0.0;
  const int draws = 10000;
  for (int t = 0; t < draws; ++t) {
    const PhysicalProblem p = random_channels(rng, ens);
    acc += std::norm(p.h1(0));
  }
  EXPECT_NEAR(acc / draws, 1.0, 0.05);
}

TEST(RandomChannels, RejectsSingleAntenna) {
  ChannelEnsemble ens;
  ens.antennas = 1;
  try {
    random_channels(1, ens);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
  }
}

TEST(Validate, RejectsMismatchedAndZero) {
  PhysicalProblem p = orthogonal_pair();
  p.h2 = CVec::Zero(3);
  EXPECT_THROW(validate(p), Error);
  p = orthogonal_pair();
  p.h2.setZero();
  EXPECT_THROW(validate(p), Error);
  p = orthogonal_pair();
  EXPECT_THROW(relay_power(CMat::Zero(3, 3), p), Error);
}

TEST(Decibels, RoundTrip) {
  EXPECT_NEAR(db_to_linear(3.0), 1.9952623149688795, 1e-15);
  EXPECT_NEAR(linear_to_db(db_to_linear(-7.5)), -7.5, 1e-12);
}

}  // namespace
}  // namespace twr
