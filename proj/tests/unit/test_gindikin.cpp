#include <gtest/gtest.h>

#include <random>

#include "wishart/gindikin.hpp"
#include "wishart/sampler.hpp"

using namespace wishart;

namespace {

PsdMatrix rank_r(int p, int r, std::mt19937_64& g) {
  std::normal_distribution<double> n;
  Matrix f(p, std::max(r, 1));
  for (int i = 0; i < f.rows(); ++i)
    for (int j = 0; j < f.cols(); ++j) f(i, j) = n(g);
  if (r == 0) f.setZero();
  return PsdMatrix(Matrix(f * f.transpose()));
}

Matrix random_invertible(int p, std::mt19937_64& g) {
  std::normal_distribution<double> n;
  Matrix q(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) q(i, j) = n(g);
  return q + 2.0 * p * Matrix::Identity(p, p);
}

}  // namespace

TEST(ClassicalGindikin, SpecExamples) {
  EXPECT_TRUE(classical_gindikin_contains(0.5, 3));
  EXPECT_FALSE(classical_gindikin_contains(0.75, 3));
  EXPECT_TRUE(classical_gindikin_contains(1.0, 3));
  EXPECT_TRUE(classical_gindikin_contains(0.0, 3));
  EXPECT_THROW(classical_gindikin_contains(-0.5, 3), InvalidShape);
  EXPECT_TRUE(classical_gindikin_contains(Rational(1) / 2, 3));
  EXPECT_FALSE(classical_gindikin_contains(Rational(3) / 4, 3));
  // 1e-13 off an integer is integral at the 1e-12 tolerance; exact rationals are not.
  EXPECT_TRUE(classical_gindikin_contains(0.5 + 1e-13, 4));
  EXPECT_FALSE(classical_gindikin_contains(Rational(1) / 2 + Rational(1, 10000000), 4));
}

TEST(Ncgs, SpecExamples) {
  auto v = ncgs_contains(0.5, 1, 3);
  EXPECT_TRUE(v.admissible);
  EXPECT_EQ(v.rule, Rule::DiscreteRank);
  v = ncgs_contains(0.5, 2, 3);
  EXPECT_FALSE(v.admissible);
  EXPECT_EQ(v.rule, Rule::Inadmissible);
  v = ncgs_contains(1.0, 2, 2);
  EXPECT_TRUE(v.admissible);
  EXPECT_EQ(v.rule, Rule::ContinuousRange);
  EXPECT_THROW(ncgs_contains(1.0, 4, 3), InvalidInput);
}

TEST(Ncgs, ReducesToClassicalAtRankZero) {
  for (int p = 1; p <= 6; ++p)
    for (int k = 0; k <= 8 * p; ++k) {
      const Rational beta = Rational(k) / 8;
      EXPECT_EQ(ncgs_contains(beta, 0, p).admissible, classical_gindikin_contains(beta, p));
      EXPECT_EQ(ncgs_contains(to_double(beta), 0, p).admissible, classical_gindikin_contains(to_double(beta), p));
    }
}

TEST(Ncgs, MonotoneInRankAndBeta) {
  for (int p = 1; p <= 6; ++p)
    for (int k = 0; k <= 4 * p; ++k) {
      const Rational beta = Rational(k) / 4;
      for (int r = 1; r <= p; ++r) {
        // Decreasing in rank.
        if (ncgs_contains(beta, r, p).admissible) {
          EXPECT_TRUE(ncgs_contains(beta, r - 1, p).admissible);
        }
      }
      // Increasing in beta on the continuous branch.
      if (beta * 2 >= p - 1) {
        for (int r = 0; r <= p; ++r) EXPECT_TRUE(ncgs_contains(beta + Rational(1, 3), r, p).admissible);
      }
    }
}

TEST(Sde, SpecExamples) {
  EXPECT_TRUE(sde_admissible(2.0, 3, 3).admissible);
  EXPECT_FALSE(sde_admissible(1.0, 2, 4).admissible);
  EXPECT_TRUE(sde_admissible(0.0, 0, 4).admissible);
  EXPECT_THROW(sde_admissible(-1.0, 0, 4), InvalidShape);
}

TEST(Sde, VerdictCarriesCertificate) {
  const auto v = sde_verdict(1.0, PsdMatrix::identity(3));
  EXPECT_FALSE(v.admissible);
  ASSERT_TRUE(v.certificate);
  EXPECT_TRUE(v.certificate->validate());
  EXPECT_EQ(v.certificate->n, 3);
  EXPECT_TRUE(sde_verdict(1.0, PsdMatrix(SymmetricMatrix::diagonal({1, 0, 0}))).admissible);
}

TEST(Semigroup, SpecExamples) {
  EXPECT_TRUE(semigroup_admissible(1.0, 1, 3));
  EXPECT_FALSE(semigroup_admissible(1.5, 2, 3));
  EXPECT_TRUE(semigroup_admissible(2.0, 3, 3));
  EXPECT_FALSE(semigroup_admissible(1.0, 3, 3));
  EXPECT_FALSE(semigroup_admissible(2.0, 1, 3));
  EXPECT_TRUE(semigroup_admissible(Rational(7, 2), 3, 3));
  EXPECT_THROW(semigroup_admissible(1.0, 0, 3), InvalidInput);
  EXPECT_THROW(semigroup_admissible(1.0, 4, 3), InvalidInput);
}

TEST(PlanSampler, AgreesWithNcgsOnGrid) {
  std::mt19937_64 g(41);
  for (int p = 1; p <= 4; ++p)
    for (int k = 0; k <= 4 * p; ++k)
      for (int r = 0; r <= p; ++r) {
        const double beta = k / 4.0;
        const WishartParams params(beta, rank_r(p, r, g), PsdMatrix::identity(p));
        const bool admissible = ncgs_contains(Rational(k, 4), r, p).admissible;
        if (!admissible) {
          EXPECT_THROW(plan_sampler(params), InadmissibleParams);
          continue;
        }
        const SamplerPlan plan = plan_sampler(params);
        switch (plan.kind) {
          case SamplerKind::GaussianSum:
            EXPECT_EQ(plan.gaussian_count, k / 2);
            EXPECT_EQ(k % 2, 0);
            EXPECT_LE(r, plan.gaussian_count);
            break;
          case SamplerKind::BartlettCentral:
            EXPECT_EQ(r, 0);
            EXPECT_GE(2 * beta, p - 1);
            break;
          case SamplerKind::HybridConvolution: {
            const double split = 2 * beta - r;
            EXPECT_TRUE(split >= p - 1 || (std::floor(split) == split && split >= 0 && split <= p - 2));
            break;
          }
          case SamplerKind::SdeApprox:
            break;
        }
      }
}

TEST(Maps, AutomorphismExamples) {
  std::mt19937_64 g(43);
  const WishartParams base(1.5, rank_r(3, 2, g), PsdMatrix::identity(3));
  const auto same = automorphism_map(base, Matrix::Identity(3, 3));
  EXPECT_TRUE(same.omega().matrix().isApprox(base.omega().matrix()));
  EXPECT_TRUE(same.sigma().matrix().isApprox(base.sigma().matrix()));
  const Matrix q = random_invertible(3, g);
  const auto t = automorphism_map(base, q);
  EXPECT_TRUE(t.sigma().matrix().isApprox(q * q.transpose(), 1e-12));
  EXPECT_TRUE(t.omega().matrix().isApprox(q * base.omega().matrix() * q.transpose(), 1e-12));
  EXPECT_EQ(numerical_rank(t.omega()), 2);
  EXPECT_EQ(t.beta(), 1.5);
  Matrix singular = Matrix::Identity(3, 3);
  singular(2, 2) = 0;
  EXPECT_THROW(automorphism_map(base, singular), SingularTransform);
  EXPECT_THROW(automorphism_map(t, q), InvalidInput);  // non-identity scale
}

TEST(Maps, TiltRoundTrip) {
  std::mt19937_64 g(47);
  const PsdMatrix omega = rank_r(3, 1, g);
  const auto id = tilt_map(2.0, omega, PsdMatrix::identity(3));
  EXPECT_TRUE(id.omega().matrix().isApprox(omega.matrix()));
  const Matrix q = random_invertible(3, g);
  const PsdMatrix sigma(Matrix(q * q.transpose()));
  const auto fwd = tilt_map(2.0, omega, sigma);
  EXPECT_TRUE(fwd.omega().matrix().isApprox(sigma.matrix() * omega.matrix() * sigma.matrix(), 1e-12));
  EXPECT_EQ(numerical_rank(fwd.omega()), 1);
  const auto back = tilt_inverse(fwd);
  EXPECT_LE((back.omega().matrix() - omega.matrix()).norm(), 1e-9 * omega.matrix().norm());
  EXPECT_TRUE(back.sigma().matrix().isApprox(Matrix::Identity(3, 3)));
  EXPECT_THROW(tilt_map(2.0, omega, PsdMatrix(SymmetricMatrix::diagonal({1, 1, 0}))), InvalidInput);
}

TEST(Maps, ReparameterizeChainReachesTarget) {
  std::mt19937_64 g(53);
  for (int p = 1; p <= 4; ++p)
    for (int r = 0; r <= p; ++r) {
      const Matrix q0 = random_invertible(p, g);
      const WishartParams from(0.5 * r + 1, rank_r(p, r, g), PsdMatrix(Matrix(q0 * q0.transpose())));
      const PsdMatrix omega1 = rank_r(p, r, g);
      const Matrix q1 = random_invertible(p, g);
      const PsdMatrix sigma1(Matrix(q1 * q1.transpose()));
      const auto chain = reparameterize_chain(from, omega1, sigma1);
      ASSERT_EQ(chain.size(), 5U);
      const auto& last = chain.back();
      const double scale = std::max(1.0, omega1.matrix().norm());
      EXPECT_LE((last.omega().matrix() - omega1.matrix()).norm(), 1e-8 * scale) << "p=" << p << " r=" << r;
      EXPECT_LE((last.sigma().matrix() - sigma1.matrix()).norm(), 1e-8 * sigma1.matrix().norm());
      // Intermediate laws can be tiny in norm; rank is checked after normalizing.
      for (const auto& link : chain) {
        const double norm = link.omega().spectral_norm();
        const PsdMatrix unit = norm > 0 ? PsdMatrix(Matrix(link.omega().matrix() / norm)) : link.omega();
        EXPECT_EQ(numerical_rank(unit), r);
        EXPECT_EQ(link.beta(), from.beta());
      }
    }
  const WishartParams from(1.0, PsdMatrix::identity(2), PsdMatrix::identity(2));
  EXPECT_THROW(reparameterize_chain(from, PsdMatrix::zero(2), PsdMatrix::identity(2)), InvalidInput);
}
