#include <gtest/gtest.h>

#include <random>

#include "wishart/sampler.hpp"
#include "wishart/verify.hpp"

using namespace wishart;

namespace {

PsdMatrix outer(const std::vector<std::vector<double>>& cols, int p) {
  Matrix m = Matrix::Zero(p, p);
  for (const auto& c : cols) {
    Vector v = Eigen::Map<const Vector>(c.data(), p);
    m += v * v.transpose();
  }
  return PsdMatrix(m);
}

// Mean of X from the closed form: E X_ij = -d/du_ij log L(u) at u = 0,
// by central differences on symmetric perturbations.
Matrix mean_from_closed_form(const WishartParams& params) {
  const int p = params.dim();
  const double h = 1e-5;
  Matrix mean(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = i; j < p; ++j) {
      Matrix e = Matrix::Zero(p, p);
      e(i, j) = e(j, i) = i == j ? 1.0 : 0.5;
      const double d = (log_laplace_closed_form(params, h * e) - log_laplace_closed_form(params, -h * e)) / (2 * h);
      mean(i, j) = mean(j, i) = -d;
    }
  return mean;
}

void expect_mean_matches(const SampleBatch& b, const Matrix& expected) {
  const int p = b.params.dim();
  const auto n = static_cast<double>(b.samples.size());
  for (int i = 0; i < p; ++i)
    for (int j = i; j < p; ++j) {
      double s = 0, sq = 0;
      for (const auto& x : b.samples) s += x.matrix()(i, j);
      const double m = s / n;
      for (const auto& x : b.samples) sq += (x.matrix()(i, j) - m) * (x.matrix()(i, j) - m);
      const double se = std::sqrt(sq / (n - 1) / n);
      EXPECT_LE(std::abs(m - expected(i, j)), 4 * se + 1e-12) << "entry " << i << "," << j;
    }
}

void expect_laplace_ok(const SampleBatch& b, const std::vector<Matrix>& grid, double allowance = 0) {
  for (const auto& u : grid) {
    const auto est = laplace_estimate(b.samples, u);
    const double closed = laplace_closed_form(b.params, u);
    EXPECT_LE(std::abs(est.mean - closed), 4 * est.stderr + allowance)
        << "closed " << closed << " mc " << est.mean << " se " << est.stderr;
  }
}

}  // namespace

TEST(PlanSampler, SpecExamples) {
  const WishartParams a(1.0, outer({{1, 0, 0}, {0, 2, 1}}, 3), PsdMatrix::identity(3));
  const auto pa = plan_sampler(a);
  EXPECT_EQ(pa.kind, SamplerKind::GaussianSum);
  EXPECT_EQ(pa.gaussian_count, 2);
  EXPECT_EQ(plan_sampler(WishartParams::central(2.0, 3)).kind, SamplerKind::BartlettCentral);
  const WishartParams c(1.0, PsdMatrix::identity(3), PsdMatrix::identity(3));
  EXPECT_EQ(plan_sampler(c).kind, SamplerKind::SdeApprox);
  const WishartParams bad(0.5, outer({{1, 0, 0}, {0, 1, 0}}, 3), PsdMatrix::identity(3));
  try {
    plan_sampler(bad);
    FAIL() << "expected InadmissibleParams";
  } catch (const InadmissibleParams& e) {
    EXPECT_FALSE(e.verdict().admissible);
  }
}

TEST(PlanForKind, RejectsInapplicableMethods) {
  const WishartParams nc(1.0, outer({{1, 0}}, 2), PsdMatrix::identity(2));
  EXPECT_THROW(plan_for_kind(nc, SamplerKind::BartlettCentral), InvalidInput);
  const WishartParams half(0.75, PsdMatrix::zero(2), PsdMatrix::identity(2));
  EXPECT_THROW(plan_for_kind(half, SamplerKind::GaussianSum), InvalidShape);
  const WishartParams small(0.5, PsdMatrix::zero(3), PsdMatrix::identity(3));
  EXPECT_THROW(plan_for_kind(small, SamplerKind::BartlettCentral), ShapeTooSmall);
  const WishartParams hyb(1.0, PsdMatrix::identity(3), PsdMatrix::identity(3));
  EXPECT_THROW(plan_for_kind(hyb, SamplerKind::HybridConvolution), InfeasibleSplit);
}

TEST(DecomposeNoncentrality, Examples) {
  const auto z = decompose_noncentrality(PsdMatrix::zero(3), 2);
  ASSERT_EQ(z.size(), 2U);
  EXPECT_TRUE(z[0].isZero() && z[1].isZero());
  Vector v(3);
  v << 1, -2, 0.5;
  const PsdMatrix vv(Matrix(v * v.transpose()));
  const auto one = decompose_noncentrality(vv, 1);
  EXPECT_TRUE(one[0].isApprox(v, 1e-12) || one[0].isApprox(-v, 1e-12));
  std::mt19937_64 g(61);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 20; ++trial) {
    const int p = 2 + trial % 3, r = trial % (p + 1);
    Matrix f(p, std::max(r, 1));
    for (int i = 0; i < f.rows(); ++i)
      for (int j = 0; j < f.cols(); ++j) f(i, j) = r ? n(g) : 0.0;
    const PsdMatrix om(Matrix(f * f.transpose()));
    const auto ms = decompose_noncentrality(om, p);
    Matrix back = Matrix::Zero(p, p);
    for (const auto& m : ms) back += m * m.transpose();
    EXPECT_LE((back - om.matrix()).norm(), 1e-9 * std::max(1.0, om.matrix().norm()));
    if (r > 0) {
      EXPECT_THROW(decompose_noncentrality(om, r - 1), RankTooHigh);
    }
  }
}

TEST(PlanForKind, GaussianSumWithinRankIsAccepted) {
  const WishartParams ok(1.0, outer({{1, 1, 0}, {0, 1, 1}}, 3), PsdMatrix::identity(3));
  EXPECT_EQ(plan_for_kind(ok, SamplerKind::GaussianSum).gaussian_count, 2);
}

TEST(GaussianSum, ZeroCountGivesZeroAndRankBound) {
  Stream rng(1, 0);
  EXPECT_TRUE(sample_gaussian_sum(0, {}, PsdMatrix::identity(3), rng).matrix().isZero(0.0));
  const WishartParams params(1.0, outer({{1, 0, 0}, {0, 2, 1}}, 3), PsdMatrix::identity(3));
  const auto b = draw_batch(params, plan_sampler(params), 2000, 7);
  for (const auto& x : b.samples) EXPECT_LE(numerical_rank(x), 2);
}

TEST(GaussianSum, MeanMatchesClosedFormGradient) {
  Matrix q(2, 2);
  q << 1.0, 0.3, 0.3, 0.5;
  const WishartParams params(1.5, outer({{1, -1}}, 2), PsdMatrix(Matrix(q * q.transpose())));
  const Matrix expected = mean_from_closed_form(params);
  EXPECT_LE((expected - (1.5 * params.sigma().matrix() + params.omega().matrix())).norm(), 1e-6);
  const auto b = draw_batch(params, plan_for_kind(params, SamplerKind::GaussianSum), 40000, 3);
  expect_mean_matches(b, expected);
  expect_laplace_ok(b, standard_probe_grid(2, 3));
}

TEST(Bartlett, ExponentialCaseAndLaplace) {
  const WishartParams exp1 = WishartParams::central(1.0, 1);
  const auto b = draw_batch(exp1, plan_sampler(exp1), 40000, 5);
  EXPECT_EQ(b.method.kind, SamplerKind::BartlettCentral);
  expect_mean_matches(b, Matrix::Constant(1, 1, 1.0));

  Matrix q(3, 3);
  q << 1, 0.2, 0, 0.2, 1.5, 0.1, 0, 0.1, 0.7;
  const WishartParams params(1.3, PsdMatrix::zero(3), PsdMatrix(Matrix(q * q.transpose())));
  const auto c = draw_batch(params, plan_sampler(params), 40000, 9);
  EXPECT_EQ(c.method.kind, SamplerKind::BartlettCentral);
  expect_mean_matches(c, 1.3 * params.sigma().matrix());
  expect_laplace_ok(c, {0.5 * Matrix::Identity(3, 3)});
  Stream rng(0, 0);
  EXPECT_THROW(sample_bartlett(0.4, PsdMatrix::identity(3), rng), ShapeTooSmall);
}

TEST(Bartlett, ClassicalConventionIsHalfShapeDoubleScale) {
  // Classical W_p(n, S_c) has mean n S_c; here it is beta = n/2, Sigma = 2 S_c.
  const Matrix sc = Matrix::Identity(2, 2) * 0.7;
  const WishartParams params(2.5, PsdMatrix::zero(2), PsdMatrix(Matrix(2 * sc)));
  const auto b = draw_batch(params, plan_sampler(params), 40000, 13);
  expect_mean_matches(b, 5 * sc);
}

TEST(Hybrid, MatchesClosedFormAndReducesToCentral) {
  const WishartParams params(1.25, outer({{1, 0.5}}, 2), PsdMatrix::identity(2));
  const auto plan = plan_sampler(params);
  EXPECT_EQ(plan.kind, SamplerKind::HybridConvolution);
  const auto b = draw_batch(params, plan, 40000, 17);
  expect_laplace_ok(b, standard_probe_grid(2, 17));

  const WishartParams central(1.25, PsdMatrix::zero(2), PsdMatrix::identity(2));
  const auto h = draw_batch(central, plan_for_kind(central, SamplerKind::HybridConvolution), 100, 4);
  const auto bt = draw_batch(central, plan_for_kind(central, SamplerKind::BartlettCentral), 100, 4);
  for (std::size_t i = 0; i < 100; ++i) EXPECT_TRUE(h.samples[i].matrix().isApprox(bt.samples[i].matrix()));
}

TEST(Hybrid, LaplaceIsProductOfComponents) {
  // Gamma(beta, omega) = Gamma(r/2, omega) * Gamma(beta - r/2, 0) at fixed u.
  const PsdMatrix omega = outer({{1, 0.5}}, 2);
  const WishartParams full(1.25, omega, PsdMatrix::identity(2));
  const WishartParams nc(0.5, omega, PsdMatrix::identity(2));
  const WishartParams ce(0.75, PsdMatrix::zero(2), PsdMatrix::identity(2));
  for (const auto& u : standard_probe_grid(2, 2)) {
    EXPECT_NEAR(laplace_closed_form(full, u), laplace_closed_form(nc, u) * laplace_closed_form(ce, u), 1e-14);
  }
}

TEST(MethodAgreement, GaussianSumVersusHybrid) {
  const WishartParams params(1.5, outer({{0.8, -0.4}}, 2), PsdMatrix::identity(2));
  const auto gs = draw_batch(params, plan_for_kind(params, SamplerKind::GaussianSum), 30000, 21);
  const auto hy = draw_batch(params, plan_for_kind(params, SamplerKind::HybridConvolution), 30000, 22);
  for (const auto& u : standard_probe_grid(2, 21)) {
    const auto a = laplace_estimate(gs.samples, u);
    const auto b = laplace_estimate(hy.samples, u);
    EXPECT_LE(std::abs(a.mean - b.mean), 4 * std::hypot(a.stderr, b.stderr));
  }
}

TEST(SdeApprox, ZeroLawAndP1Laplace) {
  const WishartParams zero(0.0, PsdMatrix::zero(2), PsdMatrix::identity(2));
  const auto z = draw_batch(zero, plan_for_kind(zero, SamplerKind::SdeApprox), 10, 1);
  for (const auto& x : z.samples) EXPECT_TRUE(x.matrix().isZero(0.0));

  const WishartParams p1(1.0, PsdMatrix::identity(1), PsdMatrix::identity(1));
  EXPECT_NEAR(laplace_closed_form(p1, Matrix::Identity(1, 1)), 0.5 * std::exp(-0.5), 1e-15);
  const auto b = draw_batch(p1, plan_for_kind(p1, SamplerKind::SdeApprox, kDefaultTolerances, 256), 20000, 2);
  expect_laplace_ok(b, {Matrix::Identity(1, 1)}, 0.005);
}

TEST(SdeApprox, ScaleMapMatchesClosedForm) {
  Matrix q(2, 2);
  q << 1.2, 0.3, 0.3, 0.6;
  const WishartParams params(0.8, outer({{1, 0.2}, {0.1, 0.5}}, 2), PsdMatrix(Matrix(q * q.transpose())));
  EXPECT_EQ(plan_sampler(params).kind, SamplerKind::SdeApprox);
  const auto b = draw_batch(params, plan_for_kind(params, SamplerKind::SdeApprox, kDefaultTolerances, 128), 8000, 5);
  expect_laplace_ok(b, {0.5 * Matrix::Identity(2, 2), Matrix::Identity(2, 2)}, 0.01);
  const auto r = richardson_check(params, 128, 2000, 5, Matrix::Identity(2, 2));
  EXPECT_EQ(r.coarse_steps, 64);
  EXPECT_TRUE(r.consistent);
}

TEST(DrawBatch, DeterministicAcrossRunsAndThreads) {
  const WishartParams params(1.25, outer({{1, 0.5}}, 2), PsdMatrix::identity(2));
  const auto plan = plan_sampler(params);
  const auto a = draw_batch(params, plan, 257, 99, 1);
  const auto b = draw_batch(params, plan, 257, 99, 1);
  const auto c = draw_batch(params, plan, 257, 99, 3);
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    EXPECT_EQ(a.samples[i].matrix(), b.samples[i].matrix());
    EXPECT_EQ(a.samples[i].matrix(), c.samples[i].matrix());
  }
  const auto d = draw_batch(params, plan, 4, 100, 1);
  EXPECT_NE(a.samples[0].matrix(), d.samples[0].matrix());
}

TEST(Stream, IndependentIndices) {
  Stream a(1, 0), b(1, 1), c(1, 0);
  const double x = a.gaussian();
  EXPECT_NE(x, b.gaussian());
  EXPECT_EQ(x, c.gaussian());
  Stream d(1, 2);
  EXPECT_EQ(d.chi_square(0.0), 0.0);
}
