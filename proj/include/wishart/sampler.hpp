#pragma once

// Samplers for Gamma_p(beta, omega; Sigma), whose Laplace transform is
//
//   E exp(-tr(uX)) = det(I + Sigma u)^(-beta) exp(-tr(u (I + Sigma u)^(-1) omega)).
//
// Scale convention: the Gaussian vectors below have covariance Sigma / 2, so a
// classical W_p(n, Sigma_c) is Gamma_p(n/2, 0; 2 Sigma_c). All samplers use
// this convention.
//
//   GaussianSum        X = sum_i xi_i xi_i^T, xi_i ~ N(m_i, Sigma/2), n = 2beta
//   BartlettCentral    omega = 0, 2beta >= p-1, any real shape
//   HybridConvolution  GaussianSum over rank(omega) vectors plus an independent
//                      central draw of shape beta - rank(omega)/2
//   SdeApprox          Euler on the Wishart SDE to t = 1/2, then congruence

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "wishart/errors.hpp"
#include "wishart/euler.hpp"
#include "wishart/gindikin.hpp"
#include "wishart/parallel.hpp"
#include "wishart/rng.hpp"
#include "wishart/symmat.hpp"

namespace wishart {

enum class SamplerKind { GaussianSum, BartlettCentral, HybridConvolution, SdeApprox };

inline std::string to_string(SamplerKind k) {
  switch (k) {
    case SamplerKind::GaussianSum: return "gaussian-sum";
    case SamplerKind::BartlettCentral: return "bartlett";
    case SamplerKind::HybridConvolution: return "hybrid";
    case SamplerKind::SdeApprox: return "sde";
  }
  return "?";
}

struct SamplerPlan {
  SamplerKind kind = SamplerKind::GaussianSum;
  int gaussian_count = 0;     // vectors in the Gaussian sum (non-central part for Hybrid)
  double central_shape = 0;   // Bartlett shape, or central remainder for Hybrid
  int euler_steps = 0;        // SdeApprox only
};

inline constexpr int kDefaultEulerSteps = 2048;

/// Factor omega = sum_{i<n} m_i m_i^T with m_i = sqrt(lambda_i) v_i, zero-padded to n.
inline std::vector<Vector> decompose_noncentrality(const PsdMatrix& omega, int n,
                                                   const Tolerances& tol = kDefaultTolerances) {
  if (n < 0) throw InvalidInput("vector count must be >= 0");
  const int r = numerical_rank(omega, tol.rank_rel);
  if (r > n) {
    throw RankTooHigh("rank(omega) = " + std::to_string(r) + " exceeds " + std::to_string(n) +
                      " vectors");
  }
  const int p = omega.dim();
  std::vector<Vector> out(static_cast<std::size_t>(n), Vector::Zero(p));
  if (r == 0) return out;
  Eigen::SelfAdjointEigenSolver<Matrix> es(omega.matrix());
  for (int i = 0; i < r; ++i) {
    const int col = p - 1 - i;
    out[static_cast<std::size_t>(i)] =
        std::sqrt(std::max(es.eigenvalues()(col), 0.0)) * es.eigenvectors().col(col);
  }
  return out;
}

namespace detail {

inline Matrix half_scale_factor(const PsdMatrix& sigma) {
  Eigen::LLT<Matrix> llt(0.5 * sigma.matrix());
  if (llt.info() != Eigen::Success || sigma.eigen_floor() <= 0) {
    throw InvalidInput("scale sigma must be positive definite");
  }
  return llt.matrixL();
}

inline PsdMatrix wrap_sample(Matrix x) {
  x = 0.5 * (x + x.transpose());
  return PsdMatrix(x);
}

}  // namespace detail

/// Sum of n outer products of N(m_i, Sigma/2) vectors.
class GaussianSumSampler {
 public:
  GaussianSumSampler(std::vector<Vector> means, const PsdMatrix& sigma)
      : p_(sigma.dim()), means_(std::move(means)), chol_(detail::half_scale_factor(sigma)) {
    for (const auto& m : means_) {
      if (m.size() != p_) throw DimensionMismatch("mean vector length must equal p");
    }
  }

  int count() const { return static_cast<int>(means_.size()); }

  Matrix draw_matrix(Stream& rng) const {
    Matrix y(p_, static_cast<Eigen::Index>(means_.size()));
    Vector z(p_);
    for (std::size_t i = 0; i < means_.size(); ++i) {
      for (int k = 0; k < p_; ++k) z(k) = rng.gaussian();
      y.col(static_cast<Eigen::Index>(i)) = means_[i] + chol_ * z;
    }
    return y * y.transpose();
  }

  PsdMatrix operator()(Stream& rng) const { return detail::wrap_sample(draw_matrix(rng)); }

 private:
  int p_;
  std::vector<Vector> means_;
  Matrix chol_;
};

/// Central law via the Bartlett factorization: X = L A A^T L^T with
/// L L^T = Sigma/2, A lower triangular, A_ii^2 ~ chi2(2beta - i), A_ij ~ N(0,1).
class BartlettSampler {
 public:
  BartlettSampler(double beta, const PsdMatrix& sigma,
                  const Tolerances& tol = kDefaultTolerances)
      : p_(sigma.dim()), dof_(2.0 * beta), chol_(detail::half_scale_factor(sigma)) {
    if (!(beta >= 0)) throw InvalidShape("shape beta must be >= 0");
    if (dof_ < p_ - 1 - tol.integrality) {
      throw ShapeTooSmall("Bartlett sampling needs 2*beta >= p-1, got 2*beta = " +
                          detail::fmt(dof_));
    }
  }

  Matrix draw_matrix(Stream& rng) const {
    Matrix a = Matrix::Zero(p_, p_);
    for (int i = 0; i < p_; ++i) {
      a(i, i) = std::sqrt(rng.chi_square(dof_ - i));
      for (int j = 0; j < i; ++j) a(i, j) = rng.gaussian();
    }
    const Matrix la = chol_ * a;
    return la * la.transpose();
  }

  PsdMatrix operator()(Stream& rng) const { return detail::wrap_sample(draw_matrix(rng)); }

 private:
  int p_;
  double dof_;
  Matrix chol_;
};

/// Independent sum of a rank(omega)-vector Gaussian sum and a central draw.
class HybridSampler {
 public:
  HybridSampler(const WishartParams& params, const Tolerances& tol = kDefaultTolerances)
      : noncentral_(make_noncentral(params, tol)) {
    const int p = params.dim();
    const int r = noncentral_.count();
    const double split = 2.0 * params.beta() - r;
    if (split >= p - 1 - tol.integrality && split > 0) {
      central_ = BartlettSampler(0.5 * split, params.sigma(), tol);
    } else if (const auto m = detail::as_integer(split, tol.integrality); m && *m >= 0) {
      central_ = GaussianSumSampler(std::vector<Vector>(static_cast<std::size_t>(*m), Vector::Zero(p)),
                                    params.sigma());
    } else {
      throw InfeasibleSplit("2*beta - rank(omega) = " + detail::fmt(split) +
                            " is neither >= p-1 nor a non-negative integer");
    }
  }

  Matrix draw_matrix(Stream& rng) const {
    Matrix x = noncentral_.draw_matrix(rng);
    std::visit([&](const auto& s) { x += s.draw_matrix(rng); }, central_);
    return x;
  }

  PsdMatrix operator()(Stream& rng) const { return detail::wrap_sample(draw_matrix(rng)); }

 private:
  static GaussianSumSampler make_noncentral(const WishartParams& params, const Tolerances& tol) {
    const int r = numerical_rank(params.omega(), tol.rank_rel);
    return GaussianSumSampler(decompose_noncentrality(params.omega(), r, tol), params.sigma());
  }

  GaussianSumSampler noncentral_;
  std::variant<BartlettSampler, GaussianSumSampler> central_{
      GaussianSumSampler({}, PsdMatrix::identity(1))};
};

/// Approximate sampler: simulate the Wishart SDE with alpha = 2beta from
/// x0 = q^-1 omega q^-1 (q = sqrt(Sigma)) up to t = 1/2, where the exact law is
/// Gamma_p(beta, x0; I), then return q X q.
class SdeApproxSampler {
 public:
  SdeApproxSampler(const WishartParams& params, int steps,
                   const Tolerances& tol = kDefaultTolerances)
      : p_(params.dim()), alpha_(2.0 * params.beta()), steps_(steps) {
    if (steps < 1) throw InvalidInput("Euler step count must be >= 1");
    const Verdict v = ncgs_verdict(params, tol);
    if (!v.admissible) throw InadmissibleParams(v);
    detail::half_scale_factor(params.sigma());
    q_ = psd_sqrt(params.sigma()).matrix();
    const Matrix q_inv = q_.inverse();
    x0_ = q_inv * params.omega().matrix() * q_inv;
    x0_ = 0.5 * (x0_ + x0_.transpose());
  }

  Matrix draw_matrix(Stream& rng) const {
    if (alpha_ == 0.0 && x0_.isZero(0.0)) return Matrix::Zero(p_, p_);
    detail::EulerStepper stepper(p_, alpha_, 0.5 / steps_);
    stepper.reset(x0_);
    for (int k = 0; k < steps_; ++k) stepper.step(rng);
    return q_ * stepper.state() * q_;
  }

  PsdMatrix operator()(Stream& rng) const { return detail::wrap_sample(draw_matrix(rng)); }

 private:
  int p_;
  double alpha_;
  int steps_;
  Matrix q_;
  Matrix x0_;
};

/// Picks a construction: Bartlett for central laws with 2beta >= p-1; otherwise
/// GaussianSum > HybridConvolution > SdeApprox. Throws InadmissibleParams
/// outside the non-central Gindikin set.
inline SamplerPlan plan_sampler(const WishartParams& params,
                                const Tolerances& tol = kDefaultTolerances,
                                int euler_steps = kDefaultEulerSteps) {
  const Verdict v = ncgs_verdict(params, tol);
  if (!v.admissible) throw InadmissibleParams(v);
  const int p = params.dim();
  const int r = numerical_rank(params.omega(), tol.rank_rel);
  const double two_beta = 2.0 * params.beta();
  const auto m = detail::as_integer(two_beta, tol.integrality);

  if (r == 0) {
    if (two_beta >= p - 1 - tol.integrality && params.beta() > 0) {
      return {SamplerKind::BartlettCentral, 0, params.beta(), 0};
    }
    return {SamplerKind::GaussianSum, static_cast<int>(*m), 0, 0};
  }
  if (m && r <= *m) return {SamplerKind::GaussianSum, static_cast<int>(*m), 0, 0};
  const double split = two_beta - r;
  const auto ms = detail::as_integer(split, tol.integrality);
  if (split >= p - 1 - tol.integrality || (ms && *ms >= 0 && *ms <= p - 2)) {
    return {SamplerKind::HybridConvolution, r, 0.5 * split, 0};
  }
  return {SamplerKind::SdeApprox, 0, 0, euler_steps};
}

/// Checks that `kind` is applicable to `params` and fills in its parameters.
inline SamplerPlan plan_for_kind(const WishartParams& params, SamplerKind kind,
                                 const Tolerances& tol = kDefaultTolerances,
                                 int euler_steps = kDefaultEulerSteps) {
  const Verdict v = ncgs_verdict(params, tol);
  if (!v.admissible) throw InadmissibleParams(v);
  const int p = params.dim();
  const int r = numerical_rank(params.omega(), tol.rank_rel);
  const double two_beta = 2.0 * params.beta();
  switch (kind) {
    case SamplerKind::GaussianSum: {
      const auto m = detail::as_integer(two_beta, tol.integrality);
      if (!m) throw InvalidShape("gaussian-sum needs 2*beta integer, got " + detail::fmt(two_beta));
      if (r > *m) throw RankTooHigh("gaussian-sum needs rank(omega) <= 2*beta");
      return {kind, static_cast<int>(*m), 0, 0};
    }
    case SamplerKind::BartlettCentral:
      if (r != 0) throw InvalidInput("bartlett sampling is for central laws (omega = 0)");
      if (two_beta < p - 1 - tol.integrality) throw ShapeTooSmall("bartlett needs 2*beta >= p-1");
      return {kind, 0, params.beta(), 0};
    case SamplerKind::HybridConvolution: {
      const double split = two_beta - r;
      const auto ms = detail::as_integer(split, tol.integrality);
      if (!(split >= p - 1 - tol.integrality || (ms && *ms >= 0 && *ms <= p - 2))) {
        throw InfeasibleSplit("2*beta - rank(omega) is neither >= p-1 nor in B");
      }
      return {kind, r, 0.5 * split, 0};
    }
    case SamplerKind::SdeApprox:
      if (euler_steps < 1) throw InvalidInput("Euler step count must be >= 1");
      return {kind, 0, 0, euler_steps};
  }
  throw InvalidInput("unknown sampler kind");
}

/// Type-erased sampler built from a plan.
class Sampler {
 public:
  Sampler(const WishartParams& params, const SamplerPlan& plan,
          const Tolerances& tol = kDefaultTolerances)
      : impl_(make(params, plan, tol)) {}

  Matrix draw_matrix(Stream& rng) const {
    return std::visit([&](const auto& s) { return s.draw_matrix(rng); }, impl_);
  }
  PsdMatrix operator()(Stream& rng) const { return detail::wrap_sample(draw_matrix(rng)); }

 private:
  using Impl = std::variant<GaussianSumSampler, BartlettSampler, HybridSampler, SdeApproxSampler>;

  static Impl make(const WishartParams& params, const SamplerPlan& plan, const Tolerances& tol) {
    switch (plan.kind) {
      case SamplerKind::GaussianSum:
        return GaussianSumSampler(decompose_noncentrality(params.omega(), plan.gaussian_count, tol),
                                  params.sigma());
      case SamplerKind::BartlettCentral:
        if (numerical_rank(params.omega(), tol.rank_rel) != 0) {
          throw InvalidInput("bartlett sampling is for central laws (omega = 0)");
        }
        return BartlettSampler(plan.central_shape, params.sigma(), tol);
      case SamplerKind::HybridConvolution:
        return HybridSampler(params, tol);
      case SamplerKind::SdeApprox:
        return SdeApproxSampler(params, plan.euler_steps, tol);
    }
    throw InvalidInput("unknown sampler kind");
  }

  Impl impl_;
};

/// Convenience wrappers matching the single-draw operations.
inline PsdMatrix sample_gaussian_sum(int n, const std::vector<Vector>& means,
                                     const PsdMatrix& sigma, Stream& rng) {
  if (n < 0 || static_cast<int>(means.size()) != n) {
    throw InvalidInput("gaussian sum needs exactly n mean vectors");
  }
  return GaussianSumSampler(means, sigma)(rng);
}

inline PsdMatrix sample_bartlett(double beta, const PsdMatrix& sigma, Stream& rng) {
  return BartlettSampler(beta, sigma)(rng);
}

inline PsdMatrix sample_hybrid(const WishartParams& params, Stream& rng) {
  return HybridSampler(params)(rng);
}

inline PsdMatrix sample_sde_approx(const WishartParams& params, int steps, Stream& rng) {
  return SdeApproxSampler(params, steps)(rng);
}

struct SampleBatch {
  WishartParams params;
  std::vector<PsdMatrix> samples;
  std::uint64_t seed = 0;
  SamplerPlan method;
};

/// Draws `count` samples; sample i uses stream (seed, i).
inline SampleBatch draw_batch(const WishartParams& params, const SamplerPlan& plan,
                              std::size_t count, std::uint64_t seed, unsigned threads = 1,
                              const Tolerances& tol = kDefaultTolerances) {
  const Sampler sampler(params, plan, tol);
  std::vector<std::unique_ptr<PsdMatrix>> slots(count);
  parallel_for(count, threads, [&](std::size_t i) {
    Stream rng(seed, i);
    slots[i] = std::make_unique<PsdMatrix>(sampler(rng));
  });
  SampleBatch batch{params, {}, seed, plan};
  batch.samples.reserve(count);
  for (auto& s : slots) batch.samples.push_back(std::move(*s));
  return batch;
}

/// Weak-error check for SdeApprox: Laplace estimates at u with `steps` and
/// `steps / 2` Euler steps from the same streams.
struct RichardsonReport {
  int coarse_steps = 0;
  int fine_steps = 0;
  double coarse_estimate = 0;
  double fine_estimate = 0;
  double combined_stderr = 0;
  bool consistent = false;  // |fine - coarse| <= 4 * combined stderr
};

inline RichardsonReport richardson_check(const WishartParams& params, int steps, std::size_t count,
                                         std::uint64_t seed, const Matrix& u, unsigned threads = 1,
                                         const Tolerances& tol = kDefaultTolerances) {
  if (steps < 2) throw InvalidInput("Richardson check needs at least 2 steps");
  if (count < 2) throw EmptyBatch("Richardson check needs at least 2 samples");
  RichardsonReport rep;
  rep.fine_steps = steps;
  rep.coarse_steps = steps / 2;
  auto estimate = [&](int s, double& mean, double& var) {
    const SdeApproxSampler sampler(params, s, tol);
    std::vector<double> vals(count);
    parallel_for(count, threads, [&](std::size_t i) {
      Stream rng(seed, i);
      vals[i] = std::exp(-(u.cwiseProduct(sampler.draw_matrix(rng))).sum());
    });
    CompensatedSum sum;
    for (double v : vals) sum.add(v);
    mean = sum.value() / static_cast<double>(count);
    CompensatedSum sq;
    for (double v : vals) sq.add((v - mean) * (v - mean));
    var = sq.value() / static_cast<double>(count - 1) / static_cast<double>(count);
  };
  double vc = 0, vf = 0;
  estimate(rep.coarse_steps, rep.coarse_estimate, vc);
  estimate(rep.fine_steps, rep.fine_estimate, vf);
  rep.combined_stderr = std::sqrt(vc + vf);
  rep.consistent = std::abs(rep.fine_estimate - rep.coarse_estimate) <= 4.0 * rep.combined_stderr;
  return rep;
}

}  // namespace wishart
