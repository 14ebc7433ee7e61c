#pragma once

// Parameter domains of non-central Wishart laws and Wishart SDEs, and the
// parameter maps (congruence, exponential tilt) that move between laws.
//
// With B = {0, 1, ..., p-2}:
//   classical Gindikin set   W0 = B/2  u  [(p-1)/2, inf)
//   non-central set          (omega, beta) admissible iff 2beta >= p-1, or
//                            2beta in B and rank(omega) <= 2beta
//   Wishart SDE              alpha >= p-1, or alpha in B and rank(x0) <= alpha
//   semigroup on D_p(k)      k < p: alpha = k;  k = p: alpha >= p-1
//
// Every membership test is Sigma-free. Integrality is decided exactly for
// Rational inputs and within Tolerances::integrality for doubles.

#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wishart/errors.hpp"
#include "wishart/moments.hpp"
#include "wishart/rational.hpp"
#include "wishart/symmat.hpp"

namespace wishart {

/// Gamma_p(beta, omega; Sigma): shape, non-centrality and scale.
class WishartParams {
 public:
  WishartParams(double beta, PsdMatrix omega, PsdMatrix sigma)
      : beta_(beta), omega_(std::move(omega)), sigma_(std::move(sigma)) {
    if (!std::isfinite(beta_) || beta_ < 0) throw InvalidShape("shape beta must be finite and >= 0");
    if (omega_.dim() != sigma_.dim()) {
      throw DimensionMismatch("omega and sigma must have the same dimension");
    }
  }

  static WishartParams central(double beta, int p) {
    return {beta, PsdMatrix::zero(p), PsdMatrix::identity(p)};
  }

  double beta() const noexcept { return beta_; }
  const PsdMatrix& omega() const noexcept { return omega_; }
  const PsdMatrix& sigma() const noexcept { return sigma_; }
  int dim() const noexcept { return omega_.dim(); }

 private:
  double beta_;
  PsdMatrix omega_;
  PsdMatrix sigma_;
};

enum class Rule { ContinuousRange, DiscreteRank, Inadmissible };

inline std::string to_string(Rule r) {
  switch (r) {
    case Rule::ContinuousRange: return "ContinuousRange";
    case Rule::DiscreteRank: return "DiscreteRank";
    case Rule::Inadmissible: return "Inadmissible";
  }
  return "?";
}

struct Verdict {
  bool admissible = false;
  Rule rule = Rule::Inadmissible;
  std::string detail;
  std::optional<Certificate> certificate;
};

class InadmissibleParams : public Error {
 public:
  explicit InadmissibleParams(Verdict v)
      : Error("inadmissible parameters: " + v.detail), verdict_(std::move(v)) {}
  const Verdict& verdict() const noexcept { return verdict_; }

 private:
  Verdict verdict_;
};

namespace detail {

inline std::optional<long> as_integer(double x, double tol) {
  const double r = std::round(x);
  if (std::abs(x - r) <= tol) return static_cast<long>(r);
  return std::nullopt;
}

inline std::optional<long> as_integer(const Rational& x, double) {
  if (!is_integer(x)) return std::nullopt;
  return numerator(x).convert_to<long>();
}

inline std::string fmt(double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string fmt(const Rational& x) { return to_string(x); }

inline std::string b_set(int p) {
  if (p < 2) return "B = {}";
  if (p == 2) return "B = {0}";
  return "B = {0,...," + std::to_string(p - 2) + "}";
}

template <class Real>
void check_nonnegative(const Real& x, const char* name) {
  if (x < 0) throw InvalidShape(std::string(name) + " must be >= 0");
}

inline void check_dim(int p) {
  if (p < 1) throw InvalidInput("dimension p must be >= 1");
}

// Admissibility of drift d (= 2 beta or alpha) against a rank r.
template <class Real>
Verdict drift_rank_verdict(const Real& d, int r, int p, double tol, const std::string& dname,
                           const std::string& rname) {
  check_dim(p);
  if (r < 0 || r > p) throw InvalidInput(rname + " must lie in [0, p]");
  Verdict v;
  if (d >= Real(p - 1) || (std::is_floating_point_v<Real> && as_integer(d, tol) &&
                           *as_integer(d, tol) >= p - 1)) {
    v.admissible = true;
    v.rule = Rule::ContinuousRange;
    v.detail = dname + " = " + fmt(d) + " >= p-1 = " + std::to_string(p - 1);
    return v;
  }
  const auto m = as_integer(d, tol);
  if (!m) {
    v.detail = dname + " = " + fmt(d) + " is below p-1 = " + std::to_string(p - 1) +
               " and not an integer in " + b_set(p);
    return v;
  }
  if (r <= *m) {
    v.admissible = true;
    v.rule = Rule::DiscreteRank;
    v.detail = dname + " = " + std::to_string(*m) + " in " + b_set(p) + " and " + rname + " = " +
               std::to_string(r) + " <= " + std::to_string(*m);
  } else {
    v.detail = dname + " = " + std::to_string(*m) + " in " + b_set(p) + " but " + rname + " = " +
               std::to_string(r) + " > " + std::to_string(*m);
  }
  return v;
}

}  // namespace detail

/// beta in W0 = B/2 u [(p-1)/2, inf).
template <class Real>
bool classical_gindikin_contains(const Real& beta, int p,
                                 double tol = kDefaultTolerances.integrality) {
  detail::check_nonnegative(beta, "shape beta");
  return detail::drift_rank_verdict(Real(2 * beta), 0, p, tol, "2*beta", "rank(omega)").admissible;
}

template <class Real>
Verdict ncgs_contains(const Real& beta, int rank_omega, int p,
                      double tol = kDefaultTolerances.integrality) {
  detail::check_nonnegative(beta, "shape beta");
  return detail::drift_rank_verdict(Real(2 * beta), rank_omega, p, tol, "2*beta", "rank(omega)");
}

template <class Real>
Verdict sde_admissible(const Real& alpha, int rank_x0, int p,
                       double tol = kDefaultTolerances.integrality) {
  detail::check_nonnegative(alpha, "drift alpha");
  return detail::drift_rank_verdict(alpha, rank_x0, p, tol, "alpha", "rank(x0)");
}

/// Rank-based NCGS verdict for concrete parameters.
inline Verdict ncgs_verdict(const WishartParams& params, const Tolerances& tol = kDefaultTolerances) {
  return ncgs_contains(params.beta(), numerical_rank(params.omega(), tol.rank_rel), params.dim(),
                       tol.integrality);
}

/// SDE verdict for a concrete starting point; an inadmissible verdict carries
/// the moment certificate when one can be built from x0's spectrum.
inline Verdict sde_verdict(double alpha, const PsdMatrix& x0,
                           const Tolerances& tol = kDefaultTolerances) {
  Verdict v = sde_admissible(alpha, numerical_rank(x0, tol.rank_rel), x0.dim(), tol.integrality);
  if (!v.admissible) {
    Rational a = rational_from_double(alpha);
    if (const auto m = detail::as_integer(alpha, tol.integrality)) a = Rational(*m);
    v.certificate = nonexistence_certificate(x0.dim(), a, esp_snapshot(x0, tol.rank_rel));
  }
  return v;
}

/// Wishart semigroup on the rank cone D_p(k).
template <class Real>
bool semigroup_admissible(const Real& alpha, int k, int p,
                          double tol = kDefaultTolerances.integrality) {
  detail::check_dim(p);
  detail::check_nonnegative(alpha, "drift alpha");
  if (k < 1 || k > p) throw InvalidInput("rank-cone index k must lie in [1, p]");
  if (k == p) {
    if (alpha >= Real(p - 1)) return true;
    const auto m = detail::as_integer(alpha, tol);
    return std::is_floating_point_v<Real> && m && *m >= p - 1;
  }
  const auto m = detail::as_integer(alpha, tol);
  return m && *m == k;
}

namespace detail {

inline Matrix congruence(const Matrix& q, const Matrix& a) {
  Matrix r = q * a * q.transpose();
  return 0.5 * (r + r.transpose());
}

inline void check_invertible(const Matrix& q, int p) {
  if (q.rows() != p || q.cols() != p) throw DimensionMismatch("transform must be p x p");
  Eigen::FullPivLU<Matrix> lu(q);
  if (!lu.isInvertible()) throw SingularTransform("transform matrix is singular");
}

inline Matrix inverse_pd(const PsdMatrix& s, const char* what) {
  Eigen::LLT<Matrix> llt(s.matrix());
  if (llt.info() != Eigen::Success || s.eigen_floor() <= 0) {
    throw InvalidInput(std::string(what) + " must be positive definite");
  }
  Matrix inv = llt.solve(Matrix::Identity(s.dim(), s.dim()));
  return 0.5 * (inv + inv.transpose());
}

}  // namespace detail

/// X ~ Gamma_p(beta, omega; Sigma)  =>  q X q^T ~ Gamma_p(beta, q omega q^T; q Sigma q^T).
inline WishartParams congruence_map(const WishartParams& params, const Matrix& q) {
  detail::check_invertible(q, params.dim());
  return {params.beta(), PsdMatrix(detail::congruence(q, params.omega().matrix())),
          PsdMatrix(detail::congruence(q, params.sigma().matrix()))};
}

/// Linear automorphism for identity-scale laws:
/// Gamma_p(beta, omega; I) -> Gamma_p(beta, q omega q^T; q q^T).
inline WishartParams automorphism_map(const WishartParams& params, const Matrix& q,
                                      const Tolerances& tol = kDefaultTolerances) {
  const int p = params.dim();
  if ((params.sigma().matrix() - Matrix::Identity(p, p)).cwiseAbs().maxCoeff() > tol.sqrt_rel) {
    throw InvalidInput("automorphism_map expects an identity scale; compose with tilt_map first");
  }
  return congruence_map(params, q);
}

/// Exponential tilt: Gamma_p(beta, omega; I) -> Gamma_p(beta, S omega S; S) for PD S.
inline WishartParams tilt_map(double beta, const PsdMatrix& omega, const PsdMatrix& sigma_target) {
  if (omega.dim() != sigma_target.dim()) throw DimensionMismatch("omega and sigma dimensions differ");
  detail::inverse_pd(sigma_target, "tilt target sigma");
  const Matrix& s = sigma_target.matrix();
  return {beta, PsdMatrix(detail::congruence(s, omega.matrix())), sigma_target};
}

/// Inverse tilt: Gamma_p(beta, omega'; S) -> Gamma_p(beta, S^-1 omega' S^-1; I).
inline WishartParams tilt_inverse(const WishartParams& params) {
  const Matrix inv = detail::inverse_pd(params.sigma(), "sigma");
  return {params.beta(), PsdMatrix(detail::congruence(inv, params.omega().matrix())),
          PsdMatrix::identity(params.dim())};
}

/// Chain of laws taking Gamma_p(beta, omega; Sigma) to Gamma_p(beta, omega1; Sigma1)
/// for rank(omega1) == rank(omega) and PD Sigma1:
///   inverse tilt -> automorphism q_a -> inverse tilt -> automorphism q_1,
/// where q_1 q_1^T = Sigma1 and q_a is chosen so the final non-centrality is omega1.
/// Returns every intermediate law, the input first and the target last.
inline std::vector<WishartParams> reparameterize_chain(const WishartParams& from,
                                                       const PsdMatrix& omega_target,
                                                       const PsdMatrix& sigma_target,
                                                       const Tolerances& tol = kDefaultTolerances) {
  const int p = from.dim();
  if (omega_target.dim() != p || sigma_target.dim() != p) {
    throw DimensionMismatch("target parameters must match the source dimension");
  }
  const int r = numerical_rank(from.omega(), tol.rank_rel);
  if (numerical_rank(omega_target, tol.rank_rel) != r) {
    throw InvalidInput("reparameterization needs rank(omega_target) == rank(omega)");
  }
  detail::inverse_pd(sigma_target, "target sigma");

  std::vector<WishartParams> chain{from};
  chain.push_back(tilt_inverse(from));  // Gamma(beta, S^-1 w S^-1; I)

  // Both A and Bt are rank r; write A = F_A E_r F_A^T, Bt = F_B E_r F_B^T.
  const Matrix q1 = psd_sqrt(sigma_target).matrix();
  const Matrix q1_inv = q1.inverse();
  const Matrix a = chain.back().omega().matrix();
  const Matrix bt = detail::congruence(q1_inv, omega_target.matrix());
  auto factor = [&](const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    Vector d = es.eigenvalues();
    const double cut = tol.rank_rel * std::max(1.0, d.maxCoeff());
    for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = d(i) > cut ? std::sqrt(d(i)) : 1.0;
    return Matrix(es.eigenvectors() * d.asDiagonal());
  };
  const Matrix m = factor(bt) * factor(a).inverse();  // m A m^T = Bt
  const Matrix qa = m.inverse().transpose();

  chain.push_back(automorphism_map(chain.back(), qa, tol));
  chain.push_back(tilt_inverse(chain.back()));
  chain.push_back(automorphism_map(chain.back(), q1, tol));
  return chain;
}

}  // namespace wishart
