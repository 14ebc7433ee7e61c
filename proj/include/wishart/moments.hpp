#pragma once

// Exact first moments t -> E[e_n(X_t)] of a Wishart process started at x0,
// and the non-existence certificates they yield.
//
// For a solution of dX = sqrt(X) dW + dW^T sqrt(X) + alpha I dt the drift of
// e_n(X) is (p-n+1)(alpha-n+1) e_{n-1}(X) and the martingale parts are true
// martingales, so
//
//   E e_n(t) = e_n(x0) + (p-n+1)(alpha-n+1) * int_0^t E e_{n-1}(s) ds,
//
// with E e_0 = 1. Each E e_n is a polynomial of degree <= n. Since e_n >= 0 on
// the PSD cone, a polynomial that turns negative for some t > 0 proves that no
// solution exists for (alpha, x0).

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "wishart/errors.hpp"
#include "wishart/polynomial.hpp"
#include "wishart/rational.hpp"
#include "wishart/symmat.hpp"

namespace wishart {

using RationalPolynomial = Polynomial<Rational>;

/// E[e_n(X_t)] with coefficients c_0..c_n (c_0 = e_n(x0)).
struct MomentPolynomial {
  int n = 0;
  RationalPolynomial poly;

  const std::vector<Rational>& coeffs() const { return poly.coeffs(); }
  Rational at(const Rational& t) const { return poly(t); }
};

/// (p - n + 1)(alpha - n + 1): the factor multiplying e_{n-1} in the drift of e_n.
inline Rational drift_factor(int p, const Rational& alpha, int n) {
  return Rational(p - n + 1) * (alpha - (n - 1));
}

namespace detail {

inline void check_moment_inputs(int p, const Rational& alpha, const std::vector<Rational>& e0) {
  if (p < 1) throw InvalidInput("dimension p must be >= 1");
  if (alpha < 0) throw InvalidShape("drift parameter alpha must be >= 0");
  if (static_cast<int>(e0.size()) != p) {
    throw DimensionMismatch("expected " + std::to_string(p) + " values e_1..e_p, got " +
                            std::to_string(e0.size()));
  }
}

}  // namespace detail

/// E[e_1], ..., E[e_p] by exact antidifferentiation of the drift recursion.
inline std::vector<MomentPolynomial> moment_polynomials(int p, const Rational& alpha,
                                                        const std::vector<Rational>& e0) {
  detail::check_moment_inputs(p, alpha, e0);
  std::vector<MomentPolynomial> out;
  out.reserve(static_cast<std::size_t>(p));
  RationalPolynomial prev{Rational(1)};
  for (int n = 1; n <= p; ++n) {
    RationalPolynomial cur = prev.antiderivative();
    cur *= drift_factor(p, alpha, n);
    cur.set(0, e0[static_cast<std::size_t>(n - 1)]);
    out.push_back({n, cur});
    prev = std::move(cur);
  }
  return out;
}

/// Coefficient of t^n in E[e_n] for x0 = 0 (and for any x0):
/// p(p-1)...(p-n+1) * alpha(alpha-1)...(alpha-n+1) / n!.
inline Rational leading_coefficient(int p, const Rational& alpha, int n) {
  if (n < 1 || n > p) {
    throw InvalidInput("order n must satisfy 1 <= n <= p, got n=" + std::to_string(n));
  }
  Rational num(1);
  BigInt fact = 1;
  for (int j = 0; j < n; ++j) {
    num *= Rational(p - j) * (alpha - j);
    fact *= (j + 1);
  }
  return num / Rational(fact);
}

enum class CertificateKind { NegativeLeadingCoeff, NegativeLinearTerm };

inline std::string to_string(CertificateKind k) {
  return k == CertificateKind::NegativeLeadingCoeff ? "NegativeLeadingCoeff" : "NegativeLinearTerm";
}

/// Witness that E[e_n(X_t)] < 0 at t = witness_t, impossible for a PSD process.
struct Certificate {
  int n = 0;
  CertificateKind kind = CertificateKind::NegativeLeadingCoeff;
  Rational value;      // the offending coefficient
  Rational witness_t;  // t > 0 with poly(witness_t) < 0
  RationalPolynomial poly;

  Rational value_at_witness() const { return poly(witness_t); }
  /// Re-checks the claim in exact arithmetic.
  bool validate() const { return witness_t > 0 && value_at_witness() < 0; }
};

/// Smallest order n whose moment polynomial is eventually negative, or none.
///
/// A negative top coefficient at degree n (non-integer alpha below p-1) is a
/// NegativeLeadingCoeff certificate with witness t = 1 + sum_{i<n} |c_i| / |c_n|.
/// A negative top coefficient at degree 1 (alpha = m integer, e_{m+1}(x0) > 0)
/// is a NegativeLinearTerm certificate with witness t = max(1, -c_0/c_1 + 1).
inline std::optional<Certificate> nonexistence_certificate(int p, const Rational& alpha,
                                                           const std::vector<Rational>& e0) {
  detail::check_moment_inputs(p, alpha, e0);
  for (const auto& v : e0) {
    if (v < 0) throw InvalidInput("e_n(x0) must be >= 0 for a PSD starting point");
  }
  const auto polys = moment_polynomials(p, alpha, e0);
  for (const auto& mp : polys) {
    const int d = mp.poly.degree();
    if (d < 1) continue;
    const Rational& top = mp.poly[static_cast<std::size_t>(d)];
    if (top >= 0) continue;

    Certificate cert;
    cert.n = mp.n;
    cert.poly = mp.poly;
    cert.value = top;
    if (d == 1 && mp.n > 1) {
      cert.kind = CertificateKind::NegativeLinearTerm;
      const Rational t = -mp.poly[0] / top + 1;
      cert.witness_t = t > 1 ? t : Rational(1);
    } else {
      cert.kind = CertificateKind::NegativeLeadingCoeff;
      Rational lower(0);
      for (int i = 0; i < d; ++i) lower += abs(mp.poly[static_cast<std::size_t>(i)]);
      cert.witness_t = 1 + lower / abs(top);
    }
    return cert;
  }
  return std::nullopt;
}

/// e_n(x0) computed exactly from the shortest decimal form of each entry.
inline std::vector<Rational> exact_esp(const SymmetricMatrix& x0) {
  const int p = x0.dim();
  std::vector<Rational> rm;
  rm.reserve(static_cast<std::size_t>(p) * p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) rm.push_back(rational_from_double(x0(i, j)));
  auto e = esp_by_principal_minors<Rational>(rm, p);
  return {e.begin() + 1, e.end()};
}

/// e_n(x0) as rationals, forced to 0 above the numerical rank so the
/// certificate agrees with rank-based admissibility. Exact minors up to
/// p = 8, eigenvalues beyond.
inline std::vector<Rational> esp_snapshot(const PsdMatrix& x0,
                                          double rank_tol = kDefaultTolerances.rank_rel) {
  const int r = numerical_rank(x0, rank_tol);
  std::vector<Rational> out;
  if (x0.dim() <= 8) {
    out = exact_esp(x0.base());
  } else {
    const auto e = elementary_symmetric(x0);
    for (int n = 1; n <= x0.dim(); ++n) out.push_back(rational_from_double(e[n]));
  }
  for (int n = 1; n <= x0.dim(); ++n) {
    auto& v = out[static_cast<std::size_t>(n - 1)];
    if (n > r || v < 0) v = 0;
  }
  return out;
}

}  // namespace wishart
