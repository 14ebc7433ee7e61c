#pragma once

namespace wishart {

/// Numerical thresholds shared by the whole library. Every relative
/// tolerance is scaled by the spectral norm of the matrix it is applied to;
/// the absolute floors kick in for matrices near zero.
struct Tolerances {
  double sym_rel = 1e-10;    // |A_ij - A_ji| <= sym_rel * max|A_kl|
  double psd_rel = 1e-10;    // lambda_min >= -psd_rel * ||A||_2 ...
  double psd_abs = 1e-12;    // ... or >= -psd_abs, whichever is looser
  double sqrt_rel = 1e-8;    // ||S*S - X|| <= sqrt_rel * ||X||
  double rank_rel = 1e-8;    // lambda > rank_rel * max(1, lambda_max) counts
  double dom_tol = 1e-10;    // u in domain iff lambda_min(I + Sigma u) > dom_tol
  double integrality = 1e-12;

  double psd_threshold(double spectral_norm) const {
    const double rel = psd_rel * spectral_norm;
    return rel > psd_abs ? rel : psd_abs;
  }
};

inline constexpr Tolerances kDefaultTolerances{};

}  // namespace wishart
