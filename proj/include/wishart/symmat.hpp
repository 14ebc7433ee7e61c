#pragma once

// Dense symmetric / positive semi-definite matrix primitives.
//
// Everything spectral goes through Eigen's self-adjoint eigensolver. The
// elementary symmetric polynomials e_1..e_p are taken from the eigenvalues;
// an independent principal-minor route exists for cross-checks and for exact
// (rational) inputs.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "wishart/errors.hpp"
#include "wishart/tolerances.hpp"

namespace wishart {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class SymmetricMatrix {
 public:
  /// Validates |A_ij - A_ji| <= sym_rel * max|A| and stores the symmetrized
  /// average so downstream code sees exact symmetry.
  explicit SymmetricMatrix(const Matrix& m, const Tolerances& tol = kDefaultTolerances) {
    if (m.rows() < 1 || m.rows() != m.cols()) {
      throw InvalidInput("symmetric matrix must be square with p >= 1, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
    if (!m.allFinite()) throw InvalidInput("matrix has non-finite entries");
    const double scale = m.cwiseAbs().maxCoeff();
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > tol.sym_rel * scale) {
      throw NotSymmetric("matrix is not symmetric: max |A_ij - A_ji| = " + std::to_string(asym));
    }
    m_ = 0.5 * (m + m.transpose());
  }

  static SymmetricMatrix zero(int p) { return SymmetricMatrix(Matrix::Zero(p, p)); }
  static SymmetricMatrix identity(int p) { return SymmetricMatrix(Matrix::Identity(p, p)); }
  static SymmetricMatrix diagonal(const std::vector<double>& d) {
    Vector v = Eigen::Map<const Vector>(d.data(), static_cast<Eigen::Index>(d.size()));
    return SymmetricMatrix(Matrix(v.asDiagonal()));
  }

  int dim() const noexcept { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const noexcept { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

 private:
  friend class PsdMatrix;
  struct Unchecked {};
  SymmetricMatrix(Matrix m, Unchecked) : m_(std::move(m)) {}

  Matrix m_;
};

inline double spectral_norm_from_eigenvalues(const Vector& ascending) {
  return std::max(std::abs(ascending(0)), std::abs(ascending(ascending.size() - 1)));
}

/// Symmetric matrix whose smallest eigenvalue is >= -psd_tol. Eigenvalues are
/// cached in ascending order.
class PsdMatrix {
 public:
  explicit PsdMatrix(const SymmetricMatrix& s, const Tolerances& tol = kDefaultTolerances)
      : base_(s) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(s.matrix(), Eigen::EigenvaluesOnly);
    eigenvalues_ = es.eigenvalues();
    const double floor = eigenvalues_(0);
    if (floor < -tol.psd_threshold(spectral_norm_from_eigenvalues(eigenvalues_))) {
      throw NotPsd("matrix is not positive semi-definite: smallest eigenvalue " +
                       std::to_string(floor),
                   floor);
    }
  }
  explicit PsdMatrix(const Matrix& m, const Tolerances& tol = kDefaultTolerances)
      : PsdMatrix(SymmetricMatrix(m, tol), tol) {}

  static PsdMatrix zero(int p) { return from_spectrum(Matrix::Zero(p, p), Vector::Zero(p)); }
  static PsdMatrix identity(int p) {
    return from_spectrum(Matrix::Identity(p, p), Vector::Ones(p));
  }

  /// Wraps a matrix whose spectrum is already known (e.g. straight out of a
  /// projection). The caller guarantees symmetry and the eigenvalues.
  static PsdMatrix from_spectrum(Matrix m, Vector ascending_eigenvalues) {
    return PsdMatrix(SymmetricMatrix(std::move(m), SymmetricMatrix::Unchecked{}),
                     std::move(ascending_eigenvalues));
  }

  const SymmetricMatrix& base() const noexcept { return base_; }
  const Matrix& matrix() const noexcept { return base_.matrix(); }
  int dim() const noexcept { return base_.dim(); }
  double eigen_floor() const { return eigenvalues_(0); }
  const Vector& eigenvalues() const noexcept { return eigenvalues_; }
  double spectral_norm() const { return spectral_norm_from_eigenvalues(eigenvalues_); }

 private:
  PsdMatrix(SymmetricMatrix s, Vector ev) : base_(std::move(s)), eigenvalues_(std::move(ev)) {}

  SymmetricMatrix base_;
  Vector eigenvalues_;
};

/// (e_1, ..., e_p); e_0 = 1 is implicit and available as es[0].
class EsPolyVector {
 public:
  EsPolyVector() = default;
  explicit EsPolyVector(std::vector<double> values) : values_(std::move(values)) {}

  int size() const noexcept { return static_cast<int>(values_.size()); }
  double operator[](int n) const {
    if (n == 0) return 1.0;
    if (n < 0 || n > size()) throw InvalidInput("e_n index out of range: " + std::to_string(n));
    return values_[static_cast<std::size_t>(n - 1)];
  }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::vector<double> values_;
};

/// e_0..e_k of the given values via the product expansion prod (1 + x_i z).
template <class Scalar>
std::vector<Scalar> esp_of_values(std::span<const Scalar> xs) {
  std::vector<Scalar> e(xs.size() + 1, Scalar(0));
  e[0] = Scalar(1);
  for (std::size_t k = 0; k < xs.size(); ++k) {
    for (std::size_t n = k + 1; n >= 1; --n) e[n] += xs[k] * e[n - 1];
  }
  return e;
}

namespace detail {

template <class Scalar>
Scalar determinant(std::vector<Scalar> a, std::size_t n) {
  Scalar det(1);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    if constexpr (std::is_floating_point_v<Scalar>) {
      for (std::size_t r = col + 1; r < n; ++r) {
        if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
      }
    } else {
      while (pivot < n && a[pivot * n + col] == Scalar(0)) ++pivot;
      if (pivot == n) return Scalar(0);
    }
    if (a[pivot * n + col] == Scalar(0)) return Scalar(0);
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
      det = -det;
    }
    const Scalar diag = a[col * n + col];
    det *= diag;
    for (std::size_t r = col + 1; r < n; ++r) {
      const Scalar f = a[r * n + col] / diag;
      if (f == Scalar(0)) continue;
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
    }
  }
  return det;
}

}  // namespace detail

/// e_n as the sum of all n x n principal minors of a row-major p x p matrix.
/// Exponential in p; meant for cross-checks and exact arithmetic on small p.
template <class Scalar>
std::vector<Scalar> esp_by_principal_minors(std::span<const Scalar> row_major, int p) {
  if (p < 1 || p > 20 || row_major.size() != static_cast<std::size_t>(p) * p) {
    throw InvalidInput("principal-minor expansion needs 1 <= p <= 20 and p*p entries");
  }
  const auto up = static_cast<std::size_t>(p);
  std::vector<Scalar> e(up + 1, Scalar(0));
  e[0] = Scalar(1);
  std::vector<std::size_t> idx;
  for (unsigned long mask = 1; mask < (1UL << up); ++mask) {
    idx.clear();
    for (std::size_t i = 0; i < up; ++i) {
      if (mask & (1UL << i)) idx.push_back(i);
    }
    const std::size_t k = idx.size();
    std::vector<Scalar> sub(k * k);
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t c = 0; c < k; ++c) sub[r * k + c] = row_major[idx[r] * up + idx[c]];
    }
    e[k] += detail::determinant(std::move(sub), k);
  }
  return e;
}

inline EsPolyVector esp_from_eigenvalues(const Vector& ev) {
  auto e = esp_of_values<double>(std::span<const double>(ev.data(), static_cast<std::size_t>(ev.size())));
  return EsPolyVector(std::vector<double>(e.begin() + 1, e.end()));
}

inline EsPolyVector elementary_symmetric(const PsdMatrix& x) {
  return esp_from_eigenvalues(x.eigenvalues());
}

inline EsPolyVector elementary_symmetric(const SymmetricMatrix& x) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(x.matrix(), Eigen::EigenvaluesOnly);
  return esp_from_eigenvalues(es.eigenvalues());
}

/// Determinant route: signed characteristic-polynomial coefficients as sums of
/// principal minors.
inline EsPolyVector elementary_symmetric_by_minors(const SymmetricMatrix& x) {
  const int p = x.dim();
  std::vector<double> rm(static_cast<std::size_t>(p) * p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) rm[static_cast<std::size_t>(i * p + j)] = x(i, j);
  auto e = esp_by_principal_minors<double>(rm, p);
  return EsPolyVector(std::vector<double>(e.begin() + 1, e.end()));
}

/// Elementary symmetric polynomial of order n in the eigenvalues with the
/// (0-based) indices in `excluded` left out. |excluded| is 1 or 2. Honors
/// e_0 = 1 and, for two exclusions, e_{-1} = 0.
inline double incomplete_esp(std::span<const double> eigs, std::span<const int> excluded, int n) {
  const int p = static_cast<int>(eigs.size());
  const int k = static_cast<int>(excluded.size());
  if (k < 1 || k > 2) throw InvalidInput("incomplete_esp excludes one or two indices");
  for (int i : excluded) {
    if (i < 0 || i >= p) throw InvalidInput("excluded index out of range: " + std::to_string(i));
  }
  if (k == 2 && excluded[0] == excluded[1]) throw InvalidInput("excluded indices must differ");
  if (n == -1 && k == 2) return 0.0;
  if (n < 0 || n > p - k) {
    throw InvalidInput("incomplete_esp order out of range: " + std::to_string(n));
  }
  std::vector<double> rest;
  rest.reserve(eigs.size());
  for (int i = 0; i < p; ++i) {
    if (std::find(excluded.begin(), excluded.end(), i) == excluded.end()) rest.push_back(eigs[static_cast<std::size_t>(i)]);
  }
  return esp_of_values<double>(rest)[static_cast<std::size_t>(n)];
}

/// Number of eigenvalues above tol * max(1, lambda_max).
inline int numerical_rank(const PsdMatrix& x, double tol = kDefaultTolerances.rank_rel) {
  if (!(tol > 0)) throw InvalidInput("rank tolerance must be positive");
  const Vector& ev = x.eigenvalues();
  const double cut = tol * std::max(1.0, ev(ev.size() - 1));
  return static_cast<int>((ev.array() > cut).count());
}

/// Unique PSD square root. Eigenvalues inside the PSD tolerance band are
/// clipped to zero before rooting.
inline PsdMatrix psd_sqrt(const PsdMatrix& x) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(x.matrix());
  Vector roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Matrix s = es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().transpose();
  s = 0.5 * (s + s.transpose());
  return PsdMatrix::from_spectrum(std::move(s), std::move(roots));
}

inline PsdMatrix psd_sqrt(const SymmetricMatrix& x, const Tolerances& tol = kDefaultTolerances) {
  return psd_sqrt(PsdMatrix(x, tol));
}

struct ProjectionResult {
  PsdMatrix matrix;
  double clipped_mass;  // sum of |negative eigenvalues| removed
};

/// Nearest PSD matrix in Frobenius norm: clip the spectrum at zero.
inline ProjectionResult psd_project(const SymmetricMatrix& x) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(x.matrix());
  const Vector& ev = es.eigenvalues();
  if (ev(0) >= 0.0) return {PsdMatrix::from_spectrum(x.matrix(), ev), 0.0};
  Vector clipped = ev.cwiseMax(0.0);
  const double mass = (clipped - ev).sum();
  Matrix m = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
  m = 0.5 * (m + m.transpose());
  return {PsdMatrix::from_spectrum(std::move(m), std::move(clipped)), mass};
}

namespace detail {

/// Reusable eigensolver for inner simulation loops. Results are the clipped
/// spectrum, the PSD projection and the square root of the projection.
class SpectralWorkspace {
 public:
  explicit SpectralWorkspace(int p) : es_(p), root_(p, p), proj_(p, p) {}

  /// Decomposes a symmetric matrix (upper/lower both read) and returns the
  /// clipped eigenvalue mass.
  double project(const Matrix& x, bool want_root) {
    es_.compute(x);
    const Vector& ev = es_.eigenvalues();
    clipped_ = ev.cwiseMax(0.0);
    const double mass = (clipped_ - ev).sum();
    const Matrix& v = es_.eigenvectors();
    if (mass > 0.0) {
      proj_.noalias() = v * clipped_.asDiagonal() * v.transpose();
      proj_ = 0.5 * (proj_ + proj_.transpose()).eval();
    } else {
      proj_ = x;
    }
    if (want_root) {
      root_.noalias() = v * clipped_.cwiseSqrt().asDiagonal() * v.transpose();
    }
    return mass;
  }

  const Matrix& projected() const { return proj_; }
  const Matrix& root() const { return root_; }
  const Vector& eigenvalues() const { return clipped_; }
  const Vector& raw_eigenvalues() const { return es_.eigenvalues(); }

 private:
  Eigen::SelfAdjointEigenSolver<Matrix> es_;
  Vector clipped_;
  Matrix root_;
  Matrix proj_;
};

}  // namespace detail

}  // namespace wishart
