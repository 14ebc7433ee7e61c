#pragma once

// Euler-Maruyama step for dX = sqrt(X) dW + dW^T sqrt(X) + alpha I dt:
//
//   X_{k+1} = proj( X_k + S dW + dW^T S + alpha I dt ),  S = sqrt(X_k),
//
// dW a p x p matrix of iid N(0, dt). proj clips the spectrum at zero; with
// projection disabled the raw iterate is kept (S still uses the clipped
// spectrum), which lets a diagnostic run watch e_n leave the cone.

#include <cmath>

#include "wishart/errors.hpp"
#include "wishart/rng.hpp"
#include "wishart/symmat.hpp"

namespace wishart::detail {

class EulerStepper {
 public:
  EulerStepper(int p, double alpha, double dt, bool project = true)
      : p_(p), alpha_(alpha), dt_(dt), sqdt_(std::sqrt(dt)), project_(project), ws_(p),
        x_(p, p), dw_(p, p), inc_(p, p) {}

  void reset(const Matrix& x0) {
    x_ = x0;
    ws_.project(x_, true);
    if (project_) x_ = ws_.projected();
  }

  /// Advances one step and returns the clipped eigenvalue mass.
  double step(Stream& rng) {
    for (int j = 0; j < p_; ++j)
      for (int i = 0; i < p_; ++i) dw_(i, j) = sqdt_ * rng.gaussian();
    inc_.noalias() = ws_.root() * dw_;
    x_ += inc_ + inc_.transpose();
    x_.diagonal().array() += alpha_ * dt_;
    if (!x_.allFinite()) throw NonFiniteState("Euler iterate became non-finite");
    const double mass = ws_.project(x_, true);
    if (project_) x_ = ws_.projected();
    return project_ ? mass : 0.0;
  }

  const Matrix& state() const { return x_; }
  /// Spectrum of the current state (clipped at zero).
  const Vector& eigenvalues() const { return ws_.eigenvalues(); }
  const Vector& raw_eigenvalues() const { return ws_.raw_eigenvalues(); }

 private:
  int p_;
  double alpha_;
  double dt_;
  double sqdt_;
  bool project_;
  SpectralWorkspace ws_;
  Matrix x_;
  Matrix dw_;
  Matrix inc_;
};

}  // namespace wishart::detail
