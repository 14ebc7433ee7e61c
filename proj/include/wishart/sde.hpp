#pragma once

// Path simulation for the Wishart SDE
//
//   dX = sqrt(X) dW + dW^T sqrt(X) + alpha I dt,   X_0 = x0.
//
// Two schemes:
//   EulerProjected  Euler-Maruyama with spectral projection onto the PSD cone.
//   ExactLowRank    integer alpha, rank(x0) <= alpha:
//                   X_t = sum_{i<alpha} (y_i + B_i(t)) (y_i + B_i(t))^T with
//                   x0 = sum y_i y_i^T and independent standard Brownian B_i.
//                   Exact in law on the grid.
//
// Every simulation refuses inadmissible (alpha, x0). At time t the law is
// Gamma_p(alpha/2, x0; 2t I).

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wishart/errors.hpp"
#include "wishart/euler.hpp"
#include "wishart/gindikin.hpp"
#include "wishart/parallel.hpp"
#include "wishart/rng.hpp"
#include "wishart/sampler.hpp"
#include "wishart/symmat.hpp"

namespace wishart {

enum class Scheme { EulerProjected, ExactLowRank };

inline std::string to_string(Scheme s) {
  return s == Scheme::EulerProjected ? "euler" : "low-rank";
}

struct ProcessConfig {
  double alpha = 0;
  PsdMatrix x0 = PsdMatrix::zero(1);
  double horizon = 1;
  double dt = 1e-3;
  Scheme scheme = Scheme::EulerProjected;
  std::size_t n_paths = 1;
  std::uint64_t seed = 0;
};

struct PathSample {
  std::vector<double> times;
  std::vector<PsdMatrix> states;
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;
  double clipped_mass = 0;  // total eigenvalue mass removed by projection

  double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
  int dim() const { return states.front().dim(); }
};

/// Number of uniform steps K with K * dt = T; rejects grids that do not close.
inline int grid_steps(double horizon, double dt) {
  if (!(horizon > 0) || !(dt > 0)) throw InvalidInput("horizon and dt must be positive");
  if (dt > horizon * (1 + 1e-12)) throw InvalidInput("dt must not exceed the horizon");
  const double k = std::round(horizon / dt);
  if (std::abs(k * dt - horizon) > 1e-9 * horizon) {
    throw InvalidInput("horizon is not an integer multiple of dt (non-uniform grid)");
  }
  return static_cast<int>(k);
}

/// Throws InadmissibleParams (certificate attached when available) or
/// InvalidInput/RankTooHigh for malformed configurations.
inline void validate(const ProcessConfig& c, const Tolerances& tol = kDefaultTolerances) {
  if (!(c.alpha >= 0) || !std::isfinite(c.alpha)) throw InvalidShape("drift alpha must be >= 0");
  grid_steps(c.horizon, c.dt);
  Verdict v = sde_verdict(c.alpha, c.x0, tol);
  if (!v.admissible) throw InadmissibleParams(std::move(v));
  if (c.scheme == Scheme::ExactLowRank) {
    const auto m = detail::as_integer(c.alpha, tol.integrality);
    if (!m || *m < 0 || *m > c.x0.dim()) {
      throw InvalidInput("low-rank scheme needs an integer alpha in [0, p]");
    }
    if (numerical_rank(c.x0, tol.rank_rel) > *m) throw RankTooHigh("rank(x0) exceeds alpha");
  }
}

/// Euler path; observer(k, t, state, eigenvalues) is called for k = 0..K.
template <class Observer>
double simulate_euler_observed(const ProcessConfig& c, Stream& rng, Observer&& observe) {
  const int steps = grid_steps(c.horizon, c.dt);
  const int p = c.x0.dim();
  detail::EulerStepper stepper(p, c.alpha, c.dt);
  stepper.reset(c.x0.matrix());
  observe(0, 0.0, c.x0.matrix(), c.x0.eigenvalues());
  double mass = 0;
  for (int k = 1; k <= steps; ++k) {
    mass += stepper.step(rng);
    observe(k, k * c.dt, stepper.state(), stepper.eigenvalues());
  }
  return mass;
}

/// Exact low-rank path; same observer contract as the Euler variant.
template <class Observer>
void simulate_low_rank_observed(const ProcessConfig& c, Stream& rng, Observer&& observe,
                                const Tolerances& tol = kDefaultTolerances) {
  const int steps = grid_steps(c.horizon, c.dt);
  const int p = c.x0.dim();
  const int a = static_cast<int>(std::lround(c.alpha));
  const auto ys = decompose_noncentrality(c.x0, a, tol);
  Matrix y(p, a);
  for (int i = 0; i < a; ++i) y.col(i) = ys[static_cast<std::size_t>(i)];
  observe(0, 0.0, c.x0.matrix(), c.x0.eigenvalues());
  const double sq = std::sqrt(c.dt);
  Eigen::SelfAdjointEigenSolver<Matrix> es(p);
  Matrix x(p, p);
  for (int k = 1; k <= steps; ++k) {
    for (int i = 0; i < a; ++i)
      for (int r = 0; r < p; ++r) y(r, i) += sq * rng.gaussian();
    x.noalias() = y * y.transpose();
    es.compute(x, Eigen::EigenvaluesOnly);
    observe(k, k * c.dt, x, es.eigenvalues());
  }
}

namespace detail {

struct PathRecorder {
  PathSample* path;
  void operator()(int, double t, const Matrix& x, const Vector& ev) const {
    path->times.push_back(t);
    path->states.push_back(PsdMatrix::from_spectrum(x, ev));
  }
};

}  // namespace detail

inline PathSample simulate_euler(const ProcessConfig& c, Stream& rng,
                                 const Tolerances& tol = kDefaultTolerances) {
  validate(c, tol);
  PathSample path;
  path.seed = c.seed;
  const auto steps = static_cast<std::size_t>(grid_steps(c.horizon, c.dt));
  path.times.reserve(steps + 1);
  path.states.reserve(steps + 1);
  path.clipped_mass = simulate_euler_observed(c, rng, detail::PathRecorder{&path});
  path.states.front() = c.x0;
  return path;
}

inline PathSample simulate_low_rank(const ProcessConfig& c, Stream& rng,
                                    const Tolerances& tol = kDefaultTolerances) {
  if (c.scheme != Scheme::ExactLowRank) throw InvalidInput("config scheme must be low-rank");
  validate(c, tol);
  PathSample path;
  path.seed = c.seed;
  const auto steps = static_cast<std::size_t>(grid_steps(c.horizon, c.dt));
  path.times.reserve(steps + 1);
  path.states.reserve(steps + 1);
  simulate_low_rank_observed(c, rng, detail::PathRecorder{&path}, tol);
  path.states.front() = c.x0;
  return path;
}

/// Path `index` of the run described by `c`, on stream (c.seed, index).
inline PathSample simulate_path(const ProcessConfig& c, std::uint64_t index,
                                const Tolerances& tol = kDefaultTolerances) {
  Stream rng(c.seed, index);
  PathSample path = c.scheme == Scheme::EulerProjected ? simulate_euler(c, rng, tol)
                                                       : simulate_low_rank(c, rng, tol);
  path.path_index = index;
  return path;
}

/// Simulates c.n_paths paths and returns fn(path) for each, in path order.
/// Paths are dropped after fn runs, so memory stays at one path per worker.
template <class Fn>
auto run_paths(const ProcessConfig& c, unsigned threads, Fn&& fn,
               const Tolerances& tol = kDefaultTolerances) {
  validate(c, tol);
  using R = std::decay_t<decltype(fn(std::declval<const PathSample&>()))>;
  std::vector<std::optional<R>> slots(c.n_paths);
  parallel_for(c.n_paths, threads, [&](std::size_t i) { slots[i].emplace(fn(simulate_path(c, i, tol))); });
  std::vector<R> out;
  out.reserve(c.n_paths);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

/// Law of X_t: a point mass at x0 for t = 0, otherwise Gamma_p(alpha/2, x0; 2t I).
struct MarginalLaw {
  double t = 0;
  PsdMatrix x0;
  std::optional<WishartParams> law;  // empty means point mass at x0

  bool degenerate() const { return !law.has_value(); }
};

inline MarginalLaw marginal_law(double alpha, const PsdMatrix& x0, double t,
                                const Tolerances& tol = kDefaultTolerances) {
  if (!(t >= 0)) throw InvalidInput("time must be >= 0");
  Verdict v = sde_verdict(alpha, x0, tol);
  if (!v.admissible) throw InadmissibleParams(std::move(v));
  const int p = x0.dim();
  if (t == 0) return {0.0, x0, std::nullopt};
  return {t, x0,
          WishartParams(alpha / 2, x0,
                        PsdMatrix::from_spectrum(2 * t * Matrix::Identity(p, p),
                                                 Vector::Constant(p, 2 * t)))};
}

/// Result of running unprojected Euler on possibly inadmissible parameters.
struct ForcedRunReport {
  std::vector<double> times;
  std::vector<std::vector<double>> mean_en;  // mean_en[n-1][k] = mean e_n at times[k]
  std::optional<double> first_negative_time;
  int first_negative_order = 0;
};

/// Diagnostic: Euler without projection, averaging e_n over paths and
/// reporting the first grid time where some mean e_n drops below zero.
inline ForcedRunReport force_diagnostic(double alpha, const PsdMatrix& x0, double horizon, double dt,
                                        std::size_t n_paths, std::uint64_t seed,
                                        unsigned threads = 1) {
  if (n_paths == 0) throw EmptyBatch("force diagnostic needs at least one path");
  const int steps = grid_steps(horizon, dt);
  const int p = x0.dim();
  const auto nt = static_cast<std::size_t>(steps + 1);
  std::vector<std::vector<double>> per_path(n_paths);
  parallel_for(n_paths, threads, [&](std::size_t i) {
    Stream rng(seed, i);
    std::vector<double> e(nt * static_cast<std::size_t>(p));
    detail::EulerStepper stepper(p, alpha, dt, /*project=*/false);
    stepper.reset(x0.matrix());
    auto record = [&](int k, const Vector& ev) {
      const auto es = esp_from_eigenvalues(ev);
      for (int n = 1; n <= p; ++n) e[static_cast<std::size_t>(k) * p + n - 1] = es[n];
    };
    record(0, x0.eigenvalues());
    for (int k = 1; k <= steps; ++k) {
      stepper.step(rng);
      record(k, stepper.raw_eigenvalues());
    }
    per_path[i] = std::move(e);
  });
  ForcedRunReport rep;
  rep.mean_en.assign(static_cast<std::size_t>(p), std::vector<double>(nt));
  for (std::size_t k = 0; k < nt; ++k) {
    rep.times.push_back(static_cast<double>(k) * dt);
    for (int n = 1; n <= p; ++n) {
      CompensatedSum s;
      for (const auto& e : per_path) s.add(e[k * p + n - 1]);
      const double mean = s.value() / static_cast<double>(n_paths);
      rep.mean_en[static_cast<std::size_t>(n - 1)][k] = mean;
      if (!rep.first_negative_time && mean < 0) {
        rep.first_negative_time = rep.times.back();
        rep.first_negative_order = n;
      }
    }
  }
  return rep;
}

}  // namespace wishart
