#pragma once

// Closed-form laws and the Monte Carlo checks run against them: Laplace
// transforms (with the domain -Sigma^-1 + S_p^+ enforced), rank support,
// realized quadratic covariation and the e_n brackets and drifts.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wishart/errors.hpp"
#include "wishart/gindikin.hpp"
#include "wishart/parallel.hpp"
#include "wishart/rng.hpp"
#include "wishart/sampler.hpp"
#include "wishart/sde.hpp"
#include "wishart/symmat.hpp"

namespace wishart {

struct DomainCheck {
  bool in_domain = false;
  double min_eigenvalue = 0;  // of I + Sigma u (real spectrum, via the symmetric form)
};

/// u lies in the Laplace domain iff every eigenvalue of I + Sigma u exceeds dom_tol.
inline DomainCheck laplace_domain(const PsdMatrix& sigma, const Matrix& u,
                                  const Tolerances& tol = kDefaultTolerances) {
  const int p = sigma.dim();
  if (u.rows() != p || u.cols() != p) throw DimensionMismatch("probe u must be p x p");
  const Matrix s = psd_sqrt(sigma).matrix();
  Matrix m = Matrix::Identity(p, p) + s * (0.5 * (u + u.transpose())) * s;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues()(0);
  return {lo > tol.dom_tol, lo};
}

/// log of det(I + Sigma u)^(-beta) exp(-tr(u (I + Sigma u)^(-1) omega)).
inline double log_laplace_closed_form(const WishartParams& params, const Matrix& u,
                                      const Tolerances& tol = kDefaultTolerances) {
  const DomainCheck d = laplace_domain(params.sigma(), u, tol);
  if (!d.in_domain) {
    throw DomainError("u is outside the Laplace domain: min eigenvalue of I + Sigma u is " +
                          detail::fmt(d.min_eigenvalue),
                      d.min_eigenvalue);
  }
  const int p = params.dim();
  const Matrix s = psd_sqrt(params.sigma()).matrix();
  const Matrix sym = Matrix::Identity(p, p) + s * u * s;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (sym + sym.transpose()), Eigen::EigenvaluesOnly);
  const double logdet = es.eigenvalues().array().log().sum();
  const Matrix m = Matrix::Identity(p, p) + params.sigma().matrix() * u;
  const Matrix z = m.partialPivLu().solve(params.omega().matrix());
  const double tr = (u * z).trace();
  return -params.beta() * logdet - tr;
}

inline double laplace_closed_form(const WishartParams& params, const Matrix& u,
                                  const Tolerances& tol = kDefaultTolerances) {
  return std::exp(log_laplace_closed_form(params, u, tol));
}

/// Laplace transform of X_t for the Wishart SDE (point mass at t = 0).
inline double laplace_marginal(const MarginalLaw& law, const Matrix& u,
                               const Tolerances& tol = kDefaultTolerances) {
  if (law.degenerate()) return std::exp(-(u.cwiseProduct(law.x0.matrix())).sum());
  return laplace_closed_form(*law.law, u, tol);
}

/// p = 1 transform at complex u: (1 + s u)^(-beta) exp(-u w / (1 + s u)), principal
/// branch. The domain is enforced on Re u only. u = -i theta gives the
/// characteristic function.
inline std::complex<double> laplace_closed_form_p1(const WishartParams& params,
                                                   std::complex<double> u,
                                                   const Tolerances& tol = kDefaultTolerances) {
  if (params.dim() != 1) throw DimensionMismatch("complex probes are supported for p = 1 only");
  const double s = params.sigma().matrix()(0, 0);
  const double w = params.omega().matrix()(0, 0);
  const double re = 1.0 + s * u.real();
  if (!(re > tol.dom_tol)) throw DomainError("Re(1 + sigma u) is outside the domain", re);
  const std::complex<double> m = 1.0 + s * u;
  return std::pow(m, -params.beta()) * std::exp(-u * w / m);
}

struct LaplaceEstimate {
  double mean = 0;
  double stderr = 0;
};

/// Sample mean and standard error of exp(-tr(u X)); Kahan-summed in index order.
template <class Range, class Get>
LaplaceEstimate laplace_estimate(const Range& xs, const Matrix& u, Get get) {
  const std::size_t n = xs.size();
  if (n == 0) throw EmptyBatch("Laplace estimate over an empty batch");
  std::vector<double> v;
  v.reserve(n);
  for (const auto& x : xs) v.push_back(std::exp(-(u.cwiseProduct(get(x))).sum()));
  CompensatedSum sum;
  for (double a : v) sum.add(a);
  const double mean = sum.value() / static_cast<double>(n);
  if (n < 2) return {mean, 0.0};
  CompensatedSum sq;
  for (double a : v) sq.add((a - mean) * (a - mean));
  return {mean, std::sqrt(sq.value() / static_cast<double>(n - 1) / static_cast<double>(n))};
}

inline LaplaceEstimate laplace_estimate(const std::vector<PsdMatrix>& xs, const Matrix& u) {
  return laplace_estimate(xs, u, [](const PsdMatrix& x) -> const Matrix& { return x.matrix(); });
}

inline LaplaceEstimate laplace_estimate(const std::vector<Matrix>& xs, const Matrix& u) {
  return laplace_estimate(xs, u, [](const Matrix& x) -> const Matrix& { return x; });
}

/// (mc - closed) / stderr, with a zero-variance batch scored 0 on exact
/// agreement and +-inf otherwise.
inline double z_score(double mc, double closed, double stderr) {
  const double diff = mc - closed;
  if (stderr > 0) return diff / stderr;
  if (std::abs(diff) <= 1e-12 * std::max(1.0, std::abs(closed))) return 0.0;
  return diff > 0 ? INFINITY : -INFINITY;
}

struct LaplaceReport {
  Matrix u;
  double closed_form = 0;
  double mc_estimate = 0;
  double stderr = 0;
  double z_score = 0;
  bool in_domain = false;
};

inline std::vector<LaplaceReport> mc_laplace(const SampleBatch& batch,
                                             const std::vector<Matrix>& u_grid,
                                             const Tolerances& tol = kDefaultTolerances) {
  if (batch.samples.empty()) throw EmptyBatch("mc_laplace needs a non-empty batch");
  std::vector<LaplaceReport> out;
  for (const Matrix& u : u_grid) {
    LaplaceReport r;
    r.u = u;
    r.closed_form = laplace_closed_form(batch.params, u, tol);  // throws DomainError
    r.in_domain = true;
    const auto est = laplace_estimate(batch.samples, u);
    r.mc_estimate = est.mean;
    r.stderr = est.stderr;
    r.z_score = z_score(est.mean, r.closed_form, est.stderr);
    out.push_back(std::move(r));
  }
  return out;
}

/// At most floor(probes / 20) probes may exceed |z| = z_max.
inline bool laplace_reports_pass(const std::vector<LaplaceReport>& reports, double z_max = 4.0) {
  std::size_t bad = 0;
  for (const auto& r : reports) bad += std::abs(r.z_score) > z_max ? 1 : 0;
  return bad <= reports.size() / 20;
}

/// 0.1 I, 0.5 I, I, 2 I and one seeded random positive definite probe.
inline std::vector<Matrix> standard_probe_grid(int p, std::uint64_t seed) {
  const Matrix id = Matrix::Identity(p, p);
  std::vector<Matrix> g{0.1 * id, 0.5 * id, id, 2.0 * id};
  Stream rng(seed, 0xB0B0);
  Matrix a(p, p);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < p; ++i) a(i, j) = rng.gaussian();
  Matrix r = a * a.transpose() / p + 0.1 * id;
  g.push_back(0.5 * (r + r.transpose()));
  return g;
}

struct SupportReport {
  int threshold_rank = 0;
  double fraction_within = 0;
  double tol = 0;
};

/// Fraction of samples whose numerical rank is <= two_beta.
inline SupportReport check_rank_support(const std::vector<PsdMatrix>& samples, int two_beta,
                                        double tol = kDefaultTolerances.rank_rel) {
  if (samples.empty()) throw EmptyBatch("support check needs samples");
  if (two_beta < 0 || two_beta > samples.front().dim()) {
    throw InvalidInput("rank threshold 2*beta must lie in [0, p]");
  }
  std::size_t within = 0;
  for (const auto& x : samples) within += numerical_rank(x, tol) <= two_beta ? 1 : 0;
  return {two_beta, static_cast<double>(within) / static_cast<double>(samples.size()), tol};
}

inline SupportReport check_rank_support(const SampleBatch& batch, int two_beta,
                                        double tol = kDefaultTolerances.rank_rel) {
  return check_rank_support(batch.samples, two_beta, tol);
}

/// Rank increment of a rank-one update: rank(xi + eta eta^T) = rank(xi) + 1
/// exactly when eta leaves the range of xi. Decided on the component of eta in
/// the numerical null space of xi, relative to |eta|; the eigenvalue route
/// squares that component and loses half the digits.
struct RankIncrement {
  int base_rank = 0;
  double null_fraction = 0;  // |P_null eta| / |eta|
  bool increments = false;
};

inline RankIncrement rank_one_increment(const PsdMatrix& xi, const Vector& eta,
                                        double tol = kDefaultTolerances.rank_rel) {
  if (eta.size() != xi.dim()) throw DimensionMismatch("eta must have length p");
  const double len = eta.norm();
  if (!(len > 0)) throw InvalidInput("eta must be nonzero");
  Eigen::SelfAdjointEigenSolver<Matrix> es(xi.matrix());
  const Vector& ev = es.eigenvalues();
  const double cut = tol * std::max(1.0, ev.maxCoeff());
  RankIncrement r;
  double null_sq = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > cut) {
      ++r.base_rank;
    } else {
      const double c = es.eigenvectors().col(i).dot(eta);
      null_sq += c * c;
    }
  }
  r.null_fraction = std::sqrt(null_sq) / len;
  r.increments = r.base_rank < xi.dim() && r.null_fraction > tol;
  return r;
}

// ---------------------------------------------------------------------------
// Quadratic variation

/// d<X_ij, X_kl> / dt = X_ik d_jl + X_il d_jk + X_jk d_il + X_jl d_ik.
inline double qvar_integrand(const Matrix& x, int i, int j, int k, int l) {
  auto d = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  return x(i, k) * d(j, l) + x(i, l) * d(j, k) + x(j, k) * d(i, l) + x(j, l) * d(i, k);
}

struct QvarPair {
  int i = 0, j = 0, k = 0, l = 0;
  double realized = 0;
  double predicted = 0;
  double rel_error = 0;  // |realized - predicted| / sqrt(pred_ijij * pred_klkl)
};

struct QvarReport {
  std::vector<QvarPair> pairs;
  double mean_rel_error = 0;
  bool grid_too_coarse = false;  // dt > 1e-2
};

namespace detail {

inline double scaled_error(double realized, double predicted, double scale) {
  const double diff = std::abs(realized - predicted);
  if (scale > 0) return diff / scale;
  return diff == 0 ? 0.0 : INFINITY;
}

inline void check_uniform(const PathSample& path) {
  if (path.times.size() < 2) throw InvalidInput("path needs at least two grid points");
  const double dt = path.dt();
  for (std::size_t k = 1; k < path.times.size(); ++k) {
    if (std::abs(path.times[k] - path.times[k - 1] - dt) > 1e-9 * std::max(dt, 1e-300) + 1e-12) {
      throw InvalidInput("quadratic-variation checks need a uniform grid");
    }
  }
}

}  // namespace detail

/// Realized covariation of every pair of upper-triangle entries against the
/// left-point Riemann sum of the integrand.
inline QvarReport check_qvar(const PathSample& path) {
  detail::check_uniform(path);
  const int p = path.dim();
  const double dt = path.dt();
  std::vector<std::pair<int, int>> entries;
  for (int i = 0; i < p; ++i)
    for (int j = i; j < p; ++j) entries.emplace_back(i, j);
  const std::size_t ne = entries.size();
  std::vector<double> realized(ne * ne, 0.0), predicted(ne * ne, 0.0);
  for (std::size_t s = 0; s + 1 < path.states.size(); ++s) {
    const Matrix& x = path.states[s].matrix();
    const Matrix dx = path.states[s + 1].matrix() - x;
    for (std::size_t a = 0; a < ne; ++a) {
      const auto [i, j] = entries[a];
      for (std::size_t b = a; b < ne; ++b) {
        const auto [k, l] = entries[b];
        realized[a * ne + b] += dx(i, j) * dx(k, l);
        predicted[a * ne + b] += qvar_integrand(x, i, j, k, l) * dt;
      }
    }
  }
  QvarReport rep;
  rep.grid_too_coarse = dt > 1e-2;
  double total = 0;
  for (std::size_t a = 0; a < ne; ++a) {
    for (std::size_t b = a; b < ne; ++b) {
      const double scale = std::sqrt(std::max(predicted[a * ne + a], 0.0) *
                                     std::max(predicted[b * ne + b], 0.0));
      QvarPair q{entries[a].first, entries[a].second, entries[b].first, entries[b].second,
                 realized[a * ne + b], predicted[a * ne + b], 0.0};
      q.rel_error = detail::scaled_error(q.realized, q.predicted, scale);
      total += q.rel_error;
      rep.pairs.push_back(q);
    }
  }
  rep.mean_rel_error = total / static_cast<double>(rep.pairs.size());
  return rep;
}

/// Averages per-path reports pair by pair.
inline QvarReport aggregate_qvar(const std::vector<QvarReport>& reports) {
  if (reports.empty()) throw EmptyBatch("no quadratic-variation reports");
  QvarReport out = reports.front();
  const auto n = static_cast<double>(reports.size());
  for (std::size_t a = 0; a < out.pairs.size(); ++a) {
    double r = 0, pr = 0, e = 0;
    for (const auto& rep : reports) {
      r += rep.pairs[a].realized;
      pr += rep.pairs[a].predicted;
      e += rep.pairs[a].rel_error;
      out.grid_too_coarse = out.grid_too_coarse || rep.grid_too_coarse;
    }
    out.pairs[a].realized = r / n;
    out.pairs[a].predicted = pr / n;
    out.pairs[a].rel_error = e / n;
  }
  double m = 0;
  for (const auto& rep : reports) m += rep.mean_rel_error;
  out.mean_rel_error = m / n;
  return out;
}

inline QvarReport check_qvar(std::span<const PathSample> paths) {
  std::vector<QvarReport> reps;
  reps.reserve(paths.size());
  for (const auto& p : paths) reps.push_back(check_qvar(p));
  return aggregate_qvar(reps);
}

// ---------------------------------------------------------------------------
// e_n brackets and drifts

/// 4 sum_i lambda_i e_{n-1}^{(i)} e_{m-1}^{(i)}: d<e_n, e_m>/dt for the Wishart SDE.
inline double en_bracket_integrand(const Vector& eigenvalues, int n, int m) {
  const int p = static_cast<int>(eigenvalues.size());
  double acc = 0;
  std::vector<double> rest(static_cast<std::size_t>(p - 1));
  for (int i = 0; i < p; ++i) {
    for (int j = 0, r = 0; j < p; ++j)
      if (j != i) rest[static_cast<std::size_t>(r++)] = std::max(eigenvalues(j), 0.0);
    const auto e = esp_of_values<double>(rest);
    acc += 4.0 * std::max(eigenvalues(i), 0.0) * e[static_cast<std::size_t>(n - 1)] *
           e[static_cast<std::size_t>(m - 1)];
  }
  return acc;
}

struct BracketReport {
  int n = 0, m = 0;
  double realized = 0;
  double predicted = 0;
  double rel_error = 0;  // |realized - predicted| / sqrt(pred_nn * pred_mm)
  bool grid_too_coarse = false;
};

inline BracketReport check_en_brackets(const PathSample& path, int n, int m) {
  detail::check_uniform(path);
  const int p = path.dim();
  if (n < 1 || m < 1 || n > p || m > p) throw InvalidInput("bracket orders must lie in [1, p]");
  const double dt = path.dt();
  BracketReport rep{n, m};
  double pnn = 0, pmm = 0;
  EsPolyVector prev = elementary_symmetric(path.states.front());
  for (std::size_t s = 0; s + 1 < path.states.size(); ++s) {
    const Vector& ev = path.states[s].eigenvalues();
    const EsPolyVector next = elementary_symmetric(path.states[s + 1]);
    rep.realized += (next[n] - prev[n]) * (next[m] - prev[m]);
    rep.predicted += en_bracket_integrand(ev, n, m) * dt;
    pnn += en_bracket_integrand(ev, n, n) * dt;
    pmm += en_bracket_integrand(ev, m, m) * dt;
    prev = next;
  }
  rep.rel_error = detail::scaled_error(rep.realized, rep.predicted, std::sqrt(pnn * pmm));
  rep.grid_too_coarse = dt > 1e-2;
  return rep;
}

inline BracketReport aggregate_brackets(const std::vector<BracketReport>& reports) {
  if (reports.empty()) throw EmptyBatch("no bracket reports");
  BracketReport out{reports.front().n, reports.front().m};
  for (const auto& r : reports) {
    out.realized += r.realized;
    out.predicted += r.predicted;
    out.rel_error += r.rel_error;
    out.grid_too_coarse = out.grid_too_coarse || r.grid_too_coarse;
  }
  const auto k = static_cast<double>(reports.size());
  out.realized /= k;
  out.predicted /= k;
  out.rel_error /= k;
  return out;
}

inline BracketReport check_en_brackets(std::span<const PathSample> paths, int n, int m) {
  std::vector<BracketReport> reps;
  for (const auto& p : paths) reps.push_back(check_en_brackets(p, n, m));
  return aggregate_brackets(reps);
}

/// e_1..e_p along one path.
struct EnTrajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> values;  // values[k][n-1] = e_n(X_{t_k})
};

inline EnTrajectory en_trajectory(const PathSample& path) {
  EnTrajectory tr{path.times, {}};
  tr.values.reserve(path.states.size());
  for (const auto& x : path.states) tr.values.push_back(elementary_symmetric(x).values());
  return tr;
}

struct DriftReport {
  int n = 0;
  double observed_increment = 0;   // mean e_n(T) - mean e_n(0)
  double predicted_increment = 0;  // (p-n+1)(alpha-n+1) * int_0^T mean e_{n-1}
  double stderr = 0;
  double observed_slope = 0;       // increments divided by T
  double predicted_slope = 0;
  double rel_error = 0;
  double z_score = 0;
};

/// Observed change of mean e_n over [0, T] against the drift integrated (by the
/// trapezoid rule) along the simulated mean of e_{n-1}.
inline DriftReport check_en_drift(std::span<const EnTrajectory> paths, int n, double alpha) {
  if (paths.empty()) throw EmptyBatch("drift check needs paths");
  const auto& times = paths.front().times;
  const int p = static_cast<int>(paths.front().values.front().size());
  if (n < 1 || n > p) throw InvalidInput("drift order must lie in [1, p]");
  const std::size_t nt = times.size();
  const auto np = static_cast<double>(paths.size());

  std::vector<double> mean_prev(nt, 0.0);
  std::vector<double> incr;
  incr.reserve(paths.size());
  for (const auto& tr : paths) {
    if (tr.times.size() != nt) throw InvalidInput("paths must share one time grid");
    for (std::size_t k = 0; k < nt; ++k) {
      mean_prev[k] += (n == 1 ? 1.0 : tr.values[k][static_cast<std::size_t>(n - 2)]) / np;
    }
    incr.push_back(tr.values.back()[static_cast<std::size_t>(n - 1)] -
                   tr.values.front()[static_cast<std::size_t>(n - 1)]);
  }
  double integral = 0;
  for (std::size_t k = 0; k + 1 < nt; ++k) {
    integral += 0.5 * (mean_prev[k] + mean_prev[k + 1]) * (times[k + 1] - times[k]);
  }
  CompensatedSum s;
  for (double v : incr) s.add(v);
  DriftReport rep;
  rep.n = n;
  rep.observed_increment = s.value() / np;
  rep.predicted_increment = (p - n + 1) * (alpha - n + 1) * integral;
  CompensatedSum sq;
  for (double v : incr) sq.add((v - rep.observed_increment) * (v - rep.observed_increment));
  rep.stderr = paths.size() > 1 ? std::sqrt(sq.value() / (np - 1) / np) : 0.0;
  const double horizon = times.back() - times.front();
  rep.observed_slope = rep.observed_increment / horizon;
  rep.predicted_slope = rep.predicted_increment / horizon;
  double start = 0;
  for (const auto& tr : paths) start += tr.values.front()[static_cast<std::size_t>(n - 1)] / np;
  const double denom = std::max({std::abs(rep.predicted_increment), std::abs(start), 1e-300});
  rep.rel_error = std::abs(rep.observed_increment - rep.predicted_increment) / denom;
  rep.z_score = z_score(rep.observed_increment, rep.predicted_increment, rep.stderr);
  return rep;
}

inline DriftReport check_en_drift(std::span<const PathSample> paths, int n, double alpha) {
  std::vector<EnTrajectory> trs;
  trs.reserve(paths.size());
  for (const auto& p : paths) trs.push_back(en_trajectory(p));
  return check_en_drift(std::span<const EnTrajectory>(trs), n, alpha);
}

}  // namespace wishart
