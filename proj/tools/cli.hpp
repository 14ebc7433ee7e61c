#pragma once

// wishart_lab command-line front end. run_cli is the whole program; main()
// only forwards argv so tests can drive it in-process.

#include <algorithm>
#include <charconv>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "wishart/matrix_io.hpp"
#include "wishart/wishart.hpp"

#ifndef WISHART_VERSION
#define WISHART_VERSION "0.0.0"
#endif

namespace wishart::cli {

using json = nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitInadmissible = 2;
inline constexpr int kExitCheckFailed = 3;

// ---------------------------------------------------------------------------
// helpers

inline std::string fmt_double(double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[19] = "0x";
  auto res = std::to_chars(buf + 2, buf + sizeof buf, v, 16);
  std::string s(buf + 2, res.ptr);
  return "0x" + std::string(16 - s.size(), '0') + s;
}

inline json certificate_json(const Certificate& c) {
  json coeffs = json::array();
  for (const auto& a : c.poly.coeffs()) coeffs.push_back(to_string(a));
  return {{"n", c.n},
          {"kind", to_string(c.kind)},
          {"value", to_string(c.value)},
          {"witness_t", to_string(c.witness_t)},
          {"value_at_witness", to_string(c.value_at_witness())},
          {"coeffs", coeffs},
          {"valid", c.validate()}};
}

inline json verdict_json(const Verdict& v) {
  json j = {{"admissible", v.admissible}, {"rule", to_string(v.rule)}, {"detail", v.detail}};
  if (v.certificate) j["certificate"] = certificate_json(*v.certificate);
  return j;
}

inline json matrix_json(const Matrix& m) { return io::matrix_to_json(m); }

/// "zero", "identity" or a matrix file. p = 0 means "take p from the file".
inline io::LoadedMatrix load_matrix_arg(const std::string& spec, int p, const char* what) {
  if (spec == "zero" || spec == "identity") {
    if (p < 1) throw InvalidInput(std::string(what) + " = " + spec + " needs --p");
    const Matrix m = spec == "zero" ? Matrix(Matrix::Zero(p, p)) : Matrix(Matrix::Identity(p, p));
    std::vector<Rational> exact(static_cast<std::size_t>(p) * p, Rational(0));
    for (int i = 0; i < p; ++i)
      exact[static_cast<std::size_t>(i) * p + i] = spec == "zero" ? 0 : 1;
    return {SymmetricMatrix(m), std::move(exact)};
  }
  auto loaded = io::load_matrix(spec);
  if (p >= 1 && loaded.value.dim() != p) {
    throw DimensionMismatch(std::string(what) + " file has p = " + std::to_string(loaded.value.dim()) +
                            " but --p = " + std::to_string(p));
  }
  return loaded;
}

inline std::vector<Rational> exact_esp_of(const io::LoadedMatrix& m) {
  auto e = esp_by_principal_minors<Rational>(m.exact, m.value.dim());
  return {e.begin() + 1, e.end()};
}

/// Upper-triangle entries, row by row.
inline std::vector<double> upper_triangle(const Matrix& m) {
  std::vector<double> v;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = i; j < m.cols(); ++j) v.push_back(m(i, j));
  return v;
}

inline std::string upper_header(int p, const char* prefix) {
  std::string h;
  for (int i = 0; i < p; ++i)
    for (int j = i; j < p; ++j) {
      if (!h.empty()) h += ',';
      h += std::string(prefix) + std::to_string(i + 1) + "_" + std::to_string(j + 1);
    }
  return h;
}

// ---------------------------------------------------------------------------
// config files

/// Flattens a JSON or TOML config into (key, values) pairs. Sections are
/// ignored except for the one naming the active subcommand.
inline std::vector<std::pair<std::string, std::vector<std::string>>> read_config(
    const std::string& path, const std::vector<std::string>& subcommands) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config '" + path + "'");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw InvalidInput("invalid JSON config: " + std::string(e.what()));
    }
    auto scalar = [](const json& v) -> std::string {
      if (v.is_string()) return v.get<std::string>();
      if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
      if (v.is_number_integer()) return std::to_string(v.get<long long>());
      if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
      if (v.is_number()) return fmt_double(v.get<double>());
      throw InvalidInput("config values must be scalars or arrays of scalars");
    };
    std::function<void(const json&, std::size_t)> walk = [&](const json& obj, std::size_t depth) {
      for (const auto& [k, v] : obj.items()) {
        if (v.is_object()) {
          if (depth < subcommands.size() && k == subcommands[depth]) walk(v, depth + 1);
          continue;
        }
        std::vector<std::string> vals;
        if (v.is_array()) {
          for (const auto& e : v) vals.push_back(scalar(e));
        } else {
          vals.push_back(scalar(v));
        }
        out.emplace_back(k, std::move(vals));
      }
    };
    walk(j, 0);
    return out;
  }
  std::istringstream is(text);
  const auto items = CLI::ConfigTOML().from_config(is);
  for (const auto& it : items) {
    if (it.name == "++" || it.name == "--") continue;
    const bool top = it.parents.empty();
    const bool ours = !top && std::equal(it.parents.begin(), it.parents.end(), subcommands.begin(),
                                         subcommands.begin() + static_cast<std::ptrdiff_t>(
                                             std::min(it.parents.size(), subcommands.size()))) &&
                      it.parents.size() <= subcommands.size();
    if (top || ours) out.emplace_back(it.name, it.inputs);
  }
  return out;
}

/// Appends config values for options not already on the command line.
inline void merge_config(std::vector<std::string>& args, const std::vector<std::string>& subcommands) {
  std::optional<std::string> path;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (!path) return;
  auto given = [&](const std::string& key) {
    const std::string flag = "--" + key;
    return std::any_of(rest.begin(), rest.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
  };
  for (auto& [key, vals] : read_config(*path, subcommands)) {
    if (key == "config" || given(key)) continue;
    if (vals.size() == 1 && (vals[0] == "true" || vals[0] == "false")) {
      if (vals[0] == "true") rest.push_back("--" + key);
      continue;
    }
    rest.push_back("--" + key);
    for (auto& v : vals) rest.push_back(v);
  }
  args = std::move(rest);
}

// ---------------------------------------------------------------------------
// option groups

struct SamplerOptions {
  int p = 0;
  std::string beta;
  std::string omega = "zero";
  std::string sigma = "identity";
  std::size_t n = 1000;
  std::string method = "auto";
  int steps = kDefaultEulerSteps;

  void add(CLI::App* app, std::size_t default_n) {
    n = default_n;
    app->add_option("--p", p, "dimension")->check(CLI::Range(1, 64));
    app->add_option("--beta", beta, "shape, decimal or rational 'a/b'")->required();
    app->add_option("--omega", omega, "non-centrality: matrix file or 'zero'")->capture_default_str();
    app->add_option("--sigma", sigma, "scale: matrix file or 'identity'")->capture_default_str();
    app->add_option("--n", n, "number of samples")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--method", method, "sampler")
        ->check(CLI::IsMember({"auto", "gaussian-sum", "bartlett", "hybrid", "sde"}))
        ->capture_default_str();
    app->add_option("--steps", steps, "Euler steps for the sde method")->capture_default_str();
  }

  /// Parameters after the exact NCGS check; throws InadmissibleParams.
  WishartParams params() const {
    const Rational b = parse_rational(beta);
    auto om = load_matrix_arg(omega, p, "--omega");
    const int dim = om.value.dim();
    auto sg = load_matrix_arg(sigma, dim, "--sigma");
    const PsdMatrix omega_psd(om.value);
    Verdict v = ncgs_contains(b, numerical_rank(omega_psd), dim);
    if (!v.admissible) throw InadmissibleParams(std::move(v));
    const PsdMatrix sigma_psd(sg.value);
    if (sigma_psd.eigen_floor() <= 0) throw InvalidInput("--sigma must be positive definite");
    return {to_double(b), omega_psd, sigma_psd};
  }

  SamplerPlan plan(const WishartParams& params) const {
    if (method == "auto") return plan_sampler(params, kDefaultTolerances, steps);
    static const std::map<std::string, SamplerKind> kinds{
        {"gaussian-sum", SamplerKind::GaussianSum},
        {"bartlett", SamplerKind::BartlettCentral},
        {"hybrid", SamplerKind::HybridConvolution},
        {"sde", SamplerKind::SdeApprox}};
    return plan_for_kind(params, kinds.at(method), kDefaultTolerances, steps);
  }
};

struct ProcessOptions {
  int p = 0;
  std::string alpha;
  std::string x0 = "zero";
  double horizon = 1.0;
  double dt = 1e-3;
  std::size_t paths = 1;
  std::string scheme = "euler";

  void add(CLI::App* app, std::size_t default_paths) {
    paths = default_paths;
    app->add_option("--p", p, "dimension")->check(CLI::Range(1, 64));
    app->add_option("--alpha", alpha, "drift, decimal or rational 'a/b'")->required();
    app->add_option("--x0", x0, "starting point: matrix file or 'zero'")->capture_default_str();
    app->add_option("--T", horizon, "horizon")->capture_default_str();
    app->add_option("--dt", dt, "time step")->capture_default_str();
    app->add_option("--paths", paths, "number of paths")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--scheme", scheme, "euler or low-rank")
        ->check(CLI::IsMember({"euler", "low-rank"}))
        ->capture_default_str();
  }

  ProcessConfig config(std::uint64_t seed) const {
    ProcessConfig c;
    c.alpha = to_double(parse_rational(alpha));
    c.x0 = PsdMatrix(load_matrix_arg(x0, p, "--x0").value);
    c.horizon = horizon;
    c.dt = dt;
    c.scheme = scheme == "euler" ? Scheme::EulerProjected : Scheme::ExactLowRank;
    c.n_paths = paths;
    c.seed = seed;
    return c;
  }
};

// ---------------------------------------------------------------------------
// subcommands

struct Context {
  std::ostream& out;
  std::ostream& err;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  json metadata;
};

inline void print_json(std::ostream& out, const json& j) { out << j.dump(2) << '\n'; }

inline std::string csv_metadata(const json& meta) {
  std::string s;
  for (const auto& [k, v] : meta.items()) s += "# " + k + "=" + (v.is_string() ? v.get<std::string>() : v.dump()) + "\n";
  return s;
}

struct CheckOptions {
  int p = 0;
  std::string mode = "ncgs";
  std::string beta, alpha;
  std::optional<int> rank_omega, rank_x0, k;
  std::string omega, x0;
};

inline int run_check(const CheckOptions& o, Context& ctx) {
  json res;
  bool ok = false;
  auto rank_of = [&](const std::optional<int>& r, const std::string& file, const char* what) {
    if (r) return *r;
    if (!file.empty()) return numerical_rank(PsdMatrix(load_matrix_arg(file, o.p, what).value));
    return 0;
  };
  if (o.p < 1) throw InvalidInput("--p is required");
  if (o.mode == "ncgs" || o.mode == "gindikin") {
    if (o.beta.empty()) throw InvalidInput("--beta is required for mode " + o.mode);
    const Rational b = parse_rational(o.beta);
    if (o.mode == "gindikin") {
      ok = classical_gindikin_contains(b, o.p);
      res = {{"admissible", ok},
             {"rule", ok ? (b * 2 >= o.p - 1 ? "ContinuousRange" : "DiscreteRank") : "Inadmissible"},
             {"detail", "beta = " + to_string(b) + (ok ? " in W0" : " not in W0")}};
    } else {
      const Verdict v = ncgs_contains(b, rank_of(o.rank_omega, o.omega, "--omega"), o.p);
      ok = v.admissible;
      res = verdict_json(v);
    }
  } else if (o.mode == "sde") {
    if (o.alpha.empty()) throw InvalidInput("--alpha is required for mode sde");
    const Rational a = parse_rational(o.alpha);
    const int r = rank_of(o.rank_x0, o.x0, "--x0");
    Verdict v = sde_admissible(a, r, o.p);
    if (!v.admissible) {
      std::vector<Rational> e0;
      if (!o.x0.empty()) {
        e0 = exact_esp_of(load_matrix_arg(o.x0, o.p, "--x0"));
      } else {
        // Canonical starting point of rank r: diag(1,...,1,0,...,0).
        Rational binom(1);
        for (int n = 1; n <= o.p; ++n) {
          binom = n <= r ? binom * (r - n + 1) / n : Rational(0);
          e0.push_back(binom);
        }
      }
      v.certificate = nonexistence_certificate(o.p, a, e0);
    }
    ok = v.admissible;
    res = verdict_json(v);
  } else {
    if (o.alpha.empty() || !o.k) throw InvalidInput("mode semigroup needs --alpha and --k");
    const Rational a = parse_rational(o.alpha);
    ok = semigroup_admissible(a, *o.k, o.p);
    res = {{"admissible", ok},
           {"rule", ok ? (*o.k == o.p ? "ContinuousRange" : "DiscreteRank") : "Inadmissible"},
           {"detail", "alpha = " + to_string(a) + ", k = " + std::to_string(*o.k) + ", p = " +
                          std::to_string(o.p)}};
  }
  res["metadata"] = ctx.metadata;
  print_json(ctx.out, res);
  return ok ? kExitOk : kExitInadmissible;
}

struct MomentOptions {
  int p = 0;
  std::string alpha;
  std::string x0 = "zero";
};

inline int run_moments(const MomentOptions& o, Context& ctx) {
  const auto x0 = load_matrix_arg(o.x0, o.p, "--x0");
  PsdMatrix{x0.value};
  const int p = x0.value.dim();
  json arr = json::array();
  for (const auto& mp : moment_polynomials(p, parse_rational(o.alpha), exact_esp_of(x0))) {
    json coeffs = json::array();
    for (const auto& c : mp.coeffs()) coeffs.push_back(to_string(c));
    arr.push_back({{"n", mp.n}, {"coeffs", coeffs}});
  }
  print_json(ctx.out, {{"metadata", ctx.metadata}, {"moments", arr}});
  return kExitOk;
}

inline int run_certify(const MomentOptions& o, Context& ctx) {
  const auto x0 = load_matrix_arg(o.x0, o.p, "--x0");
  PsdMatrix{x0.value};
  const auto cert = nonexistence_certificate(x0.value.dim(), parse_rational(o.alpha), exact_esp_of(x0));
  json res = cert ? json{{"admissible", false}, {"certificate", certificate_json(*cert)}}
                  : json{{"admissible", true}};
  res["metadata"] = ctx.metadata;
  print_json(ctx.out, res);
  return cert ? kExitInadmissible : kExitOk;
}

struct SampleOptions {
  SamplerOptions s;
  std::string out = "-";
  std::string format = "csv";
};

inline int run_sample(const SampleOptions& o, Context& ctx) {
  const WishartParams params = o.s.params();
  const SamplerPlan plan = o.s.plan(params);
  ctx.metadata["method"] = to_string(plan.kind);
  if (plan.kind == SamplerKind::SdeApprox) {
    const auto r = richardson_check(params, plan.euler_steps, std::min<std::size_t>(o.s.n, 2000),
                                    ctx.seed ^ 0x5EEDULL, Matrix::Identity(params.dim(), params.dim()),
                                    ctx.threads);
    ctx.metadata["richardson"] = {{"coarse_steps", r.coarse_steps},
                                  {"fine_steps", r.fine_steps},
                                  {"coarse_estimate", r.coarse_estimate},
                                  {"fine_estimate", r.fine_estimate},
                                  {"combined_stderr", r.combined_stderr},
                                  {"consistent", r.consistent}};
  }
  const SampleBatch batch = draw_batch(params, plan, o.s.n, ctx.seed, ctx.threads);

  std::ofstream file;
  std::ostream* sink = &ctx.out;
  if (o.out != "-") {
    file.open(o.out);
    if (!file) throw InvalidInput("cannot write '" + o.out + "'");
    sink = &file;
  }
  const int p = params.dim();
  if (o.format == "csv") {
    *sink << csv_metadata(ctx.metadata) << upper_header(p, "x") << '\n';
    for (const auto& x : batch.samples) {
      const auto v = upper_triangle(x.matrix());
      for (std::size_t i = 0; i < v.size(); ++i) *sink << (i ? "," : "") << fmt_double(v[i]);
      *sink << '\n';
    }
  } else {
    json rows = json::array();
    for (const auto& x : batch.samples) rows.push_back(upper_triangle(x.matrix()));
    print_json(*sink, {{"metadata", ctx.metadata}, {"p", p}, {"samples", rows}});
  }
  if (o.out != "-") {
    print_json(ctx.out, {{"metadata", ctx.metadata}, {"out", o.out}, {"count", batch.samples.size()}});
  }
  return kExitOk;
}

struct SimulateOptions {
  ProcessOptions proc;
  std::string out;
  bool full_state = false;
  bool force = false;
};

inline int run_force(const SimulateOptions& o, Context& ctx) {
  const double alpha = to_double(parse_rational(o.proc.alpha));
  const PsdMatrix x0(load_matrix_arg(o.proc.x0, o.proc.p, "--x0").value);
  const auto rep = force_diagnostic(alpha, x0, o.proc.horizon, o.proc.dt, o.proc.paths, ctx.seed,
                                    ctx.threads);
  const Verdict v = sde_verdict(alpha, x0);
  json res = {{"metadata", ctx.metadata},
              {"forced", true},
              {"verdict", verdict_json(v)},
              {"first_negative_time", rep.first_negative_time ? json(*rep.first_negative_time) : json(nullptr)},
              {"first_negative_order", rep.first_negative_order}};
  if (!o.out.empty()) {
    std::filesystem::create_directories(o.out);
    std::ofstream f(std::filesystem::path(o.out) / "mean_en.csv");
    f << csv_metadata(ctx.metadata) << "t";
    for (int n = 1; n <= x0.dim(); ++n) f << ",e" << n;
    f << '\n';
    for (std::size_t k = 0; k < rep.times.size(); ++k) {
      f << fmt_double(rep.times[k]);
      for (const auto& series : rep.mean_en) f << ',' << fmt_double(series[k]);
      f << '\n';
    }
    res["files"] = {"mean_en.csv"};
  }
  print_json(ctx.out, res);
  return kExitOk;
}

inline int run_simulate(const SimulateOptions& o, Context& ctx) {
  if (o.force) return run_force(o, ctx);
  if (o.out.empty()) throw InvalidInput("--out <directory> is required");
  const ProcessConfig c = o.proc.config(ctx.seed);
  validate(c);
  const int p = c.x0.dim();
  struct PathData {
    std::vector<std::vector<double>> en;       // [n-1][k]
    std::vector<std::vector<double>> entries;  // [entry][k]
    double clipped = 0;
  };
  const bool full = o.full_state;
  const auto data = run_paths(c, ctx.threads, [&](const PathSample& path) {
    PathData d;
    d.en.assign(static_cast<std::size_t>(p), {});
    if (full) d.entries.assign(static_cast<std::size_t>(p * (p + 1) / 2), {});
    for (const auto& x : path.states) {
      const auto e = elementary_symmetric(x);
      for (int n = 1; n <= p; ++n) d.en[static_cast<std::size_t>(n - 1)].push_back(e[n]);
      if (full) {
        const auto v = upper_triangle(x.matrix());
        for (std::size_t i = 0; i < v.size(); ++i) d.entries[i].push_back(v[i]);
      }
    }
    d.clipped = path.clipped_mass;
    return d;
  });
  const int steps = grid_steps(c.horizon, c.dt);
  std::filesystem::create_directories(o.out);
  std::string header = "path";
  for (int k = 0; k <= steps; ++k) header += ",t" + std::to_string(k);
  auto write = [&](const std::string& name, auto select) {
    std::ofstream f(std::filesystem::path(o.out) / name);
    if (!f) throw InvalidInput("cannot write into '" + o.out + "'");
    f << csv_metadata(ctx.metadata) << "# dt=" << fmt_double(c.dt) << '\n' << header << '\n';
    for (std::size_t i = 0; i < data.size(); ++i) {
      f << i;
      for (double v : select(data[i])) f << ',' << fmt_double(v);
      f << '\n';
    }
  };
  json files = json::array();
  for (int n = 1; n <= p; ++n) {
    const std::string name = "e" + std::to_string(n) + ".csv";
    write(name, [n](const PathData& d) -> const std::vector<double>& {
      return d.en[static_cast<std::size_t>(n - 1)];
    });
    files.push_back(name);
  }
  if (full) {
    std::size_t idx = 0;
    for (int i = 0; i < p; ++i)
      for (int j = i; j < p; ++j, ++idx) {
        const std::string name = "x" + std::to_string(i + 1) + "_" + std::to_string(j + 1) + ".csv";
        write(name, [idx](const PathData& d) -> const std::vector<double>& { return d.entries[idx]; });
        files.push_back(name);
      }
  }
  json clipped = json::array();
  for (const auto& d : data) clipped.push_back(d.clipped);
  const json summary = {{"metadata", ctx.metadata}, {"scheme", to_string(c.scheme)},
                        {"paths", c.n_paths},       {"steps", steps},
                        {"dt", c.dt},               {"files", files},
                        {"clipped_mass", clipped}};
  std::ofstream(std::filesystem::path(o.out) / "summary.json") << summary.dump(2) << '\n';
  print_json(ctx.out, summary);
  return kExitOk;
}

struct VerifyOptions {
  SamplerOptions s;
  ProcessOptions proc;
  std::string probes;
  double z_max = 4.0;
  std::vector<double> theta;
  double rank_tol = kDefaultTolerances.rank_rel;
  double max_rel = 0.10;
  double drift_rel = 0.05;
};

inline int run_verify_laplace(const VerifyOptions& o, Context& ctx) {
  const WishartParams params = o.s.params();
  const SamplerPlan plan = o.s.plan(params);
  const int p = params.dim();
  const auto grid = o.probes.empty() ? standard_probe_grid(p, ctx.seed) : io::load_probes(o.probes);
  for (const auto& u : grid) {
    if (u.rows() != p) throw DimensionMismatch("probe dimension differs from p");
  }
  const SampleBatch batch = draw_batch(params, plan, o.s.n, ctx.seed, ctx.threads);
  const auto reports = mc_laplace(batch, grid);
  json arr = json::array();
  for (const auto& r : reports) {
    arr.push_back({{"u", matrix_json(r.u)},
                   {"closed_form", r.closed_form},
                   {"mc_estimate", r.mc_estimate},
                   {"stderr", r.stderr},
                   {"z_score", r.z_score},
                   {"pass", std::abs(r.z_score) <= o.z_max}});
  }
  bool pass = laplace_reports_pass(reports, o.z_max);
  json res = {{"metadata", ctx.metadata}, {"check", "laplace"}, {"method", to_string(plan.kind)},
              {"z_max", o.z_max},         {"reports", arr}};
  if (!o.theta.empty()) {
    if (p != 1) throw InvalidInput("--theta (characteristic function) is supported for p = 1 only");
    json cf = json::array();
    for (double th : o.theta) {
      const auto closed = laplace_closed_form_p1(params, std::complex<double>(0, -th));
      CompensatedSum sr, si, sr2, si2;
      for (const auto& x : batch.samples) {
        const double v = x.matrix()(0, 0);
        sr.add(std::cos(th * v));
        si.add(std::sin(th * v));
      }
      const double n = static_cast<double>(batch.samples.size());
      const double mr = sr.value() / n, mi = si.value() / n;
      for (const auto& x : batch.samples) {
        const double v = x.matrix()(0, 0);
        sr2.add((std::cos(th * v) - mr) * (std::cos(th * v) - mr));
        si2.add((std::sin(th * v) - mi) * (std::sin(th * v) - mi));
      }
      const double er = std::sqrt(sr2.value() / (n - 1) / n), ei = std::sqrt(si2.value() / (n - 1) / n);
      const double zr = z_score(mr, closed.real(), er), zi = z_score(mi, closed.imag(), ei);
      const bool ok = std::abs(zr) <= o.z_max && std::abs(zi) <= o.z_max;
      pass = pass && ok;
      cf.push_back({{"theta", th},
                    {"closed_form", {closed.real(), closed.imag()}},
                    {"mc_estimate", {mr, mi}},
                    {"z_score", {zr, zi}},
                    {"pass", ok}});
    }
    res["characteristic"] = cf;
  }
  res["pass"] = pass;
  print_json(ctx.out, res);
  return pass ? kExitOk : kExitCheckFailed;
}

inline int run_verify_support(const VerifyOptions& o, Context& ctx) {
  const WishartParams params = o.s.params();
  const SamplerPlan plan = o.s.plan(params);
  const auto two_beta = detail::as_integer(2 * params.beta(), kDefaultTolerances.integrality);
  if (!two_beta || *two_beta > params.dim()) {
    throw InvalidInput("support check needs 2*beta to be an integer <= p");
  }
  const SampleBatch batch = draw_batch(params, plan, o.s.n, ctx.seed, ctx.threads);
  const auto rep = check_rank_support(batch, static_cast<int>(*two_beta), o.rank_tol);
  const bool pass = rep.fraction_within == 1.0;
  print_json(ctx.out, {{"metadata", ctx.metadata},
                       {"check", "support"},
                       {"method", to_string(plan.kind)},
                       {"threshold_rank", rep.threshold_rank},
                       {"fraction_within", rep.fraction_within},
                       {"tol", rep.tol},
                       {"pass", pass}});
  return pass ? kExitOk : kExitCheckFailed;
}

inline int run_verify_qvar(const VerifyOptions& o, Context& ctx) {
  const ProcessConfig c = o.proc.config(ctx.seed);
  const int p = c.x0.dim();
  struct PerPath {
    QvarReport qv;
    std::vector<BracketReport> br;
  };
  const auto per = run_paths(c, ctx.threads, [p](const PathSample& path) {
    PerPath r{check_qvar(path), {}};
    for (int n = 1; n <= p; ++n)
      for (int m = n; m <= p; ++m) r.br.push_back(check_en_brackets(path, n, m));
    return r;
  });
  std::vector<QvarReport> qvs;
  for (const auto& r : per) qvs.push_back(r.qv);
  const QvarReport qv = aggregate_qvar(qvs);
  bool pass = qv.mean_rel_error <= o.max_rel;
  json pairs = json::array();
  for (const auto& q : qv.pairs) {
    pairs.push_back({{"entries", {q.i + 1, q.j + 1, q.k + 1, q.l + 1}},
                     {"realized", q.realized},
                     {"predicted", q.predicted},
                     {"rel_error", q.rel_error}});
  }
  json brackets = json::array();
  for (std::size_t b = 0; b < per.front().br.size(); ++b) {
    std::vector<BracketReport> col;
    for (const auto& r : per) col.push_back(r.br[b]);
    const BracketReport agg = aggregate_brackets(col);
    const bool ok = agg.rel_error <= o.max_rel;
    pass = pass && ok;
    brackets.push_back({{"n", agg.n},
                        {"m", agg.m},
                        {"realized", agg.realized},
                        {"predicted", agg.predicted},
                        {"rel_error", agg.rel_error},
                        {"pass", ok}});
  }
  print_json(ctx.out, {{"metadata", ctx.metadata},
                       {"check", "qvar"},
                       {"grid_too_coarse", qv.grid_too_coarse},
                       {"mean_rel_error", qv.mean_rel_error},
                       {"max_rel", o.max_rel},
                       {"pairs", pairs},
                       {"brackets", brackets},
                       {"pass", pass}});
  return pass ? kExitOk : kExitCheckFailed;
}

inline int run_verify_drift(const VerifyOptions& o, Context& ctx) {
  const ProcessConfig c = o.proc.config(ctx.seed);
  const int p = c.x0.dim();
  const auto trs = run_paths(c, ctx.threads, [](const PathSample& path) { return en_trajectory(path); });
  const Rational alpha_exact = parse_rational(o.proc.alpha);
  const auto polys = moment_polynomials(p, alpha_exact, esp_snapshot(c.x0));
  const Rational t_exact = rational_from_double(c.horizon);
  bool pass = true;
  json arr = json::array();
  for (int n = 1; n <= p; ++n) {
    const DriftReport d = check_en_drift(std::span<const EnTrajectory>(trs), n, c.alpha);
    CompensatedSum s, sq;
    for (const auto& tr : trs) s.add(tr.values.back()[static_cast<std::size_t>(n - 1)]);
    const double np = static_cast<double>(trs.size());
    const double mean = s.value() / np;
    for (const auto& tr : trs) {
      const double v = tr.values.back()[static_cast<std::size_t>(n - 1)] - mean;
      sq.add(v * v);
    }
    const double se = trs.size() > 1 ? std::sqrt(sq.value() / (np - 1) / np) : 0.0;
    const double exact = to_double(polys[static_cast<std::size_t>(n - 1)].at(t_exact));
    const double tol = std::max(4 * se, o.drift_rel * std::abs(exact));
    const bool ok = std::abs(mean - exact) <= tol;
    pass = pass && ok;
    arr.push_back({{"n", n},
                   {"mean_at_T", mean},
                   {"exact_at_T", exact},
                   {"stderr", se},
                   {"observed_increment", d.observed_increment},
                   {"integrated_drift", d.predicted_increment},
                   {"observed_slope", d.observed_slope},
                   {"predicted_slope", d.predicted_slope},
                   {"rel_error", d.rel_error},
                   {"pass", ok}});
  }
  print_json(ctx.out, {{"metadata", ctx.metadata}, {"check", "drift"}, {"reports", arr}, {"pass", pass}});
  return pass ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------
// dispatch

inline std::string params_hash(const CLI::App* sub) {
  static const std::vector<std::string> skip{"--seed", "--out", "--format", "--help", "--threads", "--config"};
  std::vector<std::string> parts;
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->count() == 0) continue;
    const std::string name = opt->get_name();
    if (std::find(skip.begin(), skip.end(), name) != skip.end()) continue;
    std::string v = name + "=";
    for (const auto& r : opt->results()) v += r + ";";
    parts.push_back(v);
  }
  std::sort(parts.begin(), parts.end());
  std::string all;
  for (const auto& s : parts) all += s + "\n";
  return hex64(fnv1a(all));
}

inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Wishart laws and processes: admissibility, sampling, simulation and checks",
               "wishart_lab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(WISHART_VERSION));
  unsigned threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = all cores)")->capture_default_str();
  app.add_option("--config", "TOML or JSON file with option values (flags win)");

  std::uint64_t seed = 0;
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "64-bit seed")->envname("WISHART_LAB_SEED")->capture_default_str();
  };

  CheckOptions chk;
  auto* check = app.add_subcommand("check", "decide membership of a parameter set");
  check->add_option("--p", chk.p, "dimension")->required()->check(CLI::Range(1, 64));
  check->add_option("--mode", chk.mode, "ncgs, gindikin, sde or semigroup")
      ->check(CLI::IsMember({"ncgs", "gindikin", "sde", "semigroup"}))
      ->capture_default_str();
  check->add_option("--beta", chk.beta, "shape (ncgs, gindikin)");
  check->add_option("--alpha", chk.alpha, "drift (sde, semigroup)");
  check->add_option("--rank-omega", chk.rank_omega, "rank of omega");
  check->add_option("--omega", chk.omega, "omega matrix file");
  check->add_option("--rank-x0", chk.rank_x0, "rank of x0");
  check->add_option("--x0", chk.x0, "x0 matrix file");
  check->add_option("--k", chk.k, "rank-cone index (semigroup)");

  SampleOptions smp;
  auto* sample = app.add_subcommand("sample", "draw from Gamma_p(beta, omega; Sigma)");
  smp.s.add(sample, 1000);
  add_seed(sample);
  sample->add_option("--out", smp.out, "output path or '-'")->capture_default_str();
  sample->add_option("--format", smp.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "simulate Wishart SDE paths");
  sim.proc.add(simulate, 1);
  add_seed(simulate);
  simulate->add_option("--out", sim.out, "output directory");
  simulate->add_flag("--full-state", sim.full_state, "also write entry trajectories");
  simulate->add_flag("--force", sim.force, "diagnostic run for inadmissible parameters (no projection)");

  MomentOptions mom;
  auto* moments = app.add_subcommand("moments", "exact polynomials E[e_n(X_t)]");
  auto* certify = app.add_subcommand("certify", "non-existence certificate from the moment polynomials");
  for (auto* sub : {moments, certify}) {
    sub->add_option("--p", mom.p, "dimension")->check(CLI::Range(1, 20));
    sub->add_option("--alpha", mom.alpha, "drift, decimal or rational 'a/b'")->required();
    sub->add_option("--x0", mom.x0, "starting point: matrix file or 'zero'")->capture_default_str();
  }

  VerifyOptions ver_l, ver_s, ver_q, ver_d;
  auto* verify = app.add_subcommand("verify", "Monte Carlo checks against closed forms");
  verify->require_subcommand(1);
  auto* v_laplace = verify->add_subcommand("laplace", "MC Laplace transform vs closed form");
  ver_l.s.add(v_laplace, 100000);
  add_seed(v_laplace);
  v_laplace->add_option("--probes", ver_l.probes, "JSON array of probe matrices");
  v_laplace->add_option("--z", ver_l.z_max, "z-score threshold")->capture_default_str();
  v_laplace->add_option("--theta", ver_l.theta, "p = 1 characteristic-function arguments");
  auto* v_support = verify->add_subcommand("support", "rank support of the samples");
  ver_s.s.add(v_support, 10000);
  add_seed(v_support);
  v_support->add_option("--tol", ver_s.rank_tol, "relative rank tolerance")->capture_default_str();
  auto* v_qvar = verify->add_subcommand("qvar", "realized covariation and e_n brackets");
  ver_q.proc.add(v_qvar, 1000);
  add_seed(v_qvar);
  v_qvar->add_option("--max-rel", ver_q.max_rel, "relative error threshold")->capture_default_str();
  auto* v_drift = verify->add_subcommand("drift", "mean e_n(X_T) vs exact moment polynomials");
  ver_d.proc.add(v_drift, 10000);
  add_seed(v_drift);
  v_drift->add_option("--rel", ver_d.drift_rel, "relative tolerance")->capture_default_str();

  // Active subcommand path, needed to pick the config section.
  std::vector<std::string> path;
  {
    const CLI::App* cur = &app;
    for (const auto& a : args) {
      if (a.rfind("-", 0) == 0) continue;
      const auto* next = cur->get_subcommand_no_throw(a);
      if (next != nullptr) {
        path.push_back(a);
        cur = next;
      }
    }
  }

  try {
    merge_config(args, path);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code != 0) err << app.help();
    return code == 0 ? kExitOk : kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }

  const CLI::App* leaf = &app;
  while (!leaf->get_subcommands().empty()) leaf = leaf->get_subcommands().front();
  std::string cmd;
  for (const auto& s : path) cmd += (cmd.empty() ? "" : " ") + s;

  Context ctx{out, err, seed, threads, {}};
  ctx.metadata = {{"version", WISHART_VERSION},
                  {"subcommand", cmd},
                  {"seed", seed},
                  {"params_hash", params_hash(leaf)}};
  try {
    if (check->parsed()) return run_check(chk, ctx);
    if (sample->parsed()) return run_sample(smp, ctx);
    if (simulate->parsed()) return run_simulate(sim, ctx);
    if (moments->parsed()) return run_moments(mom, ctx);
    if (certify->parsed()) return run_certify(mom, ctx);
    if (v_laplace->parsed()) return run_verify_laplace(ver_l, ctx);
    if (v_support->parsed()) return run_verify_support(ver_s, ctx);
    if (v_qvar->parsed()) return run_verify_qvar(ver_q, ctx);
    if (v_drift->parsed()) return run_verify_drift(ver_d, ctx);
  } catch (const InadmissibleParams& e) {
    json res = verdict_json(e.verdict());
    res["metadata"] = ctx.metadata;
    print_json(out, res);
    return kExitInadmissible;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  err << app.help();
  return kExitError;
}

}  // namespace wishart::cli
