#include "quantis/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <variant>

#include "quantis/basis.hpp"
#include "quantis/density.hpp"
#include "quantis/errors.hpp"
#include "quantis/funcquant.hpp"
#include "quantis/grid1d.hpp"
#include "quantis/gridnd.hpp"
#include "quantis/io.hpp"
#include "quantis/isopt_finite.hpp"
#include "quantis/isopt_path.hpp"
#include "quantis/mc_engine.hpp"
#include "quantis/models.hpp"
#include "quantis/parallel.hpp"

namespace quantis {
namespace {

const std::map<std::string, std::set<std::string>>& vocabulary() {
  static const std::map<std::string, std::set<std::string>> kVocab = {
      {"model", {"kind", "d", "r", "T", "S0", "sigma", "lambda", "alpha", "beta"}},
      {"payoff", {"kind", "K", "w", "hR", "C", "p", "L"}},
      {"quantization",
       {"N", "d_N", "decomposition", "n_samples", "sweeps", "rk_stages",
        "quad_cells"}},
      {"basis", {"kind", "m"}},
      {"optimizer", {"tol", "max_iter", "theta"}},
      {"mc", {"n", "M", "seed"}},
      {"output", {"path"}},
  };
  return kVocab;
}

void check_key(const std::string& section, const std::string& key) {
  auto sec = vocabulary().find(section);
  if (sec == vocabulary().end()) {
    throw ConfigError("unknown config section [" + section + "]");
  }
  if (sec->second.count(key) == 0) {
    throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
  }
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(s);
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

std::vector<double> parse_list(const std::string& s, const std::string& where) {
  std::vector<double> out;
  for (const auto& tok : split(s, ',')) out.push_back(parse_double(tok, where));
  if (out.empty()) throw ConfigError(where + ": empty list");
  return out;
}

std::vector<int> parse_int_list(const std::string& s, const std::string& where) {
  std::vector<int> out;
  for (const auto& tok : split(s, ',')) {
    out.push_back(static_cast<int>(parse_int(tok, where)));
  }
  if (out.empty()) throw ConfigError(where + ": empty list");
  return out;
}

// A scalar stands for d equal components.
std::vector<double> broadcast(std::vector<double> v, int d,
                              const std::string& where) {
  if (static_cast<int>(v.size()) == d) return v;
  if (v.size() == 1) return std::vector<double>(static_cast<std::size_t>(d), v[0]);
  throw ConfigError(where + ": expected 1 or " + std::to_string(d) +
                    " components, got " + std::to_string(v.size()));
}

std::string fmt_short(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

std::string fmt_name(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", x);
  return buf;
}

// ---- typed readers ------------------------------------------------------

double get_double(const RunConfig& c, const std::string& sec,
                  const std::string& key) {
  return parse_double(c.get(sec, key), "[" + sec + "] " + key);
}

double get_double_or(const RunConfig& c, const std::string& sec,
                     const std::string& key, double fallback) {
  if (!c.has(sec, key)) return fallback;
  return get_double(c, sec, key);
}

long long get_int(const RunConfig& c, const std::string& sec,
                  const std::string& key) {
  return parse_int(c.get(sec, key), "[" + sec + "] " + key);
}

long long get_int_or(const RunConfig& c, const std::string& sec,
                     const std::string& key, long long fallback) {
  if (!c.has(sec, key)) return fallback;
  return get_int(c, sec, key);
}

// ---- domain objects from config -----------------------------------------

int model_dim_key(const RunConfig& c) {
  long long d = get_int_or(c, "model", "d", 0);
  if (d == 0) {
    // Infer from the initial-value list when d is not given.
    d = static_cast<long long>(
        parse_list(c.get("model", "S0"), "[model] S0").size());
  }
  if (d < 1 || d > 64) throw ConfigError("[model] d: out of range");
  return static_cast<int>(d);
}

ModelSpec model_from(const RunConfig& c) {
  const std::string kind = c.get("model", "kind");
  const double r = get_double(c, "model", "r");
  if (kind == "black-scholes") {
    const int d = model_dim_key(c);
    BlackScholesModel m;
    m.r = r;
    m.s0 = broadcast(parse_list(c.get("model", "S0"), "[model] S0"), d,
                     "[model] S0");
    m.sigma = broadcast(parse_list(c.get("model", "sigma"), "[model] sigma"), d,
                        "[model] sigma");
    ModelSpec spec{m};
    validate_model(spec);
    return spec;
  }
  if (kind == "schwartz") {
    const int d = model_dim_key(c);
    SchwartzModel m;
    m.r = r;
    m.s0 = broadcast(parse_list(c.get("model", "S0"), "[model] S0"), d,
                     "[model] S0");
    m.sigma = broadcast(parse_list(c.get("model", "sigma"), "[model] sigma"), d,
                        "[model] sigma");
    m.theta = broadcast(parse_list(c.get("model", "lambda"), "[model] lambda"),
                        d, "[model] lambda");
    const std::string alpha = c.get_or("model", "alpha", "auto");
    if (alpha == "auto") {
      m.alpha.resize(m.s0.size());
      for (std::size_t j = 0; j < m.s0.size(); ++j) {
        m.alpha[j] = std::log(m.s0[j]);
      }
    } else {
      m.alpha = broadcast(parse_list(alpha, "[model] alpha"), d, "[model] alpha");
    }
    ModelSpec spec{m};
    validate_model(spec);
    return spec;
  }
  if (kind == "local-vol") {
    LocalVolModel m;
    m.r = r;
    m.x0 = get_double(c, "model", "S0");
    m.sigma_tilde = get_double(c, "model", "sigma");
    m.beta = get_double(c, "model", "beta");
    ModelSpec spec{m};
    validate_model(spec);
    return spec;
  }
  throw ConfigError("[model] kind: expected black-scholes, schwartz, or "
                    "local-vol, got '" + kind + "'");
}

PayoffSpec payoff_from(const RunConfig& c, int dim) {
  const std::string kind = c.get("payoff", "kind");
  PayoffSpec spec;
  if (kind == "basket") {
    BasketPayoff p;
    p.strike = get_double(c, "payoff", "K");
    const std::string w = c.get_or("payoff", "w", "equal");
    if (w == "equal") {
      p.weights.assign(static_cast<std::size_t>(dim), 1.0 / dim);
    } else {
      p.weights = broadcast(parse_list(w, "[payoff] w"), dim, "[payoff] w");
    }
    spec = p;
  } else if (kind == "spark") {
    SparkSpreadPayoff p;
    p.heat_rate = get_double(c, "payoff", "hR");
    p.cost = get_double(c, "payoff", "C");
    spec = p;
  } else if (kind == "asian") {
    AsianPayoff p;
    p.strike = get_double(c, "payoff", "K");
    p.observations = static_cast<int>(get_int(c, "payoff", "p"));
    spec = p;
  } else if (kind == "dic") {
    DownInCallPayoff p;
    p.strike = get_double(c, "payoff", "K");
    p.barrier = get_double(c, "payoff", "L");
    spec = p;
  } else {
    throw ConfigError("[payoff] kind: expected basket, spark, asian, or dic, "
                      "got '" + kind + "'");
  }
  validate_payoff(spec, dim);
  return spec;
}

NewtonOptions newton_options(const RunConfig& c) {
  NewtonOptions opts;
  opts.tol = get_double_or(c, "optimizer", "tol", opts.tol);
  opts.max_iter =
      static_cast<int>(get_int_or(c, "optimizer", "max_iter", opts.max_iter));
  return opts;
}

std::uint64_t seed_from(const RunConfig& c) {
  return static_cast<std::uint64_t>(get_int_or(c, "mc", "seed", 1));
}

std::vector<int> decomposition_from(const RunConfig& c) {
  if (c.has("quantization", "decomposition")) {
    return parse_int_list(c.get("quantization", "decomposition"),
                          "[quantization] decomposition");
  }
  const int budget = static_cast<int>(get_int(c, "quantization", "d_N"));
  return optimal_decomposition(budget);
}

// The exact terminal pipeline covers terminal payoffs of models with a
// closed-form time-T law; everything else runs on quantized paths.
bool finite_route(const ModelSpec& model, const PayoffSpec& payoff) {
  return !payoff_on_paths(payoff) &&
         !std::holds_alternative<LocalVolModel>(model);
}

// ---- caches --------------------------------------------------------------

std::string decomposition_tag(const std::vector<int>& decomposition) {
  std::string tag;
  for (std::size_t l = 0; l < decomposition.size(); ++l) {
    if (l) tag += 'x';
    tag += std::to_string(decomposition[l]);
  }
  return tag;
}

void ensure_parent_dir(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

std::string grid_cache_path(const std::string& cache_dir, int d, int n,
                            std::uint64_t seed) {
  if (d == 1) return cache_dir + "/grid-1d-" + std::to_string(n) + ".txt";
  return cache_dir + "/grid-" + std::to_string(d) + "d-" + std::to_string(n) +
         "-s" + std::to_string(seed) + ".txt";
}

// Loads the cached grid when present, otherwise builds and caches it. The
// one-dimensional grid is deterministic, so its file name carries no seed.
GridND ensure_grid(const std::string& cache_dir, int d, int n,
                   std::uint64_t seed, const GridNDOptions& opts) {
  const std::string path = grid_cache_path(cache_dir, d, n, seed);
  if (std::filesystem::exists(path)) {
    if (d == 1) return grid_from_1d(load_grid_1d(path));
    return load_grid_nd(path);
  }
  ensure_parent_dir(path);
  if (d == 1) {
    std::cerr << "notice: grid cache " << path << " missing; building (N="
              << n << ")\n";
    Grid1D g = build_grid_1d(n);
    save_grid_1d(g, path);
    return grid_from_1d(g);
  }
  std::cerr << "notice: grid cache " << path << " missing; building (d=" << d
            << ", N=" << n << ", seed=" << seed << ", samples="
            << opts.n_samples << ", sweeps=" << opts.sweeps << ")\n";
  GridND g = build_grid_nd(d, n, seed, opts);
  save_grid_nd(g, path);
  return g;
}

GridNDOptions grid_options(const RunConfig& c) {
  GridNDOptions opts;
  opts.n_samples = static_cast<std::size_t>(get_int_or(
      c, "quantization", "n_samples",
      static_cast<long long>(opts.n_samples)));
  opts.sweeps =
      static_cast<int>(get_int_or(c, "quantization", "sweeps", opts.sweeps));
  return opts;
}

std::string quantizer_cache_path(const std::string& cache_dir,
                                 const ModelSpec& model, double T,
                                 const std::vector<int>& decomposition) {
  std::string name = "quantizer-";
  if (const auto* m = std::get_if<SchwartzModel>(&model)) {
    name += "ou-l" + fmt_name(m->theta[0]) + "-s" + fmt_name(m->sigma[0]) + "-";
  } else {
    name += "brownian-";
  }
  name += "T" + fmt_name(T) + "-" + decomposition_tag(decomposition) + ".txt";
  return cache_dir + "/" + name;
}

ProductQuantizer ensure_quantizer(const std::string& cache_dir,
                                  const ModelSpec& model, double T,
                                  const std::vector<int>& decomposition) {
  const std::string path = quantizer_cache_path(cache_dir, model, T,
                                                decomposition);
  if (std::filesystem::exists(path)) {
    if (const auto* m = std::get_if<SchwartzModel>(&model)) {
      return load_quantizer(path, ProcessKind::ornstein_uhlenbeck, m->theta[0],
                            m->sigma[0]);
    }
    return load_quantizer(path, ProcessKind::brownian);
  }
  ensure_parent_dir(path);
  std::cerr << "notice: quantizer cache " << path
            << " missing; building (levels " << decomposition_tag(decomposition)
            << ")\n";
  ProductQuantizer q = model_quantizer(model, T, decomposition);
  save_quantizer(q, path);
  return q;
}

// ---- pipelines -----------------------------------------------------------

struct FiniteRun {
  ModelSpec model;
  PayoffSpec payoff;
  double T = 0.0;
  NewtonReport report;
};

FiniteRun optimize_finite(const RunConfig& c) {
  FiniteRun run;
  run.model = model_from(c);
  const int d = model_dim(run.model);
  run.payoff = payoff_from(c, d);
  run.T = get_double(c, "model", "T");
  const int n = static_cast<int>(get_int_or(c, "quantization", "N", 200));
  GridND grid =
      ensure_grid(c.cache_dir, d, n, seed_from(c), grid_options(c));
  FiniteObjective objective(grid, finite_payoff(run.model, run.payoff, run.T),
                            gaussian(d));
  run.report = newton_optimize(objective, newton_options(c));
  return run;
}

struct PathRun {
  ModelSpec model;
  PayoffSpec payoff;
  double T = 0.0;
  BasisSpec basis;
  QuantizedPhiTable table;
  NewtonReport report;

  ThetaPath theta() const { return ThetaPath{basis, report.theta}; }
};

// The quantized ensemble is the expensive part of the path pipeline and is
// shared across basis choices; build it once per (model, payoff, grid).
struct PathWorkbench {
  ModelSpec model;
  PayoffSpec payoff;
  double T = 0.0;
  QuantizedEnsemble ensemble;
  PathPayoffFn payoff_fn;
  int quad_cells = 2048;
};

PathWorkbench path_workbench(const RunConfig& c) {
  PathWorkbench wb;
  wb.model = model_from(c);
  wb.payoff = payoff_from(c, model_dim(wb.model));
  wb.T = get_double(c, "model", "T");
  const int steps = static_cast<int>(get_int_or(c, "mc", "M", 100));
  const int rk =
      static_cast<int>(get_int_or(c, "quantization", "rk_stages", 6));
  wb.quad_cells =
      static_cast<int>(get_int_or(c, "quantization", "quad_cells", 2048));
  const std::vector<int> decomposition = decomposition_from(c);
  ProductQuantizer q =
      ensure_quantizer(c.cache_dir, wb.model, wb.T, decomposition);
  wb.ensemble =
      quantized_spot_ensemble(wb.model, q, uniform_time_grid(wb.T, steps), rk);
  wb.payoff_fn = path_payoff(wb.model, wb.payoff);
  return wb;
}

PathRun optimize_path_row(const PathWorkbench& wb, BasisKind kind, int m,
                          const NewtonOptions& opts) {
  PathRun run;
  run.model = wb.model;
  run.payoff = wb.payoff;
  run.T = wb.T;
  run.basis = make_basis(kind, m, wb.T);
  run.table =
      build_phi_table(wb.ensemble, run.basis, wb.payoff_fn, wb.quad_cells);
  run.report = newton_optimize_path(run.table, opts);
  return run;
}

PathRun optimize_path(const RunConfig& c) {
  PathWorkbench wb = path_workbench(c);
  const BasisKind kind = basis_kind_from_string(c.get("basis", "kind"));
  const int m = static_cast<int>(get_int(c, "basis", "m"));
  return optimize_path_row(wb, kind, m, newton_options(c));
}

void require_converged(const NewtonReport& report) {
  if (!report.converged) {
    throw ConvergenceError("optimization stopped before reaching tolerance",
                           report.final_grad_norm);
  }
}

// ---- commands ------------------------------------------------------------

std::string out_path(const RunConfig& c, const std::string& fallback) {
  return c.get_or("output", "path", fallback);
}

std::ofstream open_out(const std::string& path) {
  ensure_parent_dir(path);
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file '" + path + "'");
  return out;
}

void run_build_grid(const RunConfig& c) {
  const int d = static_cast<int>(get_int_or(c, "model", "d", 1));
  const int n = static_cast<int>(get_int_or(c, "quantization", "N", 200));
  if (d < 1) throw ConfigError("[model] d: out of range");
  const std::uint64_t seed = seed_from(c);
  std::string path = grid_cache_path(c.cache_dir, d, n, seed);
  if (c.has("output", "path")) path = c.get("output", "path");
  ensure_parent_dir(path);
  if (d == 1) {
    Grid1D g = build_grid_1d(n);
    save_grid_1d(g, path);
    std::cout << "wrote " << path << " (N=" << n << ", residual "
              << fmt_short(g.build_residual) << ")\n";
    return;
  }
  GridND g = build_grid_nd(d, n, seed, grid_options(c));
  save_grid_nd(g, path);
  std::cout << "wrote " << path << " (d=" << d << ", N=" << n
            << ", distortion " << fmt_short(g.distortion2_estimate) << ")\n";
}

void run_build_quantizer(const RunConfig& c) {
  const ModelSpec model = model_from(c);
  const double T = get_double(c, "model", "T");
  const std::vector<int> decomposition = decomposition_from(c);
  std::string path = quantizer_cache_path(c.cache_dir, model, T, decomposition);
  if (c.has("output", "path")) path = c.get("output", "path");
  ensure_parent_dir(path);
  ProductQuantizer q = model_quantizer(model, T, decomposition);
  save_quantizer(q, path);
  std::cout << "wrote " << path << " (" << q.size() << " paths, levels "
            << decomposition_tag(decomposition) << ", distortion "
            << fmt_short(q.distortion2) << ")\n";
}

void print_report(const NewtonReport& report) {
  std::cout << "converged: " << (report.converged ? "yes" : "no") << "\n"
            << "iterations: " << report.iterations << "\n"
            << "grad_norm: " << fmt_short(report.final_grad_norm) << "\n"
            << "objective: " << fmt_short(report.objective_value) << "\n";
  std::cout << "theta:";
  for (int j = 0; j < report.theta.size(); ++j) {
    std::cout << ' ' << fmt_short(report.theta[j]);
  }
  std::cout << "\n";
}

void run_optimize(const RunConfig& c) {
  const ModelSpec model = model_from(c);
  const PayoffSpec payoff = payoff_from(c, model_dim(model));
  const std::string path = out_path(c, "theta.csv");
  if (finite_route(model, payoff)) {
    FiniteRun run = optimize_finite(c);
    require_converged(run.report);
    print_report(run.report);
    std::ofstream out = open_out(path);
    out << "i,theta_i\n";
    for (int j = 0; j < run.report.theta.size(); ++j) {
      out << j << ',' << fmt17(run.report.theta[j]) << "\n";
    }
  } else {
    PathRun run = optimize_path(c);
    require_converged(run.report);
    print_report(run.report);
    const int steps = static_cast<int>(get_int_or(c, "mc", "M", 100));
    write_theta_csv(run.theta(), uniform_time_grid(run.T, steps), path);
  }
  std::cout << "wrote " << path << "\n";
}

// Optional [optimizer] theta override: price with a fixed translation/drift
// instead of running the optimizer. A scalar broadcasts.
bool theta_override(const RunConfig& c, int size, Eigen::VectorXd* out) {
  if (!c.has("optimizer", "theta")) return false;
  std::vector<double> v = broadcast(
      parse_list(c.get("optimizer", "theta"), "[optimizer] theta"), size,
      "[optimizer] theta");
  out->resize(size);
  for (int j = 0; j < size; ++j) (*out)[j] = v[static_cast<std::size_t>(j)];
  return true;
}

std::string theta_ref_finite(const Eigen::VectorXd& theta) {
  std::string s = "translation(";
  for (int j = 0; j < theta.size(); ++j) {
    if (j) s += ';';
    s += fmt_short(theta[j]);
  }
  return s + ")";
}

std::string theta_ref_path(const ThetaPath& theta) {
  return "drift(" + to_string(theta.basis.kind) + ";m=" +
         std::to_string(theta.basis.m) + ")";
}

void run_price(const RunConfig& c) {
  const ModelSpec model = model_from(c);
  const PayoffSpec payoff = payoff_from(c, model_dim(model));
  const double T = get_double(c, "model", "T");
  const long long n = get_int_or(c, "mc", "n", 100000);
  const int steps = static_cast<int>(get_int_or(c, "mc", "M", 100));
  const std::uint64_t seed = seed_from(c);
  const std::string config_id = c.table.empty() ? "custom" : c.table;

  std::variant<ThetaFinite, ThetaPath> theta;
  std::string theta_ref;
  if (finite_route(model, payoff)) {
    Eigen::VectorXd fixed;
    if (theta_override(c, model_dim(model), &fixed)) {
      theta = ThetaFinite{fixed};
    } else {
      FiniteRun run = optimize_finite(c);
      require_converged(run.report);
      theta = ThetaFinite{run.report.theta};
    }
    theta_ref = theta_ref_finite(std::get<ThetaFinite>(theta));
  } else {
    const BasisKind kind = basis_kind_from_string(c.get("basis", "kind"));
    const int m = static_cast<int>(get_int(c, "basis", "m"));
    Eigen::VectorXd fixed;
    if (theta_override(c, m, &fixed)) {
      theta = ThetaPath{make_basis(kind, m, T), fixed};
    } else {
      PathRun run = optimize_path(c);
      require_converged(run.report);
      theta = run.theta();
    }
    theta_ref = theta_ref_path(std::get<ThetaPath>(theta));
  }

  CompareReport rep = compare(model, payoff, theta, T, n, seed, steps);
  const std::string path = out_path(c, "price.csv");
  std::ofstream out = open_out(path);
  out << "config,kind,price,variance,std_error,n,seed,theta\n";
  out << mc_csv_row(config_id, "crude", rep.crude, "none") << "\n";
  out << mc_csv_row(config_id, "qis", rep.qis, theta_ref) << "\n";
  std::cout << "variance ratio: " << fmt_short(rep.variance_ratio) << "\n";
  std::cout << "wrote " << path << "\n";
}

// ---- table command -------------------------------------------------------

struct FunctionalRow {
  BasisKind kind;
  int m;
};

const std::vector<FunctionalRow>& functional_rows() {
  static const std::vector<FunctionalRow> kRows = {
      {BasisKind::constant, 1},        {BasisKind::shifted_legendre, 2},
      {BasisKind::shifted_legendre, 4}, {BasisKind::shifted_legendre, 8},
      {BasisKind::karhunen_loeve, 2},  {BasisKind::karhunen_loeve, 4},
      {BasisKind::karhunen_loeve, 8},  {BasisKind::haar, 2},
      {BasisKind::haar, 4},            {BasisKind::haar, 8},
  };
  return kRows;
}

void run_table_basket(const RunConfig& c, std::ostream& out) {
  const double T = get_double(c, "model", "T");
  const long long n = get_int_or(c, "mc", "n", 100000);
  const std::uint64_t seed = seed_from(c);
  const int grid_n = static_cast<int>(get_int_or(c, "quantization", "N", 200));
  const NewtonOptions opts = newton_options(c);
  out << "d,K,price_mc,variance_mc,price_qis,variance_qis\n";
  for (int d = 2; d <= 6; ++d) {
    RunConfig row = c;
    row.set("model", "d", std::to_string(d));
    const ModelSpec model = model_from(row);
    GridND grid = ensure_grid(c.cache_dir, d, grid_n, seed, grid_options(c));
    for (double strike : {50.0, 55.0, 60.0}) {
      row.set("payoff", "K", fmt_name(strike));
      const PayoffSpec payoff = payoff_from(row, d);
      FiniteObjective objective(grid, finite_payoff(model, payoff, T),
                                gaussian(d));
      NewtonReport report = newton_optimize(objective, opts);
      require_converged(report);
      CompareReport rep = compare(model, payoff,
                                  std::variant<ThetaFinite, ThetaPath>{
                                      ThetaFinite{report.theta}},
                                  T, n, seed);
      out << d << ',' << fmt_name(strike) << ','
          << fmt_short(rep.crude.estimate) << ','
          << fmt_short(rep.crude.sample_variance) << ','
          << fmt_short(rep.qis.estimate) << ','
          << fmt_short(rep.qis.sample_variance) << "\n";
      std::cerr << "notice: basket d=" << d << " K=" << strike << " done ("
                << report.iterations << " iterations, ratio "
                << fmt_short(rep.variance_ratio) << ")\n";
    }
  }
}

void run_table_spark(const RunConfig& c, std::ostream& out) {
  const ModelSpec model = model_from(c);
  const int d = model_dim(model);
  const double T = get_double(c, "model", "T");
  const long long n = get_int_or(c, "mc", "n", 100000);
  const std::uint64_t seed = seed_from(c);
  const int grid_n = static_cast<int>(get_int_or(c, "quantization", "N", 200));
  const NewtonOptions opts = newton_options(c);
  GridND grid = ensure_grid(c.cache_dir, d, grid_n, seed, grid_options(c));
  out << "C,price_mc,variance_mc,price_qis,variance_qis\n";
  for (double cost : {0.0, 3.0, 5.0, 8.0, 10.0, 12.0}) {
    RunConfig row = c;
    row.set("payoff", "C", fmt_name(cost));
    const PayoffSpec payoff = payoff_from(row, d);
    FiniteObjective objective(grid, finite_payoff(model, payoff, T),
                              gaussian(d));
    NewtonReport report = newton_optimize(objective, opts);
    require_converged(report);
    CompareReport rep = compare(model, payoff,
                                std::variant<ThetaFinite, ThetaPath>{
                                    ThetaFinite{report.theta}},
                                T, n, seed);
    out << fmt_name(cost) << ',' << fmt_short(rep.crude.estimate) << ','
        << fmt_short(rep.crude.sample_variance) << ','
        << fmt_short(rep.qis.estimate) << ','
        << fmt_short(rep.qis.sample_variance) << "\n";
    std::cerr << "notice: spark C=" << cost << " done (" << report.iterations
              << " iterations, ratio " << fmt_short(rep.variance_ratio)
              << ")\n";
  }
}

void run_table_functional(const RunConfig& c, std::ostream& out) {
  PathWorkbench wb = path_workbench(c);
  const long long n = get_int_or(c, "mc", "n", 100000);
  const int steps = static_cast<int>(get_int_or(c, "mc", "M", 100));
  const std::uint64_t seed = seed_from(c);
  const NewtonOptions opts = newton_options(c);
  out << "basis,m,price_mc,variance_mc,price_qis,variance_qis\n";
  for (const FunctionalRow& spec : functional_rows()) {
    PathRun run = optimize_path_row(wb, spec.kind, spec.m, opts);
    require_converged(run.report);
    CompareReport rep = compare(wb.model, wb.payoff,
                                std::variant<ThetaFinite, ThetaPath>{
                                    run.theta()},
                                wb.T, n, seed, steps);
    out << to_string(spec.kind) << ',' << spec.m << ','
        << fmt_short(rep.crude.estimate) << ','
        << fmt_short(rep.crude.sample_variance) << ','
        << fmt_short(rep.qis.estimate) << ','
        << fmt_short(rep.qis.sample_variance) << "\n";
    std::cerr << "notice: " << c.table << " " << to_string(spec.kind)
              << " m=" << spec.m << " done (" << run.report.iterations
              << " iterations, ratio " << fmt_short(rep.variance_ratio)
              << ")\n";
  }
}

void run_table(const RunConfig& c) {
  const std::string path = out_path(c, c.table + ".csv");
  std::ofstream out = open_out(path);
  if (c.table == "basket") {
    run_table_basket(c, out);
  } else if (c.table == "spark") {
    run_table_spark(c, out);
  } else {
    run_table_functional(c, out);
  }
  std::cout << "wrote " << path << "\n";
}

}  // namespace

// ---- RunConfig -----------------------------------------------------------

bool RunConfig::has(const std::string& section, const std::string& key) const {
  auto sec = sections.find(section);
  if (sec == sections.end()) return false;
  return sec->second.count(key) != 0;
}

std::string RunConfig::get(const std::string& section,
                           const std::string& key) const {
  auto sec = sections.find(section);
  if (sec != sections.end()) {
    auto it = sec->second.find(key);
    if (it != sec->second.end()) return it->second;
  }
  throw ConfigError("missing config key '" + key + "' in section [" + section +
                    "]");
}

std::string RunConfig::get_or(const std::string& section, const std::string& key,
                              const std::string& fallback) const {
  return has(section, key) ? get(section, key) : fallback;
}

void RunConfig::set(const std::string& section, const std::string& key,
                    const std::string& value) {
  check_key(section, key);
  sections[section][key] = value;
}

RunConfig parse_config(const std::string& text) {
  RunConfig config;
  std::istringstream ss(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const std::string s = trim(line);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    const std::string where = "config line " + std::to_string(line_no);
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(where + ": unterminated section");
      section = trim(s.substr(1, s.size() - 2));
      if (vocabulary().count(section) == 0) {
        throw ConfigError(where + ": unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(where + ": expected key = value");
    }
    if (section.empty()) {
      throw ConfigError(where + ": key outside any [section]");
    }
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (value.empty()) throw ConfigError(where + ": empty value");
    check_key(section, key);
    config.sections[section][key] = value;
  }
  return config;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

void merge_config(RunConfig& dst, const RunConfig& src) {
  for (const auto& [section, keys] : src.sections) {
    for (const auto& [key, value] : keys) dst.set(section, key, value);
  }
  if (!src.command.empty()) dst.command = src.command;
  if (!src.table.empty()) dst.table = src.table;
  if (src.threads > 0) dst.threads = src.threads;
  dst.cache_dir = src.cache_dir;
}

// ---- presets --------------------------------------------------------------

std::vector<std::string> preset_names() {
  return {"basket", "spark",          "asian-bs", "asian-lv",
          "asian-schwartz", "dic-lv", "dic-bs"};
}

namespace {

RunConfig preset_base() {
  RunConfig c;
  c.command = "table";
  c.set("optimizer", "tol", "1e-8");
  c.set("optimizer", "max_iter", "50");
  c.set("mc", "seed", "1");
  return c;
}

void preset_finite_quantization(RunConfig& c) {
  c.set("quantization", "N", "200");
  c.set("quantization", "n_samples", "200000");
  c.set("quantization", "sweeps", "12");
}

void preset_functional_quantization(RunConfig& c) {
  c.set("quantization", "d_N", "966");
  c.set("quantization", "quad_cells", "2048");
  c.set("quantization", "rk_stages", "6");
  c.set("mc", "M", "100");
}

void preset_asian_payoff(RunConfig& c) {
  c.set("payoff", "kind", "asian");
  c.set("payoff", "K", "115");
  c.set("payoff", "p", "100");
  c.set("basis", "kind", "shifted_legendre");
  c.set("basis", "m", "4");
}

void preset_dic_payoff(RunConfig& c) {
  c.set("payoff", "kind", "dic");
  c.set("payoff", "K", "115");
  c.set("payoff", "L", "65");
  c.set("basis", "kind", "shifted_legendre");
  c.set("basis", "m", "8");
}

void preset_bs_unit(RunConfig& c) {
  c.set("model", "kind", "black-scholes");
  c.set("model", "d", "1");
  c.set("model", "r", "0.04");
  c.set("model", "T", "1");
  c.set("model", "S0", "100");
  c.set("model", "sigma", "0.5");
}

void preset_lv_unit(RunConfig& c) {
  c.set("model", "kind", "local-vol");
  c.set("model", "r", "0.04");
  c.set("model", "T", "1");
  c.set("model", "S0", "100");
  c.set("model", "sigma", "5");
  c.set("model", "beta", "0.5");
}

}  // namespace

RunConfig preset_config(const std::string& name) {
  RunConfig c = preset_base();
  c.table = name;
  if (name == "basket") {
    c.set("model", "kind", "black-scholes");
    c.set("model", "d", "2");
    c.set("model", "r", "0.05");
    c.set("model", "T", "1");
    c.set("model", "S0", "50");
    c.set("model", "sigma", "0.3");
    c.set("payoff", "kind", "basket");
    c.set("payoff", "w", "equal");
    c.set("payoff", "K", "50");
    preset_finite_quantization(c);
    c.set("mc", "n", "100000");
    return c;
  }
  if (name == "spark") {
    c.set("model", "kind", "schwartz");
    c.set("model", "d", "2");
    c.set("model", "r", "0");
    c.set("model", "T", "0.5");
    c.set("model", "S0", "40,4");
    c.set("model", "sigma", "0.7,0.35");
    c.set("model", "lambda", "0.3");
    c.set("model", "alpha", "auto");
    c.set("payoff", "kind", "spark");
    c.set("payoff", "hR", "10");
    c.set("payoff", "C", "0");
    preset_finite_quantization(c);
    c.set("mc", "n", "100000");
    return c;
  }
  if (name == "asian-bs") {
    preset_bs_unit(c);
    preset_asian_payoff(c);
    preset_functional_quantization(c);
    c.set("mc", "n", "100000");
    return c;
  }
  if (name == "asian-lv") {
    preset_lv_unit(c);
    preset_asian_payoff(c);
    preset_functional_quantization(c);
    c.set("mc", "n", "50000");
    return c;
  }
  if (name == "asian-schwartz") {
    c.set("model", "kind", "schwartz");
    c.set("model", "d", "1");
    c.set("model", "r", "0.04");
    c.set("model", "T", "1");
    c.set("model", "S0", "100");
    c.set("model", "sigma", "0.5");
    c.set("model", "lambda", "0.3");
    c.set("model", "alpha", "auto");
    preset_asian_payoff(c);
    preset_functional_quantization(c);
    c.set("mc", "n", "100000");
    return c;
  }
  if (name == "dic-lv") {
    preset_lv_unit(c);
    preset_dic_payoff(c);
    preset_functional_quantization(c);
    c.set("mc", "n", "50000");
    return c;
  }
  if (name == "dic-bs") {
    preset_bs_unit(c);
    preset_dic_payoff(c);
    preset_functional_quantization(c);
    c.set("mc", "n", "100000");
    return c;
  }
  std::string names;
  for (const auto& p : preset_names()) {
    if (!names.empty()) names += ", ";
    names += p;
  }
  throw ConfigError("unknown preset '" + name + "'; valid names: " + names);
}

// ---- entry points ----------------------------------------------------------

void run_checked(const RunConfig& config) {
  RunConfig resolved = config;
  if (config.command == "table") {
    if (config.table.empty()) {
      std::string names;
      for (const auto& p : preset_names()) {
        if (!names.empty()) names += ", ";
        names += p;
      }
      throw ConfigError("table command needs a name; valid names: " + names);
    }
    resolved = preset_config(config.table);
    merge_config(resolved, config);
  } else if (!config.preset.empty()) {
    resolved = preset_config(config.preset);
    resolved.command = config.command;
    resolved.table = config.table;
    merge_config(resolved, config);
    resolved.table = config.preset;  // keeps the config id in CSV rows
  }
  if (resolved.threads > 0) set_num_threads(resolved.threads);

  if (resolved.command == "build-grid") {
    run_build_grid(resolved);
  } else if (resolved.command == "build-quantizer") {
    run_build_quantizer(resolved);
  } else if (resolved.command == "optimize") {
    run_optimize(resolved);
  } else if (resolved.command == "price") {
    run_price(resolved);
  } else if (resolved.command == "table") {
    run_table(resolved);
  } else {
    throw ConfigError(
        "unknown command '" + resolved.command +
        "'; expected build-grid, build-quantizer, optimize, price, or table");
  }
}

int run(const RunConfig& config) {
  try {
    run_checked(config);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace quantis
