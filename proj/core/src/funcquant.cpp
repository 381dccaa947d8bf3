#include "quantis/funcquant.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "quantis/errors.hpp"
#include "quantis/io.hpp"
#include "quantis/parallel.hpp"

namespace quantis {

double kl_omega(int n, double T) {
  if (n < 1) throw ConfigError("eigensystem index starts at 1");
  if (!(T > 0.0)) throw ConfigError("horizon must be positive");
  return M_PI * (n - 0.5) / T;
}

double kl_eigenvalue(int n, double T) {
  const double w = kl_omega(n, T);
  return 1.0 / (w * w);
}

double kl_eigenfunction(int n, double T, double t) {
  return std::sqrt(2.0 / T) * std::sin(kl_omega(n, T) * t);
}

double kl_eigenfunction_derivative(int n, double T, double t) {
  const double w = kl_omega(n, T);
  return std::sqrt(2.0 / T) * w * std::cos(w * t);
}

namespace {

// Objective increment of a decomposition relative to leaving every
// coordinate unquantized, at T = 1: sum_l lambda_l (d[N_l] - 1). Negative
// for any level with N_l >= 2, and the T^2/2 offset is common to all
// candidates, so minimizing this minimizes the full distortion on any
// horizon.
double decomposition_gain(const std::vector<int>& seq,
                          const std::vector<double>& d) {
  double g = 0.0;
  for (std::size_t l = 0; l < seq.size(); ++l) {
    g += kl_eigenvalue(static_cast<int>(l) + 1, 1.0) * (d[seq[l]] - 1.0);
  }
  return g;
}

void search_decompositions(int budget_left, int max_entry, int depth,
                           int l_max, const std::vector<double>& d,
                           std::vector<int>& cur, double& best_gain,
                           std::vector<int>& best) {
  const double gain = decomposition_gain(cur, d);
  const bool better =
      gain < best_gain ||
      (gain == best_gain && std::lexicographical_compare(
                                best.begin(), best.end(), cur.begin(), cur.end()));
  if (better) {
    best_gain = gain;
    best = cur;
  }
  if (depth == l_max) return;
  for (int n = std::min(max_entry, budget_left); n >= 2; --n) {
    cur.push_back(n);
    search_decompositions(budget_left / n, n, depth + 1, l_max, d, cur,
                          best_gain, best);
    cur.pop_back();
  }
}

}  // namespace

std::vector<int> optimal_decomposition(int n_budget, int l_max,
                                       const std::vector<double>& d_table) {
  if (n_budget < 1) throw ConfigError("size budget must be at least 1");
  if (l_max < 1) throw ConfigError("level cap must be at least 1");
  if (d_table.size() < static_cast<std::size_t>(n_budget) + 1) {
    throw ConfigError("distortion table does not cover the size budget");
  }
  std::vector<int> cur, best;
  double best_gain = 0.0;  // empty decomposition: nothing quantized
  search_decompositions(n_budget, n_budget, 0, l_max, d_table, cur, best_gain,
                        best);
  if (best.empty()) best.push_back(1);
  return best;
}

std::vector<int> optimal_decomposition(int n_budget, int l_max) {
  if (n_budget < 1) throw ConfigError("size budget must be at least 1");
  return optimal_decomposition(n_budget, l_max, distortion_table(n_budget));
}

namespace {

// Scale turning a raw grid coordinate into the cached coefficient of level
// l (1-based) for the given process.
double coeff_scale(ProcessKind kind, double T, double theta, double sigma,
                   int l) {
  if (kind == ProcessKind::brownian) return std::sqrt(kl_eigenvalue(l, T));
  const double w = kl_omega(l, T);
  return sigma / (w * w + theta * theta);
}

ProductQuantizer assemble(double T, ProcessKind kind, double theta,
                          double sigma, const std::vector<int>& decomposition,
                          const Grid1DOptions& opts) {
  if (decomposition.empty()) throw ConfigError("decomposition is empty");
  for (int n : decomposition) {
    if (n < 1) throw ConfigError("decomposition entries must be positive");
  }
  ProductQuantizer q;
  q.T = T;
  q.kind = kind;
  q.ou_theta = theta;
  q.ou_sigma = sigma;
  q.decomposition = decomposition;

  const int L = q.levels();
  long long n_paths = 1;
  for (int l = 0; l < L; ++l) {
    q.level_grids.push_back(build_grid_1d(decomposition[l], opts));
    n_paths *= decomposition[l];
    if (n_paths > 2000000) throw ConfigError("quantizer size over 2e6 paths");
  }
  const int N = static_cast<int>(n_paths);

  q.weights.assign(N, 1.0);
  q.coeffs.assign(static_cast<std::size_t>(N) * L, 0.0);
  q.normal_coords.assign(static_cast<std::size_t>(N) * L, 0.0);
  std::vector<int> idx(L, 0);  // multi-index, last level fastest
  for (int i = 0; i < N; ++i) {
    for (int l = 0; l < L; ++l) {
      const Grid1D& g = q.level_grids[l];
      const double x = g.points[idx[l]];
      q.weights[i] *= g.weights[idx[l]];
      q.normal_coords[static_cast<std::size_t>(i) * L + l] = x;
      q.coeffs[static_cast<std::size_t>(i) * L + l] =
          coeff_scale(kind, T, theta, sigma, l + 1) * x;
    }
    for (int l = L - 1; l >= 0; --l) {
      if (++idx[l] < decomposition[l]) break;
      idx[l] = 0;
    }
  }

  double used = 0.0, tail_sum = 0.0;
  for (int l = 0; l < L; ++l) {
    const double lam = kl_eigenvalue(l + 1, T);
    used += lam * q.level_grids[l].distortion2;
    tail_sum += lam;
  }
  q.distortion2 = used + (T * T / 2.0 - tail_sum);
  return q;
}

}  // namespace

ProductQuantizer build_brownian_quantizer(double T,
                                          const std::vector<int>& decomposition,
                                          const Grid1DOptions& opts) {
  if (!(T > 0.0)) throw ConfigError("horizon must be positive");
  return assemble(T, ProcessKind::brownian, 0.0, 1.0, decomposition, opts);
}

ProductQuantizer build_ou_quantizer(double T, double ou_theta, double ou_sigma,
                                    const std::vector<int>& decomposition,
                                    const Grid1DOptions& opts) {
  if (!(T > 0.0)) throw ConfigError("horizon must be positive");
  if (!(ou_theta > 0.0)) throw ConfigError("mean reversion must be positive");
  if (ou_sigma < 0.0) throw ConfigError("volatility must be nonnegative");
  return assemble(T, ProcessKind::ornstein_uhlenbeck, ou_theta, ou_sigma,
                  decomposition, opts);
}

double ProductQuantizer::brownian_value(int i, double t) const {
  const int L = levels();
  const double* x = normal_coords.data() + static_cast<std::size_t>(i) * L;
  double s = 0.0;
  for (int l = 0; l < L; ++l) {
    s += std::sqrt(kl_eigenvalue(l + 1, T)) * x[l] * kl_eigenfunction(l + 1, T, t);
  }
  return s;
}

double ProductQuantizer::brownian_derivative(int i, double t) const {
  const int L = levels();
  const double* x = normal_coords.data() + static_cast<std::size_t>(i) * L;
  double s = 0.0;
  // sqrt(lambda_l) w_l = 1: each term is sqrt(2/T) x cos(w_l t).
  const double c = std::sqrt(2.0 / T);
  for (int l = 0; l < L; ++l) {
    s += c * x[l] * std::cos(kl_omega(l + 1, T) * t);
  }
  return s;
}

double ProductQuantizer::value(int i, double t) const {
  if (kind == ProcessKind::brownian) return brownian_value(i, t);
  const int L = levels();
  const double* c = coeffs.data() + static_cast<std::size_t>(i) * L;
  const double root = std::sqrt(2.0 / T);
  const double decay = std::exp(-ou_theta * t);
  double s = 0.0;
  for (int l = 0; l < L; ++l) {
    const double w = kl_omega(l + 1, T);
    const double phi =
        root * (w * std::sin(w * t) + ou_theta * (std::cos(w * t) - decay));
    s += c[l] * phi;
  }
  return s;
}

double ProductQuantizer::derivative(int i, double t) const {
  if (kind == ProcessKind::brownian) return brownian_derivative(i, t);
  const int L = levels();
  const double* c = coeffs.data() + static_cast<std::size_t>(i) * L;
  const double root = std::sqrt(2.0 / T);
  const double decay = std::exp(-ou_theta * t);
  double s = 0.0;
  for (int l = 0; l < L; ++l) {
    const double w = kl_omega(l + 1, T);
    const double dphi = root * (w * w * std::cos(w * t) -
                                ou_theta * w * std::sin(w * t) +
                                ou_theta * ou_theta * decay);
    s += c[l] * dphi;
  }
  return s;
}

void save_quantizer(const ProductQuantizer& q, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << fmt17(q.T) << ' ' << q.levels();
  for (int n : q.decomposition) out << ' ' << n;
  out << '\n';
  const int L = q.levels();
  for (int i = 0; i < q.size(); ++i) {
    out << fmt17(q.weights[i]);
    for (int l = 0; l < L; ++l) {
      out << ' ' << fmt17(q.coeffs[static_cast<std::size_t>(i) * L + l]);
    }
    out << '\n';
  }
  if (!out) throw ConfigError("write to '" + path + "' failed");
}

ProductQuantizer load_quantizer(const std::string& path, ProcessKind kind,
                                double ou_theta, double ou_sigma) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty quantizer file");
  std::istringstream head(line);
  std::string tok;
  if (!(head >> tok)) throw ConfigError("bad quantizer header");
  const double T = parse_double(tok, "quantizer horizon");
  if (!(head >> tok)) throw ConfigError("bad quantizer header");
  const int L = static_cast<int>(parse_int(tok, "quantizer level count"));
  if (L < 1 || L > 64) throw ConfigError("bad quantizer level count");

  ProductQuantizer q;
  q.T = T;
  q.kind = kind;
  q.ou_theta = ou_theta;
  q.ou_sigma = ou_sigma;
  long long n_paths = 1;
  for (int l = 0; l < L; ++l) {
    if (!(head >> tok)) throw ConfigError("quantizer header is short");
    const int n = static_cast<int>(parse_int(tok, "quantizer level size"));
    if (n < 1) throw ConfigError("bad quantizer level size");
    q.decomposition.push_back(n);
    n_paths *= n;
    if (n_paths > 2000000) throw ConfigError("quantizer size over 2e6 paths");
  }
  const int N = static_cast<int>(n_paths);

  q.weights.reserve(N);
  q.coeffs.reserve(static_cast<std::size_t>(N) * L);
  for (int i = 0; i < N; ++i) {
    if (!std::getline(in, line)) throw ConfigError("quantizer file is short");
    std::istringstream row(line);
    if (!(row >> tok)) throw ConfigError("bad quantizer row");
    q.weights.push_back(parse_double(tok, "quantizer weight"));
    for (int l = 0; l < L; ++l) {
      if (!(row >> tok)) throw ConfigError("quantizer row is short");
      q.coeffs.push_back(parse_double(tok, "quantizer coefficient"));
    }
    if (row >> tok) throw ConfigError("quantizer row has extra fields");
  }

  // Rebuild the deterministic scalar grids; raw coordinates come from the
  // multi-index so a zero-volatility file still round-trips. Stored weights
  // and coefficients stay authoritative after a consistency check.
  std::vector<int> idx(L, 0);
  q.normal_coords.assign(static_cast<std::size_t>(N) * L, 0.0);
  for (int l = 0; l < L; ++l) q.level_grids.push_back(build_grid_1d(q.decomposition[l]));
  double used = 0.0, tail_sum = 0.0;
  for (int l = 0; l < L; ++l) {
    const double lam = kl_eigenvalue(l + 1, T);
    used += lam * q.level_grids[l].distortion2;
    tail_sum += lam;
  }
  q.distortion2 = used + (T * T / 2.0 - tail_sum);
  for (int i = 0; i < N; ++i) {
    double w = 1.0;
    for (int l = 0; l < L; ++l) {
      const Grid1D& g = q.level_grids[l];
      const double x = g.points[idx[l]];
      q.normal_coords[static_cast<std::size_t>(i) * L + l] = x;
      w *= g.weights[idx[l]];
      const double expect = coeff_scale(kind, T, ou_theta, ou_sigma, l + 1) * x;
      if (std::abs(expect - q.coeffs[static_cast<std::size_t>(i) * L + l]) >
          1e-9 * (1.0 + std::abs(expect))) {
        throw ConfigError("quantizer file disagrees with its rebuilt grids");
      }
    }
    if (std::abs(w - q.weights[i]) > 1e-9) {
      throw ConfigError("quantizer weights disagree with rebuilt grids");
    }
    for (int l = L - 1; l >= 0; --l) {
      if (++idx[l] < q.decomposition[l]) break;
      idx[l] = 0;
    }
  }
  return q;
}

namespace {

// Two decades under the 1e-8 per-step budget: accepted states then sit far
// enough below it that halving the outer grid moves the solution by less
// than the budget itself.
constexpr double kLocalTol = 1e-10;
constexpr int kMaxDepth = 24;

// One explicit Runge-Kutta step of x' = f(t, x).
template <typename F>
double rk_step(const F& f, double t, double x, double h, int stages) {
  if (stages == 4) {
    const double k1 = f(t, x);
    const double k2 = f(t + 0.5 * h, x + 0.5 * h * k1);
    const double k3 = f(t + 0.5 * h, x + 0.5 * h * k2);
    const double k4 = f(t + h, x + h * k3);
    return x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  // Six-stage fifth-order scheme (Fehlberg coefficients, higher-order
  // weights).
  const double k1 = f(t, x);
  const double k2 = f(t + 0.25 * h, x + h * (0.25 * k1));
  const double k3 = f(t + 0.375 * h, x + h * (3.0 / 32 * k1 + 9.0 / 32 * k2));
  const double k4 = f(t + 12.0 / 13 * h,
                      x + h * (1932.0 / 2197 * k1 - 7200.0 / 2197 * k2 +
                               7296.0 / 2197 * k3));
  const double k5 = f(t + h, x + h * (439.0 / 216 * k1 - 8.0 * k2 +
                                      3680.0 / 513 * k3 - 845.0 / 4104 * k4));
  const double k6 =
      f(t + 0.5 * h, x + h * (-8.0 / 27 * k1 + 2.0 * k2 - 3544.0 / 2565 * k3 +
                              1859.0 / 4104 * k4 - 11.0 / 40 * k5));
  return x + h * (16.0 / 135 * k1 + 6656.0 / 12825 * k3 +
                  28561.0 / 56430 * k4 - 9.0 / 50 * k5 + 2.0 / 55 * k6);
}

// Advance x across [t, t+h] with step doubling: accept the two-half-step
// result once it agrees with the single step to kLocalTol, else bisect.
// Returns false when the state leaves the domain or stops being finite.
template <typename F>
bool advance(const F& f, double t, double& x, double h, int stages, int depth,
             double domain_min) {
  const double full = rk_step(f, t, x, h, stages);
  const double mid = rk_step(f, t, x, 0.5 * h, stages);
  const double fine = rk_step(f, t + 0.5 * h, mid, 0.5 * h, stages);
  if (!std::isfinite(fine)) return false;
  const double err = std::abs(fine - full);
  if (err < kLocalTol || depth >= kMaxDepth) {
    if (depth >= kMaxDepth && !(err < 1e-6)) return false;
    x = fine;
    return x > domain_min && std::isfinite(x);
  }
  if (!advance(f, t, x, 0.5 * h, stages, depth + 1, domain_min)) return false;
  return advance(f, t + 0.5 * h, x, 0.5 * h, stages, depth + 1, domain_min);
}

void validate_time_grid(const std::vector<double>& grid, double T) {
  if (grid.size() < 2) throw ConfigError("time grid needs at least two nodes");
  if (grid.front() != 0.0) throw ConfigError("time grid must start at 0");
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (!(grid[k] > grid[k - 1])) throw ConfigError("time grid not increasing");
  }
  if (grid.back() > T * (1.0 + 1e-12)) {
    throw ConfigError("time grid runs past the quantizer horizon");
  }
}

QuantizedEnsemble make_ensemble(const ProductQuantizer& q,
                                const std::vector<double>& time_grid) {
  QuantizedEnsemble e;
  e.time_grid = time_grid;
  e.weights = q.weights;
  e.failed.assign(q.size(), 0);
  e.paths.assign(q.size(), std::vector<double>(time_grid.size(), 0.0));
  e.brownian_paths.assign(q.size(), std::vector<double>(time_grid.size(), 0.0));
  e.quantizer = q;
  return e;
}

}  // namespace

QuantizedEnsemble quantize_diffusion(const DiffusionODE& ode, double x0,
                                     const ProductQuantizer& q,
                                     const std::vector<double>& time_grid,
                                     int rk_stages) {
  if (rk_stages != 4 && rk_stages != 6) {
    throw ConfigError("rk_stages must be 4 or 6");
  }
  if (!ode.drift || !ode.vol || !ode.vol_prime) {
    throw ConfigError("diffusion needs drift, vol, and vol derivative");
  }
  validate_time_grid(time_grid, q.T);
  QuantizedEnsemble e = make_ensemble(q, time_grid);
  const int M = static_cast<int>(time_grid.size()) - 1;

  parallel_chunks(q.size(), 16, [&](std::size_t, std::size_t begin,
                                    std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const int ip = static_cast<int>(i);
      auto f = [&](double t, double x) {
        const double s = ode.vol(x);
        return ode.drift(x) - 0.5 * s * ode.vol_prime(x) +
               s * q.derivative(ip, t);
      };
      double x = x0;
      e.paths[i][0] = x;
      e.brownian_paths[i][0] = q.brownian_value(ip, time_grid[0]);
      bool ok = x > ode.domain_min && std::isfinite(x);
      for (int k = 0; k < M; ++k) {
        if (ok) {
          ok = advance(f, time_grid[k], x, time_grid[k + 1] - time_grid[k],
                       rk_stages, 0, ode.domain_min);
        }
        e.paths[i][k + 1] = ok ? x : std::numeric_limits<double>::quiet_NaN();
        e.brownian_paths[i][k + 1] = q.brownian_value(ip, time_grid[k + 1]);
      }
      e.failed[i] = ok ? 0 : 1;
    }
  });
  return e;
}

QuantizedEnsemble map_quantizer_paths(
    const ProductQuantizer& q, const std::vector<double>& time_grid,
    const std::function<double(double, double)>& g) {
  validate_time_grid(time_grid, q.T);
  QuantizedEnsemble e = make_ensemble(q, time_grid);
  parallel_chunks(q.size(), 64, [&](std::size_t, std::size_t begin,
                                    std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const int ip = static_cast<int>(i);
      for (std::size_t k = 0; k < time_grid.size(); ++k) {
        e.paths[i][k] = g(time_grid[k], q.value(ip, time_grid[k]));
        e.brownian_paths[i][k] = q.brownian_value(ip, time_grid[k]);
      }
    }
  });
  return e;
}

QuantizedEnsemble bs_exponential_paths(const ProductQuantizer& q, double r,
                                       double sigma, double s0,
                                       const std::vector<double>& time_grid) {
  if (!(s0 > 0.0)) throw ConfigError("spot must be positive");
  const double mu = r - 0.5 * sigma * sigma;
  return map_quantizer_paths(q, time_grid, [=](double t, double chi) {
    return s0 * std::exp(mu * t + sigma * chi);
  });
}

std::vector<double> uniform_time_grid(double T, int m) {
  if (m < 1) throw ConfigError("time grid needs at least one step");
  if (!(T > 0.0)) throw ConfigError("horizon must be positive");
  std::vector<double> g(m + 1);
  for (int k = 0; k <= m; ++k) g[k] = T * k / m;
  g.back() = T;
  return g;
}

}  // namespace quantis
