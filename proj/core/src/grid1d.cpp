#include "quantis/grid1d.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "quantis/accum.hpp"
#include "quantis/errors.hpp"
#include "quantis/io.hpp"
#include "quantis/normal.hpp"

namespace quantis {

namespace {

// The Newton solve below amplifies rounding noise in the centroid residual
// by the Jacobian's condition number, which grows like N^2. In plain double
// that noise floor sits above the 1e-10 tolerance once N reaches a few
// hundred, so the iteration runs in extended precision and rounds once at
// the end.
using real = long double;

constexpr real kInvSqrt2PiL = 0.398942280401432677939946059934L;
constexpr real kInvSqrt2L = 0.707106781186547524400844362105L;

real pdfl(real x) { return kInvSqrt2PiL * std::exp(-0.5L * x * x); }

// P(a < Z < b). Differencing the cdf directly loses all relative accuracy
// in the tails where it saturates at 1, so whichever side of the origin a
// cell sits on, the mass is taken as a difference of same-side tail
// probabilities, which erfc delivers at full relative precision.
real massl(real a, real b) {
  if (a >= 0.0L) {
    return 0.5L * (std::erfc(a * kInvSqrt2L) - std::erfc(b * kInvSqrt2L));
  }
  return 0.5L * (std::erfc(-b * kInvSqrt2L) - std::erfc(-a * kInvSqrt2L));
}

// Cell boundaries: midpoints between consecutive points, with +-inf outside.
std::vector<real> midpoints(const std::vector<real>& x) {
  const std::size_t n = x.size();
  std::vector<real> a(n + 1);
  a[0] = -std::numeric_limits<real>::infinity();
  for (std::size_t i = 1; i < n; ++i) a[i] = 0.5L * (x[i - 1] + x[i]);
  a[n] = std::numeric_limits<real>::infinity();
  return a;
}

real phi_at(real a) { return std::isinf(a) ? 0.0L : pdfl(a); }

// One application of the fixed-point map: each point moves to the mean of
// N(0,1) restricted to its cell. Returns the centroids; residual is the
// largest move.
std::vector<real> lloyd_map(const std::vector<real>& x, real* residual) {
  const std::size_t n = x.size();
  const std::vector<real> a = midpoints(x);
  std::vector<real> c(n);
  real worst = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    const real w = massl(a[i], a[i + 1]);
    const real m1 = phi_at(a[i]) - phi_at(a[i + 1]);
    c[i] = m1 / w;
    worst = std::max(worst, std::abs(c[i] - x[i]));
  }
  if (residual) *residual = worst;
  return c;
}

bool strictly_increasing(const std::vector<real>& x) {
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (!(x[i] > x[i - 1])) return false;
  }
  return true;
}

// Newton step on G(x) = x - centroid(x). The Jacobian is tridiagonal since
// a cell only touches its two neighbors. Solved by the Thomas algorithm.
// Returns false if the step could not be applied safely.
bool newton_step(std::vector<real>& x, real* residual) {
  const std::size_t n = x.size();
  const std::vector<real> a = midpoints(x);
  std::vector<real> g(n), diag(n), sub(n, 0.0L), super(n, 0.0L);
  real worst = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    const real w = massl(a[i], a[i + 1]);
    const real c = (phi_at(a[i]) - phi_at(a[i + 1])) / w;
    g[i] = x[i] - c;
    worst = std::max(worst, std::abs(g[i]));
    // dc/da at the two boundaries; infinite boundaries contribute nothing.
    const real dlo = std::isinf(a[i]) ? 0.0L : pdfl(a[i]) * (c - a[i]) / w;
    const real dhi =
        std::isinf(a[i + 1]) ? 0.0L : pdfl(a[i + 1]) * (a[i + 1] - c) / w;
    diag[i] = 1.0L - 0.5L * (dlo + dhi);
    if (i > 0) sub[i] = -0.5L * dlo;
    if (i + 1 < n) super[i] = -0.5L * dhi;
  }
  if (residual) *residual = worst;

  // Thomas solve of J * delta = -g.
  std::vector<real> cp(n), dp(n);
  real den = diag[0];
  if (den == 0.0L) return false;
  cp[0] = super[0] / den;
  dp[0] = -g[0] / den;
  for (std::size_t i = 1; i < n; ++i) {
    den = diag[i] - sub[i] * cp[i - 1];
    if (den == 0.0L) return false;
    cp[i] = super[i] / den;
    dp[i] = (-g[i] - sub[i] * dp[i - 1]) / den;
  }
  std::vector<real> delta(n);
  delta[n - 1] = dp[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) delta[i] = dp[i] - cp[i] * delta[i + 1];

  std::vector<real> trial(n);
  for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] + delta[i];
  if (!strictly_increasing(trial)) return false;
  x = std::move(trial);
  return true;
}

double phi_at_d(double a) { return std::isinf(a) ? 0.0 : norm_pdf(a); }
double a_phi_at_d(double a) { return std::isinf(a) ? 0.0 : a * norm_pdf(a); }

constexpr double kInvSqrt2D = 0.7071067811865475244008444;

// Double-precision twin of massl; see that comment.
double mass_d(double a, double b) {
  if (a >= 0.0) {
    return 0.5 * (std::erfc(a * kInvSqrt2D) - std::erfc(b * kInvSqrt2D));
  }
  return 0.5 * (std::erfc(-b * kInvSqrt2D) - std::erfc(-a * kInvSqrt2D));
}

// Exact weights and distortion from the cell integrals of 1, z, z^2,
// evaluated in double on the final double points so that cached grids
// reproduce them bit for bit.
void finalize(Grid1D& grid) {
  const std::vector<double>& x = grid.points;
  const std::size_t n = x.size();
  std::vector<double> a(n + 1);
  a[0] = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < n; ++i) a[i] = 0.5 * (x[i - 1] + x[i]);
  a[n] = std::numeric_limits<double>::infinity();
  grid.weights.resize(n);
  NeumaierSum dist;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = mass_d(a[i], a[i + 1]);
    const double m1 = phi_at_d(a[i]) - phi_at_d(a[i + 1]);
    const double m2 = w + a_phi_at_d(a[i]) - a_phi_at_d(a[i + 1]);
    grid.weights[i] = w;
    dist.add(m2 - 2.0 * x[i] * m1 + x[i] * x[i] * w);
  }
  grid.distortion2 = dist.value();
}

// Stationarity residual of the final double grid, measured in double: the
// displacement of one fixed-point application.
double double_residual(const std::vector<double>& x) {
  const std::size_t n = x.size();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lo =
        i == 0 ? -std::numeric_limits<double>::infinity()
               : 0.5 * (x[i - 1] + x[i]);
    const double hi =
        i + 1 == n ? std::numeric_limits<double>::infinity()
                   : 0.5 * (x[i] + x[i + 1]);
    const double w = mass_d(lo, hi);
    const double c = (phi_at_d(lo) - phi_at_d(hi)) / w;
    worst = std::max(worst, std::abs(c - x[i]));
  }
  return worst;
}

}  // namespace

Grid1D build_grid_1d(int n, const Grid1DOptions& opts) {
  if (n < 1) throw ConfigError("build_grid_1d: n must be >= 1");
  Grid1D grid;
  if (n == 1) {
    grid.points = {0.0};
    grid.weights = {1.0};
    grid.distortion2 = 1.0;
    grid.build_residual = 0.0;
    grid.iterations = 0;
    return grid;
  }

  std::vector<real> x(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    x[static_cast<std::size_t>(i)] =
        static_cast<real>(norm_inv_cdf((i + 0.5) / n));
  }

  // Plain fixed-point sweeps contract like 1 - O(1/N^2), far too slowly to
  // reach tol for grids past a few dozen points. A handful of sweeps tames
  // the quantile start, then Newton on the stationarity equations finishes
  // at the same fixed point. Any rejected Newton step falls back to a sweep.
  const real tol = static_cast<real>(opts.tol);
  real residual = std::numeric_limits<real>::infinity();
  int iter = 0;
  const int warmup = 10;
  while (iter < opts.max_iter) {
    if (iter < warmup || residual > 1e-2L) {
      x = lloyd_map(x, &residual);
    } else if (!newton_step(x, &residual)) {
      x = lloyd_map(x, &residual);
    }
    ++iter;
    if (residual <= 0.25L * tol) break;
  }
  lloyd_map(x, &residual);
  if (residual > tol) {
    std::ostringstream msg;
    msg << "build_grid_1d: n=" << n << " residual "
        << static_cast<double>(residual) << " above tol " << opts.tol
        << " after " << iter << " iterations";
    throw ConvergenceError(msg.str(), static_cast<double>(residual));
  }

  grid.points.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    grid.points[i] = static_cast<double>(x[i]);
  }
  grid.build_residual = double_residual(grid.points);
  grid.iterations = iter;
  finalize(grid);
  return grid;
}

std::vector<double> distortion_table(int n_max, const Grid1DOptions& opts) {
  if (n_max < 1) throw ConfigError("distortion_table: n_max must be >= 1");
  std::vector<double> d(static_cast<std::size_t>(n_max) + 1);
  d[0] = 1.0;
  for (int n = 1; n <= n_max; ++n) {
    d[static_cast<std::size_t>(n)] = build_grid_1d(n, opts).distortion2;
  }
  return d;
}

void save_grid_1d(const Grid1D& grid, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("save_grid_1d: cannot open " + path);
  out << "1 " << grid.points.size() << "\n";
  for (std::size_t i = 0; i < grid.points.size(); ++i) {
    out << fmt17(grid.points[i]) << " " << fmt17(grid.weights[i]) << "\n";
  }
  if (!out) throw ConfigError("save_grid_1d: write failed for " + path);
}

Grid1D load_grid_1d(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_grid_1d: cannot open " + path);
  std::string tag;
  long long n = 0;
  if (!(in >> tag >> n) || tag != "1" || n < 1) {
    throw ConfigError("load_grid_1d: bad header in " + path);
  }
  Grid1D grid;
  grid.points.resize(static_cast<std::size_t>(n));
  grid.weights.resize(static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i) {
    std::string xs, ws;
    if (!(in >> xs >> ws)) {
      throw ConfigError("load_grid_1d: truncated file " + path);
    }
    grid.points[static_cast<std::size_t>(i)] = parse_double(xs, path);
    grid.weights[static_cast<std::size_t>(i)] = parse_double(ws, path);
  }
  for (std::size_t i = 1; i < grid.points.size(); ++i) {
    if (!(grid.points[i] > grid.points[i - 1])) {
      throw ConfigError("load_grid_1d: points not increasing in " + path);
    }
  }
  // Distortion and residual are derived, not stored; recompute them the same
  // way the builder does so a cached grid behaves exactly like a fresh one.
  // The stored weights must agree with the points they came from.
  const std::vector<double> stored = grid.weights;
  finalize(grid);
  for (std::size_t i = 0; i < stored.size(); ++i) {
    if (std::abs(stored[i] - grid.weights[i]) > 1e-12) {
      throw ConfigError("load_grid_1d: weights inconsistent with points in " +
                        path);
    }
  }
  grid.weights = stored;
  grid.build_residual = double_residual(grid.points);
  return grid;
}

}  // namespace quantis
