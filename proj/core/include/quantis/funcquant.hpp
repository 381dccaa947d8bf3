#ifndef QUANTIS_FUNCQUANT_HPP
#define QUANTIS_FUNCQUANT_HPP

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "quantis/grid1d.hpp"

namespace quantis {

// Sine eigensystem of the Brownian covariance on [0, T], 1-based index n:
// e_n(t) = sqrt(2/T) sin(w_n t) with w_n = pi (n - 1/2) / T and eigenvalue
// lambda_n = 1 / w_n^2. The eigenvalues sum to T^2 / 2.
double kl_omega(int n, double T);
double kl_eigenvalue(int n, double T);
double kl_eigenfunction(int n, double T, double t);
double kl_eigenfunction_derivative(int n, double T, double t);

// Level sizes (N_1 >= ... >= N_L >= 2) minimizing
//   sum_l lambda_l d[N_l] + (T^2/2 - sum_l lambda_l)
// over non-increasing decompositions with product <= n_budget and at most
// l_max levels. d_table[N] is the N-point scalar distortion (d_table[1] = 1),
// so the objective is T^2/2 + sum_l lambda_l (d[N_l] - 1) and the horizon
// drops out of the argmin. Exhaustive search; exact ties resolve to the
// lexicographically largest sequence. n_budget = 1 yields {1}, the zero path.
std::vector<int> optimal_decomposition(int n_budget, int l_max,
                                       const std::vector<double>& d_table);
// Convenience overload that builds the distortion table itself.
std::vector<int> optimal_decomposition(int n_budget, int l_max = 16);

enum class ProcessKind { brownian, ornstein_uhlenbeck };

// Product quantizer of a centered Gaussian process on [0, T]. Each path is a
// finite smooth sum: for Brownian motion
//   chi_i(t) = sum_l coeff[i][l] e_l(t),        coeff = sqrt(lambda_l) x_{i_l},
// and for the centered Ornstein-Uhlenbeck process dY = -theta Y dt + sigma dW
//   y_i(t) = sum_l coeff[i][l] phi_l(t),        coeff = sigma c_l x_{i_l},
// with c_l = 1/(w_l^2 + theta^2) and
//   phi_l(t) = sqrt(2/T) [w_l sin(w_l t) + theta (cos(w_l t) - exp(-theta t))].
// x_{i_l} are optimal scalar normal grid points; path index i enumerates the
// multi-index (i_1, ..., i_L) with the last level fastest.
struct ProductQuantizer {
  double T = 1.0;
  ProcessKind kind = ProcessKind::brownian;
  double ou_theta = 0.0;
  double ou_sigma = 1.0;
  std::vector<int> decomposition;
  std::vector<Grid1D> level_grids;    // one per level
  std::vector<double> weights;        // N = prod N_l product weights
  std::vector<double> coeffs;         // N x L row-major, process-scaled
  std::vector<double> normal_coords;  // N x L row-major, raw grid points
  double distortion2 = 0.0;           // sum_l lambda_l d_{N_l} + analytic tail

  int levels() const { return static_cast<int>(decomposition.size()); }
  int size() const { return static_cast<int>(weights.size()); }

  // Underlying Brownian path chi_i and its derivative (finite sine series).
  double brownian_value(int i, double t) const;
  double brownian_derivative(int i, double t) const;
  // Process path: chi_i for the Brownian kind, y_i for Ornstein-Uhlenbeck.
  double value(int i, double t) const;
  double derivative(int i, double t) const;
};

ProductQuantizer build_brownian_quantizer(double T,
                                          const std::vector<int>& decomposition,
                                          const Grid1DOptions& opts = {});
ProductQuantizer build_ou_quantizer(double T, double ou_theta, double ou_sigma,
                                    const std::vector<int>& decomposition,
                                    const Grid1DOptions& opts = {});

// Plain-text cache: header "T L N_1 ... N_L", then one row per path
// "weight coeff_1 ... coeff_L", all at 17 significant digits (round-trip
// bit-stable). The process kind and its parameters are not stored; the
// loader receives them and reconstructs grids and raw coordinates.
void save_quantizer(const ProductQuantizer& q, const std::string& path);
ProductQuantizer load_quantizer(const std::string& path,
                                ProcessKind kind = ProcessKind::brownian,
                                double ou_theta = 0.0, double ou_sigma = 1.0);

// Quantizer paths pushed through a scalar diffusion or a closed-form map.
// paths[i][k] is the process state at time_grid[k]; brownian_paths[i][k] is
// the source chi_i there. Weights are copied from the quantizer exactly.
struct QuantizedEnsemble {
  std::vector<double> time_grid;
  std::vector<std::vector<double>> paths;
  std::vector<std::vector<double>> brownian_paths;
  std::vector<double> weights;
  std::vector<char> failed;  // per-path integration failure flags
  ProductQuantizer quantizer;

  int n_paths() const { return static_cast<int>(paths.size()); }
};

// Scalar diffusion dX = b(X) dt + sigma(X) dW pushed through the quantizer:
// each path solves the substitute ODE
//   x' = (b - 1/2 sigma sigma')(x) + sigma(x) chi_i'(t).
struct DiffusionODE {
  std::function<double(double)> drift;      // b
  std::function<double(double)> vol;        // sigma
  std::function<double(double)> vol_prime;  // sigma'
  // States at or below this value abandon the path (failure flag); keep the
  // default for diffusions defined on the whole line.
  double domain_min = -std::numeric_limits<double>::infinity();
};

// rk_stages: 4 = classical fourth-order scheme, 6 = six-stage fifth-order
// scheme. Either subdivides each grid interval by step doubling until the
// local error estimate falls below 1e-8.
QuantizedEnsemble quantize_diffusion(const DiffusionODE& ode, double x0,
                                     const ProductQuantizer& q,
                                     const std::vector<double>& time_grid,
                                     int rk_stages = 4);

// Closed-form ensembles: process value g(t, q.value(i, t)) on the grid.
QuantizedEnsemble map_quantizer_paths(
    const ProductQuantizer& q, const std::vector<double>& time_grid,
    const std::function<double(double, double)>& g);

// Geometric Brownian motion S_0 exp((r - sigma^2/2) t + sigma chi_i(t)).
QuantizedEnsemble bs_exponential_paths(const ProductQuantizer& q, double r,
                                       double sigma, double s0,
                                       const std::vector<double>& time_grid);

// Uniform grid 0 = t_0 < ... < t_m = T.
std::vector<double> uniform_time_grid(double T, int m);

}  // namespace quantis

#endif
