#ifndef QUANTIS_GRID1D_HPP
#define QUANTIS_GRID1D_HPP

#include <string>
#include <vector>

namespace quantis {

// Optimal quadratic quantizer of N(0,1): points are the centroids of their
// own nearest-neighbor cells, weights are the cell probabilities. Immutable
// once built.
struct Grid1D {
  std::vector<double> points;   // strictly increasing
  std::vector<double> weights;  // cell probabilities, sum to 1
  double distortion2 = 0.0;     // E[min_i (Z - x_i)^2]
  double build_residual = 0.0;  // max_i |centroid_i - x_i| at termination
  int iterations = 0;
};

struct Grid1DOptions {
  double tol = 1e-10;   // convergence threshold on max point displacement
  int max_iter = 10000;
};

// Fixed-point construction started from the normal quantiles
// Phi^{-1}((i+1/2)/N). Deterministic; throws ConvergenceError if the
// residual is still above tol after max_iter iterations.
Grid1D build_grid_1d(int n, const Grid1DOptions& opts = {});

// d[N] = distortion2 of the size-N grid, for N = 1..n_max. d[0] = 1, the
// second moment left by not quantizing at all. Strictly decreasing in N.
std::vector<double> distortion_table(int n_max, const Grid1DOptions& opts = {});

// Text cache: header "1 N", then one "point weight" line per point, 17
// significant digits. A load followed by a save reproduces the file.
void save_grid_1d(const Grid1D& grid, const std::string& path);
Grid1D load_grid_1d(const std::string& path);

}  // namespace quantis

#endif
