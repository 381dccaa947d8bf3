#ifndef QUANTIS_GRIDND_HPP
#define QUANTIS_GRIDND_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace quantis {

// Quantizer of N(0, I_d) fitted by batch Lloyd iteration on a fixed pool of
// i.i.d. normal samples drawn from the counter-based generator, so the
// result is a pure function of (dim, n, seed, options). Immutable once
// built.
struct GridND {
  int dim = 0;
  std::vector<double> points;   // n rows of dim, row-major
  std::vector<double> weights;  // empirical cell frequencies, sum to 1
  double distortion2_estimate = 0.0;  // mean squared distance to nearest point
  std::uint64_t seed = 0;
  std::vector<double> sweep_distortion;  // assignment distortion per sweep
  int empty_cell_resets = 0;

  std::size_t size() const { return weights.size(); }
  const double* point(std::size_t i) const { return &points[i * dim]; }
};

struct GridNDOptions {
  std::size_t n_samples = 1000000;
  int sweeps = 30;
};

GridND build_grid_nd(int dim, int n, std::uint64_t seed,
                     const GridNDOptions& opts = {});

// Index of the closest point, exhaustive scan; ties resolve to the lowest
// index. x must have grid.dim components.
int nearest_cell(const GridND& grid, const double* x);

// Text cache: header "d N seed", then one "weight x1 ... xd" line per
// point, 17 significant digits. Loaded grids carry no sweep diagnostics.
void save_grid_nd(const GridND& grid, const std::string& path);
GridND load_grid_nd(const std::string& path);

struct Grid1D;
// Wrap a deterministic scalar grid as a one-dimensional block grid with its
// exact weights.
GridND grid_from_1d(const Grid1D& grid);

}  // namespace quantis

#endif
