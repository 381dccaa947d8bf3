#include "quantis/gridnd.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "quantis/errors.hpp"
#include "quantis/grid1d.hpp"
#include "quantis/io.hpp"
#include "quantis/parallel.hpp"
#include "quantis/rng.hpp"

namespace quantis {

namespace {

constexpr std::size_t kChunk = 8192;

struct ChunkAccum {
  std::vector<double> sums;      // n * dim centroid numerators
  std::vector<std::int64_t> counts;
  double dist = 0.0;             // sum of squared nearest distances
  double worst_dist = -1.0;      // farthest sample in this chunk
  std::size_t worst_sample = 0;
};

int nearest_of(const double* x, const std::vector<double>& pts, int n, int dim,
               double* dist_out) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double* p = &pts[static_cast<std::size_t>(i) * dim];
    double d = 0.0;
    for (int j = 0; j < dim; ++j) {
      const double t = x[j] - p[j];
      d += t * t;
    }
    if (d < best_d) {  // strict: ties keep the lowest index
      best_d = d;
      best = i;
    }
  }
  if (dist_out) *dist_out = best_d;
  return best;
}

}  // namespace

GridND build_grid_nd(int dim, int n, std::uint64_t seed,
                     const GridNDOptions& opts) {
  if (dim < 1) throw ConfigError("build_grid_nd: dim must be >= 1");
  if (n < 1) throw ConfigError("build_grid_nd: n must be >= 1");
  if (opts.n_samples < static_cast<std::size_t>(n)) {
    throw ConfigError("build_grid_nd: need at least n samples");
  }
  if (opts.sweeps < 1) throw ConfigError("build_grid_nd: sweeps must be >= 1");

  const std::size_t ns = opts.n_samples;
  const std::size_t d = static_cast<std::size_t>(dim);

  // Fixed sample pool, addressed by (seed, sample, 0, component).
  std::vector<double> samples(ns * d);
  parallel_chunks(ns, kChunk, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t s = b; s < e; ++s) {
      for (std::size_t j = 0; j < d; ++j) {
        samples[s * d + j] =
            rng_normal(seed, s, 0, static_cast<std::uint32_t>(j));
      }
    }
  });

  GridND grid;
  grid.dim = dim;
  grid.seed = seed;
  grid.points.assign(samples.begin(),
                     samples.begin() + static_cast<std::ptrdiff_t>(n * d));
  grid.weights.assign(static_cast<std::size_t>(n), 0.0);

  const std::size_t n_chunks = (ns + kChunk - 1) / kChunk;
  std::vector<ChunkAccum> acc(n_chunks);

  // One assignment pass. Per-chunk accumulators merged in chunk order keep
  // the result independent of the worker count.
  auto assign = [&](std::vector<double>& sums, std::vector<std::int64_t>& cnts,
                    double& dist_mean, double& worst_dist,
                    std::size_t& worst_sample) {
    parallel_chunks(ns, kChunk, [&](std::size_t c, std::size_t b,
                                    std::size_t e) {
      ChunkAccum& a = acc[c];
      a.sums.assign(grid.points.size(), 0.0);
      a.counts.assign(static_cast<std::size_t>(n), 0);
      a.dist = 0.0;
      a.worst_dist = -1.0;
      a.worst_sample = b;
      for (std::size_t s = b; s < e; ++s) {
        double ds = 0.0;
        const int i = nearest_of(&samples[s * d], grid.points, n, dim, &ds);
        const std::size_t ui = static_cast<std::size_t>(i);
        for (std::size_t j = 0; j < d; ++j) {
          a.sums[ui * d + j] += samples[s * d + j];
        }
        ++a.counts[ui];
        a.dist += ds;
        if (ds > a.worst_dist) {
          a.worst_dist = ds;
          a.worst_sample = s;
        }
      }
    });
    sums.assign(grid.points.size(), 0.0);
    cnts.assign(static_cast<std::size_t>(n), 0);
    double dist = 0.0;
    worst_dist = -1.0;
    worst_sample = 0;
    for (std::size_t c = 0; c < n_chunks; ++c) {
      for (std::size_t k = 0; k < sums.size(); ++k) sums[k] += acc[c].sums[k];
      for (std::size_t i = 0; i < cnts.size(); ++i) cnts[i] += acc[c].counts[i];
      dist += acc[c].dist;
      if (acc[c].worst_dist > worst_dist) {
        worst_dist = acc[c].worst_dist;
        worst_sample = acc[c].worst_sample;
      }
    }
    dist_mean = dist / static_cast<double>(ns);
  };

  std::vector<double> sums;
  std::vector<std::int64_t> counts;
  for (int sweep = 0; sweep < opts.sweeps; ++sweep) {
    double dist_mean = 0.0, worst = 0.0;
    std::size_t worst_sample = 0;
    assign(sums, counts, dist_mean, worst, worst_sample);
    grid.sweep_distortion.push_back(dist_mean);

    // Centroid update. An empty cell is re-seeded at the pool sample
    // farthest from its assigned point; with several empty cells, the
    // farthest samples are taken in decreasing order of distance.
    std::vector<int> empty;
    for (int i = 0; i < n; ++i) {
      if (counts[static_cast<std::size_t>(i)] == 0) empty.push_back(i);
    }
    if (!empty.empty()) {
      std::vector<std::pair<double, std::size_t>> far;  // (-dist, sample)
      for (std::size_t s = 0; s < ns; ++s) {
        double ds = 0.0;
        (void)nearest_of(&samples[s * d], grid.points, n, dim, &ds);
        far.emplace_back(-ds, s);
      }
      std::partial_sort(far.begin(), far.begin() + empty.size(), far.end());
      for (std::size_t k = 0; k < empty.size(); ++k) {
        const std::size_t s = far[k].second;
        for (std::size_t j = 0; j < d; ++j) {
          grid.points[static_cast<std::size_t>(empty[k]) * d + j] =
              samples[s * d + j];
        }
        ++grid.empty_cell_resets;
      }
    }
    for (int i = 0; i < n; ++i) {
      const std::size_t ui = static_cast<std::size_t>(i);
      if (counts[ui] == 0) continue;  // just re-seeded
      for (std::size_t j = 0; j < d; ++j) {
        grid.points[ui * d + j] = sums[ui * d + j] / counts[ui];
      }
    }
  }

  // Final assignment against the final points gives the published weights
  // and distortion estimate.
  double dist_mean = 0.0, worst = 0.0;
  std::size_t worst_sample = 0;
  assign(sums, counts, dist_mean, worst, worst_sample);
  grid.sweep_distortion.push_back(dist_mean);
  grid.distortion2_estimate = dist_mean;
  for (int i = 0; i < n; ++i) {
    grid.weights[static_cast<std::size_t>(i)] =
        counts[static_cast<std::size_t>(i)] / static_cast<double>(ns);
  }
  return grid;
}

int nearest_cell(const GridND& grid, const double* x) {
  return nearest_of(x, grid.points, static_cast<int>(grid.size()), grid.dim,
                    nullptr);
}

void save_grid_nd(const GridND& grid, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("save_grid_nd: cannot open " + path);
  out << grid.dim << " " << grid.size() << " " << grid.seed << "\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out << fmt17(grid.weights[i]);
    for (int j = 0; j < grid.dim; ++j) {
      out << " " << fmt17(grid.point(i)[j]);
    }
    out << "\n";
  }
  if (!out) throw ConfigError("save_grid_nd: write failed for " + path);
}

GridND load_grid_nd(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_grid_nd: cannot open " + path);
  long long dim = 0, n = 0;
  std::uint64_t seed = 0;
  if (!(in >> dim >> n >> seed) || dim < 1 || n < 1) {
    throw ConfigError("load_grid_nd: bad header in " + path);
  }
  GridND grid;
  grid.dim = static_cast<int>(dim);
  grid.seed = seed;
  grid.weights.resize(static_cast<std::size_t>(n));
  grid.points.resize(static_cast<std::size_t>(n * dim));
  grid.distortion2_estimate = std::numeric_limits<double>::quiet_NaN();
  for (long long i = 0; i < n; ++i) {
    std::string tok;
    if (!(in >> tok)) throw ConfigError("load_grid_nd: truncated " + path);
    grid.weights[static_cast<std::size_t>(i)] = parse_double(tok, path);
    for (long long j = 0; j < dim; ++j) {
      if (!(in >> tok)) throw ConfigError("load_grid_nd: truncated " + path);
      grid.points[static_cast<std::size_t>(i * dim + j)] =
          parse_double(tok, path);
    }
  }
  double wsum = 0.0;
  for (double w : grid.weights) wsum += w;
  if (std::abs(wsum - 1.0) > 1e-9) {
    throw ConfigError("load_grid_nd: weights do not sum to 1 in " + path);
  }
  return grid;
}

GridND grid_from_1d(const Grid1D& g) {
  GridND grid;
  grid.dim = 1;
  grid.points = g.points;
  grid.weights = g.weights;
  grid.distortion2_estimate = g.distortion2;
  return grid;
}

}  // namespace quantis
