#include "quantis/mc_engine.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "quantis/accum.hpp"
#include "quantis/errors.hpp"
#include "quantis/io.hpp"
#include "quantis/parallel.hpp"
#include "quantis/rng.hpp"

namespace quantis {

namespace {

constexpr std::size_t kTerminalChunk = 8192;
constexpr std::size_t kPathChunk = 4096;

struct ChunkSums {
  NeumaierSum sum;
  NeumaierSum sum2;
  long long floored = 0;
};

// Merge in chunk-index order; the layout is thread-count independent.
MCResult reduce(const std::vector<ChunkSums>& parts, long long n,
                std::uint64_t seed) {
  NeumaierSum total, total2;
  long long floored = 0;
  for (const ChunkSums& p : parts) {
    total.merge(p.sum);
    total2.merge(p.sum2);
    floored += p.floored;
  }
  MCResult res;
  res.n = n;
  res.seed = seed;
  res.floored_steps = floored;
  const double mean = total.value() / static_cast<double>(n);
  const double mean2 = total2.value() / static_cast<double>(n);
  res.estimate = mean;
  res.sample_variance = std::max(0.0, mean2 - mean * mean);
  res.std_error = std::sqrt(res.sample_variance / static_cast<double>(n));
  return res;
}

void check_run(double T, long long n) {
  if (!(T > 0.0)) throw ConfigError("horizon must be positive");
  if (n < 2) throw ConfigError("need at least two samples");
}

// Exact-terminal-law kernel shared by the crude and translated estimators;
// theta = nullptr skips the translation with a weight of exactly one.
MCResult run_terminal(const ModelSpec& model, const PayoffSpec& payoff,
                      const ThetaFinite* theta, double T, long long n,
                      std::uint64_t seed) {
  check_run(T, n);
  validate_model(model);
  const int d = model_dim(model);
  validate_payoff(payoff, d);
  if (payoff_on_paths(payoff)) {
    throw ConfigError("path payoff needs the path kernel");
  }
  if (std::holds_alternative<LocalVolModel>(model)) {
    throw ConfigError(
        "local-vol model has no exact terminal law; use path simulation");
  }
  if (theta && theta->size() != d) {
    throw ConfigError("theta dimension does not match the model");
  }
  const double r = model_rate(model);
  const double half_norm2 = theta ? 0.5 * theta->squaredNorm() : 0.0;

  const std::size_t total = static_cast<std::size_t>(n);
  std::vector<ChunkSums> parts((total + kTerminalChunk - 1) / kTerminalChunk);
  parallel_chunks(total, kTerminalChunk,
                  [&](std::size_t ci, std::size_t begin, std::size_t end) {
                    std::vector<double> z(static_cast<std::size_t>(d));
                    std::vector<double> state(static_cast<std::size_t>(d));
                    ChunkSums acc;
                    for (std::size_t i = begin; i < end; ++i) {
                      double logw = 0.0;
                      for (int j = 0; j < d; ++j) {
                        z[static_cast<std::size_t>(j)] = rng_normal(
                            seed, i, 0, static_cast<std::uint32_t>(j));
                      }
                      if (theta) {
                        double dot = 0.0;
                        for (int j = 0; j < d; ++j) {
                          dot += (*theta)[j] * z[static_cast<std::size_t>(j)];
                          z[static_cast<std::size_t>(j)] += (*theta)[j];
                        }
                        logw = -dot - half_norm2;
                      }
                      gaussian_to_terminal(model, z.data(), T, state.data());
                      const double v =
                          payoff_eval(payoff, state, r, T) * std::exp(logw);
                      acc.sum.add(v);
                      acc.sum2.add(v * v);
                    }
                    parts[ci] = acc;
                  });
  return reduce(parts, n, seed);
}

// Euler kernel in the model's state variable; theta = nullptr runs the
// unweighted chain on the same draws.
MCResult run_path(const ModelSpec& model, const PayoffSpec& payoff,
                  const ThetaPath* theta, double T, long long n,
                  std::uint64_t seed, int steps) {
  check_run(T, n);
  validate_model(model);
  validate_payoff(payoff, model_dim(model));
  if (steps < 1) throw ConfigError("need at least one Euler step");
  const PathModel pm = path_model(model);
  const std::vector<double> grid = uniform_time_grid(T, steps);
  const double dt = T / static_cast<double>(steps);
  const double sqdt = std::sqrt(dt);
  const double r = pm.rate;
  const bool on_paths = payoff_on_paths(payoff);
  const auto F = on_paths
                     ? path_payoff(model, payoff)
                     : std::function<double(const std::vector<double>&,
                                            const std::vector<double>&)>{};

  // theta is deterministic: tabulate the drift once, at the left nodes.
  std::vector<double> u;
  if (theta) {
    if (std::abs(theta->basis.T - T) > 1e-12 * T) {
      throw ConfigError("theta basis horizon does not match the run");
    }
    u.resize(static_cast<std::size_t>(steps));
    for (int k = 0; k < steps; ++k) {
      u[static_cast<std::size_t>(k)] = (*theta)(grid[static_cast<std::size_t>(k)]);
    }
  }

  const bool floored_state = std::isfinite(pm.domain_min);
  const double floor_val =
      pm.domain_min + std::numeric_limits<double>::epsilon() *
                          std::max(1.0, std::abs(pm.domain_min));

  const std::size_t total = static_cast<std::size_t>(n);
  std::vector<ChunkSums> parts((total + kPathChunk - 1) / kPathChunk);
  parallel_chunks(
      total, kPathChunk, [&](std::size_t ci, std::size_t begin, std::size_t end) {
        std::vector<double> spot(static_cast<std::size_t>(steps) + 1);
        std::vector<double> terminal(1);
        ChunkSums acc;
        for (std::size_t i = begin; i < end; ++i) {
          double z = pm.z0;
          double logw = 0.0;
          spot[0] = pm.spot(0.0, z);
          for (int k = 0; k < steps; ++k) {
            const double dw =
                sqdt * rng_normal(seed, i, static_cast<std::uint64_t>(k), 0);
            if (theta) {
              const double uk = u[static_cast<std::size_t>(k)];
              z += pm.drift(z) * dt + pm.vol(z) * (uk * dt + dw);
              logw -= uk * dw + 0.5 * uk * uk * dt;
            } else {
              z += pm.drift(z) * dt + pm.vol(z) * dw;
            }
            if (floored_state && !(z > pm.domain_min)) {
              z = floor_val;
              ++acc.floored;
            }
            spot[static_cast<std::size_t>(k) + 1] =
                pm.spot(grid[static_cast<std::size_t>(k) + 1], z);
          }
          double f;
          if (on_paths) {
            f = F(grid, spot);
          } else {
            terminal[0] = spot.back();
            f = payoff_eval(payoff, terminal, r, T);
          }
          const double v = f * std::exp(logw);
          acc.sum.add(v);
          acc.sum2.add(v * v);
        }
        parts[ci] = acc;
      });
  return reduce(parts, n, seed);
}

}  // namespace

MCResult price_crude(const ModelSpec& model, const PayoffSpec& payoff, double T,
                     long long n, std::uint64_t seed, int steps) {
  if (payoff_on_paths(payoff) ||
      std::holds_alternative<LocalVolModel>(model)) {
    return run_path(model, payoff, nullptr, T, n, seed, steps);
  }
  return run_terminal(model, payoff, nullptr, T, n, seed);
}

MCResult price_is_finite(const ModelSpec& model, const PayoffSpec& payoff,
                         const ThetaFinite& theta, double T, long long n,
                         std::uint64_t seed) {
  MCResult res = run_terminal(model, payoff, &theta, T, n, seed);
  res.theta_used = theta;
  return res;
}

MCResult price_is_path(const ModelSpec& model, const PayoffSpec& payoff,
                       const ThetaPath& theta, double T, long long n,
                       std::uint64_t seed, int steps) {
  MCResult res = run_path(model, payoff, &theta, T, n, seed, steps);
  res.theta_used = theta;
  return res;
}

CompareReport compare(const ModelSpec& model, const PayoffSpec& payoff,
                      const std::variant<ThetaFinite, ThetaPath>& theta,
                      double T, long long n, std::uint64_t seed, int steps) {
  CompareReport rep;
  if (const auto* tf = std::get_if<ThetaFinite>(&theta)) {
    rep.crude = run_terminal(model, payoff, nullptr, T, n, seed);
    rep.qis = price_is_finite(model, payoff, *tf, T, n, seed);
  } else {
    const ThetaPath& tp = std::get<ThetaPath>(theta);
    rep.crude = run_path(model, payoff, nullptr, T, n, seed, steps);
    rep.qis = price_is_path(model, payoff, tp, T, n, seed, steps);
  }
  if (rep.crude.sample_variance == rep.qis.sample_variance) {
    rep.variance_ratio = 1.0;
  } else {
    rep.variance_ratio = rep.crude.sample_variance / rep.qis.sample_variance;
  }
  return rep;
}

std::string mc_csv_row(const std::string& config_id, const std::string& kind,
                       const MCResult& result, const std::string& theta_ref) {
  std::ostringstream out;
  out << config_id << ',' << kind << ',' << fmt17(result.estimate) << ','
      << fmt17(result.sample_variance) << ',' << fmt17(result.std_error) << ','
      << result.n << ',' << result.seed << ',' << theta_ref;
  return out.str();
}

}  // namespace quantis
