#ifndef QUANTIS_MC_ENGINE_HPP
#define QUANTIS_MC_ENGINE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <variant>

#include "quantis/isopt_path.hpp"
#include "quantis/models.hpp"

namespace quantis {

// Mean translation of the driving normal vector in the terminal pipeline.
using ThetaFinite = Eigen::VectorXd;

struct MCResult {
  double estimate = 0.0;
  double sample_variance = 0.0;  // population variance of per-sample values
  double std_error = 0.0;        // sqrt(sample_variance / n)
  long long n = 0;
  std::uint64_t seed = 0;
  long long floored_steps = 0;  // positivity-floor hits along Euler paths
  std::variant<std::monostate, ThetaFinite, ThetaPath> theta_used;
};

// Plain Monte Carlo. Terminal payoffs (basket, spark spread) sample the
// exact time-T law; path payoffs run an Euler scheme with `steps` steps.
// The per-sample stream is derived from (seed, sample index), so results
// never depend on the thread count.
MCResult price_crude(const ModelSpec& model, const PayoffSpec& payoff, double T,
                     long long n, std::uint64_t seed, int steps = 100);

// Importance sampling by mean translation: E[F(map(z + theta)) w(z)] with
// w = exp(-<theta, z> - |theta|^2/2). theta = 0 reproduces price_crude
// bit for bit under the same seed.
MCResult price_is_finite(const ModelSpec& model, const PayoffSpec& payoff,
                         const ThetaFinite& theta, double T, long long n,
                         std::uint64_t seed);

// Importance sampling by a deterministic drift theta(t) on the driving
// Brownian motion: Euler with drift b + sigma theta and the discrete
// Girsanov weight exp(-sum theta(t_k) dW_k - 1/2 sum theta(t_k)^2 dt),
// which is exactly unbiased for the discretized chain. Zero coefficients
// reproduce price_crude bit for bit. Terminal payoffs are allowed and read
// the path's final spot.
MCResult price_is_path(const ModelSpec& model, const PayoffSpec& payoff,
                       const ThetaPath& theta, double T, long long n,
                       std::uint64_t seed, int steps = 100);

struct CompareReport {
  MCResult crude;
  MCResult qis;
  double variance_ratio = 0.0;  // crude variance / QIS variance
};

// Paired-seed comparison: both estimators run through the same kernel
// (terminal for ThetaFinite, path for ThetaPath) on identical draws.
CompareReport compare(const ModelSpec& model, const PayoffSpec& payoff,
                      const std::variant<ThetaFinite, ThetaPath>& theta,
                      double T, long long n, std::uint64_t seed,
                      int steps = 100);

// One CSV row: config id, estimator kind, price, variance, stderr, n, seed,
// theta reference.
std::string mc_csv_row(const std::string& config_id, const std::string& kind,
                       const MCResult& result, const std::string& theta_ref);

}  // namespace quantis

#endif
