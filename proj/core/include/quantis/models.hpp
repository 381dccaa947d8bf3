#ifndef QUANTIS_MODELS_HPP
#define QUANTIS_MODELS_HPP

#include <functional>
#include <limits>
#include <variant>
#include <vector>

#include "quantis/funcquant.hpp"

namespace quantis {

// Terminal law per asset: S_T = S0 exp((r - sigma^2/2)T + sigma sqrt(T) z).
struct BlackScholesModel {
  double r = 0.0;
  std::vector<double> sigma;
  std::vector<double> s0;
};

// Exponential Ornstein-Uhlenbeck spot: log S mean-reverts at rate theta
// towards mu = alpha - sigma^2/(2 theta). r only discounts; the SDE drift
// is pure mean reversion.
struct SchwartzModel {
  double r = 0.0;
  std::vector<double> theta;
  std::vector<double> alpha;
  std::vector<double> sigma;
  std::vector<double> s0;
};

// dX = r X dt + sigma_tilde X^{1+beta}/sqrt(1+X^2) dW. No closed terminal
// law; priced through path simulation. The state must stay positive.
struct LocalVolModel {
  double r = 0.0;
  double sigma_tilde = 0.0;
  double beta = 0.0;
  double x0 = 0.0;
};

using ModelSpec = std::variant<BlackScholesModel, SchwartzModel, LocalVolModel>;

int model_dim(const ModelSpec& model);
double model_rate(const ModelSpec& model);
void validate_model(const ModelSpec& model);

// Exact map from a standard normal vector (length model_dim) to the time-T
// asset state. local_vol has no exact map and throws ConfigError.
void gaussian_to_terminal(const ModelSpec& model, const double* z, double T,
                          double* out);
std::vector<double> gaussian_to_terminal(const ModelSpec& model,
                                         const std::vector<double>& z,
                                         double T);

struct BasketPayoff {
  std::vector<double> weights;
  double strike = 0.0;
};

// (S_e - heat_rate * S_g - cost)+ on a two-asset state (electricity, gas).
struct SparkSpreadPayoff {
  double heat_rate = 0.0;
  double cost = 0.0;
};

// Arithmetic average over the dates k T/p, k = 0..p-1.
struct AsianPayoff {
  double strike = 0.0;
  int observations = 0;
};

struct DownInCallPayoff {
  double strike = 0.0;
  double barrier = 0.0;
};

using PayoffSpec =
    std::variant<BasketPayoff, SparkSpreadPayoff, AsianPayoff, DownInCallPayoff>;

bool payoff_on_paths(const PayoffSpec& payoff);
void validate_payoff(const PayoffSpec& payoff, int dim);

// Discounted payoff of a terminal state (basket, spark spread only).
double payoff_eval(const PayoffSpec& payoff, const std::vector<double>& terminal,
                   double r, double T);

// Discounted payoff of one path on its time grid: asian average, or the
// down-in call with the plain discrete-minimum indicator.
double payoff_eval(const PayoffSpec& payoff, const std::vector<double>& time_grid,
                   const std::vector<double>& path, double r, double T);

// Probability that a Brownian bridge from x_k to x_k1 over dt with diffusion
// coefficient sig stays above L. Zero once an endpoint reaches L or the
// barrier separates the endpoints; sig = 0 degenerates to the indicator of
// both endpoints above L.
double bridge_survival(double x_k, double x_k1, double L, double dt, double sig);

// e^{-rT} (X_T - K)+ (1 - prod_k survival_k): the knock-in indicator replaced
// by the bridge crossing probability, one survival factor per grid cell,
// vol evaluated at the cell's left endpoint.
double dic_smoothed_payoff(const std::vector<double>& time_grid,
                           const std::vector<double>& path, double strike,
                           double barrier, double r, double T,
                           const std::function<double(double)>& vol);

// Diffusion coefficient of the spot itself (the bridge correction input).
// Single-asset models only.
double spot_vol(const ModelSpec& model, double s);

// One-dimensional state form dZ = drift(Z)dt + vol(Z)dW, S_t = spot(t, Z_t).
// BS and Schwartz move in log-spot (constant vol); local_vol in the spot.
struct PathModel {
  double z0 = 0.0;
  double rate = 0.0;
  double domain_min = -std::numeric_limits<double>::infinity();
  std::function<double(double)> drift;
  std::function<double(double)> vol;
  std::function<double(double)> vol_prime;
  std::function<double(double, double)> spot;

  DiffusionODE ode() const;
};

PathModel path_model(const ModelSpec& model);

// The process quantizer the model's path pipeline consumes: Brownian for
// black-scholes and local_vol, centered OU with the model's own reversion
// speed and vol for schwartz.
ProductQuantizer model_quantizer(const ModelSpec& model, double T,
                                 const std::vector<int>& decomposition);

// Quantized spot paths on time_grid: exact exponential for BS, the centered
// OU quantizer plus the log-spot transform for Schwartz, a Runge-Kutta solve
// for local_vol. The quantizer overload rejects a quantizer whose kind or
// parameters disagree with the model.
QuantizedEnsemble quantized_spot_ensemble(const ModelSpec& model,
                                          const ProductQuantizer& q,
                                          const std::vector<double>& time_grid,
                                          int rk_stages = 6);
QuantizedEnsemble quantized_spot_ensemble(const ModelSpec& model,
                                          const std::vector<int>& decomposition,
                                          const std::vector<double>& time_grid,
                                          int rk_stages = 6);

// Grid-point payoff F(z) for the finite-dimensional pipeline: exact terminal
// map, then the discounted payoff.
std::function<double(const double*)> finite_payoff(const ModelSpec& model,
                                                   const PayoffSpec& payoff,
                                                   double T);

// Path payoff F(time_grid, spot path); discount read off the model, horizon
// off the grid. The down-in call takes the smoothed bridge form.
std::function<double(const std::vector<double>&, const std::vector<double>&)>
path_payoff(const ModelSpec& model, const PayoffSpec& payoff);

}  // namespace quantis

#endif
