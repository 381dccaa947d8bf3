#include "quantis/models.hpp"

#include <algorithm>
#include <cmath>

#include "quantis/errors.hpp"

namespace quantis {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool ok, const char* msg) {
  if (!ok) throw ConfigError(msg);
}

bool finite_all(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(),
                     [](double x) { return std::isfinite(x); });
}

bool positive_all(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x > 0.0; });
}

bool nonneg_all(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x >= 0.0; });
}

double schwartz_mu(const SchwartzModel& m, int j) {
  return m.alpha[static_cast<std::size_t>(j)] -
         m.sigma[static_cast<std::size_t>(j)] *
             m.sigma[static_cast<std::size_t>(j)] /
             (2.0 * m.theta[static_cast<std::size_t>(j)]);
}

// Nearest grid node to t, required to sit within rounding of t.
std::size_t locate_date(const std::vector<double>& grid, double t, double tol) {
  auto it = std::lower_bound(grid.begin(), grid.end(), t - tol);
  if (it == grid.end() || std::abs(*it - t) > tol) {
    throw ConfigError("observation date does not sit on the simulation grid");
  }
  return static_cast<std::size_t>(it - grid.begin());
}

}  // namespace

int model_dim(const ModelSpec& model) {
  return std::visit(
      overloaded{[](const BlackScholesModel& m) {
                   return static_cast<int>(m.sigma.size());
                 },
                 [](const SchwartzModel& m) {
                   return static_cast<int>(m.theta.size());
                 },
                 [](const LocalVolModel&) { return 1; }},
      model);
}

double model_rate(const ModelSpec& model) {
  return std::visit([](const auto& m) { return m.r; }, model);
}

void validate_model(const ModelSpec& model) {
  std::visit(
      overloaded{
          [](const BlackScholesModel& m) {
            require(std::isfinite(m.r), "rate must be finite");
            require(!m.sigma.empty(), "need at least one asset");
            require(m.sigma.size() == m.s0.size(),
                    "one vol and one initial price per asset");
            require(finite_all(m.sigma) && nonneg_all(m.sigma),
                    "vols must be finite and nonnegative");
            require(finite_all(m.s0) && positive_all(m.s0),
                    "initial prices must be positive");
          },
          [](const SchwartzModel& m) {
            require(std::isfinite(m.r), "rate must be finite");
            require(!m.theta.empty(), "need at least one asset");
            require(m.theta.size() == m.alpha.size() &&
                        m.theta.size() == m.sigma.size() &&
                        m.theta.size() == m.s0.size(),
                    "theta, alpha, sigma, S0 must have one entry per asset");
            require(finite_all(m.theta) && positive_all(m.theta),
                    "mean-reversion rates must be positive");
            require(finite_all(m.alpha), "alpha must be finite");
            require(finite_all(m.sigma) && nonneg_all(m.sigma),
                    "vols must be finite and nonnegative");
            require(finite_all(m.s0) && positive_all(m.s0),
                    "initial prices must be positive");
          },
          [](const LocalVolModel& m) {
            require(std::isfinite(m.r), "rate must be finite");
            require(std::isfinite(m.sigma_tilde) && m.sigma_tilde >= 0.0,
                    "vol scale must be finite and nonnegative");
            require(std::isfinite(m.beta) && m.beta >= 0.0,
                    "beta must be finite and nonnegative");
            require(std::isfinite(m.x0) && m.x0 > 0.0,
                    "initial state must be positive");
          }},
      model);
}

void gaussian_to_terminal(const ModelSpec& model, const double* z, double T,
                          double* out) {
  if (T <= 0.0) throw ConfigError("horizon must be positive");
  std::visit(
      overloaded{
          [&](const BlackScholesModel& m) {
            for (std::size_t i = 0; i < m.sigma.size(); ++i) {
              const double sig = m.sigma[i];
              out[i] = m.s0[i] * std::exp((m.r - 0.5 * sig * sig) * T +
                                          sig * std::sqrt(T) * z[i]);
            }
          },
          [&](const SchwartzModel& m) {
            for (std::size_t j = 0; j < m.theta.size(); ++j) {
              const double th = m.theta[j];
              const double decay = std::exp(-th * T);
              const double mean_log =
                  decay * std::log(m.s0[j]) +
                  schwartz_mu(m, static_cast<int>(j)) * (1.0 - decay);
              const double sd =
                  m.sigma[j] * std::sqrt((1.0 - decay * decay) / (2.0 * th));
              out[j] = std::exp(mean_log + sd * z[j]);
            }
          },
          [](const LocalVolModel&) {
            throw ConfigError(
                "local-vol model has no exact terminal law; use path "
                "simulation");
          }},
      model);
}

std::vector<double> gaussian_to_terminal(const ModelSpec& model,
                                         const std::vector<double>& z,
                                         double T) {
  if (static_cast<int>(z.size()) != model_dim(model)) {
    throw ConfigError("normal vector length does not match the model");
  }
  std::vector<double> out(z.size());
  gaussian_to_terminal(model, z.data(), T, out.data());
  return out;
}

bool payoff_on_paths(const PayoffSpec& payoff) {
  return std::visit(
      overloaded{[](const BasketPayoff&) { return false; },
                 [](const SparkSpreadPayoff&) { return false; },
                 [](const AsianPayoff&) { return true; },
                 [](const DownInCallPayoff&) { return true; }},
      payoff);
}

void validate_payoff(const PayoffSpec& payoff, int dim) {
  std::visit(
      overloaded{
          [&](const BasketPayoff& p) {
            require(!p.weights.empty(), "basket needs weights");
            require(static_cast<int>(p.weights.size()) == dim,
                    "one basket weight per asset");
            require(finite_all(p.weights), "basket weights must be finite");
            require(std::isfinite(p.strike), "strike must be finite");
          },
          [&](const SparkSpreadPayoff& p) {
            require(dim == 2, "spark spread needs exactly two assets");
            require(std::isfinite(p.heat_rate) && std::isfinite(p.cost),
                    "heat rate and cost must be finite");
          },
          [&](const AsianPayoff& p) {
            require(dim == 1, "asian payoff covers a single asset");
            require(p.observations >= 1, "need at least one observation date");
            require(std::isfinite(p.strike), "strike must be finite");
          },
          [&](const DownInCallPayoff& p) {
            require(dim == 1, "down-in call covers a single asset");
            require(std::isfinite(p.strike) && std::isfinite(p.barrier),
                    "strike and barrier must be finite");
          }},
      payoff);
}

double payoff_eval(const PayoffSpec& payoff, const std::vector<double>& terminal,
                   double r, double T) {
  return std::visit(
      overloaded{
          [&](const BasketPayoff& p) {
            if (terminal.size() != p.weights.size()) {
              throw ConfigError("terminal state does not match basket size");
            }
            double v = -p.strike;
            for (std::size_t i = 0; i < p.weights.size(); ++i) {
              v += p.weights[i] * terminal[i];
            }
            return std::exp(-r * T) * std::max(v, 0.0);
          },
          [&](const SparkSpreadPayoff& p) {
            if (terminal.size() != 2) {
              throw ConfigError("spark spread needs a two-asset state");
            }
            const double v = terminal[0] - p.heat_rate * terminal[1] - p.cost;
            return std::exp(-r * T) * std::max(v, 0.0);
          },
          [&](const AsianPayoff&) -> double {
            throw ConfigError("asian payoff needs a path, not a state");
          },
          [&](const DownInCallPayoff&) -> double {
            throw ConfigError("down-in call needs a path, not a state");
          }},
      payoff);
}

double payoff_eval(const PayoffSpec& payoff, const std::vector<double>& time_grid,
                   const std::vector<double>& path, double r, double T) {
  if (time_grid.size() != path.size() || time_grid.size() < 2) {
    throw ConfigError("path and time grid must match and hold >= 2 nodes");
  }
  return std::visit(
      overloaded{
          [&](const BasketPayoff&) -> double {
            throw ConfigError("basket payoff needs a terminal state");
          },
          [&](const SparkSpreadPayoff&) -> double {
            throw ConfigError("spark spread needs a terminal state");
          },
          [&](const AsianPayoff& p) {
            const double tol = 1e-9 * std::max(T, 1.0);
            double avg = 0.0;
            for (int k = 0; k < p.observations; ++k) {
              const double t = static_cast<double>(k) * T /
                               static_cast<double>(p.observations);
              avg += path[locate_date(time_grid, t, tol)];
            }
            avg /= static_cast<double>(p.observations);
            return std::exp(-r * T) * std::max(avg - p.strike, 0.0);
          },
          [&](const DownInCallPayoff& p) {
            const double terminal = path.back();
            const double low = *std::min_element(path.begin(), path.end());
            const double gain = std::max(terminal - p.strike, 0.0);
            return low <= p.barrier ? std::exp(-r * T) * gain : 0.0;
          }},
      payoff);
}

double bridge_survival(double x_k, double x_k1, double L, double dt,
                       double sig) {
  if (!(dt > 0.0)) throw ConfigError("bridge step must be positive");
  if (!(sig >= 0.0)) throw ConfigError("bridge vol must be nonnegative");
  if (sig == 0.0) return (x_k > L && x_k1 > L) ? 1.0 : 0.0;
  if (L > std::min(x_k, x_k1)) return 0.0;
  // (L - x_k)(L - x_k1) >= 0 here, so the exponent is <= 0.
  const double expo = -2.0 * (L - x_k) * (L - x_k1) / (dt * sig * sig);
  return -std::expm1(expo);
}

double dic_smoothed_payoff(const std::vector<double>& time_grid,
                           const std::vector<double>& path, double strike,
                           double barrier, double r, double T,
                           const std::function<double(double)>& vol) {
  if (!vol) throw ConfigError("smoothed payoff needs a vol function");
  if (time_grid.size() != path.size() || time_grid.size() < 2) {
    throw ConfigError("path and time grid must match and hold >= 2 nodes");
  }
  const double intrinsic = std::max(path.back() - strike, 0.0);
  if (intrinsic == 0.0) return 0.0;
  double survival = 1.0;
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    survival *= bridge_survival(path[k], path[k + 1], barrier,
                                time_grid[k + 1] - time_grid[k], vol(path[k]));
    if (survival == 0.0) break;
  }
  return std::exp(-r * T) * intrinsic * (1.0 - survival);
}

double spot_vol(const ModelSpec& model, double s) {
  if (model_dim(model) != 1) {
    throw ConfigError("spot vol is defined for single-asset models");
  }
  return std::visit(
      overloaded{[&](const BlackScholesModel& m) { return m.sigma[0] * s; },
                 [&](const SchwartzModel& m) { return m.sigma[0] * s; },
                 [&](const LocalVolModel& m) {
                   return m.sigma_tilde * std::pow(s, 1.0 + m.beta) /
                          std::sqrt(1.0 + s * s);
                 }},
      model);
}

DiffusionODE PathModel::ode() const {
  DiffusionODE ode;
  ode.drift = drift;
  ode.vol = vol;
  ode.vol_prime = vol_prime;
  ode.domain_min = domain_min;
  return ode;
}

PathModel path_model(const ModelSpec& model) {
  validate_model(model);
  if (model_dim(model) != 1) {
    throw ConfigError("path simulation covers one driving noise");
  }
  PathModel pm;
  pm.rate = model_rate(model);
  std::visit(
      overloaded{
          [&](const BlackScholesModel& m) {
            const double mu = m.r - 0.5 * m.sigma[0] * m.sigma[0];
            const double sig = m.sigma[0];
            pm.z0 = std::log(m.s0[0]);
            pm.drift = [mu](double) { return mu; };
            pm.vol = [sig](double) { return sig; };
            pm.vol_prime = [](double) { return 0.0; };
            pm.spot = [](double, double z) { return std::exp(z); };
          },
          [&](const SchwartzModel& m) {
            const double th = m.theta[0];
            const double mu = schwartz_mu(m, 0);
            const double sig = m.sigma[0];
            pm.z0 = std::log(m.s0[0]);
            pm.drift = [th, mu](double z) { return th * (mu - z); };
            pm.vol = [sig](double) { return sig; };
            pm.vol_prime = [](double) { return 0.0; };
            pm.spot = [](double, double z) { return std::exp(z); };
          },
          [&](const LocalVolModel& m) {
            const double st = m.sigma_tilde;
            const double beta = m.beta;
            const double r = m.r;
            pm.z0 = m.x0;
            pm.domain_min = 0.0;
            pm.drift = [r](double x) { return r * x; };
            pm.vol = [st, beta](double x) {
              return st * std::pow(x, 1.0 + beta) / std::sqrt(1.0 + x * x);
            };
            pm.vol_prime = [st, beta](double x) {
              const double one = 1.0 + x * x;
              return st * std::pow(x, beta) * ((1.0 + beta) + beta * x * x) /
                     (one * std::sqrt(one));
            };
            pm.spot = [](double, double x) { return x; };
          }},
      model);
  return pm;
}

ProductQuantizer model_quantizer(const ModelSpec& model, double T,
                                 const std::vector<int>& decomposition) {
  validate_model(model);
  if (model_dim(model) != 1) {
    throw ConfigError("quantized paths cover one driving noise");
  }
  if (const auto* m = std::get_if<SchwartzModel>(&model)) {
    if (m->sigma[0] <= 0.0) {
      throw ConfigError("quantized paths need a positive vol");
    }
    return build_ou_quantizer(T, m->theta[0], m->sigma[0], decomposition);
  }
  return build_brownian_quantizer(T, decomposition);
}

QuantizedEnsemble quantized_spot_ensemble(const ModelSpec& model,
                                          const ProductQuantizer& q,
                                          const std::vector<double>& time_grid,
                                          int rk_stages) {
  validate_model(model);
  if (model_dim(model) != 1) {
    throw ConfigError("quantized paths cover one driving noise");
  }
  if (time_grid.size() < 2) throw ConfigError("time grid needs >= 2 nodes");
  const double T = time_grid.back();
  if (std::abs(q.T - T) > 1e-12 * std::max(1.0, T)) {
    throw ConfigError("quantizer horizon differs from the time grid");
  }
  return std::visit(
      overloaded{
          [&](const BlackScholesModel& m) {
            if (q.kind != ProcessKind::brownian) {
              throw ConfigError("this model consumes a Brownian quantizer");
            }
            return bs_exponential_paths(q, m.r, m.sigma[0], m.s0[0], time_grid);
          },
          [&](const SchwartzModel& m) {
            if (q.kind != ProcessKind::ornstein_uhlenbeck ||
                std::abs(q.ou_theta - m.theta[0]) > 1e-12 ||
                std::abs(q.ou_sigma - m.sigma[0]) > 1e-12) {
              throw ConfigError(
                  "this model consumes an Ornstein-Uhlenbeck quantizer with "
                  "its own reversion speed and vol");
            }
            const double th = m.theta[0];
            const double mu = schwartz_mu(m, 0);
            const double logs0 = std::log(m.s0[0]);
            return map_quantizer_paths(
                q, time_grid, [th, mu, logs0](double t, double y) {
                  const double decay = std::exp(-th * t);
                  return std::exp(logs0 * decay + mu * (1.0 - decay) + y);
                });
          },
          [&](const LocalVolModel& m) {
            if (q.kind != ProcessKind::brownian) {
              throw ConfigError("this model consumes a Brownian quantizer");
            }
            PathModel pm = path_model(model);
            return quantize_diffusion(pm.ode(), m.x0, q, time_grid, rk_stages);
          }},
      model);
}

QuantizedEnsemble quantized_spot_ensemble(const ModelSpec& model,
                                          const std::vector<int>& decomposition,
                                          const std::vector<double>& time_grid,
                                          int rk_stages) {
  if (time_grid.size() < 2) throw ConfigError("time grid needs >= 2 nodes");
  ProductQuantizer q =
      model_quantizer(model, time_grid.back(), decomposition);
  return quantized_spot_ensemble(model, q, time_grid, rk_stages);
}

std::function<double(const double*)> finite_payoff(const ModelSpec& model,
                                                   const PayoffSpec& payoff,
                                                   double T) {
  validate_model(model);
  validate_payoff(payoff, model_dim(model));
  if (payoff_on_paths(payoff)) {
    throw ConfigError("path payoff cannot run on the finite pipeline");
  }
  if (std::holds_alternative<LocalVolModel>(model)) {
    throw ConfigError(
        "local-vol model has no exact terminal law; use path simulation");
  }
  const double r = model_rate(model);
  const int d = model_dim(model);
  return [model, payoff, r, T, d](const double* z) {
    std::vector<double> state(static_cast<std::size_t>(d));
    gaussian_to_terminal(model, z, T, state.data());
    return payoff_eval(payoff, state, r, T);
  };
}

std::function<double(const std::vector<double>&, const std::vector<double>&)>
path_payoff(const ModelSpec& model, const PayoffSpec& payoff) {
  validate_model(model);
  validate_payoff(payoff, model_dim(model));
  if (!payoff_on_paths(payoff)) {
    throw ConfigError("terminal payoff cannot run on the path pipeline");
  }
  const double r = model_rate(model);
  if (const auto* dic = std::get_if<DownInCallPayoff>(&payoff)) {
    const DownInCallPayoff p = *dic;
    return [model, p, r](const std::vector<double>& grid,
                         const std::vector<double>& path) {
      return dic_smoothed_payoff(grid, path, p.strike, p.barrier, r,
                                 grid.back(),
                                 [&](double s) { return spot_vol(model, s); });
    };
  }
  const PayoffSpec copy = payoff;
  return [copy, r](const std::vector<double>& grid,
                   const std::vector<double>& path) {
    return payoff_eval(copy, grid, path, r, grid.back());
  };
}

}  // namespace quantis
