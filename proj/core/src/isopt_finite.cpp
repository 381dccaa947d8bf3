#include "quantis/isopt_finite.hpp"

#include <cmath>

#include "quantis/errors.hpp"
#include "quantis/parallel.hpp"

namespace quantis {

FiniteObjective::FiniteObjective(const GridND& grid, const PayoffFn& payoff,
                                 std::shared_ptr<const DensityModel> density)
    : d_(grid.dim), density_(std::move(density)) {
  if (!payoff) throw ConfigError("objective needs a payoff");
  if (!density_) throw ConfigError("objective needs a density");
  if (density_->dim() != d_) {
    throw ConfigError("density dimension does not match the grid");
  }
  const std::size_t n = grid.size();
  if (n == 0) throw ConfigError("objective needs a nonempty grid");
  points_ = grid.points;
  wf2_.resize(n);
  log_p_.resize(n);
  Eigen::VectorXd x(d_);
  bool any_active = false;
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < d_; ++j) x[j] = points_[i * d_ + j];
    const double f = payoff(grid.point(i));
    if (!std::isfinite(f)) throw NumericalError("payoff not finite on grid");
    wf2_[i] = grid.weights[i] * f * f;
    log_p_[i] = density_->log_density(x);
    any_active = any_active || wf2_[i] != 0.0;
  }
  if (!any_active) {
    throw DegenerateObjectiveError(
        "payoff vanishes on every grid cell; objective is constant");
  }
}

double FiniteObjective::eval(const Eigen::VectorXd& theta,
                             Eigen::VectorXd* grad,
                             Eigen::MatrixXd* hess) const {
  if (theta.size() != d_) throw ConfigError("theta dimension mismatch");
  const std::size_t n = wf2_.size();
  constexpr std::size_t kChunk = 4096;
  const std::size_t n_chunks = (n + kChunk - 1) / kChunk;

  struct Part {
    double v = 0.0;
    Eigen::VectorXd g;
    Eigen::MatrixXd h;
  };
  std::vector<Part> parts(n_chunks);

  parallel_chunks(n, kChunk, [&](std::size_t ci, std::size_t begin,
                                 std::size_t end) {
    Part part;
    if (grad) part.g = Eigen::VectorXd::Zero(d_);
    if (hess) part.h = Eigen::MatrixXd::Zero(d_, d_);
    Eigen::VectorXd u(d_);
    for (std::size_t i = begin; i < end; ++i) {
      if (wf2_[i] == 0.0) continue;
      for (int j = 0; j < d_; ++j) u[j] = points_[i * d_ + j] - theta[j];
      const double term = wf2_[i] * std::exp(log_p_[i] - density_->log_density(u));
      part.v += term;
      if (grad || hess) {
        const Eigen::VectorXd s = density_->score(u);
        if (grad) part.g += term * s;
        if (hess) {
          part.h += term * (2.0 * s * s.transpose() - density_->curvature(u));
        }
      }
    }
    parts[ci] = std::move(part);
  });

  double v = 0.0;
  if (grad) grad->setZero(d_);
  if (hess) hess->setZero(d_, d_);
  for (const Part& part : parts) {
    v += part.v;
    if (grad) *grad += part.g;
    if (hess) *hess += part.h;
  }
  if (hess && !hess->allFinite()) {
    throw NumericalError("objective Hessian has non-finite entries");
  }
  return v;
}

double FiniteObjective::value(const Eigen::VectorXd& theta) const {
  return eval(theta, nullptr, nullptr);
}

Eigen::VectorXd FiniteObjective::gradient(const Eigen::VectorXd& theta) const {
  Eigen::VectorXd g(d_);
  eval(theta, &g, nullptr);
  return g;
}

Eigen::MatrixXd FiniteObjective::hessian(const Eigen::VectorXd& theta) const {
  Eigen::MatrixXd h(d_, d_);
  eval(theta, nullptr, &h);
  return h;
}

double q_hat(const Eigen::VectorXd& theta, const GridND& grid,
             const PayoffFn& payoff,
             const std::shared_ptr<const DensityModel>& density) {
  return FiniteObjective(grid, payoff, density).value(theta);
}

Eigen::VectorXd grad_q_hat(const Eigen::VectorXd& theta, const GridND& grid,
                           const PayoffFn& payoff,
                           const std::shared_ptr<const DensityModel>& density) {
  return FiniteObjective(grid, payoff, density).gradient(theta);
}

Eigen::MatrixXd hess_q_hat(const Eigen::VectorXd& theta, const GridND& grid,
                           const PayoffFn& payoff,
                           const std::shared_ptr<const DensityModel>& density) {
  return FiniteObjective(grid, payoff, density).hessian(theta);
}

NewtonReport newton_optimize(const FiniteObjective& objective,
                             const Eigen::VectorXd& theta0,
                             const NewtonOptions& opts) {
  return newton_minimize(
      [&](const Eigen::VectorXd& th, Eigen::VectorXd* g, Eigen::MatrixXd* h) {
        return objective.eval(th, g, h);
      },
      theta0, opts);
}

NewtonReport newton_optimize(const FiniteObjective& objective,
                             const NewtonOptions& opts) {
  return newton_optimize(objective, Eigen::VectorXd::Zero(objective.dim()),
                         opts);
}

}  // namespace quantis
