#include "quantis/newton.hpp"

#include <cmath>

#include "quantis/errors.hpp"

namespace quantis {

NewtonReport newton_minimize(const ObjectiveFn& f,
                             const Eigen::VectorXd& theta0,
                             const NewtonOptions& opts) {
  if (!theta0.allFinite()) throw ConfigError("starting point must be finite");
  const int d = static_cast<int>(theta0.size());

  NewtonReport rep;
  rep.theta = theta0;
  Eigen::VectorXd grad(d);
  Eigen::MatrixXd hess(d, d);
  double value = f(rep.theta, &grad, &hess);
  if (!std::isfinite(value) || !grad.allFinite() || !hess.allFinite()) {
    throw NumericalError("objective not finite at the starting point");
  }
  rep.trajectory.emplace_back(rep.theta, grad.norm());

  while (rep.iterations < opts.max_iter) {
    if (grad.norm() <= opts.tol) break;

    Eigen::LLT<Eigen::MatrixXd> llt(hess);
    if (llt.info() != Eigen::Success) {
      const double mu = 1e-8 * hess.trace() / d;
      llt.compute(hess + mu * Eigen::MatrixXd::Identity(d, d));
      rep.used_levenberg = true;
      if (llt.info() != Eigen::Success) {
        throw ConvergenceError("Hessian factorization failed twice",
                               grad.norm());
      }
    }
    const Eigen::VectorXd direction = llt.solve(-grad);

    double step = 1.0;
    bool accepted = false;
    Eigen::VectorXd trial(d);
    for (int h = 0; h <= opts.max_backtracks; ++h) {
      trial = rep.theta + step * direction;
      const double trial_value = f(trial, nullptr, nullptr);
      if (std::isfinite(trial_value) && trial_value < value) {
        accepted = true;
        break;
      }
      step *= 0.5;
      ++rep.backtracks;
    }
    if (!accepted) {
      // Close to the minimum the objective is flat to rounding, so a strict
      // decrease may be unattainable while the full Newton step still
      // contracts the gradient quadratically. Accept on that contraction.
      trial = rep.theta + direction;
      Eigen::VectorXd trial_grad(d);
      const double trial_value = f(trial, &trial_grad, nullptr);
      accepted = std::isfinite(trial_value) && trial_grad.allFinite() &&
                 trial_grad.norm() < grad.norm();
    }
    if (!accepted) break;  // descent direction exhausted: numerical floor

    rep.theta = trial;
    value = f(rep.theta, &grad, &hess);
    ++rep.iterations;
    rep.trajectory.emplace_back(rep.theta, grad.norm());
    if (!std::isfinite(value) || !grad.allFinite() || !hess.allFinite()) {
      throw NumericalError("objective not finite along the Newton path");
    }
  }

  rep.final_grad_norm = grad.norm();
  rep.objective_value = value;
  rep.converged = rep.final_grad_norm <= opts.tol;
  return rep;
}

}  // namespace quantis
