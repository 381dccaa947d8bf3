#ifndef QUANTIS_NEWTON_HPP
#define QUANTIS_NEWTON_HPP

#include <Eigen/Dense>
#include <functional>
#include <utility>
#include <vector>

namespace quantis {

struct NewtonOptions {
  double tol = 1e-8;       // gradient-norm stopping threshold
  int max_iter = 50;
  int max_backtracks = 30;  // step halvings per iteration
};

struct NewtonReport {
  Eigen::VectorXd theta;
  int iterations = 0;
  double final_grad_norm = 0.0;
  double objective_value = 0.0;
  bool converged = false;
  int backtracks = 0;        // halvings summed over the whole run
  bool used_levenberg = false;
  // Every accepted iterate with its gradient norm, starting point included.
  std::vector<std::pair<Eigen::VectorXd, double>> trajectory;
};

// f(theta, grad, hess) returns the objective value; grad and hess are filled
// when non-null. hess must be symmetric positive definite near the minimum.
using ObjectiveFn = std::function<double(
    const Eigen::VectorXd&, Eigen::VectorXd*, Eigen::MatrixXd*)>;

// Damped Newton descent: full step first, halved until the objective
// strictly decreases. A Hessian whose factorization fails is retried once
// with a Levenberg shift (1e-8 * trace / d on the diagonal); a second
// failure raises ConvergenceError. Exhausting max_iter or the backtracking
// budget returns converged = false rather than throwing.
NewtonReport newton_minimize(const ObjectiveFn& f,
                             const Eigen::VectorXd& theta0,
                             const NewtonOptions& opts = {});

}  // namespace quantis

#endif
