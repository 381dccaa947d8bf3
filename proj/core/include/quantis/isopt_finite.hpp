#ifndef QUANTIS_ISOPT_FINITE_HPP
#define QUANTIS_ISOPT_FINITE_HPP

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <vector>

#include "quantis/density.hpp"
#include "quantis/gridnd.hpp"
#include "quantis/newton.hpp"

namespace quantis {

// Payoff on coordinate space: receives a grid point (dim components).
using PayoffFn = std::function<double(const double*)>;

// Quantized variance objective of the shifted sampling measure,
//   Q(theta) = sum_i w_i F(x_i)^2 p(x_i) / p(x_i - theta),
// with analytic gradient sum_i term_i score(x_i - theta) and Hessian
// sum_i term_i (2 score score^T - curvature)(x_i - theta), each term
// exponentiated from log space. Grid points, weights, and squared payoffs
// are captured at construction, so repeated evaluations only touch the
// density.
class FiniteObjective {
 public:
  FiniteObjective(const GridND& grid, const PayoffFn& payoff,
                  std::shared_ptr<const DensityModel> density);

  int dim() const { return d_; }
  double value(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& theta) const;
  // Single pass filling whichever outputs are non-null.
  double eval(const Eigen::VectorXd& theta, Eigen::VectorXd* grad,
              Eigen::MatrixXd* hess) const;

 private:
  int d_ = 0;
  std::vector<double> points_;  // row-major copies of the grid points
  std::vector<double> wf2_;     // w_i F(x_i)^2
  std::vector<double> log_p_;   // log p(x_i)
  std::shared_ptr<const DensityModel> density_;
};

// Spec-shaped conveniences; each rebuilds the captured sums.
double q_hat(const Eigen::VectorXd& theta, const GridND& grid,
             const PayoffFn& payoff,
             const std::shared_ptr<const DensityModel>& density);
Eigen::VectorXd grad_q_hat(const Eigen::VectorXd& theta, const GridND& grid,
                           const PayoffFn& payoff,
                           const std::shared_ptr<const DensityModel>& density);
Eigen::MatrixXd hess_q_hat(const Eigen::VectorXd& theta, const GridND& grid,
                           const PayoffFn& payoff,
                           const std::shared_ptr<const DensityModel>& density);

// Damped Newton descent on the objective from theta0 (default the origin).
NewtonReport newton_optimize(const FiniteObjective& objective,
                             const Eigen::VectorXd& theta0,
                             const NewtonOptions& opts = {});
NewtonReport newton_optimize(const FiniteObjective& objective,
                             const NewtonOptions& opts = {});

}  // namespace quantis

#endif
