#ifndef QUANTIS_DENSITY_HPP
#define QUANTIS_DENSITY_HPP

#include <Eigen/Dense>
#include <memory>
#include <string>

namespace quantis {

// Sampling density of the coordinate vector, with the derivative
// combinations the shifted-measure objective needs: the score Dp/p, the
// curvature D2p/p, and likelihood ratios kept in log space (the objective
// grows like exp(c |theta|^2), so the ratio must never be formed from raw
// densities). Further families (hyper-exponential and friends) plug in by
// deriving from this class.
class DensityModel {
 public:
  virtual ~DensityModel() = default;
  virtual int dim() const = 0;
  virtual double log_density(const Eigen::VectorXd& x) const = 0;
  // score(x) = grad log p = Dp(x)/p(x)
  virtual Eigen::VectorXd score(const Eigen::VectorXd& x) const = 0;
  // curvature(x) = D2p(x)/p(x), the Hessian of p divided by p
  virtual Eigen::MatrixXd curvature(const Eigen::VectorXd& x) const = 0;

  // p(x)/p(x - theta); equals exactly 1 at theta = 0.
  double log_ratio(const Eigen::VectorXd& x, const Eigen::VectorXd& theta) const {
    return log_density(x) - log_density(x - theta);
  }
  double ratio(const Eigen::VectorXd& x, const Eigen::VectorXd& theta) const {
    return std::exp(log_ratio(x, theta));
  }
};

// Standard normal on R^d: score(x) = -x, curvature(x) = x x^T - I.
std::shared_ptr<const DensityModel> gaussian(int d);

// Logistic on R: p(x) = e^x / (1 + e^x)^2, score(x) = -tanh(x/2).
std::shared_ptr<const DensityModel> logistic();

// Config-key factory ("gaussian" | "logistic").
std::shared_ptr<const DensityModel> density_from_name(const std::string& name,
                                                      int d);

}  // namespace quantis

#endif
