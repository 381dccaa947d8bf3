#include "quantis/density.hpp"

#include <cmath>

#include "quantis/errors.hpp"

namespace quantis {

namespace {

class GaussianDensity final : public DensityModel {
 public:
  explicit GaussianDensity(int d) : d_(d) {}
  int dim() const override { return d_; }
  double log_density(const Eigen::VectorXd& x) const override {
    check(x);
    return -0.5 * d_ * std::log(2.0 * M_PI) - 0.5 * x.squaredNorm();
  }
  Eigen::VectorXd score(const Eigen::VectorXd& x) const override {
    check(x);
    return -x;
  }
  Eigen::MatrixXd curvature(const Eigen::VectorXd& x) const override {
    check(x);
    return x * x.transpose() - Eigen::MatrixXd::Identity(d_, d_);
  }

 private:
  void check(const Eigen::VectorXd& x) const {
    if (x.size() != d_) throw ConfigError("density: dimension mismatch");
  }
  int d_;
};

class LogisticDensity final : public DensityModel {
 public:
  int dim() const override { return 1; }
  double log_density(const Eigen::VectorXd& x) const override {
    check(x);
    // Symmetric stable form of x - 2 log(1 + e^x).
    const double a = std::abs(x[0]);
    return -a - 2.0 * std::log1p(std::exp(-a));
  }
  Eigen::VectorXd score(const Eigen::VectorXd& x) const override {
    check(x);
    Eigen::VectorXd s(1);
    s[0] = -std::tanh(0.5 * x[0]);
    return s;
  }
  Eigen::MatrixXd curvature(const Eigen::VectorXd& x) const override {
    check(x);
    // (log p)'' + ((log p)')^2 with (log p)'' = -sech^2(x/2)/2.
    const double th = std::tanh(0.5 * x[0]);
    Eigen::MatrixXd c(1, 1);
    c(0, 0) = 1.5 * th * th - 0.5;
    return c;
  }

 private:
  void check(const Eigen::VectorXd& x) const {
    if (x.size() != 1) throw ConfigError("density: dimension mismatch");
  }
};

}  // namespace

std::shared_ptr<const DensityModel> gaussian(int d) {
  if (d < 1) throw ConfigError("density: dimension must be at least 1");
  return std::make_shared<GaussianDensity>(d);
}

std::shared_ptr<const DensityModel> logistic() {
  return std::make_shared<LogisticDensity>();
}

std::shared_ptr<const DensityModel> density_from_name(const std::string& name,
                                                      int d) {
  if (name == "gaussian") return gaussian(d);
  if (name == "logistic") {
    if (d != 1) throw ConfigError("logistic density is one-dimensional");
    return logistic();
  }
  throw ConfigError("unknown density '" + name + "'");
}

}  // namespace quantis
