#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "quantis/density.hpp"
#include "quantis/errors.hpp"
#include "quantis/rng.hpp"

using namespace quantis;

namespace {

Eigen::VectorXd random_point(int d, std::uint64_t sample, double scale) {
  Eigen::VectorXd x(d);
  for (int j = 0; j < d; ++j) {
    x[j] = scale * rng_normal(7, sample, 0, static_cast<std::uint32_t>(j));
  }
  return x;
}

// Central difference of log_density along coordinate j.
double fd_score(const DensityModel& p, const Eigen::VectorXd& x, int j,
                double h) {
  Eigen::VectorXd a = x, b = x;
  a[j] += h;
  b[j] -= h;
  return (p.log_density(a) - p.log_density(b)) / (2.0 * h);
}

// Central second difference of the raw density, divided by the density.
double fd_curvature(const DensityModel& p, const Eigen::VectorXd& x, int i,
                    int j, double h) {
  const double pc = std::exp(p.log_density(x));
  if (i == j) {
    Eigen::VectorXd a = x, b = x;
    a[i] += h;
    b[i] -= h;
    const double pp = std::exp(p.log_density(a));
    const double pm = std::exp(p.log_density(b));
    return (pp - 2.0 * pc + pm) / (h * h * pc);
  }
  Eigen::VectorXd pp = x, pm = x, mp = x, mm = x;
  pp[i] += h; pp[j] += h;
  pm[i] += h; pm[j] -= h;
  mp[i] -= h; mp[j] += h;
  mm[i] -= h; mm[j] -= h;
  return (std::exp(p.log_density(pp)) - std::exp(p.log_density(pm)) -
          std::exp(p.log_density(mp)) + std::exp(p.log_density(mm))) /
         (4.0 * h * h * pc);
}

}  // namespace

TEST_CASE("normal closed forms") {
  auto p = gaussian(3);
  CHECK(p->dim() == 3);
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
  CHECK(p->log_density(zero) ==
        doctest::Approx(-1.5 * std::log(2.0 * M_PI)).epsilon(1e-15));
  CHECK(p->score(zero).norm() == 0.0);
  Eigen::MatrixXd c0 = p->curvature(zero);
  CHECK((c0 + Eigen::MatrixXd::Identity(3, 3)).norm() == 0.0);

  Eigen::VectorXd x(3);
  x << 0.5, -1.0, 2.0;
  CHECK((p->score(x) + x).norm() == 0.0);
  Eigen::MatrixXd c = p->curvature(x);
  CHECK((c - (x * x.transpose() - Eigen::MatrixXd::Identity(3, 3))).norm() ==
        0.0);
  CHECK_THROWS_AS(p->log_density(Eigen::VectorXd::Zero(2)), ConfigError);
  CHECK_THROWS_AS(gaussian(0), ConfigError);
}

TEST_CASE("normal likelihood ratios") {
  auto p = gaussian(2);
  Eigen::VectorXd x(2), th(2);
  x << 0.7, -0.2;
  th << 0.0, 0.0;
  CHECK(p->ratio(x, th) == 1.0);
  th << 1.5, -0.5;
  // At x = theta the exponent is -|theta|^2/2.
  CHECK(p->ratio(th, th) ==
        doctest::Approx(std::exp(-0.5 * th.squaredNorm())).epsilon(1e-13));
  // General point: exponent |theta|^2/2 - <theta, x>.
  CHECK(p->log_ratio(x, th) ==
        doctest::Approx(0.5 * th.squaredNorm() - th.dot(x)).epsilon(1e-12));
}

TEST_CASE("logistic closed forms") {
  auto p = logistic();
  CHECK(p->dim() == 1);
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
  CHECK(std::exp(p->log_density(zero)) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(p->score(zero)[0] == 0.0);
  Eigen::VectorXd x(1);
  for (double v : {-2.0, -0.3, 0.4, 2.0, 30.0}) {
    x[0] = v;
    // Symmetry of the density and antisymmetry of the score.
    Eigen::VectorXd mx = -x;
    CHECK(p->log_density(x) == doctest::Approx(p->log_density(mx)).epsilon(1e-14));
    CHECK(p->score(x)[0] == doctest::Approx(-p->score(mx)[0]).epsilon(1e-14));
    CHECK(p->score(x)[0] == doctest::Approx(-std::tanh(0.5 * v)).epsilon(1e-14));
  }
  // Far tails stay finite in log space.
  x[0] = 700.0;
  CHECK(std::isfinite(p->log_density(x)));
  CHECK(p->log_density(x) == doctest::Approx(-700.0).epsilon(1e-12));
}

TEST_CASE("scores match finite differences of log density") {
  auto pg = gaussian(4);
  auto pl = logistic();
  const double h = 1e-5;
  for (int s = 0; s < 100; ++s) {
    Eigen::VectorXd x = random_point(4, static_cast<std::uint64_t>(s), 1.5);
    Eigen::VectorXd sc = pg->score(x);
    for (int j = 0; j < 4; ++j) {
      CHECK(sc[j] == doctest::Approx(fd_score(*pg, x, j, h)).epsilon(1e-5));
    }
    Eigen::VectorXd y = random_point(1, static_cast<std::uint64_t>(s) + 1000, 2.0);
    CHECK(pl->score(y)[0] ==
          doctest::Approx(fd_score(*pl, y, 0, h)).epsilon(1e-5));
  }
}

TEST_CASE("curvature matches finite differences of the density") {
  auto pg = gaussian(3);
  auto pl = logistic();
  const double h = 1e-4;
  for (int s = 0; s < 20; ++s) {
    Eigen::VectorXd x = random_point(3, static_cast<std::uint64_t>(s) + 5000, 1.0);
    Eigen::MatrixXd c = pg->curvature(x);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        CHECK(c(i, j) == doctest::Approx(fd_curvature(*pg, x, i, j, h))
                             .epsilon(5e-4).scale(1.0));
      }
    }
    Eigen::VectorXd y = random_point(1, static_cast<std::uint64_t>(s) + 6000, 1.5);
    CHECK(pl->curvature(y)(0, 0) ==
          doctest::Approx(fd_curvature(*pl, y, 0, 0, h)).epsilon(5e-4).scale(1.0));
  }
}

TEST_CASE("log density is concave along random segments") {
  auto pg = gaussian(3);
  auto pl = logistic();
  for (int s = 0; s < 30; ++s) {
    Eigen::VectorXd a = random_point(3, static_cast<std::uint64_t>(s) + 8000, 2.0);
    Eigen::VectorXd b = random_point(3, static_cast<std::uint64_t>(s) + 9000, 2.0);
    for (int k = 1; k < 10; ++k) {
      const double u = k / 10.0;
      const double mid = pg->log_density(a + u * (b - a));
      const double lo = pg->log_density(a + (u - 0.1) * (b - a));
      const double hi = pg->log_density(a + (u + 0.1) * (b - a));
      CHECK(lo + hi - 2.0 * mid <= 1e-10);
    }
    Eigen::VectorXd c = random_point(1, static_cast<std::uint64_t>(s) + 11000, 3.0);
    Eigen::VectorXd d = random_point(1, static_cast<std::uint64_t>(s) + 12000, 3.0);
    for (int k = 1; k < 10; ++k) {
      const double u = k / 10.0;
      const double mid = pl->log_density(c + u * (d - c));
      const double lo = pl->log_density(c + (u - 0.1) * (d - c));
      const double hi = pl->log_density(c + (u + 0.1) * (d - c));
      CHECK(lo + hi - 2.0 * mid <= 1e-10);
    }
  }
}

TEST_CASE("factory resolves config keys") {
  CHECK(density_from_name("gaussian", 5)->dim() == 5);
  CHECK(density_from_name("logistic", 1)->dim() == 1);
  CHECK_THROWS_AS(density_from_name("logistic", 2), ConfigError);
  CHECK_THROWS_AS(density_from_name("cauchy", 1), ConfigError);
}
