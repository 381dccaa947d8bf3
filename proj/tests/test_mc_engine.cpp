#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "quantis/density.hpp"
#include "quantis/errors.hpp"
#include "quantis/isopt_finite.hpp"
#include "quantis/mc_engine.hpp"
#include "quantis/normal.hpp"
#include "quantis/parallel.hpp"

using namespace quantis;

namespace {

BlackScholesModel bs_basket(int d, double r, double sigma, double s0) {
  BlackScholesModel m;
  m.r = r;
  m.sigma.assign(static_cast<std::size_t>(d), sigma);
  m.s0.assign(static_cast<std::size_t>(d), s0);
  return m;
}

PayoffSpec equal_basket(int d, double strike) {
  BasketPayoff p;
  p.weights.assign(static_cast<std::size_t>(d), 1.0 / d);
  p.strike = strike;
  return PayoffSpec{p};
}

// Basket with zero weights and strike -c pays the constant c.
PayoffSpec constant_payoff(int d, double c) {
  BasketPayoff p;
  p.weights.assign(static_cast<std::size_t>(d), 0.0);
  p.strike = -c;
  return PayoffSpec{p};
}

PayoffSpec asian(double strike, int p) {
  AsianPayoff a;
  a.strike = strike;
  a.observations = p;
  return PayoffSpec{a};
}

double black_scholes_call(double s0, double k, double r, double sigma,
                          double T) {
  const double d1 =
      (std::log(s0 / k) + (r + 0.5 * sigma * sigma) * T) / (sigma * std::sqrt(T));
  const double d2 = d1 - sigma * std::sqrt(T);
  return s0 * norm_cdf(d1) - k * std::exp(-r * T) * norm_cdf(d2);
}

ThetaPath zero_theta(BasisKind kind, int m, double T) {
  return ThetaPath{make_basis(kind, m, T), Eigen::VectorXd::Zero(m)};
}

}  // namespace

TEST_CASE("constant payoff prices exactly with zero variance") {
  const ModelSpec model{bs_basket(2, 0.05, 0.3, 50.0)};
  const PayoffSpec payoff = constant_payoff(2, 3.0);
  MCResult res = price_crude(model, payoff, 1.0, 1000, 7);
  const double expect = 3.0 * std::exp(-0.05);
  CHECK(res.estimate == doctest::Approx(expect).epsilon(1e-14));
  CHECK(res.sample_variance <= 1e-14 * expect * expect);
  CHECK(res.std_error == std::sqrt(res.sample_variance / 1000.0));
  CHECK(res.n == 1000);
  CHECK(res.seed == 7);
  CHECK(res.floored_steps == 0);
}

TEST_CASE("crude price matches the closed-form call value") {
  const ModelSpec model{bs_basket(1, 0.05, 0.3, 100.0)};
  const PayoffSpec payoff = equal_basket(1, 100.0);
  MCResult res = price_crude(model, payoff, 1.0, 200000, 11);
  const double exact = black_scholes_call(100.0, 100.0, 0.05, 0.3, 1.0);
  CHECK(exact == doctest::Approx(14.2313).epsilon(1e-4));
  CHECK(std::abs(res.estimate - exact) < 4.0 * res.std_error);
}

TEST_CASE("crude basket price sits in the reference band") {
  // d = 2 equally weighted basket, S0 = 50, sigma = 0.3, r = 0.05, K = 50;
  // reference price 5.475 with per-sample variance 62.26 at n = 100000.
  const ModelSpec model{bs_basket(2, 0.05, 0.3, 50.0)};
  const PayoffSpec payoff = equal_basket(2, 50.0);
  MCResult res = price_crude(model, payoff, 1.0, 100000, 2024);
  const double ref_se = std::sqrt(62.26 / 100000.0);
  CHECK(std::abs(res.estimate - 5.475) < 4.0 * (res.std_error + ref_se));
  CHECK(res.sample_variance > 40.0);
  CHECK(res.sample_variance < 90.0);
}

TEST_CASE("zero translation reproduces the crude run bit for bit") {
  const ModelSpec model{bs_basket(2, 0.05, 0.3, 50.0)};
  const PayoffSpec payoff = equal_basket(2, 55.0);
  MCResult crude = price_crude(model, payoff, 1.0, 40000, 99);
  MCResult is0 =
      price_is_finite(model, payoff, Eigen::VectorXd::Zero(2), 1.0, 40000, 99);
  CHECK(is0.estimate == crude.estimate);
  CHECK(is0.sample_variance == crude.sample_variance);
  CHECK(is0.std_error == crude.std_error);
}

TEST_CASE("zero drift path reproduces the crude run bit for bit") {
  const ModelSpec model{bs_basket(1, 0.04, 0.5, 100.0)};
  const PayoffSpec payoff = asian(115.0, 4);
  MCResult crude = price_crude(model, payoff, 1.0, 20000, 33, 12);
  MCResult is0 = price_is_path(model, payoff,
                               zero_theta(BasisKind::shifted_legendre, 3, 1.0),
                               1.0, 20000, 33, 12);
  CHECK(is0.estimate == crude.estimate);
  CHECK(is0.sample_variance == crude.sample_variance);

  CompareReport rep =
      compare(model, payoff,
              std::variant<ThetaFinite, ThetaPath>{
                  zero_theta(BasisKind::karhunen_loeve, 2, 1.0)},
              1.0, 20000, 33, 12);
  CHECK(rep.variance_ratio == 1.0);
  CHECK(rep.crude.estimate == rep.qis.estimate);
}

TEST_CASE("translation weights average to one") {
  // F == 1, r = 0: the estimate is the empirical mean of the density ratio.
  const ModelSpec model{bs_basket(1, 0.0, 0.3, 50.0)};
  const PayoffSpec payoff = constant_payoff(1, 1.0);
  Eigen::VectorXd theta(1);
  theta << 1.7;
  MCResult res = price_is_finite(model, payoff, theta, 1.0, 1000000, 5);
  CHECK(std::abs(res.estimate - 1.0) < 4.0 * res.std_error);
  CHECK(res.std_error > 0.0);
}

TEST_CASE("translated and crude estimates agree within noise") {
  const ModelSpec model{bs_basket(1, 0.05, 0.3, 100.0)};
  const PayoffSpec payoff = equal_basket(1, 100.0);
  MCResult crude = price_crude(model, payoff, 1.0, 100000, 17);
  Eigen::VectorXd theta(1);
  theta << 0.8;
  MCResult shifted = price_is_finite(model, payoff, theta, 1.0, 100000, 17);
  CHECK(std::abs(shifted.estimate - crude.estimate) <
        3.0 * (shifted.std_error + crude.std_error));
  // A sensible shift for a call reduces the variance under paired seeds.
  CHECK(shifted.sample_variance < crude.sample_variance);
}

TEST_CASE("drifted and crude path estimates agree within noise") {
  const ModelSpec model{bs_basket(1, 0.04, 0.5, 100.0)};
  const PayoffSpec payoff = asian(115.0, 10);
  const double T = 1.0;
  MCResult crude = price_crude(model, payoff, T, 60000, 21, 20);
  ThetaPath theta{make_basis(BasisKind::shifted_legendre, 2, T),
                  Eigen::VectorXd::Zero(2)};
  theta.coeffs << 0.6, -0.2;
  MCResult drifted = price_is_path(model, payoff, theta, T, 60000, 21, 20);
  CHECK(std::abs(drifted.estimate - crude.estimate) <
        3.0 * (drifted.std_error + crude.std_error));
}

TEST_CASE("constant drift equals the equivalent mean translation") {
  // theta(t) = c0 / sqrt(T) shifts W_T by c0 sqrt(T), i.e. the terminal
  // normal by c0. Both pipelines price the same call.
  const double T = 1.44;
  const ModelSpec model{bs_basket(1, 0.05, 0.3, 100.0)};
  const PayoffSpec payoff = equal_basket(1, 110.0);
  ThetaPath tpath{make_basis(BasisKind::constant, 1, T),
                  Eigen::VectorXd::Zero(1)};
  tpath.coeffs << 0.9;
  MCResult path = price_is_path(model, payoff, tpath, T, 120000, 8, 48);
  Eigen::VectorXd tf(1);
  tf << 0.9;
  MCResult fin = price_is_finite(model, payoff, tf, T, 120000, 8);
  CHECK(std::abs(path.estimate - fin.estimate) <
        4.0 * (path.std_error + fin.std_error));
}

TEST_CASE("doubling the Euler step count moves the price within noise") {
  LocalVolModel lv;
  lv.r = 0.04;
  lv.sigma_tilde = 5.0;
  lv.beta = 0.5;
  lv.x0 = 100.0;
  const ModelSpec model{lv};
  const PayoffSpec payoff = asian(115.0, 50);
  MCResult coarse = price_crude(model, payoff, 1.0, 100000, 12, 50);
  MCResult fine = price_crude(model, payoff, 1.0, 100000, 12, 100);
  CHECK(std::abs(coarse.estimate - fine.estimate) <
        2.0 * (coarse.std_error + fine.std_error));
}

TEST_CASE("results are bit-identical across thread counts") {
  const ModelSpec model{bs_basket(2, 0.05, 0.3, 50.0)};
  const PayoffSpec payoff = equal_basket(2, 50.0);
  set_num_threads(1);
  MCResult one = price_crude(model, payoff, 1.0, 20001, 64);
  set_num_threads(3);
  MCResult three = price_crude(model, payoff, 1.0, 20001, 64);
  CHECK(one.estimate == three.estimate);
  CHECK(one.sample_variance == three.sample_variance);

  const ModelSpec path_model_spec{bs_basket(1, 0.04, 0.5, 100.0)};
  const PayoffSpec pathoff = asian(115.0, 7);
  MCResult p3 = price_crude(path_model_spec, pathoff, 1.0, 9999, 65, 7);
  set_num_threads(1);
  MCResult p1 = price_crude(path_model_spec, pathoff, 1.0, 9999, 65, 7);
  CHECK(p1.estimate == p3.estimate);
  CHECK(p1.sample_variance == p3.sample_variance);
}

TEST_CASE("positivity floor absorbs exploding local-vol states") {
  LocalVolModel lv;
  lv.r = 0.0;
  lv.sigma_tilde = 50.0;
  lv.beta = 0.5;
  lv.x0 = 1.0;
  const ModelSpec model{lv};
  const PayoffSpec payoff = asian(0.0, 5);
  MCResult res = price_crude(model, payoff, 1.0, 2000, 3, 10);
  CHECK(res.floored_steps > 0);
  CHECK(std::isfinite(res.estimate));
  CHECK(std::isfinite(res.sample_variance));
  CHECK(res.estimate >= 0.0);
}

TEST_CASE("paired comparison shares the crude side with the plain run") {
  const ModelSpec model{bs_basket(2, 0.05, 0.3, 50.0)};
  const PayoffSpec payoff = equal_basket(2, 50.0);
  Eigen::VectorXd theta(2);
  theta << 0.4, 0.4;
  CompareReport rep = compare(model, payoff,
                              std::variant<ThetaFinite, ThetaPath>{theta}, 1.0,
                              30000, 42);
  MCResult crude = price_crude(model, payoff, 1.0, 30000, 42);
  MCResult qis = price_is_finite(model, payoff, theta, 1.0, 30000, 42);
  CHECK(rep.crude.estimate == crude.estimate);
  CHECK(rep.qis.estimate == qis.estimate);
  CHECK(rep.variance_ratio ==
        crude.sample_variance / qis.sample_variance);
}

TEST_CASE("optimized translation reproduces the reference basket row") {
  // End to end: quantize, optimize the translation, then price. Reference
  // row: QIS price 5.490 with variance 7.86 against crude 5.475 / 62.26.
  const int d = 2;
  const double T = 1.0;
  const ModelSpec model{bs_basket(d, 0.05, 0.3, 50.0)};
  const PayoffSpec payoff = equal_basket(d, 50.0);

  GridNDOptions opts;
  opts.n_samples = 200000;
  opts.sweeps = 12;
  GridND grid = build_grid_nd(d, 200, 77, opts);
  FiniteObjective obj(grid, finite_payoff(model, payoff, T), gaussian(d));
  NewtonReport newton = newton_optimize(obj);
  CHECK(newton.converged);
  CHECK(newton.iterations <= 15);

  CompareReport rep = compare(model, payoff,
                              std::variant<ThetaFinite, ThetaPath>{newton.theta},
                              T, 100000, 123);
  const double ref_se = std::sqrt(7.86 / 100000.0);
  CHECK(std::abs(rep.qis.estimate - 5.490) <
        4.0 * (rep.qis.std_error + ref_se));
  CHECK(rep.variance_ratio > 3.95);  // at least half the reference 7.9
  CHECK(rep.qis.sample_variance < rep.crude.sample_variance);
}

TEST_CASE("csv row carries the full result") {
  MCResult res;
  res.estimate = 5.5;
  res.sample_variance = 2.0;
  res.std_error = 0.25;
  res.n = 64;
  res.seed = 9;
  const std::string row = mc_csv_row("table1-d2-k50", "crude", res, "none");
  std::istringstream ss(row);
  std::string field;
  std::vector<std::string> fields;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  REQUIRE(fields.size() == 8);
  CHECK(fields[0] == "table1-d2-k50");
  CHECK(fields[1] == "crude");
  CHECK(std::stod(fields[2]) == 5.5);
  CHECK(std::stod(fields[3]) == 2.0);
  CHECK(std::stod(fields[4]) == 0.25);
  CHECK(fields[5] == "64");
  CHECK(fields[6] == "9");
  CHECK(fields[7] == "none");
}

TEST_CASE("engine rejects inconsistent requests") {
  const ModelSpec model{bs_basket(2, 0.05, 0.3, 50.0)};
  const PayoffSpec payoff = equal_basket(2, 50.0);
  CHECK_THROWS_AS(price_crude(model, payoff, 1.0, 1, 7), ConfigError);
  CHECK_THROWS_AS(price_crude(model, payoff, 0.0, 100, 7), ConfigError);
  CHECK_THROWS_AS(
      price_is_finite(model, payoff, Eigen::VectorXd::Zero(3), 1.0, 100, 7),
      ConfigError);
  // Path payoffs cannot go through the exact terminal kernel.
  CHECK_THROWS_AS(
      price_is_finite(model, asian(1.0, 2), Eigen::VectorXd::Zero(2), 1.0, 100, 7),
      ConfigError);
  // Multi-asset models cannot run the one-dimensional path kernel.
  CHECK_THROWS_AS(price_is_path(model, equal_basket(2, 50.0),
                                zero_theta(BasisKind::constant, 1, 1.0), 1.0,
                                100, 7, 4),
                  ConfigError);
  const ModelSpec bs1{bs_basket(1, 0.04, 0.5, 100.0)};
  CHECK_THROWS_AS(price_is_path(bs1, asian(115.0, 2),
                                zero_theta(BasisKind::constant, 1, 2.0), 1.0,
                                100, 7, 4),
                  ConfigError);
  CHECK_THROWS_AS(price_crude(bs1, asian(115.0, 2), 1.0, 100, 7, 0),
                  ConfigError);
}
