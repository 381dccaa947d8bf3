#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "quantis/errors.hpp"
#include "quantis/funcquant.hpp"

using namespace quantis;

namespace {

// Scalar distortions up to the largest budget used below, built once.
const std::vector<double>& big_table() {
  static const std::vector<double> d = distortion_table(966);
  return d;
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("eigensystem closed forms") {
  CHECK(kl_eigenvalue(1, 1.0) == doctest::Approx(4.0 / (M_PI * M_PI)).epsilon(1e-15));
  CHECK(kl_eigenfunction(1, 1.0, 1.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  // Scaling: lambda_n(T) = T^2 lambda_n(1).
  CHECK(kl_eigenvalue(3, 2.0) == doctest::Approx(4.0 * kl_eigenvalue(3, 1.0)));
  CHECK_THROWS_AS(kl_eigenvalue(0, 1.0), ConfigError);
  CHECK_THROWS_AS(kl_eigenvalue(1, 0.0), ConfigError);
}

TEST_CASE("eigenvalues sum to half the squared horizon") {
  for (double T : {1.0, 0.5}) {
    double s = 0.0;
    for (int n = 1; n <= 1000000; ++n) s += kl_eigenvalue(n, T);
    CHECK(std::abs(s - T * T / 2.0) < 1e-5 * T * T);
  }
}

TEST_CASE("eigenfunction derivative matches finite differences") {
  const double T = 1.3, h = 1e-6;
  for (int n : {1, 2, 5}) {
    for (double t : {0.1, 0.7, 1.2}) {
      const double fd =
          (kl_eigenfunction(n, T, t + h) - kl_eigenfunction(n, T, t - h)) /
          (2.0 * h);
      CHECK(kl_eigenfunction_derivative(n, T, t) ==
            doctest::Approx(fd).epsilon(1e-7));
    }
  }
}

TEST_CASE("decomposition search handles the trivial budgets") {
  const auto& d = big_table();
  CHECK(optimal_decomposition(1, 8, d) == std::vector<int>{1});
  CHECK(optimal_decomposition(2, 8, d) == std::vector<int>{2});
  CHECK(optimal_decomposition(3, 8, d) == std::vector<int>{3});
  CHECK_THROWS_AS(optimal_decomposition(0, 8, d), ConfigError);
  CHECK_THROWS_AS(optimal_decomposition(5, 0, d), ConfigError);
  CHECK_THROWS_AS(optimal_decomposition(10, 8, std::vector<double>(5, 0.5)),
                  ConfigError);
}

TEST_CASE("one deep level beats two shallow ones at budget four") {
  // lambda_1 (d4 - 1) vs (lambda_1 + lambda_2)(d2 - 1): the first eigenvalue
  // dominates, so spending the whole budget on level one wins.
  const auto& d = big_table();
  const double lone = kl_eigenvalue(1, 1.0) * (d[4] - 1.0);
  const double split =
      (kl_eigenvalue(1, 1.0) + kl_eigenvalue(2, 1.0)) * (d[2] - 1.0);
  CHECK(lone < split);
  CHECK(optimal_decomposition(4, 8, d) == std::vector<int>{4});
}

TEST_CASE("decompositions are admissible and improve with budget") {
  const auto& d = big_table();
  double prev = 1e300;
  for (int budget : {2, 5, 10, 50, 100, 400, 966}) {
    const std::vector<int> dec = optimal_decomposition(budget, 16, d);
    long long prod = 1;
    for (std::size_t l = 0; l < dec.size(); ++l) {
      CHECK(dec[l] >= (dec.size() == 1 ? 1 : 2));
      if (l > 0) CHECK(dec[l] <= dec[l - 1]);
      prod *= dec[l];
    }
    CHECK(prod <= budget);
    double dist = 0.5;
    for (std::size_t l = 0; l < dec.size(); ++l) {
      dist += kl_eigenvalue(static_cast<int>(l) + 1, 1.0) * (d[dec[l]] - 1.0);
    }
    CHECK(dist < prev);
    prev = dist;
  }
}

TEST_CASE("budget 966 splits as 23 * 7 * 3 * 2") {
  CHECK(optimal_decomposition(966, 16, big_table()) ==
        std::vector<int>{23, 7, 3, 2});
}

TEST_CASE("single-cell quantizer is the zero path") {
  ProductQuantizer q = build_brownian_quantizer(1.0, {1});
  CHECK(q.size() == 1);
  CHECK(q.weights[0] == 1.0);
  for (double t : {0.0, 0.4, 1.0}) {
    CHECK(q.value(0, t) == 0.0);
    CHECK(q.brownian_derivative(0, t) == 0.0);
  }
}

TEST_CASE("two-cell quantizer is an antisymmetric sine pair") {
  const double T = 1.0;
  ProductQuantizer q = build_brownian_quantizer(T, {2});
  REQUIRE(q.size() == 2);
  CHECK(q.weights[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(q.weights[1] == doctest::Approx(0.5).epsilon(1e-12));
  const double amp = std::sqrt(kl_eigenvalue(1, T)) * std::sqrt(2.0 / M_PI);
  for (double t : {0.1, 0.5, 0.9}) {
    const double e1 = kl_eigenfunction(1, T, t);
    CHECK(std::abs(q.value(0, t)) == doctest::Approx(amp * e1).epsilon(1e-12));
    CHECK(q.value(0, t) == doctest::Approx(-q.value(1, t)).epsilon(1e-12));
  }
}

TEST_CASE("product weights and paths satisfy the stationarity identities") {
  ProductQuantizer q = build_brownian_quantizer(2.0, {5, 3, 2});
  CHECK(q.size() == 30);
  double wsum = 0.0;
  for (double w : q.weights) wsum += w;
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-13));
  for (double t : {0.0, 0.3, 1.1, 2.0}) {
    double mean = 0.0, mean_d = 0.0;
    for (int i = 0; i < q.size(); ++i) {
      mean += q.weights[i] * q.value(i, t);
      mean_d += q.weights[i] * q.derivative(i, t);
    }
    CHECK(std::abs(mean) < 1e-13);
    CHECK(std::abs(mean_d) < 1e-13);
  }
  for (int i = 0; i < q.size(); ++i) CHECK(q.value(i, 0.0) == 0.0);
}

TEST_CASE("squared distortion matches its level decomposition") {
  const double T = 1.0;
  ProductQuantizer q = build_brownian_quantizer(T, {23, 7, 3, 2});
  const auto& d = big_table();
  double expect = T * T / 2.0;
  const int sizes[] = {23, 7, 3, 2};
  for (int l = 0; l < 4; ++l) {
    expect += kl_eigenvalue(l + 1, T) * (d[sizes[l]] - 1.0);
  }
  CHECK(q.distortion2 == doctest::Approx(expect).epsilon(1e-12));
  CHECK(q.distortion2 > 0.0);
}

TEST_CASE("distortion scaled by root log size stays flat") {
  const auto& d = big_table();
  double lo = 1e300, hi = 0.0;
  for (int budget : {10, 100, 966}) {
    ProductQuantizer q =
        build_brownian_quantizer(1.0, optimal_decomposition(budget, 16, d));
    const double v = std::sqrt(std::log(static_cast<double>(budget))) *
                     std::sqrt(q.distortion2);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(hi / lo < 1.5);
}

TEST_CASE("convex functionals shrink under quantization") {
  // F(w) = (int_0^1 w)^2 is convex with E F(W) = 1/3; stationarity makes the
  // quantized average a conditional-Jensen lower bound of that.
  const double T = 1.0;
  ProductQuantizer q = build_brownian_quantizer(T, {23, 7, 3, 2});
  double qf = 0.0;
  for (int i = 0; i < q.size(); ++i) {
    // int_0^T e_n = sqrt(2/T)/w_n since cos(w_n T) = 0.
    double integral = 0.0;
    for (int l = 0; l < q.levels(); ++l) {
      const double w = kl_omega(l + 1, T);
      integral += std::sqrt(kl_eigenvalue(l + 1, T)) *
                  q.normal_coords[static_cast<std::size_t>(i) * q.levels() + l] *
                  std::sqrt(2.0 / T) / w;
    }
    qf += q.weights[i] * integral * integral;
  }
  CHECK(qf <= 1.0 / 3.0 + 1e-12);
  CHECK(qf > 0.32);
}

TEST_CASE("mean-reverting paths start at zero and obey their equation") {
  const double T = 0.5, theta = 0.3, sigma = 0.7;
  ProductQuantizer q = build_ou_quantizer(T, theta, sigma, {5, 3, 2});
  for (int i = 0; i < q.size(); ++i) {
    CHECK(q.value(i, 0.0) == 0.0);
    // y' + theta y = sigma chi' holds exactly for every path.
    for (double t : {0.05, 0.2, 0.45}) {
      CHECK(q.derivative(i, t) + theta * q.value(i, t) ==
            doctest::Approx(sigma * q.brownian_derivative(i, t))
                .epsilon(1e-11));
    }
  }
  ProductQuantizer zero = build_ou_quantizer(T, theta, 0.0, {3, 2});
  for (int i = 0; i < zero.size(); ++i) {
    for (double t : {0.0, 0.2, 0.5}) CHECK(zero.value(i, t) == 0.0);
  }
  ProductQuantizer one = build_ou_quantizer(T, theta, sigma, {1});
  CHECK(one.value(0, 0.3) == 0.0);
  CHECK_THROWS_AS(build_ou_quantizer(T, 0.0, sigma, {2}), ConfigError);
}

TEST_CASE("path derivative matches finite differences") {
  ProductQuantizer b = build_brownian_quantizer(1.0, {4, 2});
  ProductQuantizer o = build_ou_quantizer(1.0, 0.8, 0.6, {4, 2});
  const double h = 1e-6;
  for (const ProductQuantizer& q : {b, o}) {
    for (int i : {0, 3, 7}) {
      for (double t : {0.2, 0.6}) {
        const double fd = (q.value(i, t + h) - q.value(i, t - h)) / (2.0 * h);
        CHECK(q.derivative(i, t) == doctest::Approx(fd).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("cache round trip is bit-stable") {
  const std::string file = temp_path("quantizer_roundtrip.txt");
  ProductQuantizer q = build_brownian_quantizer(1.0, {3, 2});
  save_quantizer(q, file);
  ProductQuantizer r = load_quantizer(file);
  CHECK(r.T == q.T);
  CHECK(r.decomposition == q.decomposition);
  CHECK(r.weights == q.weights);
  CHECK(r.coeffs == q.coeffs);
  CHECK(r.normal_coords == q.normal_coords);
  const std::string file2 = temp_path("quantizer_roundtrip2.txt");
  save_quantizer(r, file2);
  std::ifstream a(file), b(file2);
  std::string sa((std::istreambuf_iterator<char>(a)),
                 std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(b)),
                 std::istreambuf_iterator<char>());
  CHECK(sa == sb);
  std::filesystem::remove(file);
  std::filesystem::remove(file2);
}

TEST_CASE("cache round trip for the mean-reverting kind") {
  const std::string file = temp_path("quantizer_ou.txt");
  ProductQuantizer q = build_ou_quantizer(0.5, 0.3, 0.7, {3, 2});
  save_quantizer(q, file);
  ProductQuantizer r =
      load_quantizer(file, ProcessKind::ornstein_uhlenbeck, 0.3, 0.7);
  CHECK(r.coeffs == q.coeffs);
  CHECK(r.normal_coords == q.normal_coords);
  // Loading under the wrong process parameters is caught, not absorbed.
  CHECK_THROWS_AS(load_quantizer(file), ConfigError);
  CHECK_THROWS_AS(
      load_quantizer(file, ProcessKind::ornstein_uhlenbeck, 2.0, 0.7),
      ConfigError);
  std::filesystem::remove(file);
}

TEST_CASE("malformed cache files are rejected") {
  const std::string file = temp_path("quantizer_bad.txt");
  auto write = [&](const char* text) {
    std::ofstream out(file);
    out << text;
  };
  write("");
  CHECK_THROWS_AS(load_quantizer(file), ConfigError);
  write("1.0 2 3\n");  // header promises two levels, lists one
  CHECK_THROWS_AS(load_quantizer(file), ConfigError);
  write("1.0 1 2\n0.5 0.1\n");  // row count short
  CHECK_THROWS_AS(load_quantizer(file), ConfigError);
  write("1.0 1 2\n0.5 nope\n0.5 0.1\n");
  CHECK_THROWS_AS(load_quantizer(file), ConfigError);
  std::filesystem::remove(file);
}

TEST_CASE("uniform time grids and their validation") {
  const std::vector<double> g = uniform_time_grid(2.0, 4);
  CHECK(g == std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0});
  CHECK_THROWS_AS(uniform_time_grid(2.0, 0), ConfigError);
  ProductQuantizer q = build_brownian_quantizer(1.0, {2});
  DiffusionODE ode{[](double) { return 0.0; }, [](double) { return 1.0; },
                   [](double) { return 0.0; },
                   -std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(quantize_diffusion(ode, 0.0, q, {0.5, 1.0}), ConfigError);
  CHECK_THROWS_AS(quantize_diffusion(ode, 0.0, q, {0.0, 0.5, 0.4}), ConfigError);
  CHECK_THROWS_AS(quantize_diffusion(ode, 0.0, q, {0.0, 1.5}), ConfigError);
  CHECK_THROWS_AS(quantize_diffusion(ode, 0.0, q, {0.0, 1.0}, 5), ConfigError);
}

TEST_CASE("additive noise integrates to the path itself") {
  const double s = 0.8, x0 = 2.0;
  ProductQuantizer q = build_brownian_quantizer(1.0, {3, 2});
  DiffusionODE ode{[](double) { return 0.0; }, [=](double) { return s; },
                   [](double) { return 0.0; },
                   -std::numeric_limits<double>::infinity()};
  const std::vector<double> grid = uniform_time_grid(1.0, 20);
  QuantizedEnsemble e = quantize_diffusion(ode, x0, q, grid);
  for (int i = 0; i < e.n_paths(); ++i) {
    CHECK(!e.failed[i]);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      CHECK(e.paths[i][k] ==
            doctest::Approx(x0 + s * q.value(i, grid[k])).epsilon(1e-9));
      CHECK(e.brownian_paths[i][k] == q.brownian_value(i, grid[k]));
    }
  }
  CHECK(e.weights == q.weights);
}

TEST_CASE("geometric dynamics match the exponential closed form") {
  const double r = 0.05, s = 0.3, s0 = 50.0, T = 1.0;
  ProductQuantizer q = build_brownian_quantizer(T, {5, 3, 2});
  DiffusionODE ode{[=](double x) { return r * x; },
                   [=](double x) { return s * x; }, [=](double) { return s; },
                   0.0};
  const std::vector<double> grid = uniform_time_grid(T, 50);
  QuantizedEnsemble rk4 = quantize_diffusion(ode, s0, q, grid, 4);
  QuantizedEnsemble rk6 = quantize_diffusion(ode, s0, q, grid, 6);
  QuantizedEnsemble exact = bs_exponential_paths(q, r, s, s0, grid);
  for (int i = 0; i < q.size(); ++i) {
    CHECK(!rk4.failed[i]);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double ref = exact.paths[i][k];
      CHECK(std::abs(rk4.paths[i][k] - ref) < 1e-6 * ref);
      CHECK(std::abs(rk6.paths[i][k] - ref) < 1e-6 * ref);
    }
  }
}

TEST_CASE("state-dependent volatility is stable under grid halving") {
  const double st = 5.0, beta = 0.5, r = 0.04, x0 = 100.0, T = 1.0;
  ProductQuantizer q = build_brownian_quantizer(T, {4, 2});
  DiffusionODE ode{
      [=](double x) { return r * x; },
      [=](double x) { return st * std::pow(x, 1.0 + beta) / std::sqrt(1.0 + x * x); },
      [=](double x) {
        return st * std::pow(x, beta) * ((1.0 + beta) + beta * x * x) /
               std::pow(1.0 + x * x, 1.5);
      },
      0.0};
  QuantizedEnsemble coarse =
      quantize_diffusion(ode, x0, q, uniform_time_grid(T, 50));
  QuantizedEnsemble fine =
      quantize_diffusion(ode, x0, q, uniform_time_grid(T, 100));
  for (int i = 0; i < q.size(); ++i) {
    CHECK(!coarse.failed[i]);
    for (std::size_t k = 0; k < coarse.time_grid.size(); ++k) {
      CHECK(std::abs(coarse.paths[i][k] - fine.paths[i][2 * k]) < 1e-8 * x0);
    }
  }
}

TEST_CASE("paths that leave the domain are flagged, not priced") {
  ProductQuantizer q = build_brownian_quantizer(1.0, {2});
  // Strong constant down-drift with a positivity domain: every path crosses
  // zero near t = 0.1 and must be flagged.
  DiffusionODE ode{[](double) { return -10.0; },
                   [](double x) { return 0.01 * x; },
                   [](double) { return 0.01; }, 0.0};
  QuantizedEnsemble e =
      quantize_diffusion(ode, 1.0, q, uniform_time_grid(1.0, 10));
  for (int i = 0; i < e.n_paths(); ++i) {
    CHECK(e.failed[i] == 1);
    CHECK(std::isnan(e.paths[i].back()));
    CHECK(std::isfinite(e.paths[i].front()));
  }
}

TEST_CASE("constant-volatility exponentials degenerate correctly") {
  const std::vector<double> grid = uniform_time_grid(1.0, 8);
  ProductQuantizer q = build_brownian_quantizer(1.0, {3, 2});
  QuantizedEnsemble flat = bs_exponential_paths(q, 0.05, 0.0, 100.0, grid);
  for (int i = 0; i < flat.n_paths(); ++i) {
    for (std::size_t k = 0; k < grid.size(); ++k) {
      CHECK(flat.paths[i][k] ==
            doctest::Approx(100.0 * std::exp(0.05 * grid[k])).epsilon(1e-14));
    }
  }
  ProductQuantizer one = build_brownian_quantizer(1.0, {1});
  QuantizedEnsemble zero = bs_exponential_paths(one, 0.05, 0.3, 100.0, grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    CHECK(zero.paths[0][k] ==
          doctest::Approx(100.0 * std::exp((0.05 - 0.045) * grid[k]))
              .epsilon(1e-14));
  }
}
