#include "quantis/basis.hpp"

#include <cmath>

#include "quantis/errors.hpp"

namespace quantis {

namespace {

bool is_power_of_two(int m) { return m >= 1 && (m & (m - 1)) == 0; }

// Haar mother wavelet on [0,1).
double psi(double u) {
  if (u < 0.0 || u >= 1.0) return 0.0;
  return u < 0.5 ? 1.0 : -1.0;
}

}  // namespace

BasisKind basis_kind_from_string(const std::string& name) {
  if (name == "constant") return BasisKind::constant;
  if (name == "shifted_legendre" || name == "legendre") {
    return BasisKind::shifted_legendre;
  }
  if (name == "karhunen_loeve" || name == "kl") {
    return BasisKind::karhunen_loeve;
  }
  if (name == "haar") return BasisKind::haar;
  throw ConfigError("unknown basis '" + name + "'");
}

std::string to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::constant: return "constant";
    case BasisKind::shifted_legendre: return "shifted_legendre";
    case BasisKind::karhunen_loeve: return "karhunen_loeve";
    case BasisKind::haar: return "haar";
  }
  return "?";
}

BasisSpec make_basis(BasisKind kind, int m, double T) {
  if (m < 1) throw ConfigError("basis: m must be >= 1");
  if (!(T > 0.0)) throw ConfigError("basis: T must be positive");
  if (kind == BasisKind::constant && m != 1) {
    throw ConfigError("basis: the constant family has exactly one function");
  }
  if (kind == BasisKind::haar && !is_power_of_two(m)) {
    throw ConfigError("basis: haar needs m in {1,2,4,8,...}");
  }
  return BasisSpec{kind, m, T};
}

void BasisSpec::eval_all(double t, double* out) const {
  switch (kind) {
    case BasisKind::constant: {
      out[0] = 1.0 / std::sqrt(T);
      return;
    }
    case BasisKind::shifted_legendre: {
      // Orthonormalized shifted Legendre: sqrt((2j+1)/T) P_j(2t/T - 1).
      const double u = 2.0 * t / T - 1.0;
      double pm1 = 1.0, p = u;
      for (int j = 0; j < m; ++j) {
        double pj;
        if (j == 0) {
          pj = 1.0;
        } else if (j == 1) {
          pj = u;
        } else {
          pj = ((2.0 * j - 1.0) * u * p - (j - 1.0) * pm1) / j;
          pm1 = p;
          p = pj;
        }
        out[j] = std::sqrt((2.0 * j + 1.0) / T) * pj;
      }
      return;
    }
    case BasisKind::karhunen_loeve: {
      const double c = std::sqrt(2.0 / T);
      for (int j = 0; j < m; ++j) {
        out[j] = c * std::sin((j + 0.5) * M_PI * t / T);
      }
      return;
    }
    case BasisKind::haar: {
      out[0] = 1.0 / std::sqrt(T);
      int j = 1;
      for (int level = 0; j < m; ++level) {
        const double scale = std::sqrt(std::exp2(level) / T);
        for (int k = 0; k < (1 << level) && j < m; ++k, ++j) {
          out[j] = scale * psi(std::exp2(level) * t / T - k);
        }
      }
      return;
    }
  }
}

double BasisSpec::eval(int j, double t) const {
  if (j < 0 || j >= m) throw ConfigError("basis: function index out of range");
  std::vector<double> buf(static_cast<std::size_t>(m));
  eval_all(t, buf.data());
  return buf[static_cast<std::size_t>(j)];
}

namespace {

// Composite 2-point Gauss rule: cell midpoint +- h/(2 sqrt(3)), weight h/2.
// Nodes never touch cell edges, so dyadic jump points are never sampled.
template <typename F>
void gauss2(double T, int cells, F&& per_node) {
  const double h = T / cells;
  const double off = h * 0.5 / std::sqrt(3.0);
  for (int c = 0; c < cells; ++c) {
    const double mid = (c + 0.5) * h;
    per_node(mid - off, 0.5 * h);
    per_node(mid + off, 0.5 * h);
  }
}

}  // namespace

Eigen::MatrixXd gram(const BasisSpec& basis) {
  const int m = basis.m;
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(m, m);
  std::vector<double> e(static_cast<std::size_t>(m));
  gauss2(basis.T, 2048, [&](double t, double w) {
    basis.eval_all(t, e.data());
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j <= i; ++j) g(i, j) += w * e[i] * e[j];
    }
  });
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) g(i, j) = g(j, i);
  }
  return g;
}

Eigen::VectorXd integrate_against_quantizer_derivative(
    const BasisSpec& basis, const std::function<double(double)>& path_derivative,
    int cells) {
  if (cells < 1) throw ConfigError("integrate: cells must be >= 1");
  const int m = basis.m;
  Eigen::VectorXd s = Eigen::VectorXd::Zero(m);
  std::vector<double> e(static_cast<std::size_t>(m));
  gauss2(basis.T, cells, [&](double t, double w) {
    const double dp = path_derivative(t);
    basis.eval_all(t, e.data());
    for (int j = 0; j < m; ++j) s[j] += w * e[j] * dp;
  });
  return s;
}

Eigen::VectorXd ito_sum(const BasisSpec& basis,
                        const std::vector<double>& time_grid,
                        const std::vector<double>& dw) {
  if (time_grid.size() != dw.size() + 1) {
    throw ConfigError("ito_sum: time grid must be one longer than increments");
  }
  const int m = basis.m;
  Eigen::VectorXd s = Eigen::VectorXd::Zero(m);
  std::vector<double> e(static_cast<std::size_t>(m));
  for (std::size_t k = 0; k < dw.size(); ++k) {
    basis.eval_all(time_grid[k], e.data());
    for (int j = 0; j < m; ++j) s[j] += e[j] * dw[k];
  }
  return s;
}

}  // namespace quantis
