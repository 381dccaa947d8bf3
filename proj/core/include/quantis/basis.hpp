#ifndef QUANTIS_BASIS_HPP
#define QUANTIS_BASIS_HPP

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace quantis {

// Orthonormal families on [0, T] used to parameterize deterministic drift
// paths. All four are L2-orthonormal; "haar" requires m to be a power of
// two so that complete dyadic levels are present.
enum class BasisKind { constant, shifted_legendre, karhunen_loeve, haar };

BasisKind basis_kind_from_string(const std::string& name);
std::string to_string(BasisKind kind);

struct BasisSpec {
  BasisKind kind = BasisKind::constant;
  int m = 1;
  double T = 1.0;

  // Value of the j-th function (0-based) at t.
  double eval(int j, double t) const;
  // Values of all m functions at t; out must hold m doubles.
  void eval_all(double t, double* out) const;
};

BasisSpec make_basis(BasisKind kind, int m, double T);

// Gram matrix by composite 2-point Gauss quadrature on 2^11 equal cells
// (4096 nodes). Cell edges sit on every dyadic breakpoint, so piecewise
// constant families integrate exactly; smooth families carry O(h^4) error,
// far below the 1e-8 orthonormality check.
Eigen::MatrixXd gram(const BasisSpec& basis);

// s[j] = int_0^T e_j(t) path'(t) dt for a differentiable path, by the same
// composite Gauss rule with `cells` cells (2 nodes each).
Eigen::VectorXd integrate_against_quantizer_derivative(
    const BasisSpec& basis, const std::function<double(double)>& path_derivative,
    int cells = 2048);

// Left-point Ito sums against Brownian increments on a time grid:
// out[j] = sum_k e_j(t_k) dw[k], with time_grid one longer than dw.
Eigen::VectorXd ito_sum(const BasisSpec& basis,
                        const std::vector<double>& time_grid,
                        const std::vector<double>& dw);

}  // namespace quantis

#endif
