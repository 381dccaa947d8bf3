#ifndef QUANTIS_ISOPT_PATH_HPP
#define QUANTIS_ISOPT_PATH_HPP

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "quantis/basis.hpp"
#include "quantis/funcquant.hpp"
#include "quantis/newton.hpp"

namespace quantis {

// Deterministic drift path restricted to the span of an orthonormal basis:
// theta(t) = sum_j coeffs[j] e_j(t), so |theta|_{L2}^2 = |coeffs|^2.
struct ThetaPath {
  BasisSpec basis;
  Eigen::VectorXd coeffs;

  double operator()(double t) const;
};

// Per-path data the functional objective needs: the stochastic integrals
// s_i[j] = int_0^T e_j dchi_i (the quantizer paths are C1, so the integral
// is the pathwise Riemann integral against chi_i'), the payoff of the
// quantized process path, and its weight. Paths whose diffusion solve
// failed are dropped and the remaining weights renormalized.
struct QuantizedPhiTable {
  BasisSpec basis;
  Eigen::MatrixXd s;   // rows x m stochastic-integral vectors
  Eigen::VectorXd f;   // payoff per kept path
  Eigen::VectorXd w;   // kept-path weights, renormalized to sum 1
  int excluded_paths = 0;
  double excluded_weight = 0.0;

  int rows() const { return static_cast<int>(w.size()); }
  int m() const { return basis.m; }
};

// Payoff of one whole path: receives the time grid and the process states.
using PathPayoffFn = std::function<double(const std::vector<double>&,
                                          const std::vector<double>&)>;

QuantizedPhiTable build_phi_table(const QuantizedEnsemble& ensemble,
                                  const BasisSpec& basis,
                                  const PathPayoffFn& payoff,
                                  int quad_cells = 2048);

// Q(c) = sum_i w_i f_i^2 exp(-c.s_i + |c|^2/2); strictly convex once some
// payoff is nonzero.
double q_tilde(const Eigen::VectorXd& c, const QuantizedPhiTable& table);

// J = sum_i term_i (c - s_i), H = sum_i term_i ((c-s_i)(c-s_i)^T + I) with
// term_i = w_i f_i^2 exp(-c.s_i + |c|^2/2). Outputs filled when non-null.
void grad_hess_q_tilde(const Eigen::VectorXd& c, const QuantizedPhiTable& table,
                       Eigen::VectorXd* grad, Eigen::MatrixXd* hess);

NewtonReport newton_optimize_path(const QuantizedPhiTable& table,
                                  const Eigen::VectorXd& c0,
                                  const NewtonOptions& opts = {});
NewtonReport newton_optimize_path(const QuantizedPhiTable& table,
                                  const NewtonOptions& opts = {});

// CSV export "t,theta(t)", one row per grid node.
void write_theta_csv(const ThetaPath& theta,
                     const std::vector<double>& time_grid,
                     const std::string& path);

}  // namespace quantis

#endif
