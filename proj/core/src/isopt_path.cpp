#include "quantis/isopt_path.hpp"

#include <cmath>
#include <fstream>

#include "quantis/errors.hpp"
#include "quantis/io.hpp"
#include "quantis/parallel.hpp"

namespace quantis {

double ThetaPath::operator()(double t) const {
  if (coeffs.size() != basis.m) throw ConfigError("theta path size mismatch");
  std::vector<double> e(static_cast<std::size_t>(basis.m));
  basis.eval_all(t, e.data());
  double v = 0.0;
  for (int j = 0; j < basis.m; ++j) v += coeffs[j] * e[j];
  return v;
}

QuantizedPhiTable build_phi_table(const QuantizedEnsemble& ensemble,
                                  const BasisSpec& basis,
                                  const PathPayoffFn& payoff,
                                  int quad_cells) {
  if (!payoff) throw ConfigError("phi table needs a payoff");
  const int n = ensemble.n_paths();
  if (n == 0) throw ConfigError("phi table needs a nonempty ensemble");
  if (std::abs(basis.T - ensemble.quantizer.T) > 1e-12 * basis.T) {
    throw ConfigError("basis horizon does not match the quantizer");
  }

  std::vector<int> kept;
  kept.reserve(n);
  double lost = 0.0;
  for (int i = 0; i < n; ++i) {
    if (ensemble.failed[i]) {
      lost += ensemble.weights[i];
    } else {
      kept.push_back(i);
    }
  }
  if (kept.empty()) {
    throw NumericalError("every quantizer path failed; nothing to tabulate");
  }

  QuantizedPhiTable table;
  table.basis = basis;
  table.excluded_paths = n - static_cast<int>(kept.size());
  table.excluded_weight = lost;
  table.s.resize(static_cast<int>(kept.size()), basis.m);
  table.f.resize(static_cast<int>(kept.size()));
  table.w.resize(static_cast<int>(kept.size()));

  const double renorm = 1.0 / (1.0 - lost);
  parallel_chunks(kept.size(), 8, [&](std::size_t, std::size_t begin,
                                      std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const int i = kept[r];
      const Eigen::VectorXd si = integrate_against_quantizer_derivative(
          basis,
          [&](double t) { return ensemble.quantizer.brownian_derivative(i, t); },
          quad_cells);
      table.s.row(static_cast<int>(r)) = si.transpose();
      const double fv = payoff(ensemble.time_grid, ensemble.paths[i]);
      if (!std::isfinite(fv)) {
        throw NumericalError("payoff not finite on a quantized path");
      }
      table.f[static_cast<int>(r)] = fv;
      table.w[static_cast<int>(r)] = ensemble.weights[i] * renorm;
    }
  });
  return table;
}

namespace {

void check_not_degenerate(const QuantizedPhiTable& table) {
  for (int i = 0; i < table.rows(); ++i) {
    if (table.f[i] != 0.0 && table.w[i] != 0.0) return;
  }
  throw DegenerateObjectiveError(
      "payoff vanishes on every quantized path; objective is constant");
}

}  // namespace

double q_tilde(const Eigen::VectorXd& c, const QuantizedPhiTable& table) {
  if (c.size() != table.m()) throw ConfigError("coefficient size mismatch");
  check_not_degenerate(table);
  const double half_norm = 0.5 * c.squaredNorm();
  double v = 0.0;
  for (int i = 0; i < table.rows(); ++i) {
    const double f = table.f[i];
    if (f == 0.0) continue;
    v += table.w[i] * f * f * std::exp(half_norm - c.dot(table.s.row(i)));
  }
  return v;
}

void grad_hess_q_tilde(const Eigen::VectorXd& c, const QuantizedPhiTable& table,
                       Eigen::VectorXd* grad, Eigen::MatrixXd* hess) {
  if (c.size() != table.m()) throw ConfigError("coefficient size mismatch");
  check_not_degenerate(table);
  const int m = table.m();
  const double half_norm = 0.5 * c.squaredNorm();
  if (grad) grad->setZero(m);
  if (hess) hess->setZero(m, m);
  Eigen::VectorXd r(m);
  for (int i = 0; i < table.rows(); ++i) {
    const double f = table.f[i];
    if (f == 0.0) continue;
    const double term =
        table.w[i] * f * f * std::exp(half_norm - c.dot(table.s.row(i)));
    r = c - table.s.row(i).transpose();
    if (grad) *grad += term * r;
    if (hess) *hess += term * (r * r.transpose() +
                               Eigen::MatrixXd::Identity(m, m));
  }
  if (hess && !hess->allFinite()) {
    throw NumericalError("functional Hessian has non-finite entries");
  }
}

NewtonReport newton_optimize_path(const QuantizedPhiTable& table,
                                  const Eigen::VectorXd& c0,
                                  const NewtonOptions& opts) {
  check_not_degenerate(table);
  return newton_minimize(
      [&](const Eigen::VectorXd& c, Eigen::VectorXd* g, Eigen::MatrixXd* h) {
        if (g || h) grad_hess_q_tilde(c, table, g, h);
        return q_tilde(c, table);
      },
      c0, opts);
}

NewtonReport newton_optimize_path(const QuantizedPhiTable& table,
                                  const NewtonOptions& opts) {
  return newton_optimize_path(table, Eigen::VectorXd::Zero(table.m()), opts);
}

void write_theta_csv(const ThetaPath& theta,
                     const std::vector<double>& time_grid,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << "t,theta(t)\n";
  for (double t : time_grid) {
    out << fmt17(t) << ',' << fmt17(theta(t)) << '\n';
  }
  if (!out) throw ConfigError("write to '" + path + "' failed");
}

}  // namespace quantis
