#pragma once

// Reference computations that share no code with the library.

#include <cmath>
#include <memory>
#include <numbers>

#include <Eigen/Dense>

#include "bayesdes/models.hpp"

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline double rel_err(const MatrixXd& a, const MatrixXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

// Second differences of the log-likelihood. For canonical-link GLMs the observed
// information does not depend on y, so this equals the expected information.
inline MatrixXd fd_neg_hessian(const bayesdes::Model& m, const VectorXd& theta, const VectorXd& y,
                               const MatrixXd& f, double h = 1e-3) {
  const auto p = theta.size();
  MatrixXd out(p, p);
  auto ll = [&](const VectorXd& t) { return m.log_likelihood(t, y, f); };
  for (Eigen::Index a = 0; a < p; ++a) {
    for (Eigen::Index b = a; b < p; ++b) {
      VectorXd pp = theta, pm = theta, mp = theta, mm = theta;
      pp(a) += h, pp(b) += h;
      pm(a) += h, pm(b) -= h;
      mp(a) -= h, mp(b) += h;
      mm(a) -= h, mm(b) -= h;
      out(a, b) = out(b, a) = -(ll(pp) - ll(pm) - ll(mp) + ll(mm)) / (4.0 * h * h);
    }
  }
  return out;
}

// Central-difference Jacobian of the mean vector.
inline MatrixXd fd_jacobian(const bayesdes::Model& m, const VectorXd& theta, const MatrixXd& f) {
  const auto p = theta.size();
  const auto n = m.mean(theta, f).size();
  MatrixXd j(n, p);
  for (Eigen::Index a = 0; a < p; ++a) {
    const double h = 1e-6 * (1.0 + std::abs(theta(a)));
    VectorXd up = theta, dn = theta;
    up(a) += h;
    dn(a) -= h;
    j.col(a) = (m.mean(up, f) - m.mean(dn, f)) / (2.0 * h);
  }
  return j;
}

// log N(y; X m0, X S0 X^T + s2 I), by a dense determinant and inverse.
inline double gaussian_log_marginal(const MatrixXd& x, double s2, const VectorXd& m0,
                                    const MatrixXd& s0, const VectorXd& y) {
  const auto n = y.size();
  const MatrixXd cov = x * s0 * x.transpose() + s2 * MatrixXd::Identity(n, n);
  const VectorXd r = y - x * m0;
  return -0.5 * (static_cast<double>(n) * std::log(2.0 * std::numbers::pi) +
                 std::log(cov.determinant()) + r.dot(cov.inverse() * r));
}

// Posterior mean of theta for y = X theta + e, e ~ N(0, s2 I), theta ~ N(m0, S0).
inline VectorXd gaussian_posterior_mean(const MatrixXd& x, double s2, const VectorXd& m0,
                                        const MatrixXd& s0, const VectorXd& y) {
  const MatrixXd prec = s0.inverse() + x.transpose() * x / s2;
  return prec.inverse() * (s0.inverse() * m0 + x.transpose() * y / s2);
}

// Linear mean theta^T x_i as a nonlinear model, so the Gaussian path can be checked
// against conjugate formulas.
inline bayesdes::NonlinearModel linear_model(Eigen::Index p, double s2) {
  auto mean = [](std::span<const double> th, std::span<const double> x) {
    double acc = 0.0;
    for (std::size_t j = 0; j < th.size(); ++j) acc += th[j] * x[j];
    return acc;
  };
  auto grad = [](std::span<const double>, std::span<const double> x, std::span<double> g) {
    for (std::size_t j = 0; j < g.size(); ++j) g[j] = x[j];
  };
  return bayesdes::NonlinearModel(p, mean, grad, s2);
}

// E[z^k] for z ~ N(0, 1).
inline double normal_moment(int k) {
  if (k % 2 == 1) return 0.0;
  double v = 1.0;
  for (int j = k - 1; j > 1; j -= 2) v *= j;
  return v;
}

}  // namespace oracle
