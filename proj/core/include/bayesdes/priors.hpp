#pragma once

#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace bayesdes {

struct NormalPrior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;

  /// Throws std::invalid_argument unless the covariance is symmetric positive definite.
  void validate() const;
  Eigen::Index dimension() const { return mean.size(); }
};

/// Independent uniforms; support row 0 holds lower limits, row 1 upper limits.
/// A column with lower == upper is a point mass.
struct IndependentUniformPrior {
  Eigen::MatrixXd support;

  void validate() const;
  Eigen::Index dimension() const { return support.cols(); }
  /// Indices of components that are not point masses.
  std::vector<Eigen::Index> free_components() const;
};

using Prior = std::variant<NormalPrior, IndependentUniformPrior>;

Eigen::Index prior_dimension(const Prior& prior);
/// Number of non-degenerate components (the quadrature dimension).
Eigen::Index effective_dimension(const Prior& prior);

}  // namespace bayesdes
