#pragma once

#include <functional>

#include <Eigen/Dense>

#include "bayesdes/design.hpp"
#include "bayesdes/models.hpp"
#include "bayesdes/priors.hpp"
#include "bayesdes/rng.hpp"
#include "bayesdes/utility.hpp"

namespace bayesdes {

/// Weighted abscissae approximating an expectation; weights are positive and sum to one.
struct QuadratureRule {
  Eigen::MatrixXd nodes;  // B x p
  Eigen::VectorXd weights;

  Eigen::Index size() const { return weights.size(); }
  Eigen::Index dimension() const { return nodes.cols(); }
  double integrate(const std::function<double(const Eigen::VectorXd&)>& f) const;
};

/// Nodes and weights of the n-point generalized Gauss-Laguerre rule for the weight
/// t^alpha exp(-t), weights normalized to sum to one.
std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_laguerre(int n, double alpha);

/// Unit directions and weights of a symmetric spherical rule on S^{p-1}: degree 5 for
/// p <= 6 (simplex vertices and normalized edge midpoints, with antipodes), degree 3
/// (extended simplex) above that.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> spherical_rule(Eigen::Index p);

/// Rule for the standard p_eff-variate normal combining a radial Gauss-Laguerre rule with
/// randomly rotated copies of the spherical rule (rotations drawn from `rng`).
QuadratureRule build_radial_spherical(Eigen::Index p_eff, int n_radial, int n_random_rotations,
                                      Rng& rng);
QuadratureRule build_radial_spherical(Eigen::Index p_eff, int n_radial = 3,
                                      int n_random_rotations = 2, std::uint64_t seed = 1);

/// Maps a standard-normal rule onto the prior. Normal: mean + L z. Uniform: probability
/// integral transform per free component, point masses filled in. Weights unchanged.
QuadratureRule transform_to_prior(const QuadratureRule& rule, const Prior& prior);

/// Weighted sum of the pseudo-Bayesian criterion over the rule's nodes.
double expected_criterion(const QuadratureRule& rule, const Model& model, const Design& d,
                          Criterion criterion);

double standard_normal_cdf(double z);

/// Deterministic pseudo-Bayesian D or A utility over a radial-spherical rule for `prior`.
UtilityEvaluator quadrature_criterion_utility(std::shared_ptr<const Model> model, const Prior& prior,
                                              Criterion criterion, int n_radial = 3,
                                              int n_random_rotations = 2, std::uint64_t seed = 1);

}  // namespace bayesdes
