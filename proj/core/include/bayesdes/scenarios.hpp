#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bayesdes/ace.hpp"
#include "bayesdes/assess.hpp"
#include "bayesdes/design.hpp"
#include "bayesdes/utility.hpp"

namespace bayesdes {

/// exp(-phi |a_r - b_c|^2) for every row pair.
Eigen::MatrixXd squared_exp_correlation(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                        double phi);

/// S^T (C + tau2 I)^{-1} y via a Cholesky solve. Throws NumericalFailure if C + tau2 I is
/// not positive definite.
Eigen::VectorXd posterior_predictive_mean(const Eigen::MatrixXd& S, const Eigen::MatrixXd& C,
                                          double tau2, const Eigen::VectorXd& y);

struct SensorScenario {
  Index n = 10;
  int grid_side = 10;
  double phi = 1.0;
  double tau2 = 1e-5;
  double a = 3.0;  // sigma^{-2} ~ Gamma(a / 2, rate b / 2)
  double b = 1.0;
  double delta = 0.25;

  Eigen::MatrixXd prediction_grid() const;
};

/// Total squared distance of the sensors from the origin.
double sensor_cost(const Design& d);

UtilityEvaluator sensor_utility(const SensorScenario& sc);

struct ChemicalScenario {
  Index n = 20;
  double sigma = 0.1;
  Eigen::Vector2d prior_mean{400.0, 5000.0};
  Eigen::Vector2d prior_sd{25.0, 250.0};
  Index B_inner = 100;
};

/// Mean response of reaction order m at eta = theta1 x1 exp(-theta2 / x2).
double chemical_mean(int order, double eta);

UtilityEvaluator chemical_utility(const ChemicalScenario& sc);

/// A ready-to-run problem: utility, design space, engine settings and start designs.
struct Scenario {
  explicit Scenario(DesignSpace sp) : space(std::move(sp)) {}

  std::string name;
  std::string description;
  std::string criterion;
  UtilityEvaluator utility;
  DesignSpace space;
  AceSettings settings;
  int repetitions = 1;
  int n_assess = 20;
  EfficiencyKind efficiency = EfficiencyKind::None;
  Index parameters = 0;  // used by the relative D-efficiency
  std::vector<std::string> column_names;
  std::function<Design(Rng&)> random_start;

  /// One start per repetition, each from its own substream of `seed`.
  std::vector<Design> starts(std::uint64_t seed) const;
};

/// Names accepted by make_scenario, with one-line descriptions.
std::vector<std::pair<std::string, std::string>> scenario_registry();

/// Builds a scenario by name; the seed fixes the quadrature rotations and the settings'
/// seed. Throws std::invalid_argument for an unknown name.
Scenario make_scenario(const std::string& name, std::uint64_t seed = 1);

}  // namespace bayesdes
