#include "bayesdes/scenarios.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "bayesdes/errors.hpp"
#include "bayesdes/models.hpp"
#include "bayesdes/quadrature.hpp"

namespace bayesdes {

Eigen::MatrixXd squared_exp_correlation(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                        double phi) {
  if (a.cols() != b.cols()) throw DimensionMismatch("correlation inputs differ in dimension");
  Eigen::MatrixXd out(a.rows(), b.rows());
  for (Index r = 0; r < a.rows(); ++r)
    for (Index c = 0; c < b.rows(); ++c) out(r, c) = std::exp(-phi * (a.row(r) - b.row(c)).squaredNorm());
  return out;
}

Eigen::VectorXd posterior_predictive_mean(const Eigen::MatrixXd& S, const Eigen::MatrixXd& C,
                                          double tau2, const Eigen::VectorXd& y) {
  if (C.rows() != C.cols() || S.rows() != C.rows() || y.size() != C.rows())
    throw DimensionMismatch("posterior predictive mean: inconsistent dimensions");
  Eigen::MatrixXd k = C;
  k.diagonal().array() += tau2;
  const Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) throw NumericalFailure("C + tau2 I is not positive definite");
  return S.transpose() * llt.solve(y);
}

Eigen::MatrixXd SensorScenario::prediction_grid() const {
  const std::vector<double> axis = linspace(0.0, 1.0, static_cast<std::size_t>(grid_side));
  Eigen::MatrixXd g(grid_side * grid_side, 2);
  // First coordinate varies fastest.
  for (int r = 0; r < grid_side; ++r)
    for (int c = 0; c < grid_side; ++c) {
      g(r * grid_side + c, 0) = axis[static_cast<std::size_t>(c)];
      g(r * grid_side + c, 1) = axis[static_cast<std::size_t>(r)];
    }
  return g;
}

double sensor_cost(const Design& d) { return d.matrix().squaredNorm(); }

namespace {

// Lower factor F with F F^T = m; falls back to an eigendecomposition when Cholesky fails.
Eigen::MatrixXd symmetric_factor(const Eigen::MatrixXd& m) {
  const Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  if (eig.info() != Eigen::Success) throw NumericalFailure("covariance factorization failed");
  return eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

}  // namespace

UtilityEvaluator sensor_utility(const SensorScenario& sc) {
  const Eigen::MatrixXd d0 = sc.prediction_grid();
  const Eigen::MatrixXd c0 = squared_exp_correlation(d0, d0, sc.phi);
  return UtilityEvaluator::stochastic([sc, d0, c0](const Design& d, Index B, Rng& rng) {
    if (d.factors() != 2) throw DimensionMismatch("sensor designs have two columns");
    const Eigen::MatrixXd& x = d.matrix();
    const Index n = x.rows();
    const Index n0 = d0.rows();
    const Eigen::MatrixXd C = squared_exp_correlation(x, x, sc.phi);
    const Eigen::MatrixXd S = squared_exp_correlation(x, d0, sc.phi);
    Eigen::MatrixXd sigma(n + n0, n + n0);
    sigma << C, S, S.transpose(), c0;
    sigma.diagonal().array() += sc.tau2;
    const Eigen::MatrixXd factor = symmetric_factor(sigma);

    std::gamma_distribution<double> precision(0.5 * sc.a, 2.0 / sc.b);
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::MatrixXd raw(n + n0, B);
    Eigen::VectorXd scale(B);
    for (Index b = 0; b < B; ++b) scale(b) = std::sqrt(1.0 / precision(rng));
    for (Index b = 0; b < B; ++b)
      for (Index r = 0; r < n + n0; ++r) raw(r, b) = z(rng);
    const Eigen::MatrixXd ytilde = (factor * raw) * scale.asDiagonal();

    Eigen::MatrixXd ck = C;
    ck.diagonal().array() += sc.tau2;
    const Eigen::LLT<Eigen::MatrixXd> llt(ck);
    if (llt.info() != Eigen::Success) throw NumericalFailure("C + tau2 I is not positive definite");
    const Eigen::MatrixXd pred = S.transpose() * llt.solve(ytilde.topRows(n));
    const auto err = (pred - ytilde.bottomRows(n0)).array().abs();
    const double cost = sensor_cost(d);
    Eigen::VectorXd u(B);
    for (Index b = 0; b < B; ++b) u(b) = static_cast<double>((err.col(b) < sc.delta).count()) - cost;
    return u;
  });
}

double chemical_mean(int order, double eta) {
  if (order == 0) return std::exp(-eta);
  const double m = static_cast<double>(order);
  return std::pow(1.0 + m * eta, -1.0 / m);
}

UtilityEvaluator chemical_utility(const ChemicalScenario& sc) {
  std::vector<std::shared_ptr<const Model>> models;
  for (int order = 0; order < 4; ++order) {
    MeanFunction mean = [order](std::span<const double> t, std::span<const double> x) {
      return chemical_mean(order, t[0] * x[0] * std::exp(-t[1] / x[1]));
    };
    models.push_back(std::make_shared<NonlinearModel>(2, mean, nullptr, sc.sigma * sc.sigma));
  }
  NormalPrior prior;
  prior.mean = sc.prior_mean;
  prior.covariance = sc.prior_sd.cwiseAbs2().asDiagonal();
  return zero_one_utility(models, {prior_sampler(prior)}, {}, sc.B_inner);
}

namespace {

Design lhs_start(Index n, Index k, const DesignSpace& space, Rng& rng,
                 const std::vector<std::string>& names) {
  return Design(latin_hypercube_start(n, k, space, rng).matrix(), names);
}

IndependentUniformPrior logistic_prior() {
  IndependentUniformPrior prior;
  prior.support.resize(2, 5);
  prior.support << -3, 4, 5, -6, -2.5, 3, 10, 11, 0, 3.5;
  return prior;
}

IndependentUniformPrior compartmental_prior() {
  IndependentUniformPrior prior;
  prior.support.resize(2, 3);
  prior.support << 0.01884, 0.298, 21.8, 0.09884, 8.298, 21.8;
  return prior;
}

Scenario poisson_scenario() {
  Scenario s(DesignSpace(12, 1, -1.0, 1.0));
  s.name = "poisson_fisher";
  s.description = "Poisson response, one factor, n=12; Monte Carlo Fisher-information utility";
  s.criterion = "custom";
  s.column_names = {"x"};
  s.utility = UtilityEvaluator::stochastic([](const Design& d, Index B, Rng& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    const Eigen::VectorXd x = d.matrix().col(0);
    Eigen::VectorXd u(B);
    for (Index b = 0; b < B; ++b) {
      const double theta = z(rng);
      u(b) = (x.array().square() * (theta * x.array()).exp()).sum();
    }
    return u;
  });
  s.random_start = [](Rng& rng) {
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Eigen::MatrixXd m(12, 1);
    for (Index i = 0; i < 12; ++i) m(i, 0) = unif(rng);
    return Design(m, {"x"});
  };
  return s;
}

Scenario compartmental_scenario(bool spaced, std::uint64_t seed) {
  CandidateGridGenerator constraint = spaced ? min_spacing_constraint(0.25, 0.0, 24.0, 10000) : nullptr;
  Scenario s(DesignSpace(18, 1, 0.0, 24.0, constraint));
  s.name = spaced ? "compartmental_spaced" : "compartmental";
  s.description = spaced ? "Compartmental model, pseudo-Bayesian D, 18 times at least 0.25 apart"
                         : "Compartmental model, pseudo-Bayesian D, 18 sampling times in [0, 24]";
  s.criterion = "D";
  s.efficiency = EfficiencyKind::D;
  s.parameters = 3;
  s.column_names = {"t"};
  s.utility = quadrature_criterion_utility(
      std::make_shared<NonlinearModel>(compartmental_model(1.0)), compartmental_prior(), Criterion::D,
      3, 2, seed);
  if (spaced) s.settings.N2 = 0;
  const DesignSpace box(18, 1, 0.0, 24.0);
  s.random_start = [box](Rng& rng) { return lhs_start(18, 1, box, rng, {"t"}); };
  return s;
}

Scenario logistic_scenario(bool nsel, std::uint64_t seed) {
  Scenario s(DesignSpace(6, 4, -1.0, 1.0));
  s.repetitions = 10;
  s.column_names = {"x1", "x2", "x3", "x4"};
  s.parameters = 5;
  auto model = std::make_shared<GlmModel>(GlmModel::main_effects(GlmFamily::BernoulliLogit, true, 4));
  const IndependentUniformPrior prior = logistic_prior();
  if (nsel) {
    s.name = "logistic_nsel_norm";
    s.description = "Logistic regression, 4 factors, n=6; normal-approximation NSEL utility (Monte Carlo)";
    s.criterion = "NSEL-Norm";
    s.utility = nsel_normal_utility(model, prior_sampler(prior), moment_matched_log_prior(prior));
  } else {
    s.name = "logistic_A";
    s.description = "Logistic regression, 4 factors, n=6; pseudo-Bayesian A (quadrature)";
    s.criterion = "A";
    s.efficiency = EfficiencyKind::A;
    s.utility = quadrature_criterion_utility(model, prior, Criterion::A, 3, 2, seed);
  }
  const DesignSpace space = s.space;
  const auto names = s.column_names;
  s.random_start = [space, names](Rng& rng) { return lhs_start(6, 4, space, rng, names); };
  return s;
}

Scenario chemical_scenario() {
  Eigen::MatrixXd lower(20, 2), upper(20, 2);
  lower.col(0).setConstant(0.0);
  lower.col(1).setConstant(450.0);
  upper.col(0).setConstant(150.0);
  upper.col(1).setConstant(600.0);
  Scenario s(DesignSpace(lower, upper));
  s.name = "chemical";
  s.description = "Chemical reaction order selection (4 models), n=20; Monte Carlo 0-1 utility";
  s.criterion = "0-1";
  s.column_names = {"x1", "x2"};
  s.utility = chemical_utility(ChemicalScenario{});
  s.settings.B_compare = 1000;
  s.settings.B_emulate = 100;
  s.settings.Q = 15;
  s.settings.N2 = 0;
  s.settings.binary = true;
  const DesignSpace space = s.space;
  s.random_start = [space](Rng& rng) { return lhs_start(20, 2, space, rng, {"x1", "x2"}); };
  return s;
}

Scenario sensor_scenario() {
  Scenario s(DesignSpace(10, 2, 0.0, 1.0));
  s.name = "sensor";
  s.description = "Sensor placement for Gaussian process prediction on [0,1]^2, n=10, with cost";
  s.criterion = "custom";
  s.column_names = {"x1", "x2"};
  s.utility = sensor_utility(SensorScenario{});
  const DesignSpace space = s.space;
  s.random_start = [space](Rng& rng) { return lhs_start(10, 2, space, rng, {"x1", "x2"}); };
  return s;
}

}  // namespace

std::vector<Design> Scenario::starts(std::uint64_t seed) const {
  std::vector<Design> out;
  for (int r = 0; r < repetitions; ++r) {
    Rng rng = substream(seed, {0x57a27, static_cast<std::uint64_t>(r)});
    out.push_back(random_start(rng));
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> scenario_registry() {
  std::vector<std::pair<std::string, std::string>> out;
  for (const char* name : {"poisson_fisher", "compartmental", "compartmental_spaced", "logistic_A",
                           "logistic_nsel_norm", "chemical", "sensor"}) {
    const Scenario s = make_scenario(name);
    out.emplace_back(s.name, s.description);
  }
  return out;
}

Scenario make_scenario(const std::string& name, std::uint64_t seed) {
  Scenario s = [&] {
    if (name == "poisson_fisher") return poisson_scenario();
    if (name == "compartmental") return compartmental_scenario(false, seed);
    if (name == "compartmental_spaced") return compartmental_scenario(true, seed);
    if (name == "logistic_A") return logistic_scenario(false, seed);
    if (name == "logistic_nsel_norm") return logistic_scenario(true, seed);
    if (name == "chemical") return chemical_scenario();
    if (name == "sensor") return sensor_scenario();
    throw std::invalid_argument("unknown scenario '" + name + "'");
  }();
  s.settings.seed = seed;
  return s;
}

}  // namespace bayesdes
