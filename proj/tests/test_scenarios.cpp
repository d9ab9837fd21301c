#include <doctest.h>

#include <cmath>

#include "bayesdes/errors.hpp"
#include "bayesdes/scenarios.hpp"

using namespace bayesdes;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("squared exponential correlation") {
  MatrixXd a(2, 2);
  a << 0, 0, 1, 0;
  const MatrixXd c = squared_exp_correlation(a, a, 1.0);
  CHECK(c(0, 0) == 1.0);
  CHECK(c(1, 1) == 1.0);
  CHECK(c(0, 1) == doctest::Approx(std::exp(-1.0)));
  CHECK((squared_exp_correlation(a, a, 0.0).array() == 1.0).all());
  CHECK_THROWS_AS(squared_exp_correlation(a, MatrixXd::Zero(1, 3), 1.0), DimensionMismatch);
}

TEST_CASE("posterior predictive mean") {
  Rng rng = substream(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MatrixXd x(5, 2), x0(3, 2);
  for (Index r = 0; r < 5; ++r) x.row(r) << u(rng), u(rng);
  for (Index r = 0; r < 3; ++r) x0.row(r) << u(rng), u(rng);
  VectorXd y(5);
  for (Index r = 0; r < 5; ++r) y(r) = u(rng) - 0.5;
  const MatrixXd C = squared_exp_correlation(x, x, 1.0);
  const MatrixXd S = squared_exp_correlation(x, x0, 1.0);

  MatrixXd k = C;
  k.diagonal().array() += 0.1;
  const VectorXd dense = S.transpose() * k.fullPivLu().inverse() * y;
  const VectorXd got = posterior_predictive_mean(S, C, 0.1, y);
  for (Index r = 0; r < 3; ++r) CHECK(got(r) == doctest::Approx(dense(r)).epsilon(1e-10));

  CHECK(posterior_predictive_mean(S, C, 0.1, VectorXd::Zero(5)).isZero());
  // Predicting at the observed points with no nugget reproduces the data.
  const VectorXd interp = posterior_predictive_mean(C, C, 0.0, y);
  for (Index r = 0; r < 5; ++r) CHECK(interp(r) == doctest::Approx(y(r)).epsilon(1e-6));
}

TEST_CASE("sensor utility draws") {
  MatrixXd x(2, 2);
  x << 1, 1, 0, 0;
  CHECK(sensor_cost(Design(x)) == 2.0);

  const SensorScenario sc;
  CHECK(sc.prediction_grid().rows() == 100);
  const auto u = sensor_utility(sc);
  Rng rng = substream(4);
  const Design d = latin_hypercube_start(10, 2, DesignSpace(10, 2, -1.0, 1.0), rng);
  const VectorXd v = u.draws(d, 200, rng);
  const double cost = sensor_cost(d);
  for (Index b = 0; b < v.size(); ++b) {
    CHECK(v(b) >= -cost);
    CHECK(v(b) <= 100.0 - cost);
    CHECK(v(b) + cost == std::round(v(b) + cost));
  }
}

TEST_CASE("chemical utility draws") {
  CHECK(chemical_mean(0, 0.7) == doctest::Approx(std::exp(-0.7)));
  CHECK(chemical_mean(1, 0.7) == doctest::Approx(1.0 / 1.7));
  CHECK(chemical_mean(2, 0.0) == 1.0);
  const auto u = chemical_utility(ChemicalScenario{});
  MatrixXd x(20, 2);
  for (Index r = 0; r < 20; ++r) x.row(r) << 0.01 + 0.02 * r, 300.0 + 5.0 * r;
  Rng rng = substream(5);
  const VectorXd v = u.draws(Design(x), 50, rng);
  for (Index b = 0; b < v.size(); ++b) CHECK((v(b) == 0.0 || v(b) == 1.0));
}

TEST_CASE("scenario registry") {
  const auto reg = scenario_registry();
  CHECK(reg.size() == 7);
  for (const auto& [name, description] : reg) {
    const Scenario s = make_scenario(name, 3);
    CHECK(s.name == name);
    CHECK(!description.empty());
    CHECK(s.settings.seed == 3);
    const auto starts = s.starts(3);
    CHECK(starts.size() == static_cast<std::size_t>(s.repetitions));
    CHECK(s.space.contains(starts.front()));
    CHECK(starts.front().runs() == s.space.runs());
  }
  CHECK_THROWS_AS(make_scenario("nope"), std::invalid_argument);
}

TEST_CASE("scenario starts are reproducible") {
  const Scenario s = make_scenario("logistic_A", 2);
  CHECK(s.starts(2) == s.starts(2));
  CHECK(s.starts(2).front() != s.starts(3).front());
}
