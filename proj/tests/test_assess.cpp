#include <doctest.h>

#include <cmath>

#include "bayesdes/assess.hpp"
#include "bayesdes/quadrature.hpp"

using namespace bayesdes;

TEST_CASE("relative efficiencies") {
  CHECK(relative_d_efficiency(4.2, 4.2, 3) == doctest::Approx(100.0));
  CHECK(relative_d_efficiency(5.0, 2.0, 3) == doctest::Approx(100.0 * std::exp(1.0)));
  CHECK(relative_d_efficiency(15.79695, 15.70753, 3) == doctest::Approx(103.026).epsilon(1e-5));
  CHECK(relative_a_efficiency(-225.6464, -267.3872) == doctest::Approx(118.498).epsilon(1e-5));
  CHECK(relative_a_efficiency(-10.0, -10.0) == doctest::Approx(100.0));
  CHECK_THROWS_AS(relative_a_efficiency(0.0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(relative_d_efficiency(1.0, 2.0, 0), std::invalid_argument);
}

TEST_CASE("deterministic report on identical designs") {
  auto m = std::make_shared<GlmModel>(GlmFamily::PoissonLog, false, std::vector<Index>{0});
  const auto u = quadrature_criterion_utility(
      m, NormalPrior{Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1)}, Criterion::D);
  const Design d(Eigen::MatrixXd::Ones(12, 1));
  Rng rng = substream(1);
  const AssessmentReport r = assess(u, d, d, 1000, 20, rng, "D", EfficiencyKind::D, 1);
  CHECK(r.deterministic);
  CHECK(r.design1.mean == r.design2.mean);
  REQUIRE(r.relative_efficiency);
  CHECK(*r.relative_efficiency == 100.0);
  const std::string text = format_report(r);
  CHECK(text.find("Approximate expected utility of d1 = ") == 0);
  CHECK(text.find("Approximate relative D-efficiency = 100\n") != std::string::npos);
}

TEST_CASE("stochastic report lines") {
  const auto u = UtilityEvaluator::stochastic([](const Design& d, Index B, Rng&) {
    return Eigen::VectorXd::Constant(B, d.matrix().sum()).eval();
  });
  Rng rng = substream(2);
  const AssessmentReport r =
      assess(u, Design(Eigen::MatrixXd::Ones(3, 1)), Design::zeros(3, 1), 100, 5, rng);
  CHECK(!r.relative_efficiency);
  CHECK(r.design1.values.size() == 5);
  CHECK(format_report(r) ==
        "Mean (sd) approximate expected utility of d1 = 3 (0)\n"
        "Mean (sd) approximate expected utility of d2 = 0 (0)\n");
}

TEST_CASE("A efficiency label") {
  AssessmentReport r;
  r.criterion = "A";
  r.deterministic = true;
  r.design1.mean = -225.6464;
  r.design2.mean = -267.3872;
  r.relative_efficiency = relative_a_efficiency(r.design1.mean, r.design2.mean);
  CHECK(format_report(r).find("Approximate relative A-efficiency = 118.4983\n") != std::string::npos);
}
