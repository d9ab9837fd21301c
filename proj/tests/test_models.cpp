#include <doctest.h>

#include <cmath>
#include <numbers>

#include "bayesdes/errors.hpp"
#include "bayesdes/models.hpp"
#include "oracles.hpp"

using namespace bayesdes;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("poisson fisher information is sum x^2 exp(theta x)") {
  const GlmModel m(GlmFamily::PoissonLog, false, {0});
  Eigen::MatrixXd x(5, 1);
  x << -1, -0.5, 0, 0.25, 1;
  const double theta = 0.7;
  double expect = 0.0;
  for (Index i = 0; i < 5; ++i) expect += x(i, 0) * x(i, 0) * std::exp(theta * x(i, 0));
  CHECK(m.fisher_information(VectorXd::Constant(1, theta), Design(x))(0, 0) ==
        doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("logistic information at theta = 0 is X^T X / 4") {
  const GlmModel m = GlmModel::main_effects(GlmFamily::BernoulliLogit, true, 4);
  Rng rng = substream(2);
  const Design d = latin_hypercube_start(6, 4, DesignSpace(6, 4, -1.0, 1.0), rng);
  const MatrixXd x = m.features(d);
  CHECK(oracle::rel_err(m.fisher_information(VectorXd::Zero(5), d), 0.25 * x.transpose() * x) < 1e-14);
}

TEST_CASE("GLM information matches the finite-difference Hessian oracle") {
  Rng rng = substream(23);
  std::normal_distribution<double> z(0.0, 1.0);
  for (auto family : {GlmFamily::BernoulliLogit, GlmFamily::PoissonLog}) {
    const GlmModel m = GlmModel::main_effects(family, true, 4);
    for (int rep = 0; rep < 10; ++rep) {
      const Design d = latin_hypercube_start(6, 4, DesignSpace(6, 4, -1.0, 1.0), rng);
      VectorXd theta(5);
      for (Index j = 0; j < 5; ++j) theta(j) = z(rng);
      const MatrixXd f = m.features(d);
      const VectorXd y = m.simulate(theta, f, rng);
      CHECK(oracle::rel_err(m.fisher_information(theta, f), oracle::fd_neg_hessian(m, theta, y, f)) < 1e-4);
    }
  }
}

TEST_CASE("nonlinear information") {
  SUBCASE("linear mean gives X^T X / sigma^2 for any theta") {
    const NonlinearModel m = oracle::linear_model(3, 0.5);
    Rng rng = substream(4);
    const Design d = latin_hypercube_start(8, 3, DesignSpace(8, 3, -2.0, 2.0), rng);
    const MatrixXd x = d.matrix();
    const MatrixXd expect = x.transpose() * x / 0.5;
    CHECK(oracle::rel_err(m.fisher_information(VectorXd::Zero(3), d), expect) < 1e-14);
    CHECK(oracle::rel_err(m.fisher_information(VectorXd::Constant(3, 9.0), d), expect) < 1e-14);
  }
  SUBCASE("compartmental analytic gradient agrees with central differences") {
    const NonlinearModel m = compartmental_model();
    Rng rng = substream(8);
    std::uniform_real_distribution<double> t(0.0, 24.0);
    std::uniform_real_distribution<double> a(0.02, 0.1), b(0.3, 8.3);
    for (int rep = 0; rep < 10; ++rep) {
      MatrixXd x(18, 1);
      for (Index i = 0; i < 18; ++i) x(i, 0) = t(rng);
      const VectorXd theta = (VectorXd(3) << a(rng), b(rng), 21.8).finished();
      const MatrixXd jac = oracle::fd_jacobian(m, theta, x);
      CHECK(oracle::rel_err(m.jacobian(theta, x), jac) < 1e-5);
      CHECK(oracle::rel_err(m.fisher_information(theta, x), jac.transpose() * jac) < 1e-4);
    }
  }
  SUBCASE("a single run gives a rank-one information") {
    const NonlinearModel m = compartmental_model();
    const FisherInformation info =
        m.fisher_information(VectorXd((VectorXd(3) << 0.05, 4.0, 21.8).finished()), Design(MatrixXd::Constant(1, 1, 2.0)));
    CHECK(std::abs(info.determinant()) < 1e-10 * std::pow(info.norm(), 3));
    CHECK(d_criterion(info) == kSingularLogDet);
  }
}

TEST_CASE("D and A criteria") {
  CHECK(d_criterion(MatrixXd::Identity(3, 3)) == doctest::Approx(0.0));
  CHECK(a_criterion(MatrixXd::Identity(3, 3)) == doctest::Approx(-3.0));
  const MatrixXd d = VectorXd((VectorXd(2) << 2.0, 8.0).finished()).asDiagonal();
  CHECK(d_criterion(d) == doctest::Approx(std::log(16.0)).epsilon(1e-14));
  CHECK(a_criterion(d) == doctest::Approx(-0.625).epsilon(1e-14));
  MatrixXd s(2, 2);
  s << 1, 1, 1, 1;
  CHECK(d_criterion(s) == kSingularLogDet);
  CHECK_THROWS_AS(a_criterion(s), SingularInformation);
}

TEST_CASE("log-likelihoods") {
  SUBCASE("bernoulli at rho = 1/2") {
    const GlmModel m(GlmFamily::BernoulliLogit, true, {});
    const MatrixXd f = MatrixXd::Ones(7, 1);
    const VectorXd y = (VectorXd(7) << 1, 0, 0, 1, 1, 1, 0).finished();
    CHECK(m.log_likelihood(VectorXd::Zero(1), y, f) == doctest::Approx(-7.0 * std::log(2.0)));
  }
  SUBCASE("gaussian at y = mu") {
    const NonlinearModel m = compartmental_model(0.3);
    MatrixXd x(4, 1);
    x << 1, 2, 5, 9;
    const VectorXd theta = (VectorXd(3) << 0.05, 4.0, 21.8).finished();
    CHECK(m.log_likelihood(theta, m.mean(theta, x), x) ==
          doctest::Approx(-2.0 * std::log(2.0 * std::numbers::pi * 0.3)).epsilon(1e-13));
  }
  SUBCASE("rows form agrees with the scalar form") {
    const GlmModel m = GlmModel::main_effects(GlmFamily::PoissonLog, true, 2);
    Rng rng = substream(31);
    const Design d = latin_hypercube_start(9, 2, DesignSpace(9, 2, -1.0, 1.0), rng);
    const MatrixXd f = m.features(d);
    const VectorXd th = (VectorXd(3) << 0.2, -0.4, 1.1).finished();
    const VectorXd y = m.simulate(th, f, rng);
    const MatrixXd means = m.mean(th, f).transpose();
    CHECK(m.log_likelihood_rows(y, means)(0) == doctest::Approx(m.log_likelihood(th, y, f)).epsilon(1e-12));
  }
}

TEST_CASE("poisson simulation at eta = 0 has mean one") {
  const GlmModel m(GlmFamily::PoissonLog, true, {});
  const Index B = 100000;
  Rng rng = substream(99);
  const VectorXd y = m.simulate(VectorXd::Zero(1), MatrixXd::Ones(B, 1), rng);
  CHECK(std::abs(y.mean() - 1.0) < 3.0 / std::sqrt(static_cast<double>(B)));
}

TEST_CASE("evaluate fills score and information consistently") {
  const GlmModel m = GlmModel::main_effects(GlmFamily::BernoulliLogit, true, 3);
  Rng rng = substream(6);
  const Design d = latin_hypercube_start(10, 3, DesignSpace(10, 3, -1.0, 1.0), rng);
  const MatrixXd f = m.features(d);
  const VectorXd th = (VectorXd(4) << 0.5, 1.0, -2.0, 0.3).finished();
  const VectorXd y = m.simulate(th, f, rng);
  VectorXd s;
  MatrixXd info;
  const double ll = m.evaluate(th, y, f, s, info);
  CHECK(ll == doctest::Approx(m.log_likelihood(th, y, f)).epsilon(1e-14));
  CHECK(oracle::rel_err(s, m.score(th, y, f)) < 1e-14);
  CHECK(oracle::rel_err(info, m.fisher_information(th, f)) < 1e-14);
}
