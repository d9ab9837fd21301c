#include <doctest.h>

#include <cmath>
#include <sstream>

#include "bayesdes/ace.hpp"
#include "bayesdes/quadrature.hpp"
#include "oracles.hpp"

using namespace bayesdes;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd normal_sample(Index n, double mean, Rng& rng) {
  std::normal_distribution<double> z(mean, 1.0);
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = z(rng);
  return v;
}

VectorXd bernoulli_counts(Index n, Index ones) {
  VectorXd v = VectorXd::Zero(n);
  v.head(ones).setOnes();
  return v;
}

double phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

UtilityEvaluator poisson_d() {
  auto m = std::make_shared<GlmModel>(GlmFamily::PoissonLog, false, std::vector<Index>{0});
  return quadrature_criterion_utility(m, NormalPrior{VectorXd::Zero(1), MatrixXd::Identity(1, 1)},
                                      Criterion::D);
}

bool non_decreasing(const std::vector<TracePoint>& t) {
  for (std::size_t a = 1; a < t.size(); ++a)
    if (t[a].expected_utility < t[a - 1].expected_utility) return false;
  return true;
}

}  // namespace

TEST_CASE("t-test acceptance probability") {
  Rng rng = substream(1);
  const VectorXd a = normal_sample(20000, 0.0, rng);
  CHECK(ttest_p_star(a, a) == 0.5);
  CHECK(ttest_p_star(a, a.array() + 100.0) > 0.999);
  CHECK(ttest_p_star(a, normal_sample(20000, 0.1, rng)) > 0.999999);

  // Large samples: the Welch t tail is the normal tail of the standardized difference.
  const VectorXd b = normal_sample(20000, 0.01, rng);
  auto var = [](const VectorXd& v) { return (v.array() - v.mean()).square().sum() / (v.size() - 1.0); };
  const double se = std::sqrt(var(a) / 20000.0 + var(b) / 20000.0);
  const double z = (b.mean() - a.mean()) / se;
  CHECK(std::abs(ttest_p_star(a, b) - phi(z)) < 5e-3);
}

TEST_CASE("proportions acceptance probability") {
  Rng rng = substream(2);
  const VectorXd half = bernoulli_counts(1000, 500);
  CHECK(std::abs(proportions_p_star(half, half, rng) - 0.5) <= 0.005);
  CHECK(proportions_p_star(VectorXd::Zero(1000), VectorXd::Ones(1000), rng) > 0.999);
  CHECK(proportions_p_star(bernoulli_counts(1000, 806), bernoulli_counts(1000, 879), rng) >= 0.999);

  // Normal approximation to the two Beta(1 + s, 1 + n - s) posteriors.
  const double p1 = 501.0 / 1002.0, p2 = 521.0 / 1002.0;
  const double sd = std::sqrt(p1 * (1 - p1) / 1003.0 + p2 * (1 - p2) / 1003.0);
  CHECK(proportions_p_star(bernoulli_counts(1000, 500), bernoulli_counts(1000, 520), rng) ==
        doctest::Approx(phi((p2 - p1) / sd)).epsilon(0.01));
  CHECK_THROWS_AS(proportions_p_star(VectorXd::Constant(3, 0.5), VectorXd::Zero(3), rng), std::invalid_argument);
}

TEST_CASE("settings validation") {
  AceSettings s;
  CHECK_NOTHROW(s.validate());
  s.Q = 2;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = AceSettings{};
  s.N1 = -1;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = AceSettings{};
  s.B_compare = 1;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("zero iterations leave the design unchanged") {
  const auto u = poisson_d();
  const DesignSpace sp(12, 1, -1.0, 1.0);
  Rng r0 = substream(3);
  const Design start = latin_hypercube_start(12, 1, sp, r0);
  AceSettings s;
  s.N1 = 0;
  s.N2 = 0;
  Rng rng = substream(4);
  const AceResult r = ace(u, start, sp, s, rng);
  CHECK(r.phase1_design == start);
  CHECK(r.phase2_design == start);
}

TEST_CASE("deterministic poisson design reaches the corners") {
  const auto u = poisson_d();
  const DesignSpace sp(12, 1, -1.0, 1.0);
  AceSettings s;
  s.N2 = 0;
  Rng rng = substream(5);
  const AceResult r = ace(u, Design::zeros(12, 1), sp, s, rng);
  CHECK((r.phase1_design.matrix().array().abs() >= 0.98).all());
  CHECK(non_decreasing(r.phase1_trace));
}

TEST_CASE("deterministic utility never decreases on accepted steps") {
  Rng gen = substream(6);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int problem = 0; problem < 5; ++problem) {
    auto m = std::make_shared<GlmModel>(GlmModel::main_effects(GlmFamily::BernoulliLogit, true, 2));
    NormalPrior pr{VectorXd(3), MatrixXd::Identity(3, 3)};
    for (Index j = 0; j < 3; ++j) pr.mean(j) = z(gen);
    const auto u = quadrature_criterion_utility(m, pr, problem % 2 ? Criterion::A : Criterion::D);
    const DesignSpace sp(8, 2, -1.0, 1.0);
    AceSettings s;
    s.N1 = 4;
    s.N2 = 10;
    s.grid_size = 2001;
    const Design start = latin_hypercube_start(8, 2, sp, gen);
    Rng rng = substream(60, {static_cast<std::uint64_t>(problem)});
    const AceResult r = ace(u, start, sp, s, rng);
    CHECK(non_decreasing(r.phase1_trace));
    CHECK(non_decreasing(r.phase2_trace));
    CHECK(r.phase2_trace.front().expected_utility == r.phase1_trace.back().expected_utility);
    CHECK(u.value(r.phase2_design) >= u.value(start));
    CHECK(sp.contains(r.phase2_design));
  }
}

TEST_CASE("phase II on identical rows keeps the design") {
  const auto u = poisson_d();
  const DesignSpace sp(6, 1, -1.0, 1.0);
  const Design d(MatrixXd::Constant(6, 1, 0.5));
  AceSettings s;
  s.N2 = 5;
  Rng rng = substream(7);
  AceResult r;
  phase2(u, d, sp, s, rng, r);
  CHECK(r.phase2_design == d);
  CHECK(r.phase2_trace.back().expected_utility == u.value(d));
}

TEST_CASE("stochastic phase II keeps the run count and bounds") {
  const auto u = UtilityEvaluator::stochastic([](const Design& d, Index B, Rng& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    VectorXd v(B);
    for (Index b = 0; b < B; ++b) {
      const double t = z(rng);
      v(b) = (d.matrix().col(0).array().square() * (t * d.matrix().col(0).array()).exp()).sum();
    }
    return v;
  });
  const DesignSpace sp(5, 1, -1.0, 1.0);
  Rng r0 = substream(8);
  const Design start = latin_hypercube_start(5, 1, sp, r0);
  AceSettings s;
  s.N1 = 1;
  s.N2 = 3;
  s.B_compare = 500;
  s.B_emulate = 100;
  Rng rng = substream(9);
  const AceResult r = ace(u, start, sp, s, rng);
  CHECK(r.phase2_design.runs() == 5);
  CHECK(sp.contains(r.phase2_design));
  CHECK(r.phase1_trace.size() == 2);
  CHECK(r.phase2_trace.size() == 4);
}

TEST_CASE("pace") {
  const auto u = poisson_d();
  const DesignSpace sp(6, 1, -1.0, 1.0);
  AceSettings s;
  s.N1 = 2;
  s.N2 = 2;
  s.grid_size = 501;
  s.seed = 11;
  std::vector<Design> starts;
  Rng g = substream(12);
  for (int c = 0; c < 4; ++c) starts.push_back(latin_hypercube_start(6, 1, sp, g));

  SUBCASE("a single repetition equals one ace run") {
    const PaceResult p = pace(u, {starts[0]}, sp, s);
    Rng rng = repetition_stream(s.seed, 0);
    CHECK(p.best_design == ace(u, starts[0], sp, s, rng).phase2_design);
    CHECK(p.best_index == 0);
  }
  SUBCASE("best repetition has the largest assessed value") {
    const PaceResult p = pace(u, starts, sp, s);
    for (const auto& a : p.assessed) CHECK(p.assessed[static_cast<std::size_t>(p.best_index)].mean >= a.mean);
  }
  SUBCASE("thread count does not change results") {
    const PaceResult a = pace(u, starts, sp, s, 1);
    const PaceResult b = pace(u, starts, sp, s, 4);
    CHECK(a.best_index == b.best_index);
    for (std::size_t r = 0; r < starts.size(); ++r) {
      CHECK(a.repetitions[r].phase2_design == b.repetitions[r].phase2_design);
      CHECK(a.assessed[r].mean == b.assessed[r].mean);
    }
  }
  SUBCASE("a failing repetition is reported without stopping the others") {
    std::vector<Design> bad = starts;
    bad[1] = Design(MatrixXd::Constant(6, 1, 5.0));
    const PaceResult p = pace(u, bad, sp, s);
    CHECK(p.failed(1));
    CHECK(!p.failed(0));
    CHECK(p.best_index != 1);
  }
}

TEST_CASE("trace csv") {
  AceResult r;
  r.phase1_trace = {{1, 0, 1.5}, {1, 1, 2.0}};
  r.phase2_trace = {{2, 0, 2.0}};
  std::ostringstream os;
  write_trace_csv(os, r);
  CHECK(os.str() == "phase,iteration,expected_utility\n1,0,1.5\n1,1,2\n2,0,2\n");
}

TEST_CASE("assessment") {
  const auto u = poisson_d();
  Rng rng = substream(13);
  const Assessment a = assess_design(u, Design(MatrixXd::Ones(12, 1)), 100, 20, rng);
  CHECK(a.sd == 0.0);
  CHECK(a.values.size() == 1);
  const auto s = UtilityEvaluator::stochastic([](const Design&, Index B, Rng& r) {
    std::normal_distribution<double> z(1.0, 1.0);
    VectorXd v(B);
    for (Index b = 0; b < B; ++b) v(b) = z(r);
    return v;
  });
  const Assessment b = assess_design(s, Design::zeros(2, 1), 1000, 30, rng);
  CHECK(b.values.size() == 30);
  CHECK(std::abs(b.mean - 1.0) < 3.0 / std::sqrt(30000.0));
  CHECK(b.sd == doctest::Approx(1.0 / std::sqrt(1000.0)).epsilon(0.4));
}
