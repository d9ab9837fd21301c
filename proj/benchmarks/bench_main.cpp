#include <benchmark/benchmark.h>

#include <cmath>

#include "bayesdes/gp_emulator.hpp"
#include "bayesdes/quadrature.hpp"
#include "bayesdes/scenarios.hpp"
#include "bayesdes/utility.hpp"

using namespace bayesdes;

namespace {

GlmModel logistic() { return GlmModel::main_effects(GlmFamily::BernoulliLogit, true, 4); }

IndependentUniformPrior logistic_prior() {
  IndependentUniformPrior p;
  p.support.resize(2, 5);
  p.support << -3, 4, 5, -6, -2.5, 3, 10, 11, 0, 3.5;
  return p;
}

void BM_EmulatorFit(benchmark::State& state) {
  const bool stochastic = state.range(0) != 0;
  Rng rng = substream(1);
  std::normal_distribution<double> z(0.0, 0.05);
  EmulatorTrainingSet t;
  for (int i = 0; i < 20; ++i) {
    const double x = -1.0 + 2.0 * (i + 0.5) / 20.0;
    t.abscissae.push_back(x);
    t.values.push_back(std::sin(3.0 * x) + (stochastic ? z(rng) : 0.0));
  }
  for (auto _ : state) benchmark::DoNotOptimize(fit_1d(t, stochastic));
}
BENCHMARK(BM_EmulatorFit)->Arg(0)->Arg(1);

void BM_PosteriorMode(benchmark::State& state) {
  const GlmModel m = logistic();
  const LogPrior lp = moment_matched_log_prior(logistic_prior());
  Rng rng = substream(2);
  const Design d = latin_hypercube_start(6, 4, DesignSpace(6, 4, -1.0, 1.0), rng);
  const Eigen::MatrixXd f = m.features(d);
  const Eigen::VectorXd theta = (Eigen::VectorXd(5) << 0, 7, 8, -3, 0.5).finished();
  const Eigen::VectorXd y = m.simulate(theta, f, rng);
  for (auto _ : state) benchmark::DoNotOptimize(find_posterior_mode(m, lp, y, f, theta));
}
BENCHMARK(BM_PosteriorMode);

void BM_QuadratureUtility(benchmark::State& state) {
  auto m = std::make_shared<GlmModel>(logistic());
  const auto u = quadrature_criterion_utility(m, logistic_prior(), Criterion::A);
  Rng rng = substream(3);
  const Design d = latin_hypercube_start(6, 4, DesignSpace(6, 4, -1.0, 1.0), rng);
  for (auto _ : state) benchmark::DoNotOptimize(u.value(d));
}
BENCHMARK(BM_QuadratureUtility);

void BM_NselDraws(benchmark::State& state) {
  const Scenario s = make_scenario("logistic_nsel_norm");
  Rng rng = substream(4);
  const Design d = s.starts(1)[0];
  for (auto _ : state) benchmark::DoNotOptimize(s.utility.draws(d, state.range(0), rng));
}
BENCHMARK(BM_NselDraws)->Arg(1000);

}  // namespace
BENCHMARK_MAIN();
