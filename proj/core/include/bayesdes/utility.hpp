#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "bayesdes/design.hpp"
#include "bayesdes/models.hpp"
#include "bayesdes/priors.hpp"
#include "bayesdes/rng.hpp"

namespace bayesdes {

/// Counters shared by every copy of a utility evaluator.
struct UtilityStats {
  std::atomic<long long> draws{0};
  std::atomic<long long> nonconverged{0};
};

/// Maps a design to B utility draws (stochastic) or to a scalar approximation of the
/// expected utility (deterministic).
class UtilityEvaluator {
 public:
  using DrawFn = std::function<Eigen::VectorXd(const Design&, Index B, Rng&)>;
  using ScalarFn = std::function<double(const Design&)>;

  static UtilityEvaluator stochastic(DrawFn fn, std::shared_ptr<UtilityStats> stats = nullptr);
  static UtilityEvaluator deterministic(ScalarFn fn);

  bool is_deterministic() const { return static_cast<bool>(scalar_); }

  /// Exactly B draws; throws std::logic_error on a wrong-length result.
  Eigen::VectorXd draws(const Design& d, Index B, Rng& rng) const;
  double value(const Design& d) const;

  const std::shared_ptr<UtilityStats>& stats() const { return stats_; }

 private:
  DrawFn draw_;
  ScalarFn scalar_;
  std::shared_ptr<UtilityStats> stats_;
};

struct MonteCarloEstimate {
  double mean = 0.0;
  double sd = 0.0;  // divisor B - 1
  Eigen::VectorXd draws;
};

/// Equal-weight average of B utility draws. Throws NonFinite on a NaN/inf draw.
MonteCarloEstimate monte_carlo_expected_utility(const UtilityEvaluator& u, const Design& d,
                                                Index B, Rng& rng);

/// Returns a B x p matrix of i.i.d. prior draws.
using PriorSampler = std::function<Eigen::MatrixXd(Index B, Rng&)>;

PriorSampler prior_sampler(const Prior& prior);

/// Log prior density with derivatives. Point-mass components are `fixed` and excluded
/// from the density; `lower`/`upper` bound the support (infinite when unbounded).
struct LogPrior {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> hessian;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  std::vector<bool> fixed;
  bool flat = false;  // constant inside the bounds, so gradient and Hessian vanish there

  Index dimension() const { return lower.size(); }
  std::vector<Index> free_components() const;
};

LogPrior log_prior(const Prior& prior);

/// Normal prior with the same mean and variance as `prior` on its free components and
/// unbounded support; point masses stay fixed. Used by the normal-approximation NSEL
/// utility, where a uniform prior's box would pin separated fits to the boundary.
LogPrior moment_matched_log_prior(const Prior& prior);

/// Normal approximation to the posterior: mode plus curvature
/// H = I(mode; d) - Hessian of log prior, restricted to the free components.
struct LaplaceFit {
  Eigen::VectorXd mode;
  Eigen::MatrixXd curvature;
  std::vector<Index> free;
  double log_posterior = 0.0;
  double log_likelihood = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Fisher-scoring Newton ascent on the log posterior with step halving, projected onto
/// the prior support. Converges when the projected gradient max-norm is at most
/// 1e-6 (1 + |log posterior|); otherwise stops after 50 iterations with converged=false.
LaplaceFit find_posterior_mode(const Model& model, const LogPrior& prior, const Eigen::VectorXd& y,
                               const Eigen::MatrixXd& features, const Eigen::VectorXd& start);

/// Log marginal likelihood from a Laplace fit.
double laplace_log_marginal(const LaplaceFit& fit, const LogPrior& prior);

/// -|theta - posterior mode|^2 per draw.
UtilityEvaluator nsel_normal_utility(std::shared_ptr<const Model> model, PriorSampler sampler,
                                     LogPrior prior);

/// log p(y | theta) - log mean_b p(y | theta~_b) with one inner prior sample of size
/// B_inner per evaluator call, shared by all outer draws of the call.
UtilityEvaluator sig_nested_mc_utility(std::shared_ptr<const Model> model, PriorSampler sampler,
                                       Index B_inner);

/// log p(y | theta) minus the Laplace approximation of log p(y).
UtilityEvaluator sig_laplace_utility(std::shared_ptr<const Model> model, PriorSampler sampler,
                                     LogPrior prior);

/// Indicator that the model with the largest Monte Carlo marginal likelihood is the one
/// that generated the data. With a single sampler, one inner sample serves every model.
/// Requires equal prior model probabilities and zero tolerances.
UtilityEvaluator zero_one_utility(std::vector<std::shared_ptr<const Model>> models,
                                  std::vector<PriorSampler> samplers,
                                  std::vector<double> prior_model_probs, Index B_inner,
                                  std::vector<double> deltas = {});

/// Pseudo-Bayesian D or A criterion at one prior draw per utility draw.
UtilityEvaluator mc_criterion_utility(std::shared_ptr<const Model> model, PriorSampler sampler,
                                      Criterion criterion);

/// log(mean(exp(v))) with max-shift stabilization.
double log_mean_exp(const Eigen::Ref<const Eigen::VectorXd>& v);

}  // namespace bayesdes
