#include "bayesdes/utility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "bayesdes/errors.hpp"

namespace bayesdes {

UtilityEvaluator UtilityEvaluator::stochastic(DrawFn fn, std::shared_ptr<UtilityStats> stats) {
  if (!fn) throw std::invalid_argument("stochastic utility needs a draw function");
  UtilityEvaluator u;
  u.draw_ = std::move(fn);
  u.stats_ = stats ? std::move(stats) : std::make_shared<UtilityStats>();
  return u;
}

UtilityEvaluator UtilityEvaluator::deterministic(ScalarFn fn) {
  if (!fn) throw std::invalid_argument("deterministic utility needs a scalar function");
  UtilityEvaluator u;
  u.scalar_ = std::move(fn);
  u.stats_ = std::make_shared<UtilityStats>();
  return u;
}

Eigen::VectorXd UtilityEvaluator::draws(const Design& d, Index B, Rng& rng) const {
  if (!draw_) throw std::logic_error("deterministic utility has no Monte Carlo draws");
  Eigen::VectorXd v = draw_(d, B, rng);
  if (v.size() != B)
    throw std::logic_error("utility returned " + std::to_string(v.size()) + " draws, expected " +
                           std::to_string(B));
  stats_->draws += B;
  return v;
}

double UtilityEvaluator::value(const Design& d) const {
  if (!scalar_) throw std::logic_error("stochastic utility has no deterministic value");
  return scalar_(d);
}

MonteCarloEstimate monte_carlo_expected_utility(const UtilityEvaluator& u, const Design& d,
                                                Index B, Rng& rng) {
  if (B < 2) throw std::invalid_argument("Monte Carlo estimate needs B >= 2");
  MonteCarloEstimate est;
  est.draws = u.draws(d, B, rng);
  if (!est.draws.allFinite()) throw NonFinite("utility produced a non-finite draw");
  est.mean = est.draws.mean();
  est.sd = std::sqrt((est.draws.array() - est.mean).square().sum() / static_cast<double>(B - 1));
  return est;
}

double log_mean_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum() / static_cast<double>(v.size()));
}

PriorSampler prior_sampler(const Prior& prior) {
  if (const auto* normal = std::get_if<NormalPrior>(&prior)) {
    normal->validate();
    const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(normal->covariance).matrixL();
    const Eigen::VectorXd mu = normal->mean;
    return [l, mu](Index B, Rng& rng) {
      std::normal_distribution<double> z(0.0, 1.0);
      Eigen::MatrixXd raw(B, mu.size());
      for (Index b = 0; b < B; ++b)
        for (Index j = 0; j < mu.size(); ++j) raw(b, j) = z(rng);
      Eigen::MatrixXd out = raw * l.transpose();
      out.rowwise() += mu.transpose();
      return out;
    };
  }
  const auto uniform = std::get<IndependentUniformPrior>(prior);
  uniform.validate();
  return [uniform](Index B, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Index p = uniform.dimension();
    Eigen::MatrixXd out(B, p);
    for (Index b = 0; b < B; ++b)
      for (Index j = 0; j < p; ++j)
        out(b, j) = uniform.support(0, j) + (uniform.support(1, j) - uniform.support(0, j)) * u(rng);
    return out;
  };
}

std::vector<Index> LogPrior::free_components() const {
  std::vector<Index> idx;
  for (std::size_t j = 0; j < fixed.size(); ++j)
    if (!fixed[j]) idx.push_back(static_cast<Index>(j));
  return idx;
}

LogPrior log_prior(const Prior& prior) {
  LogPrior lp;
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (const auto* normal = std::get_if<NormalPrior>(&prior)) {
    normal->validate();
    const Index p = normal->dimension();
    const Eigen::LLT<Eigen::MatrixXd> llt(normal->covariance);
    const Eigen::MatrixXd precision = llt.solve(Eigen::MatrixXd::Identity(p, p));
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const double norm = -0.5 * (static_cast<double>(p) * std::log(2.0 * std::numbers::pi) + log_det);
    const Eigen::VectorXd mu = normal->mean;
    lp.value = [precision, mu, norm](const Eigen::VectorXd& t) {
      const Eigen::VectorXd r = t - mu;
      return norm - 0.5 * r.dot(precision * r);
    };
    lp.gradient = [precision, mu](const Eigen::VectorXd& t) -> Eigen::VectorXd {
      return -precision * (t - mu);
    };
    lp.hessian = [precision](const Eigen::VectorXd&) -> Eigen::MatrixXd { return -precision; };
    lp.lower = Eigen::VectorXd::Constant(p, -inf);
    lp.upper = Eigen::VectorXd::Constant(p, inf);
    lp.fixed.assign(static_cast<std::size_t>(p), false);
    return lp;
  }
  const auto& uniform = std::get<IndependentUniformPrior>(prior);
  uniform.validate();
  const Index p = uniform.dimension();
  lp.lower = uniform.support.row(0).transpose();
  lp.upper = uniform.support.row(1).transpose();
  lp.fixed.resize(static_cast<std::size_t>(p));
  double log_vol = 0.0;
  for (Index j = 0; j < p; ++j) {
    lp.fixed[static_cast<std::size_t>(j)] = !(lp.lower(j) < lp.upper(j));
    if (!lp.fixed[static_cast<std::size_t>(j)]) log_vol += std::log(lp.upper(j) - lp.lower(j));
  }
  const Eigen::VectorXd lo = lp.lower;
  const Eigen::VectorXd hi = lp.upper;
  lp.value = [lo, hi, log_vol](const Eigen::VectorXd& t) {
    for (Index j = 0; j < t.size(); ++j)
      if (t(j) < lo(j) || t(j) > hi(j)) return -inf;
    return -log_vol;
  };
  lp.flat = true;
  lp.gradient = [p](const Eigen::VectorXd&) -> Eigen::VectorXd { return Eigen::VectorXd::Zero(p); };
  lp.hessian = [p](const Eigen::VectorXd&) -> Eigen::MatrixXd { return Eigen::MatrixXd::Zero(p, p); };
  return lp;
}

LogPrior moment_matched_log_prior(const Prior& prior) {
  if (std::holds_alternative<NormalPrior>(prior)) return log_prior(prior);
  const auto& uniform = std::get<IndependentUniformPrior>(prior);
  uniform.validate();
  constexpr double inf = std::numeric_limits<double>::infinity();
  const Index p = uniform.dimension();
  LogPrior lp;
  lp.lower = Eigen::VectorXd::Constant(p, -inf);
  lp.upper = Eigen::VectorXd::Constant(p, inf);
  lp.fixed.resize(static_cast<std::size_t>(p));
  Eigen::VectorXd mu = (uniform.support.row(0) + uniform.support.row(1)).transpose() / 2.0;
  Eigen::VectorXd precision = Eigen::VectorXd::Zero(p);
  double norm = 0.0;
  for (Index j = 0; j < p; ++j) {
    const double lo = uniform.support(0, j);
    const double hi = uniform.support(1, j);
    const bool fixed = !(lo < hi);
    lp.fixed[static_cast<std::size_t>(j)] = fixed;
    if (fixed) {
      lp.lower(j) = lp.upper(j) = lo;
      continue;
    }
    const double var = (hi - lo) * (hi - lo) / 12.0;
    precision(j) = 1.0 / var;
    norm -= 0.5 * std::log(2.0 * std::numbers::pi * var);
  }
  lp.value = [mu, precision, norm](const Eigen::VectorXd& t) {
    return norm - 0.5 * (precision.array() * (t - mu).array().square()).sum();
  };
  lp.gradient = [mu, precision](const Eigen::VectorXd& t) -> Eigen::VectorXd {
    return -(precision.array() * (t - mu).array()).matrix();
  };
  lp.hessian = [precision](const Eigen::VectorXd&) -> Eigen::MatrixXd {
    return (-precision).asDiagonal();
  };
  return lp;
}

namespace {

constexpr int kMaxNewtonIterations = 50;
constexpr int kMaxHalvings = 30;

// Cholesky of a symmetric matrix, adding a growing ridge to `h` until it succeeds.
void robust_llt(Eigen::MatrixXd& h, Eigen::LLT<Eigen::MatrixXd>& llt) {
  llt.compute(h);
  const double scale = std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
  double ridge = 1e-10 * scale;
  while (llt.info() != Eigen::Success && ridge < 1e6 * scale) {
    h.diagonal().array() += ridge;
    llt.compute(h);
    ridge *= 10.0;
  }
}

Eigen::LLT<Eigen::MatrixXd> robust_llt(Eigen::MatrixXd h) {
  Eigen::LLT<Eigen::MatrixXd> llt(h.rows());
  robust_llt(h, llt);
  return llt;
}

}  // namespace

LaplaceFit find_posterior_mode(const Model& model, const LogPrior& prior, const Eigen::VectorXd& y,
                               const Eigen::MatrixXd& features, const Eigen::VectorXd& start) {
  const Index p = model.parameter_count();
  if (start.size() != p || prior.dimension() != p)
    throw DimensionMismatch("posterior mode: start/prior dimension does not match model");
  LaplaceFit fit;
  fit.free = prior.free_components();
  Eigen::VectorXd theta = start.cwiseMax(prior.lower).cwiseMin(prior.upper);
  // Inside the box a flat prior contributes a constant and no derivatives.
  const double flat_value = prior.flat ? prior.value(theta) : 0.0;
  auto log_prior_at = [&](const Eigen::VectorXd& t) { return prior.flat ? flat_value : prior.value(t); };

  Eigen::VectorXd score, cand_score, grad(p), g, step, cand(p);
  Eigen::MatrixXd info, cand_info, hess(p, p), h;
  Eigen::LLT<Eigen::MatrixXd> llt(p);
  double ll = model.evaluate(theta, y, features, score, info);
  double lp = ll + log_prior_at(theta);
  std::vector<Index> inactive;
  inactive.reserve(fit.free.size());

  for (fit.iterations = 0; fit.iterations < kMaxNewtonIterations; ++fit.iterations) {
    grad = score;
    hess = info;
    if (!prior.flat) {
      grad += prior.gradient(theta);
      hess -= prior.hessian(theta);
    }
    inactive.clear();
    double proj_grad = 0.0;
    for (Index j : fit.free) {
      const bool at_lower = theta(j) <= prior.lower(j) && grad(j) <= 0;
      const bool at_upper = theta(j) >= prior.upper(j) && grad(j) >= 0;
      if (at_lower || at_upper) continue;
      inactive.push_back(j);
      proj_grad = std::max(proj_grad, std::abs(grad(j)));
    }
    if (proj_grad <= 1e-6 * (1.0 + std::abs(lp))) {
      fit.converged = true;
      break;
    }
    const auto k = static_cast<Index>(inactive.size());
    g.resize(k);
    h.resize(k, k);
    for (Index a = 0; a < k; ++a) {
      g(a) = grad(inactive[a]);
      for (Index b = 0; b < k; ++b) h(a, b) = hess(inactive[a], inactive[b]);
    }
    robust_llt(h, llt);
    step = llt.solve(g);

    bool improved = false;
    double t = 1.0;
    for (int halving = 0; halving < kMaxHalvings; ++halving, t *= 0.5) {
      cand = theta;
      for (Index a = 0; a < k; ++a) cand(inactive[a]) += t * step(a);
      cand = cand.cwiseMax(prior.lower).cwiseMin(prior.upper);
      const double cand_ll = model.evaluate(cand, y, features, cand_score, cand_info);
      const double cand_lp = cand_ll + log_prior_at(cand);
      if (cand_lp > lp) {
        theta.swap(cand);
        score.swap(cand_score);
        info.swap(cand_info);
        ll = cand_ll;
        lp = cand_lp;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }

  fit.mode = theta;
  fit.log_likelihood = ll;
  fit.log_posterior = lp;
  hess = info;
  if (!prior.flat) hess -= prior.hessian(theta);
  const auto nf = static_cast<Index>(fit.free.size());
  fit.curvature.resize(nf, nf);
  for (Index a = 0; a < nf; ++a)
    for (Index b = 0; b < nf; ++b)
      fit.curvature(a, b) = 0.5 * (hess(fit.free[a], fit.free[b]) + hess(fit.free[b], fit.free[a]));
  return fit;
}

double laplace_log_marginal(const LaplaceFit& fit, const LogPrior& prior) {
  const auto pf = static_cast<double>(fit.free.size());
  double log_det = 0.0;
  if (!fit.free.empty()) {
    const auto llt = robust_llt(fit.curvature);
    if (llt.info() != Eigen::Success) throw NumericalFailure("Laplace curvature is not factorizable");
    log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  }
  return fit.log_likelihood + prior.value(fit.mode) + 0.5 * pf * std::log(2.0 * std::numbers::pi) -
         0.5 * log_det;
}

UtilityEvaluator nsel_normal_utility(std::shared_ptr<const Model> model, PriorSampler sampler,
                                     LogPrior prior) {
  auto stats = std::make_shared<UtilityStats>();
  return UtilityEvaluator::stochastic(
      [model, sampler, prior, stats](const Design& d, Index B, Rng& rng) {
        const Eigen::MatrixXd f = model->features(d);
        const Eigen::MatrixXd theta = sampler(B, rng);
        Eigen::VectorXd u(B);
        for (Index b = 0; b < B; ++b) {
          const Eigen::VectorXd tb = theta.row(b).transpose();
          const Eigen::VectorXd y = model->simulate(tb, f, rng);
          const LaplaceFit fit = find_posterior_mode(*model, prior, y, f, tb);
          if (!fit.converged) ++stats->nonconverged;
          u(b) = -(tb - fit.mode).squaredNorm();
        }
        return u;
      },
      stats);
}

UtilityEvaluator sig_nested_mc_utility(std::shared_ptr<const Model> model, PriorSampler sampler,
                                       Index B_inner) {
  if (B_inner < 1) throw std::invalid_argument("nested Monte Carlo needs B_inner >= 1");
  return UtilityEvaluator::stochastic([model, sampler, B_inner](const Design& d, Index B, Rng& rng) {
    const Eigen::MatrixXd f = model->features(d);
    const Eigen::MatrixXd theta = sampler(B, rng);
    const Eigen::MatrixXd inner = sampler(B_inner, rng);
    Eigen::MatrixXd inner_means(B_inner, f.rows());
    for (Index b = 0; b < B_inner; ++b)
      inner_means.row(b) = model->mean(inner.row(b).transpose(), f).transpose();
    Eigen::VectorXd u(B);
    for (Index b = 0; b < B; ++b) {
      const Eigen::VectorXd tb = theta.row(b).transpose();
      const Eigen::VectorXd y = model->simulate(tb, f, rng);
      const Eigen::MatrixXd own = model->mean(tb, f).transpose();
      u(b) = model->log_likelihood_rows(y, own)(0) -
             log_mean_exp(model->log_likelihood_rows(y, inner_means));
    }
    return u;
  });
}

UtilityEvaluator sig_laplace_utility(std::shared_ptr<const Model> model, PriorSampler sampler,
                                     LogPrior prior) {
  auto stats = std::make_shared<UtilityStats>();
  return UtilityEvaluator::stochastic(
      [model, sampler, prior, stats](const Design& d, Index B, Rng& rng) {
        const Eigen::MatrixXd f = model->features(d);
        const Eigen::MatrixXd theta = sampler(B, rng);
        Eigen::VectorXd u(B);
        for (Index b = 0; b < B; ++b) {
          const Eigen::VectorXd tb = theta.row(b).transpose();
          const Eigen::VectorXd y = model->simulate(tb, f, rng);
          const LaplaceFit fit = find_posterior_mode(*model, prior, y, f, tb);
          if (!fit.converged) ++stats->nonconverged;
          if (fit.free.empty()) {
            u(b) = 0.0;
            continue;
          }
          u(b) = model->log_likelihood(tb, y, f) - laplace_log_marginal(fit, prior);
        }
        return u;
      },
      stats);
}

UtilityEvaluator zero_one_utility(std::vector<std::shared_ptr<const Model>> models,
                                  std::vector<PriorSampler> samplers,
                                  std::vector<double> prior_model_probs, Index B_inner,
                                  std::vector<double> deltas) {
  const auto n_models = static_cast<Index>(models.size());
  if (n_models < 1) throw std::invalid_argument("0-1 utility needs at least one model");
  if (samplers.size() != 1 && static_cast<Index>(samplers.size()) != n_models)
    throw DimensionMismatch("0-1 utility needs one shared sampler or one per model");
  if (B_inner < 1) throw std::invalid_argument("0-1 utility needs B_inner >= 1");
  if (!prior_model_probs.empty()) {
    if (static_cast<Index>(prior_model_probs.size()) != n_models)
      throw DimensionMismatch("prior model probabilities do not match model count");
    for (double pr : prior_model_probs)
      if (std::abs(pr - prior_model_probs.front()) > 1e-12)
        throw std::invalid_argument("0-1 utility supports equal prior model probabilities only");
  }
  for (double delta : deltas)
    if (delta != 0.0) throw std::invalid_argument("0-1 utility supports zero tolerance only");

  return UtilityEvaluator::stochastic([models, samplers, n_models, B_inner](const Design& d, Index B,
                                                                           Rng& rng) {
    const bool shared = samplers.size() == 1;
    std::vector<Eigen::MatrixXd> feats;
    for (const auto& m : models) feats.push_back(m->features(d));
    std::uniform_int_distribution<Index> pick(0, n_models - 1);
    std::vector<Index> which(static_cast<std::size_t>(B));
    for (auto& w : which) w = pick(rng);

    std::vector<Eigen::MatrixXd> outer;
    for (std::size_t s = 0; s < samplers.size(); ++s) outer.push_back(samplers[s](B, rng));

    std::vector<Eigen::MatrixXd> inner_means(static_cast<std::size_t>(n_models));
    Eigen::MatrixXd shared_inner;
    if (shared) shared_inner = samplers[0](B_inner, rng);
    for (Index m = 0; m < n_models; ++m) {
      const Eigen::MatrixXd inner = shared ? shared_inner : samplers[static_cast<std::size_t>(m)](B_inner, rng);
      auto& means = inner_means[static_cast<std::size_t>(m)];
      means.resize(B_inner, feats[static_cast<std::size_t>(m)].rows());
      for (Index b = 0; b < B_inner; ++b)
        means.row(b) =
            models[static_cast<std::size_t>(m)]->mean(inner.row(b).transpose(), feats[static_cast<std::size_t>(m)]).transpose();
    }

    Eigen::VectorXd u(B);
    for (Index b = 0; b < B; ++b) {
      const auto truth = static_cast<std::size_t>(which[static_cast<std::size_t>(b)]);
      const Eigen::VectorXd tb = outer[shared ? 0 : truth].row(b).transpose();
      const Eigen::VectorXd y = models[truth]->simulate(tb, feats[truth], rng);
      Index best = 0;
      double best_val = -std::numeric_limits<double>::infinity();
      for (Index m = 0; m < n_models; ++m) {
        const double lml = log_mean_exp(
            models[static_cast<std::size_t>(m)]->log_likelihood_rows(y, inner_means[static_cast<std::size_t>(m)]));
        if (lml > best_val) {
          best_val = lml;
          best = m;
        }
      }
      u(b) = static_cast<std::size_t>(best) == truth ? 1.0 : 0.0;
    }
    return u;
  });
}

UtilityEvaluator mc_criterion_utility(std::shared_ptr<const Model> model, PriorSampler sampler,
                                      Criterion criterion) {
  return UtilityEvaluator::stochastic([model, sampler, criterion](const Design& d, Index B, Rng& rng) {
    const Eigen::MatrixXd f = model->features(d);
    const Eigen::MatrixXd theta = sampler(B, rng);
    Eigen::VectorXd u(B);
    for (Index b = 0; b < B; ++b)
      u(b) = criterion_value(criterion, model->fisher_information(theta.row(b).transpose(), f));
    return u;
  });
}

}  // namespace bayesdes
