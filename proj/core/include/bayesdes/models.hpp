#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "bayesdes/design.hpp"
#include "bayesdes/rng.hpp"

namespace bayesdes {

/// Symmetric p x p expected Fisher information.
using FisherInformation = Eigen::MatrixXd;

/// Response model with independent observations. Evaluation goes through a
/// per-design feature matrix so repeated calls on one design skip rebuilding it.
class Model {
 public:
  virtual ~Model() = default;

  virtual Index parameter_count() const = 0;
  /// GLM: model matrix. Nonlinear: the design matrix itself.
  virtual Eigen::MatrixXd features(const Design& d) const = 0;

  virtual Eigen::VectorXd mean(const Eigen::VectorXd& theta, const Eigen::MatrixXd& f) const = 0;
  virtual FisherInformation fisher_information(const Eigen::VectorXd& theta,
                                               const Eigen::MatrixXd& f) const = 0;
  virtual double log_likelihood(const Eigen::VectorXd& theta, const Eigen::VectorXd& y,
                                const Eigen::MatrixXd& f) const = 0;
  /// Gradient of the log-likelihood in theta.
  virtual Eigen::VectorXd score(const Eigen::VectorXd& theta, const Eigen::VectorXd& y,
                                const Eigen::MatrixXd& f) const = 0;
  virtual Eigen::VectorXd simulate(const Eigen::VectorXd& theta, const Eigen::MatrixXd& f,
                                   Rng& rng) const = 0;

  /// Log-likelihood of y for each row of `means` (one row of run means per parameter draw).
  virtual Eigen::VectorXd log_likelihood_rows(const Eigen::VectorXd& y,
                                              const Eigen::MatrixXd& means) const = 0;

  /// Log-likelihood, writing the score and Fisher information into the supplied
  /// buffers (resized as needed, so reused buffers avoid reallocation).
  virtual double evaluate(const Eigen::VectorXd& theta, const Eigen::VectorXd& y,
                          const Eigen::MatrixXd& f, Eigen::VectorXd& score,
                          Eigen::MatrixXd& info) const;

  FisherInformation fisher_information(const Eigen::VectorXd& theta, const Design& d) const {
    return fisher_information(theta, features(d));
  }
  double log_likelihood(const Eigen::VectorXd& theta, const Eigen::VectorXd& y,
                        const Design& d) const {
    return log_likelihood(theta, y, features(d));
  }
  Eigen::VectorXd simulate(const Eigen::VectorXd& theta, const Design& d, Rng& rng) const {
    return simulate(theta, features(d), rng);
  }
};

enum class GlmFamily { BernoulliLogit, PoissonLog };

inline constexpr double kEtaClamp = 700.0;

/// Canonical-link GLM with main-effect terms and an optional intercept.
class GlmModel final : public Model {
 public:
  /// `term_columns[t]` is the design column feeding term t; the intercept, when used,
  /// is parameter 0.
  GlmModel(GlmFamily family, bool intercept, std::vector<Index> term_columns);
  /// Main effects of every one of k design columns.
  static GlmModel main_effects(GlmFamily family, bool intercept, Index k);

  GlmFamily family() const { return family_; }
  bool uses_intercept() const { return intercept_; }
  const std::vector<Index>& term_columns() const { return terms_; }

  Index parameter_count() const override;
  Eigen::MatrixXd features(const Design& d) const override;
  Eigen::VectorXd linear_predictor(const Eigen::VectorXd& theta, const Eigen::MatrixXd& x) const;

  Eigen::VectorXd mean(const Eigen::VectorXd& theta, const Eigen::MatrixXd& x) const override;
  FisherInformation fisher_information(const Eigen::VectorXd& theta,
                                       const Eigen::MatrixXd& x) const override;
  double log_likelihood(const Eigen::VectorXd& theta, const Eigen::VectorXd& y,
                        const Eigen::MatrixXd& x) const override;
  Eigen::VectorXd score(const Eigen::VectorXd& theta, const Eigen::VectorXd& y,
                        const Eigen::MatrixXd& x) const override;
  Eigen::VectorXd simulate(const Eigen::VectorXd& theta, const Eigen::MatrixXd& x,
                           Rng& rng) const override;
  Eigen::VectorXd log_likelihood_rows(const Eigen::VectorXd& y,
                                      const Eigen::MatrixXd& means) const override;
  double evaluate(const Eigen::VectorXd& theta, const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                  Eigen::VectorXd& score, Eigen::MatrixXd& info) const override;
  using Model::fisher_information;
  using Model::log_likelihood;
  using Model::simulate;

 private:
  GlmFamily family_;
  bool intercept_;
  std::vector<Index> terms_;
};

/// mu(theta; x) for one run.
using MeanFunction = std::function<double(std::span<const double> theta, std::span<const double> x)>;
/// Writes d mu / d theta for one run into `grad` (length p).
using MeanGradient = std::function<void(std::span<const double> theta, std::span<const double> x,
                                        std::span<double> grad)>;

/// Central differences with step 1e-6 * (1 + |theta_j|).
MeanGradient finite_difference_gradient(MeanFunction mean);

/// y_i ~ N(mu(theta; x_i), sigma^2) independently.
class NonlinearModel final : public Model {
 public:
  NonlinearModel(Index parameters, MeanFunction mean, MeanGradient gradient,
                 double noise_variance = 1.0);

  double noise_variance() const { return sigma2_; }
  Index parameter_count() const override { return p_; }
  Eigen::MatrixXd features(const Design& d) const override { return d.matrix(); }

  /// n x p matrix of mean gradients, row i for run i.
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& theta, const Eigen::MatrixXd& x) const;

  Eigen::VectorXd mean(const Eigen::VectorXd& theta, const Eigen::MatrixXd& x) const override;
  FisherInformation fisher_information(const Eigen::VectorXd& theta,
                                       const Eigen::MatrixXd& x) const override;
  double log_likelihood(const Eigen::VectorXd& theta, const Eigen::VectorXd& y,
                        const Eigen::MatrixXd& x) const override;
  Eigen::VectorXd score(const Eigen::VectorXd& theta, const Eigen::VectorXd& y,
                        const Eigen::MatrixXd& x) const override;
  Eigen::VectorXd simulate(const Eigen::VectorXd& theta, const Eigen::MatrixXd& x,
                           Rng& rng) const override;
  Eigen::VectorXd log_likelihood_rows(const Eigen::VectorXd& y,
                                      const Eigen::MatrixXd& means) const override;
  double evaluate(const Eigen::VectorXd& theta, const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                  Eigen::VectorXd& score, Eigen::MatrixXd& info) const override;
  using Model::fisher_information;
  using Model::log_likelihood;
  using Model::simulate;

 private:
  Index p_;
  MeanFunction mean_;
  MeanGradient grad_;
  double sigma2_;
};

/// theta3 * (exp(-theta1 t) - exp(-theta2 t)) with its analytic gradient.
NonlinearModel compartmental_model(double noise_variance = 1.0);

FisherInformation fisher_information_glm(const GlmModel& m, const Eigen::VectorXd& theta,
                                         const Design& d);
FisherInformation fisher_information_nlm(const NonlinearModel& m, const Eigen::VectorXd& theta,
                                         const Design& d);

inline constexpr double kSingularLogDet = -1e10;

/// log|I|; kSingularLogDet when I is not numerically positive definite.
double d_criterion(const FisherInformation& info);
/// -tr(I^{-1}); throws SingularInformation when I is not numerically positive definite.
double a_criterion(const FisherInformation& info);

enum class Criterion { D, A };

double criterion_value(Criterion c, const FisherInformation& info);

}  // namespace bayesdes
