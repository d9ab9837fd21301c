#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace bayesdes {

/// Q (coordinate value, utility estimate) pairs used to fit a one-dimensional emulator.
struct EmulatorTrainingSet {
  std::vector<double> abscissae;
  std::vector<double> values;

  /// Throws std::invalid_argument unless Q >= 3, abscissae distinct and all values finite.
  void validate() const;
};

/// Hyperparameters on the rescaled axis ([0, 1]) and standardized response scale.
struct GpHyperparameters {
  double signal_variance = 1.0;
  double length_scale = 1.0;
  double nugget_variance = 0.0;
  double constant_mean = 0.0;
};

/// Squared-exponential GP surrogate for expected utility along one coordinate.
class Emulator1D {
 public:
  double predictive_mean(double x) const;
  const GpHyperparameters& hyperparameters() const { return hyper_; }
  /// Log marginal likelihood (profiled) at the fitted hyperparameters.
  double log_marginal_likelihood() const { return log_lik_; }
  std::size_t training_size() const { return static_cast<std::size_t>(scaled_x_.size()); }

 private:
  friend Emulator1D fit_1d(const EmulatorTrainingSet& data, bool stochastic);

  GpHyperparameters hyper_;
  Eigen::VectorXd scaled_x_;
  Eigen::VectorXd weights_;  // (R + g I)^{-1} (v - m) on the standardized scale
  double x_offset_ = 0.0;
  double x_scale_ = 1.0;
  double y_offset_ = 0.0;
  double y_scale_ = 1.0;
  double log_lik_ = 0.0;
  bool constant_ = false;
};

/// Fits the emulator by maximizing the profiled log marginal likelihood over the
/// length scale (and the nugget when `stochastic`). Throws NumericalFailure when the
/// covariance cannot be factorized even with maximal jitter.
Emulator1D fit_1d(const EmulatorTrainingSet& data, bool stochastic);

inline double predictive_mean(const Emulator1D& em, double x) { return em.predictive_mean(x); }

/// Grid point with the largest predictive mean; ties resolve to the earliest grid entry.
std::pair<double, double> maximize_on_grid(const Emulator1D& em, std::span<const double> grid);

}  // namespace bayesdes
