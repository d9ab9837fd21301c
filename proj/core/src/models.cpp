#include "bayesdes/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "bayesdes/errors.hpp"

namespace bayesdes {

namespace {

double clamp_eta(double eta) { return std::clamp(eta, -kEtaClamp, kEtaClamp); }

// log(1 + exp(eta)) without overflow.
double log1p_exp(double eta) {
  return eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

// Factorization of a symmetric information matrix, or nullopt-like failure flag when
// the smallest pivot is negligible relative to the matrix scale.
bool factorize(const FisherInformation& info, Eigen::LLT<Eigen::MatrixXd>& llt) {
  if (info.rows() != info.cols() || info.rows() == 0)
    throw DimensionMismatch("information matrix must be square and nonempty");
  if (!info.allFinite()) return false;
  llt.compute(info);
  if (llt.info() != Eigen::Success) return false;
  const double scale = info.diagonal().cwiseAbs().maxCoeff();
  const auto piv = llt.matrixLLT().diagonal();
  return piv.cwiseAbs2().minCoeff() > 1e-14 * scale;
}

}  // namespace

double Model::evaluate(const Eigen::VectorXd& theta, const Eigen::VectorXd& y,
                       const Eigen::MatrixXd& f, Eigen::VectorXd& score_out,
                       Eigen::MatrixXd& info) const {
  score_out = score(theta, y, f);
  info = fisher_information(theta, f);
  return log_likelihood(theta, y, f);
}

GlmModel::GlmModel(GlmFamily family, bool intercept, std::vector<Index> term_columns)
    : family_(family), intercept_(intercept), terms_(std::move(term_columns)) {
  if (parameter_count() < 1) throw std::invalid_argument("GLM needs at least one term");
  for (Index c : terms_)
    if (c < 0) throw std::invalid_argument("GLM term column must be non-negative");
}

GlmModel GlmModel::main_effects(GlmFamily family, bool intercept, Index k) {
  std::vector<Index> cols(static_cast<std::size_t>(k));
  for (Index j = 0; j < k; ++j) cols[static_cast<std::size_t>(j)] = j;
  return GlmModel(family, intercept, std::move(cols));
}

Index GlmModel::parameter_count() const {
  return static_cast<Index>(terms_.size()) + (intercept_ ? 1 : 0);
}

Eigen::MatrixXd GlmModel::features(const Design& d) const {
  const Index off = intercept_ ? 1 : 0;
  Eigen::MatrixXd x(d.runs(), parameter_count());
  if (intercept_) x.col(0).setOnes();
  for (std::size_t t = 0; t < terms_.size(); ++t) {
    if (terms_[t] >= d.factors()) throw DimensionMismatch("GLM term refers to a missing column");
    x.col(off + static_cast<Index>(t)) = d.matrix().col(terms_[t]);
  }
  return x;
}

Eigen::VectorXd GlmModel::linear_predictor(const Eigen::VectorXd& theta,
                                           const Eigen::MatrixXd& x) const {
  if (theta.size() != x.cols()) throw DimensionMismatch("theta length does not match GLM terms");
  return (x * theta).unaryExpr(&clamp_eta);
}

Eigen::VectorXd GlmModel::mean(const Eigen::VectorXd& theta, const Eigen::MatrixXd& x) const {
  const Eigen::VectorXd eta = linear_predictor(theta, x);
  if (family_ == GlmFamily::PoissonLog) return eta.array().exp();
  return (1.0 + (-eta.array()).exp()).inverse();
}

FisherInformation GlmModel::fisher_information(const Eigen::VectorXd& theta,
                                               const Eigen::MatrixXd& x) const {
  const Eigen::VectorXd mu = mean(theta, x);
  Eigen::VectorXd w = family_ == GlmFamily::PoissonLog ? mu
                                                       : Eigen::VectorXd(mu.array() * (1.0 - mu.array()));
  FisherInformation info = x.transpose() * w.asDiagonal() * x;
  return 0.5 * (info + info.transpose());
}

double GlmModel::log_likelihood(const Eigen::VectorXd& theta, const Eigen::VectorXd& y,
                                const Eigen::MatrixXd& x) const {
  const Eigen::VectorXd eta = linear_predictor(theta, x);
  double ll = 0.0;
  for (Index i = 0; i < eta.size(); ++i) {
    if (family_ == GlmFamily::BernoulliLogit)
      ll += y(i) * eta(i) - log1p_exp(eta(i));
    else
      ll += y(i) * eta(i) - std::exp(eta(i)) - std::lgamma(y(i) + 1.0);
  }
  return ll;
}

Eigen::VectorXd GlmModel::score(const Eigen::VectorXd& theta, const Eigen::VectorXd& y,
                                const Eigen::MatrixXd& x) const {
  return x.transpose() * (y - mean(theta, x));
}

Eigen::VectorXd GlmModel::simulate(const Eigen::VectorXd& theta, const Eigen::MatrixXd& x,
                                   Rng& rng) const {
  const Eigen::VectorXd mu = mean(theta, x);
  Eigen::VectorXd y(mu.size());
  for (Index i = 0; i < mu.size(); ++i) {
    if (family_ == GlmFamily::BernoulliLogit)
      y(i) = std::bernoulli_distribution(mu(i))(rng) ? 1.0 : 0.0;
    else
      y(i) = static_cast<double>(std::poisson_distribution<long long>(mu(i))(rng));
  }
  return y;
}

Eigen::VectorXd GlmModel::log_likelihood_rows(const Eigen::VectorXd& y,
                                              const Eigen::MatrixXd& means) const {
  Eigen::VectorXd ll(means.rows());
  for (Index r = 0; r < means.rows(); ++r) {
    double acc = 0.0;
    for (Index i = 0; i < y.size(); ++i) {
      const double mu = means(r, i);
      if (family_ == GlmFamily::BernoulliLogit)
        acc += y(i) > 0.5 ? std::log(mu) : std::log1p(-mu);
      else
        acc += y(i) * std::log(mu) - mu - std::lgamma(y(i) + 1.0);
    }
    ll(r) = acc;
  }
  return ll;
}

double GlmModel::evaluate(const Eigen::VectorXd& theta, const Eigen::VectorXd& y,
                          const Eigen::MatrixXd& x, Eigen::VectorXd& score_out,
                          Eigen::MatrixXd& info) const {
  const Index n = x.rows();
  const Index p = x.cols();
  if (theta.size() != p) throw DimensionMismatch("theta length does not match GLM terms");
  score_out.setZero(p);
  info.setZero(p, p);
  double ll = 0.0;
  for (Index i = 0; i < n; ++i) {
    double eta = 0.0;
    for (Index a = 0; a < p; ++a) eta += x(i, a) * theta(a);
    eta = clamp_eta(eta);
    double mu = 0.0;
    double w = 0.0;
    if (family_ == GlmFamily::BernoulliLogit) {
      mu = 1.0 / (1.0 + std::exp(-eta));
      w = mu * (1.0 - mu);
      ll += y(i) * eta - log1p_exp(eta);
    } else {
      mu = std::exp(eta);
      w = mu;
      ll += y(i) * eta - mu - std::lgamma(y(i) + 1.0);
    }
    const double resid = y(i) - mu;
    for (Index a = 0; a < p; ++a) {
      score_out(a) += x(i, a) * resid;
      const double wa = w * x(i, a);
      for (Index b = 0; b <= a; ++b) info(a, b) += wa * x(i, b);
    }
  }
  for (Index a = 0; a < p; ++a)
    for (Index b = 0; b < a; ++b) info(b, a) = info(a, b);
  return ll;
}

MeanGradient finite_difference_gradient(MeanFunction mean) {
  return [mean = std::move(mean)](std::span<const double> theta, std::span<const double> x,
                                  std::span<double> grad) {
    std::vector<double> t(theta.begin(), theta.end());
    for (std::size_t j = 0; j < t.size(); ++j) {
      const double h = 1e-6 * (1.0 + std::abs(theta[j]));
      t[j] = theta[j] + h;
      const double up = mean(t, x);
      t[j] = theta[j] - h;
      const double down = mean(t, x);
      t[j] = theta[j];
      grad[j] = (up - down) / (2.0 * h);
    }
  };
}

NonlinearModel::NonlinearModel(Index parameters, MeanFunction mean, MeanGradient gradient,
                               double noise_variance)
    : p_(parameters), mean_(std::move(mean)), grad_(std::move(gradient)), sigma2_(noise_variance) {
  if (p_ < 1) throw std::invalid_argument("nonlinear model needs at least one parameter");
  if (!(sigma2_ > 0)) throw std::invalid_argument("noise variance must be positive");
  if (!mean_) throw std::invalid_argument("nonlinear model needs a mean function");
  if (!grad_) grad_ = finite_difference_gradient(mean_);
}

Eigen::MatrixXd NonlinearModel::jacobian(const Eigen::VectorXd& theta,
                                         const Eigen::MatrixXd& x) const {
  if (theta.size() != p_) throw DimensionMismatch("theta length does not match model");
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> jac(x.rows(), p_);
  std::vector<double> row(static_cast<std::size_t>(x.cols()));
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) row[static_cast<std::size_t>(j)] = x(i, j);
    grad_(std::span<const double>(theta.data(), static_cast<std::size_t>(p_)), row,
          std::span<double>(jac.row(i).data(), static_cast<std::size_t>(p_)));
  }
  return jac;
}

Eigen::VectorXd NonlinearModel::mean(const Eigen::VectorXd& theta, const Eigen::MatrixXd& x) const {
  if (theta.size() != p_) throw DimensionMismatch("theta length does not match model");
  Eigen::VectorXd mu(x.rows());
  std::vector<double> row(static_cast<std::size_t>(x.cols()));
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) row[static_cast<std::size_t>(j)] = x(i, j);
    mu(i) = mean_(std::span<const double>(theta.data(), static_cast<std::size_t>(p_)), row);
  }
  return mu;
}

FisherInformation NonlinearModel::fisher_information(const Eigen::VectorXd& theta,
                                                     const Eigen::MatrixXd& x) const {
  const Eigen::MatrixXd jac = jacobian(theta, x);
  FisherInformation info = jac.transpose() * jac / sigma2_;
  return 0.5 * (info + info.transpose());
}

double NonlinearModel::log_likelihood(const Eigen::VectorXd& theta, const Eigen::VectorXd& y,
                                      const Eigen::MatrixXd& x) const {
  const Eigen::VectorXd r = y - mean(theta, x);
  const double n = static_cast<double>(y.size());
  return -0.5 * n * std::log(2.0 * std::numbers::pi * sigma2_) - 0.5 * r.squaredNorm() / sigma2_;
}

Eigen::VectorXd NonlinearModel::score(const Eigen::VectorXd& theta, const Eigen::VectorXd& y,
                                      const Eigen::MatrixXd& x) const {
  return jacobian(theta, x).transpose() * (y - mean(theta, x)) / sigma2_;
}

Eigen::VectorXd NonlinearModel::simulate(const Eigen::VectorXd& theta, const Eigen::MatrixXd& x,
                                         Rng& rng) const {
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::VectorXd y = mean(theta, x);
  const double sd = std::sqrt(sigma2_);
  for (Index i = 0; i < y.size(); ++i) y(i) += sd * z(rng);
  return y;
}

Eigen::VectorXd NonlinearModel::log_likelihood_rows(const Eigen::VectorXd& y,
                                                    const Eigen::MatrixXd& means) const {
  const double n = static_cast<double>(y.size());
  const double c = -0.5 * n * std::log(2.0 * std::numbers::pi * sigma2_);
  return c - 0.5 * (means.rowwise() - y.transpose()).rowwise().squaredNorm().array() / sigma2_;
}

double NonlinearModel::evaluate(const Eigen::VectorXd& theta, const Eigen::VectorXd& y,
                                const Eigen::MatrixXd& x, Eigen::VectorXd& score_out,
                                Eigen::MatrixXd& info) const {
  const Eigen::MatrixXd jac = jacobian(theta, x);
  const Eigen::VectorXd r = y - mean(theta, x);
  score_out = jac.transpose() * r / sigma2_;
  info = jac.transpose() * jac / sigma2_;
  const double n = static_cast<double>(y.size());
  return -0.5 * n * std::log(2.0 * std::numbers::pi * sigma2_) - 0.5 * r.squaredNorm() / sigma2_;
}

NonlinearModel compartmental_model(double noise_variance) {
  auto mean = [](std::span<const double> th, std::span<const double> x) {
    const double t = x[0];
    return th[2] * (std::exp(-th[0] * t) - std::exp(-th[1] * t));
  };
  auto grad = [](std::span<const double> th, std::span<const double> x, std::span<double> g) {
    const double t = x[0];
    const double e1 = std::exp(-th[0] * t);
    const double e2 = std::exp(-th[1] * t);
    g[0] = -th[2] * t * e1;
    g[1] = th[2] * t * e2;
    g[2] = e1 - e2;
  };
  return NonlinearModel(3, mean, grad, noise_variance);
}

FisherInformation fisher_information_glm(const GlmModel& m, const Eigen::VectorXd& theta,
                                         const Design& d) {
  return m.fisher_information(theta, d);
}

FisherInformation fisher_information_nlm(const NonlinearModel& m, const Eigen::VectorXd& theta,
                                         const Design& d) {
  return m.fisher_information(theta, d);
}

double d_criterion(const FisherInformation& info) {
  Eigen::LLT<Eigen::MatrixXd> llt;
  if (!factorize(info, llt)) return kSingularLogDet;
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

double a_criterion(const FisherInformation& info) {
  Eigen::LLT<Eigen::MatrixXd> llt;
  if (!factorize(info, llt)) throw SingularInformation("information matrix is singular");
  const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
  return -inv.trace();
}

double criterion_value(Criterion c, const FisherInformation& info) {
  return c == Criterion::D ? d_criterion(info) : a_criterion(info);
}

}  // namespace bayesdes
