#include "bayesdes/gp_emulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "bayesdes/errors.hpp"

namespace bayesdes {

namespace {

constexpr double kLogLengthMin = -4.605170185988091;  // log 0.01
constexpr double kLogLengthMax = 2.302585092994046;   // log 10
constexpr double kLogNuggetMin = -18.420680743952367;  // log 1e-8
constexpr double kLogNuggetMax = 4.605170185988091;    // log 100
constexpr double kBaseJitter = 1e-10;
constexpr double kMaxJitter = 1e-4;
constexpr double kInvPhi = 0.6180339887498949;
// Largest training residual (standardized units) a noiseless fit may leave.
constexpr double kInterpolationTol = 1e-7;

struct ProfileFit {
  double log_lik = -std::numeric_limits<double>::infinity();
  double mean = 0.0;
  double sigma2 = 1.0;
  Eigen::VectorXd weights;
};

Eigen::MatrixXd correlation(const Eigen::VectorXd& x, double length_scale) {
  const Eigen::Index q = x.size();
  Eigen::MatrixXd r(q, q);
  const double inv = 1.0 / (2.0 * length_scale * length_scale);
  for (Eigen::Index a = 0; a < q; ++a) {
    r(a, a) = 1.0;
    for (Eigen::Index b = a + 1; b < q; ++b) {
      const double dx = x(a) - x(b);
      r(a, b) = r(b, a) = std::exp(-dx * dx * inv);
    }
  }
  return r;
}

// Profiles out the constant mean and signal variance; returns nullopt when the
// correlation matrix is not numerically positive definite, or when `interpolate` is set
// and the fit would miss a training value by more than kInterpolationTol.
std::optional<ProfileFit> profile(const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                                  double length_scale, double nugget, bool interpolate = false) {
  const Eigen::Index q = x.size();
  Eigen::MatrixXd r = correlation(x, length_scale);
  r.diagonal().array() += nugget;
  Eigen::LLT<Eigen::MatrixXd> llt(r);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const auto diag = llt.matrixLLT().diagonal();
  // Reject factorizations whose pivots have collapsed to round-off level.
  if (diag.minCoeff() <= 1e-7 * diag.maxCoeff()) return std::nullopt;

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(q);
  const Eigen::VectorXd r_inv_one = llt.solve(ones);
  const Eigen::VectorXd r_inv_v = llt.solve(v);
  ProfileFit fit;
  fit.mean = ones.dot(r_inv_v) / ones.dot(r_inv_one);
  fit.weights = r_inv_v - fit.mean * r_inv_one;
  if (interpolate) {
    r.diagonal().array() -= nugget;
    const double miss = (r * fit.weights - (v.array() - fit.mean).matrix()).cwiseAbs().maxCoeff();
    if (!(miss <= kInterpolationTol)) return std::nullopt;
  }
  const Eigen::VectorXd centered = v.array() - fit.mean;
  fit.sigma2 = std::max(centered.dot(fit.weights) / static_cast<double>(q), 1e-300);
  const double log_det = 2.0 * diag.array().log().sum();
  fit.log_lik = -0.5 * static_cast<double>(q) * std::log(fit.sigma2) - 0.5 * log_det;
  return fit;
}

template <class F>
double grid_then_golden(F objective, double lo, double hi, int grid_points, int golden_iters,
                        double& best_value) {
  const double step = (hi - lo) / (grid_points - 1);
  int best = 0;
  best_value = -std::numeric_limits<double>::infinity();
  for (int g = 0; g < grid_points; ++g) {
    const double val = objective(lo + step * g);
    if (val > best_value) {
      best_value = val;
      best = g;
    }
  }
  if (!std::isfinite(best_value)) return lo + step * best;
  double a = lo + step * std::max(best - 1, 0);
  double b = lo + step * std::min(best + 1, grid_points - 1);
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = objective(c);
  double fd = objective(d);
  for (int it = 0; it < golden_iters; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = objective(d);
    }
  }
  double arg = lo + step * best;
  if (fc > best_value) {
    best_value = fc;
    arg = c;
  }
  if (fd > best_value) {
    best_value = fd;
    arg = d;
  }
  return arg;
}

}  // namespace

void EmulatorTrainingSet::validate() const {
  if (abscissae.size() != values.size())
    throw std::invalid_argument("emulator abscissae and values differ in length");
  if (abscissae.size() < 3) throw std::invalid_argument("emulator needs at least 3 points");
  for (double v : values)
    if (!std::isfinite(v)) throw std::invalid_argument("emulator training values must be finite");
  std::vector<double> sorted = abscissae;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("emulator abscissae must be distinct");
  for (double x : sorted)
    if (!std::isfinite(x)) throw std::invalid_argument("emulator abscissae must be finite");
}

Emulator1D fit_1d(const EmulatorTrainingSet& data, bool stochastic) {
  data.validate();
  const auto q = static_cast<Eigen::Index>(data.abscissae.size());
  Emulator1D em;
  const auto [xmin, xmax] = std::minmax_element(data.abscissae.begin(), data.abscissae.end());
  em.x_offset_ = *xmin;
  em.x_scale_ = *xmax - *xmin;
  em.scaled_x_.resize(q);
  for (Eigen::Index a = 0; a < q; ++a)
    em.scaled_x_(a) = (data.abscissae[static_cast<std::size_t>(a)] - em.x_offset_) / em.x_scale_;

  Eigen::Map<const Eigen::VectorXd> raw(data.values.data(), q);
  em.y_offset_ = raw.mean();
  const double var = (raw.array() - em.y_offset_).square().sum() / static_cast<double>(q - 1);
  const double sd = std::sqrt(var);
  if (!(sd > 1e-12 * std::max(1.0, std::abs(em.y_offset_)))) {
    em.constant_ = true;
    em.y_scale_ = 1.0;
    em.hyper_ = {0.0, 1.0, 0.0, 0.0};
    return em;
  }
  em.y_scale_ = sd;
  const Eigen::VectorXd v = (raw.array() - em.y_offset_) / sd;
  const Eigen::VectorXd& x = em.scaled_x_;

  auto loglik = [&](double log_len, double nugget) {
    auto fit = profile(x, v, std::exp(log_len), nugget, !stochastic);
    return fit ? fit->log_lik : -std::numeric_limits<double>::infinity();
  };

  double log_len = 0.0;
  double nugget = kBaseJitter;
  double best = 0.0;
  if (!stochastic) {
    log_len = grid_then_golden([&](double l) { return loglik(l, kBaseJitter); }, kLogLengthMin,
                               kLogLengthMax, 13, 25, best);
  } else {
    // Coarse joint grid, then alternating golden-section refinement. Length scales below
    // the mean training spacing would let the kernel interpolate noise the nugget should absorb.
    const double len_min = std::max(kLogLengthMin, std::log(1.0 / static_cast<double>(q - 1)));
    double log_nug = 0.0;
    best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < 11; ++a) {
      const double ln = kLogNuggetMin + (kLogNuggetMax - kLogNuggetMin) * a / 10.0;
      double val = 0.0;
      const double l = grid_then_golden([&](double t) { return loglik(t, std::exp(ln)); },
                                        len_min, kLogLengthMax, 13, 0, val);
      if (val > best) {
        best = val;
        log_len = l;
        log_nug = ln;
      }
    }
    if (std::isfinite(best)) {
      for (int round = 0; round < 2; ++round) {
        double val = 0.0;
        const double l = grid_then_golden([&](double t) { return loglik(t, std::exp(log_nug)); },
                                          std::max(len_min, log_len - 0.6),
                                          std::min(kLogLengthMax, log_len + 0.6), 3, 15, val);
        if (val >= best) {
          best = val;
          log_len = l;
        }
        const double ln = grid_then_golden([&](double t) { return loglik(log_len, std::exp(t)); },
                                           std::max(kLogNuggetMin, log_nug - 1.2),
                                           std::min(kLogNuggetMax, log_nug + 1.2), 3, 15, val);
        if (val >= best) {
          best = val;
          log_nug = ln;
        }
      }
    }
    nugget = std::exp(log_nug);
  }

  std::optional<ProfileFit> fit;
  if (std::isfinite(best)) fit = profile(x, v, std::exp(log_len), nugget, !stochastic);
  for (double jitter = std::max(nugget, kBaseJitter); !fit && jitter <= kMaxJitter * 1.0001;
       jitter *= 10.0) {
    nugget = jitter;
    Eigen::MatrixXd r = correlation(x, std::exp(log_len));
    r.diagonal().array() += nugget;
    Eigen::LLT<Eigen::MatrixXd> llt(r);
    if (llt.info() == Eigen::Success) fit = profile(x, v, std::exp(log_len), nugget);
  }
  if (!fit) throw NumericalFailure("emulator covariance is not positive definite after jitter");

  em.weights_ = fit->weights;
  em.log_lik_ = fit->log_lik;
  em.hyper_ = {fit->sigma2, std::exp(log_len), fit->sigma2 * nugget, fit->mean};
  return em;
}

double Emulator1D::predictive_mean(double x) const {
  if (constant_) return y_offset_;
  const double u = (x - x_offset_) / x_scale_;
  const double inv = 1.0 / (2.0 * hyper_.length_scale * hyper_.length_scale);
  double acc = hyper_.constant_mean;
  for (Eigen::Index a = 0; a < scaled_x_.size(); ++a) {
    const double dx = u - scaled_x_(a);
    acc += std::exp(-dx * dx * inv) * weights_(a);
  }
  return y_offset_ + y_scale_ * acc;
}

std::pair<double, double> maximize_on_grid(const Emulator1D& em, std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("maximize_on_grid needs a nonempty grid");
  double best_x = grid[0];
  double best_v = em.predictive_mean(grid[0]);
  for (std::size_t g = 1; g < grid.size(); ++g) {
    const double v = em.predictive_mean(grid[g]);
    if (v > best_v || (v == best_v && grid[g] < best_x)) {
      best_v = v;
      best_x = grid[g];
    }
  }
  return {best_x, best_v};
}

}  // namespace bayesdes
