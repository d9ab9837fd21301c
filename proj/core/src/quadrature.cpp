#include "bayesdes/quadrature.hpp"

#include <cmath>
#include <stdexcept>

#include "bayesdes/errors.hpp"

namespace bayesdes {

void NormalPrior::validate() const {
  if (covariance.rows() != mean.size() || covariance.cols() != mean.size())
    throw DimensionMismatch("normal prior covariance does not match mean length");
  if (mean.size() == 0) throw std::invalid_argument("normal prior is empty");
  if (!covariance.isApprox(covariance.transpose(), 1e-12))
    throw std::invalid_argument("normal prior covariance must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("normal prior covariance must be positive definite");
}

void IndependentUniformPrior::validate() const {
  if (support.rows() != 2 || support.cols() == 0)
    throw DimensionMismatch("uniform prior support must be a 2 x p matrix");
  if (!(support.row(0).array() <= support.row(1).array()).all())
    throw std::invalid_argument("uniform prior requires lower <= upper");
}

std::vector<Eigen::Index> IndependentUniformPrior::free_components() const {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index j = 0; j < support.cols(); ++j)
    if (support(0, j) < support(1, j)) idx.push_back(j);
  return idx;
}

Eigen::Index prior_dimension(const Prior& prior) {
  return std::visit([](const auto& p) { return p.dimension(); }, prior);
}

Eigen::Index effective_dimension(const Prior& prior) {
  if (const auto* u = std::get_if<IndependentUniformPrior>(&prior))
    return static_cast<Eigen::Index>(u->free_components().size());
  return prior_dimension(prior);
}

double QuadratureRule::integrate(const std::function<double(const Eigen::VectorXd&)>& f) const {
  double acc = 0.0;
  for (Eigen::Index b = 0; b < size(); ++b) acc += weights(b) * f(nodes.row(b).transpose());
  return acc;
}

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_laguerre(int n, double alpha) {
  if (n < 1) throw std::invalid_argument("gauss_laguerre needs n >= 1");
  if (!(alpha > -1.0)) throw std::invalid_argument("gauss_laguerre needs alpha > -1");
  // Golub-Welsch on the Jacobi matrix of the generalized Laguerre polynomials.
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    jac(i, i) = 2.0 * i + alpha + 1.0;
    if (i + 1 < n) {
      const double off = std::sqrt((i + 1.0) * (i + 1.0 + alpha));
      jac(i, i + 1) = jac(i + 1, i) = off;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jac);
  Eigen::VectorXd nodes = eig.eigenvalues();
  Eigen::VectorXd weights = eig.eigenvectors().row(0).transpose().cwiseAbs2();
  weights /= weights.sum();
  return {nodes, weights};
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> spherical_rule(Eigen::Index p) {
  if (p < 1) throw std::invalid_argument("spherical rule needs p >= 1");
  if (p == 1) {
    Eigen::MatrixXd dirs(2, 1);
    dirs << 1.0, -1.0;
    return {dirs, Eigen::VectorXd::Constant(2, 0.5)};
  }
  // Regular simplex: centered standard basis of R^{p+1} expressed in a basis of the
  // hyperplane orthogonal to the all-ones vector.
  const Eigen::Index m = p + 1;
  const Eigen::MatrixXd centered =
      Eigen::MatrixXd::Identity(m, m) - Eigen::MatrixXd::Constant(m, m, 1.0 / m);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeFullV);
  Eigen::MatrixXd vertices = centered * svd.matrixV().leftCols(p);
  vertices.rowwise().normalize();

  const bool degree5 = p <= 6;
  const Eigen::Index n_mid = degree5 ? m * (m - 1) / 2 : 0;
  Eigen::MatrixXd dirs(2 * (m + n_mid), p);
  Eigen::VectorXd w(dirs.rows());
  const double pd = static_cast<double>(p);
  const double w_vertex = degree5 ? pd * (7.0 - pd) / (2.0 * (pd + 1) * (pd + 1) * (pd + 2))
                                  : 1.0 / (2.0 * static_cast<double>(m));
  const double w_mid = degree5 ? 2.0 * (pd - 1) * (pd - 1) / (pd * (pd + 1) * (pd + 1) * (pd + 2))
                               : 0.0;
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    dirs.row(r) = vertices.row(i);
    w(r++) = w_vertex;
    dirs.row(r) = -vertices.row(i);
    w(r++) = w_vertex;
  }
  for (Eigen::Index i = 0; i < m && degree5; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      Eigen::RowVectorXd mid = vertices.row(i) + vertices.row(j);
      mid.normalize();
      dirs.row(r) = mid;
      w(r++) = w_mid;
      dirs.row(r) = -mid;
      w(r++) = w_mid;
    }
  }
  return {dirs, w};
}

namespace {

Eigen::MatrixXd random_rotation(Eigen::Index p, Rng& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd g(p, p);
  for (Eigen::Index a = 0; a < p; ++a)
    for (Eigen::Index b = 0; b < p; ++b) g(a, b) = z(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < p; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

}  // namespace

QuadratureRule build_radial_spherical(Eigen::Index p_eff, int n_radial, int n_random_rotations,
                                      Rng& rng) {
  if (p_eff < 1) throw std::invalid_argument("radial-spherical rule needs p_eff >= 1");
  if (n_radial < 1 || n_random_rotations < 1)
    throw std::invalid_argument("radial-spherical rule needs positive point counts");
  const auto [t, w_rad] = gauss_laguerre(n_radial, 0.5 * static_cast<double>(p_eff) - 1.0);
  const auto [dirs, w_sph] = spherical_rule(p_eff);

  QuadratureRule rule;
  const Eigen::Index per_rot = n_radial * dirs.rows();
  rule.nodes.resize(per_rot * n_random_rotations, p_eff);
  rule.weights.resize(per_rot * n_random_rotations);
  Eigen::Index b = 0;
  for (int rot = 0; rot < n_random_rotations; ++rot) {
    const Eigen::MatrixXd q = random_rotation(p_eff, rng);
    const Eigen::MatrixXd rotated = dirs * q.transpose();
    for (int k = 0; k < n_radial; ++k) {
      const double radius = std::sqrt(2.0 * t(k));
      for (Eigen::Index s = 0; s < dirs.rows(); ++s) {
        rule.nodes.row(b) = radius * rotated.row(s);
        rule.weights(b) = w_rad(k) * w_sph(s) / n_random_rotations;
        ++b;
      }
    }
  }
  rule.weights /= rule.weights.sum();
  return rule;
}

QuadratureRule build_radial_spherical(Eigen::Index p_eff, int n_radial, int n_random_rotations,
                                      std::uint64_t seed) {
  Rng rng = substream(seed, {0x71ad});
  return build_radial_spherical(p_eff, n_radial, n_random_rotations, rng);
}

QuadratureRule transform_to_prior(const QuadratureRule& rule, const Prior& prior) {
  QuadratureRule out;
  out.weights = rule.weights;
  if (const auto* normal = std::get_if<NormalPrior>(&prior)) {
    normal->validate();
    if (rule.dimension() != normal->dimension())
      throw DimensionMismatch("quadrature rule dimension does not match normal prior");
    const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(normal->covariance).matrixL();
    out.nodes = (rule.nodes * l.transpose()).rowwise() + normal->mean.transpose();
    return out;
  }
  const auto& uniform = std::get<IndependentUniformPrior>(prior);
  uniform.validate();
  const auto free = uniform.free_components();
  if (rule.dimension() != static_cast<Eigen::Index>(free.size()))
    throw DimensionMismatch("quadrature rule dimension does not match free uniform components");
  out.nodes.resize(rule.size(), uniform.dimension());
  for (Eigen::Index j = 0; j < uniform.dimension(); ++j) out.nodes.col(j).setConstant(uniform.support(0, j));
  for (std::size_t c = 0; c < free.size(); ++c) {
    const Eigen::Index j = free[c];
    const double lo = uniform.support(0, j);
    const double width = uniform.support(1, j) - lo;
    for (Eigen::Index b = 0; b < rule.size(); ++b)
      out.nodes(b, j) = lo + width * standard_normal_cdf(rule.nodes(b, static_cast<Eigen::Index>(c)));
  }
  return out;
}

double expected_criterion(const QuadratureRule& rule, const Model& model, const Design& d,
                          Criterion criterion) {
  if (rule.dimension() != model.parameter_count())
    throw DimensionMismatch("quadrature nodes do not match model parameter count");
  const Eigen::MatrixXd f = model.features(d);
  double acc = 0.0;
  for (Eigen::Index b = 0; b < rule.size(); ++b) {
    const Eigen::VectorXd theta = rule.nodes.row(b).transpose();
    acc += rule.weights(b) * criterion_value(criterion, model.fisher_information(theta, f));
  }
  return acc;
}

UtilityEvaluator quadrature_criterion_utility(std::shared_ptr<const Model> model, const Prior& prior,
                                              Criterion criterion, int n_radial,
                                              int n_random_rotations, std::uint64_t seed) {
  if (prior_dimension(prior) != model->parameter_count())
    throw DimensionMismatch("prior dimension does not match model parameter count");
  const QuadratureRule rule = transform_to_prior(
      build_radial_spherical(effective_dimension(prior), n_radial, n_random_rotations, seed), prior);
  return UtilityEvaluator::deterministic([model, rule, criterion](const Design& d) {
    return expected_criterion(rule, *model, d, criterion);
  });
}

}  // namespace bayesdes
