#include "gi/generator.hpp"

#include <cmath>
#include <sstream>

#include "gi/errors.hpp"
#include "gi/linalg.hpp"
#include "gi/random.hpp"

namespace gi {

namespace {

void check_dims(const Eigen::MatrixXd& x, Eigen::Index p, const char* where) {
  if (x.cols() != p) {
    std::ostringstream msg;
    msg << where << ": expected " << p << " covariate columns, got " << x.cols();
    throw DimensionMismatchError(msg.str());
  }
}

Eigen::VectorXd noise_scaled(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta,
                             double variance, std::uint64_t seed) {
  check_dims(x, beta.size(), "generator");
  Rng rng(seed);
  const Eigen::VectorXd xi = rng.normal_vector(x.rows());
  return x * beta + std::sqrt(std::max(variance, 0.0)) * xi;
}

}  // namespace

GeneratorSpec make_generator(const Eigen::VectorXd& beta, const Eigen::VectorXd& k,
                             double sigma_y_sq, const Eigen::VectorXd& mu0,
                             const Eigen::MatrixXd& sigma0, bool intercept, bool strict) {
  const Eigen::Index p = beta.size();
  if (k.size() != p || mu0.size() != p || sigma0.rows() != p || sigma0.cols() != p)
    throw DimensionMismatchError("make_generator: β, K, μ₀ and Σ₀ must share dimension p");
  GeneratorSpec spec;
  spec.beta = beta;
  spec.k = k;
  spec.sigma_y_sq = sigma_y_sq;
  spec.mu0 = mu0;
  spec.sigma0 = sigma0;
  spec.intercept = intercept;
  spec.loading = Eigen::VectorXd::Zero(p);

  const Eigen::Index first = intercept ? 1 : 0;
  const Eigen::Index q = p - first;
  double quad = 0.0;
  if (q > 0) {
    Eigen::MatrixXd solved;
    if (!linalg::solve_spd(sigma0.bottomRightCorner(q, q), k.tail(q), 1e-12, solved))
      throw SingularCovarianceError("test covariate covariance is not positive definite");
    spec.loading.tail(q) = solved.col(0);
    quad = k.tail(q).dot(spec.loading.tail(q));
  }
  spec.raw_radicand = sigma_y_sq - quad;
  spec.truncated = spec.raw_radicand < 0.0;
  spec.radicand = spec.truncated ? 0.0 : spec.raw_radicand;
  if (strict && spec.truncated) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "K lies outside the causal ellipsoid of the test covariance (slack "
        << spec.raw_radicand << ")";
    throw EllipsoidViolationError(msg.str(), spec.raw_radicand);
  }
  return spec;
}

GeneratorSpec build_generator(const GIFit& fit, const Eigen::MatrixXd& x_test, bool strict) {
  const auto p = static_cast<Eigen::Index>(fit.dim());
  check_dims(x_test, p, "build_generator");
  const Eigen::Index active = p - (fit.intercept ? 1 : 0);
  if (x_test.rows() <= active) {
    std::ostringstream msg;
    msg << "need more than " << active << " test rows to estimate Σ₀, got " << x_test.rows();
    throw InsufficientTestSampleError(msg.str());
  }
  const double n0 = static_cast<double>(x_test.rows());
  const Eigen::VectorXd mu0 = x_test.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x_test.rowwise() - mu0.transpose();
  const Eigen::MatrixXd sigma0 = centered.transpose() * centered / n0;
  return make_generator(fit.beta_hat, fit.k_hat, fit.sigma_y_sq_hat, mu0, sigma0, fit.intercept,
                        strict);
}

double g_eval(const GeneratorSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x, double xi) {
  return spec.loading.dot(x - spec.mu0) + xi * std::sqrt(spec.radicand);
}

Eigen::VectorXd generate_with_noise(const GeneratorSpec& spec, const Eigen::MatrixXd& x_test,
                                    const Eigen::VectorXd& xi) {
  check_dims(x_test, spec.beta.size(), "generate");
  if (xi.size() != x_test.rows())
    throw DimensionMismatchError("generate: one noise draw per test row is required");
  const Eigen::MatrixXd centered = x_test.rowwise() - spec.mu0.transpose();
  return x_test * spec.beta + centered * spec.loading + std::sqrt(spec.radicand) * xi;
}

Eigen::VectorXd generate_responses(const GeneratorSpec& spec, const Eigen::MatrixXd& x_test,
                                   std::uint64_t seed) {
  Rng rng(seed);
  return generate_with_noise(spec, x_test, rng.normal_vector(x_test.rows()));
}

Eigen::VectorXd do_interventional_generator(const GIFit& fit, const Eigen::MatrixXd& x_test,
                                            std::uint64_t seed) {
  return noise_scaled(x_test, fit.beta_hat, fit.causal_resid_var, seed);
}

Eigen::VectorXd ols_generator(const Eigen::VectorXd& beta_ols, double resid_var,
                              const Eigen::MatrixXd& x_test, std::uint64_t seed) {
  return noise_scaled(x_test, beta_ols, resid_var, seed);
}

}  // namespace gi
