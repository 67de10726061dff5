#include "gi/estimator.hpp"

#include <limits>
#include <sstream>

#include "gi/errors.hpp"
#include "gi/linalg.hpp"

namespace gi {

namespace {

Eigen::MatrixXd between_gram(const std::vector<EnvironmentSummary>& summaries) {
  const Eigen::Index p = summaries.front().mu_hat.size();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(p, p);
  for (const auto& s : summaries) g += static_cast<double>(s.n) * s.mu_hat * s.mu_hat.transpose();
  return g;
}

std::string describe(const std::vector<double>& eig) {
  std::ostringstream out;
  out.precision(6);
  out << "eigenvalues [";
  for (std::size_t i = 0; i < eig.size(); ++i) out << (i ? ", " : "") << eig[i];
  out << "]";
  return out.str();
}

Eigen::VectorXd centered_product(const Dataset& d, const Eigen::VectorXd& k) {
  const CenteringMatrix cm = centering_matrix(d);
  return (d.x() - cm.m) * k;
}

}  // namespace

RankReport check_identifiability(const std::vector<EnvironmentSummary>& summaries,
                                 double rank_tol) {
  RankReport r;
  r.rank_tol = rank_tol;
  if (summaries.empty()) return r;
  r.eigenvalues = linalg::sorted_eigenvalues(between_gram(summaries));
  const double largest = r.eigenvalues.front();
  for (double ev : r.eigenvalues)
    if (largest > 0.0 && ev > rank_tol * largest) ++r.numerical_rank;
  const double smallest = r.eigenvalues.back();
  r.condition_number =
      smallest > 0.0 ? largest / smallest : std::numeric_limits<double>::infinity();
  r.identifiable = linalg::well_conditioned(r.eigenvalues, rank_tol);
  return r;
}

GIFit fit(const Dataset& d, double rank_tol) {
  GIFit out;
  out.summaries = summarize(d);
  out.rank = check_identifiability(out.summaries, rank_tol);
  if (!out.rank.identifiable) {
    throw IdentifiabilityError(
        "environment means do not span the covariate space (rank " +
            std::to_string(out.rank.numerical_rank) + " of " + std::to_string(d.cols()) + "); " +
            describe(out.rank.eigenvalues),
        out.rank.eigenvalues);
  }

  const CenteringMatrix cm = centering_matrix(d);
  const auto& x = d.x();
  const auto& y = d.y();
  const auto p = static_cast<Eigen::Index>(d.cols());
  out.n_total = d.rows();
  out.intercept = d.intercept();
  out.covariate_names = d.covariate_names();
  out.env_labels = d.env_labels();

  out.gram = cm.m.transpose() * cm.m;
  out.scatter = Eigen::MatrixXd::Zero(p, p);
  for (const auto& s : out.summaries) out.scatter += static_cast<double>(s.n) * s.sigma_hat;

  Eigen::MatrixXd beta;
  if (!linalg::solve_spd(out.gram, cm.m.transpose() * y, rank_tol, beta))
    throw IdentifiabilityError("MᵀM is not numerically positive definite; " +
                                   describe(out.rank.eigenvalues),
                               out.rank.eigenvalues);
  out.beta_hat = beta.col(0);

  const Eigen::VectorXd resid = y - x * out.beta_hat;
  const Eigen::VectorXd xt_resid = x.transpose() * resid;
  const double n = static_cast<double>(out.n_total);

  const Eigen::Index first = d.intercept() ? 1 : 0;
  const Eigen::Index q = p - first;
  out.k_opt_hat = Eigen::VectorXd::Zero(p);
  if (q > 0) {
    Eigen::MatrixXd k_block;
    if (!linalg::solve_spd(out.scatter.bottomRightCorner(q, q), xt_resid.tail(q), rank_tol,
                           k_block)) {
      throw DegenerateCovariatesError(
          "pooled within-environment covariance is rank deficient; " +
          describe(linalg::sorted_eigenvalues(out.scatter.bottomRightCorner(q, q))));
    }
    out.k_opt_hat.tail(q) = k_block.col(0);
  }
  out.k_hat = xt_resid / n;
  out.causal_resid_var = resid.squaredNorm() / n;
  out.sigma_y_sq_hat = estimate_noise_variance(d, out.beta_hat, out.k_opt_hat, out.k_hat);
  return out;
}

double empirical_risk(const Dataset& d, const Eigen::VectorXd& beta, const Eigen::VectorXd& k) {
  if (beta.size() != d.x().cols() || k.size() != d.x().cols())
    throw DimensionMismatchError("empirical_risk: parameter dimension does not match covariates");
  const Eigen::VectorXd r = d.y() - d.x() * beta - centered_product(d, k);
  return r.squaredNorm() / static_cast<double>(d.rows());
}

double estimate_noise_variance(const Dataset& d, const Eigen::VectorXd& beta,
                               const Eigen::VectorXd& k_opt, const Eigen::VectorXd& k) {
  if (k.size() != k_opt.size())
    throw DimensionMismatchError("estimate_noise_variance: k and k_opt differ in length");
  return empirical_risk(d, beta, k_opt) + k_opt.dot(k);
}

double ellipsoid_slack(const Eigen::VectorXd& k, const Eigen::MatrixXd& sigma,
                       double sigma_y_sq) {
  if (sigma.rows() != sigma.cols() || sigma.rows() != k.size())
    throw DimensionMismatchError("ellipsoid_slack: Σ must be p×p with p = |K|");
  Eigen::MatrixXd solved;
  if (!linalg::solve_spd(sigma, k, 1e-12, solved))
    throw SingularCovarianceError("covariance is not positive definite");
  return sigma_y_sq - k.dot(solved.col(0));
}

OlsFit fit_ols(const Dataset& d, double rank_tol) {
  const auto& x = d.x();
  Eigen::MatrixXd beta;
  if (!linalg::solve_spd(x.transpose() * x, x.transpose() * d.y(), rank_tol, beta))
    throw DegenerateCovariatesError("XᵀX is rank deficient");
  OlsFit out;
  out.beta = beta.col(0);
  out.resid_var = (d.y() - x * out.beta).squaredNorm() / static_cast<double>(d.rows());
  return out;
}

}  // namespace gi
