#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gi/dataset.hpp"

namespace gi {

inline constexpr double kDefaultRankTol = 1e-10;

/// Spectrum of Σ_z n_z μ̂_z μ̂_zᵀ (= MᵀM), which decides identifiability.
struct RankReport {
  std::vector<double> eigenvalues;  ///< descending
  std::size_t numerical_rank = 0;
  double condition_number = 0.0;  ///< +inf when the smallest eigenvalue is ≤ 0
  double rank_tol = kDefaultRankTol;
  bool identifiable = false;
};

RankReport check_identifiability(const std::vector<EnvironmentSummary>& summaries,
                                 double rank_tol = kDefaultRankTol);

/// Closed-form Generative Invariance fit.
struct GIFit {
  Eigen::VectorXd beta_hat;
  Eigen::VectorXd k_opt_hat;
  Eigen::VectorXd k_hat;
  double sigma_y_sq_hat = 0.0;
  /// (1/N)‖Y − Xβ̂‖², the noise scale of the causal-only generator.
  double causal_resid_var = 0.0;
  Eigen::MatrixXd gram;     ///< MᵀM
  Eigen::MatrixXd scatter;  ///< XᵀX − MᵀM = Σ n_z Σ̂_z
  std::vector<EnvironmentSummary> summaries;
  std::size_t n_total = 0;
  RankReport rank;
  bool intercept = false;
  std::vector<std::string> covariate_names;
  std::vector<std::string> env_labels;

  std::size_t dim() const { return static_cast<std::size_t>(beta_hat.size()); }
};

/// β̂ = (MᵀM)⁻¹MᵀY, K̂_opt = (XᵀX − MᵀM)⁻¹Xᵀ(Y − Xβ̂), K̂ = Xᵀ(Y − Xβ̂)/N.
///
/// With an intercept column the scatter matrix has a zero row and column, so
/// K̂_opt is solved on the remaining block and its intercept entry is 0.
/// Throws IdentifiabilityError or DegenerateCovariatesError; never regularises.
GIFit fit(const Dataset& d, double rank_tol = kDefaultRankTol);

/// (1/N)‖Y − Xβ − (X − M)K_opt‖² + K_optᵀK. Non-negative whenever k is
/// scatter·k_opt/N.
double estimate_noise_variance(const Dataset& d, const Eigen::VectorXd& beta,
                               const Eigen::VectorXd& k_opt, const Eigen::VectorXd& k);

/// (1/N)‖Y − Xβ − (X − M)K‖².
double empirical_risk(const Dataset& d, const Eigen::VectorXd& beta, const Eigen::VectorXd& k);

/// σ²_Y − KᵀΣ⁻¹K; the causal ellipsoid condition holds iff the slack is > 0.
/// Throws SingularCovarianceError unless Σ is positive definite (λ_min > 1e-12 λ_max).
double ellipsoid_slack(const Eigen::VectorXd& k, const Eigen::MatrixXd& sigma, double sigma_y_sq);

struct OlsFit {
  Eigen::VectorXd beta;
  double resid_var = 0.0;  ///< denominator N
};

/// Pooled least squares over all environments.
OlsFit fit_ols(const Dataset& d, double rank_tol = kDefaultRankTol);

}  // namespace gi
