#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "gi/estimator.hpp"

namespace gi {

/// Parameters of the test-environment generator
///
///   g_K(x, ξ) = KᵀΣ₀⁻¹(x − μ₀) + ξ·sqrt(σ²_Y − KᵀΣ₀⁻¹K)
///
/// With an intercept, coordinate 0 is excluded from μ₀, Σ₀ and K when forming
/// the first term; β keeps its intercept entry.
struct GeneratorSpec {
  Eigen::VectorXd beta;
  Eigen::VectorXd k;
  double sigma_y_sq = 0.0;
  Eigen::VectorXd mu0;
  Eigen::MatrixXd sigma0;
  bool intercept = false;
  /// Σ₀⁻¹K on the non-intercept block, zero on the intercept entry.
  Eigen::VectorXd loading;
  /// Raw σ²_Y − KᵀΣ₀⁻¹K before truncation.
  double raw_radicand = 0.0;
  double radicand = 0.0;
  bool truncated = false;
};

/// Builds a generator from explicit moments (population values or plug-ins).
/// Throws SingularCovarianceError, or EllipsoidViolationError in strict mode
/// when the radicand is negative.
GeneratorSpec make_generator(const Eigen::VectorXd& beta, const Eigen::VectorXd& k,
                             double sigma_y_sq, const Eigen::VectorXd& mu0,
                             const Eigen::MatrixXd& sigma0, bool intercept, bool strict);

/// Plug-in generator: μ₀, Σ₀ (denominator n₀) estimated from the test covariates.
/// Throws InsufficientTestSampleError when n₀ ≤ p (intercept column excluded).
GeneratorSpec build_generator(const GIFit& fit, const Eigen::MatrixXd& x_test, bool strict);

double g_eval(const GeneratorSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x, double xi);

/// ŷ_i = βᵀx_i + g(x_i, ξ_i) for caller-supplied noise.
Eigen::VectorXd generate_with_noise(const GeneratorSpec& spec, const Eigen::MatrixXd& x_test,
                                    const Eigen::VectorXd& xi);

/// ŷ_i = βᵀx_i + g(x_i, ξ_i) with ξ_i iid N(0,1) drawn from `seed`.
Eigen::VectorXd generate_responses(const GeneratorSpec& spec, const Eigen::MatrixXd& x_test,
                                   std::uint64_t seed);

/// Causal-only baseline: β̂ᵀx + σ̂_*ξ with σ̂_*² = (1/N)‖Y − Xβ̂‖².
Eigen::VectorXd do_interventional_generator(const GIFit& fit, const Eigen::MatrixXd& x_test,
                                            std::uint64_t seed);

/// Pooled-OLS baseline: β̂_OLSᵀx + σ̂ξ.
Eigen::VectorXd ols_generator(const Eigen::VectorXd& beta_ols, double resid_var,
                              const Eigen::MatrixXd& x_test, std::uint64_t seed);

}  // namespace gi
