#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gi/dataset.hpp"
#include "gi/estimator.hpp"

namespace gi {

/// Multi-environment data-generating process.
///
/// Environment z has X_z ~ N(μ_z, Σ_z) with Σ_z = AᵀA + I (A iid N(0, s1²))
/// and μ_z iid N(0, s2²); the response noise has variance σ²_z = K*ᵀΣ_z⁻¹K* + 1
/// and covariance K* with X_z. With `intercept`, column 0 is the constant 1,
/// the Gaussian block has dimension p − 1 and K*'s first entry must be 0.
struct SimulationConfig {
  std::size_t p = 2;
  std::size_t z_envs = 2;
  std::vector<std::size_t> n_per_env{200};  ///< one entry is broadcast to all environments
  Eigen::VectorXd beta_star;
  Eigen::VectorXd k_star;
  double s1 = 1.0;
  double s2 = 2.0;
  bool intercept = false;
  std::uint64_t seed = 42;

  std::size_t env_size(std::size_t z) const;
  /// Throws InvalidDataError when the configuration is inconsistent.
  void validate() const;
};

/// Population moments of one environment (Gaussian block only).
struct EnvironmentLaw {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  double noise_var = 0.0;  ///< σ²_z
};

struct GroundTruth {
  Eigen::VectorXd beta_star;
  Eigen::VectorXd k_star;
  std::vector<EnvironmentLaw> envs;
};

struct SimulatedData {
  Dataset data;
  GroundTruth truth;
};

/// Draws (μ_z, Σ_z) for every environment from cfg.seed.
std::vector<EnvironmentLaw> draw_environment_laws(const SimulationConfig& cfg);

/// Draws n rows of (X, Y) from one environment law. Noise is built as
///   ε = K*ᵀΣ⁻¹(X − μ) + η sqrt(σ² − K*ᵀΣ⁻¹K*),  η ~ N(0,1),
/// so Cov(X, ε) = K* exactly. Rows gain a leading 1 when `intercept`.
void sample_environment(const EnvironmentLaw& law, const Eigen::VectorXd& beta_star,
                        const Eigen::VectorXd& k_star, bool intercept, std::size_t n,
                        std::uint64_t seed, Eigen::MatrixXd& x, Eigen::VectorXd& y);

/// Noise variance with ellipsoid slack exactly 1: K*ᵀΣ⁻¹K* + 1 (Gaussian block).
double unit_slack_noise_variance(const Eigen::VectorXd& k_star, const Eigen::MatrixXd& sigma,
                                 bool intercept);

/// Full multi-environment sample; bitwise deterministic given cfg.
SimulatedData simulate_multienv(const SimulationConfig& cfg);

/// Same, with caller-supplied environment laws and data seed.
SimulatedData simulate_multienv(const SimulationConfig& cfg,
                                const std::vector<EnvironmentLaw>& laws, std::uint64_t data_seed);

/// Univariate additive-shift world. Training covariate X = ε_X + V with
/// ε_X ~ N(0,1), V ~ N(1,1); the noise variance σ²_Y = K*²/2 + 1 is invariant.
/// Test covariate X₀ = ε_X + V₀ with Var V₀ ~ U(0, s) and (E V₀)² = s − Var V₀.
struct UnivariateShift {
  Dataset train;
  Eigen::MatrixXd x_test;
  Eigen::VectorXd y_test;
  double v_mean = 0.0;
  double v_var = 0.0;
};

/// Training sample only (cfg.p must be 1, cfg.z_envs 1, no intercept).
Dataset sample_univariate_train(const SimulationConfig& cfg, std::uint64_t seed);

/// Test sample of size cfg.env_size(0) at intervention strength s = E V₀².
void sample_univariate_test(const SimulationConfig& cfg, double s, std::uint64_t seed,
                            Eigen::MatrixXd& x_test, Eigen::VectorXd& y_test, double& v_mean,
                            double& v_var);

UnivariateShift simulate_univariate_shift(const SimulationConfig& cfg, double s,
                                          std::uint64_t seed);

/// Per-method scores over a strength grid.
struct SweepResult {
  std::string metric;  ///< "energy" or "mse"
  std::vector<double> grid;
  std::vector<double> gi;
  std::vector<double> ols;
  std::vector<double> causal;
};

/// Univariate energy benchmark: one training sample, then `replicates` test
/// samples per grid point; each generator's (x, ŷ) sample is scored by energy
/// distance to the true (x, y) and scores are averaged per grid point.
SweepResult energy_benchmark(const SimulationConfig& cfg, const std::vector<double>& s_grid,
                             std::size_t replicates, std::uint64_t seed);

/// Multi-environment shift sweep: train once from cfg; for each strength S draw
/// `replicates` test environments with s1 ~ U(0, S), s2 = S − s1 and score the
/// conditional-mean predictions of each method by test MSE.
SweepResult mse_sweep(const SimulationConfig& cfg, const std::vector<double>& strengths,
                      std::size_t replicates, std::uint64_t seed);

struct CoverageResult {
  double level = 0.95;
  std::size_t replicates = 0;
  std::vector<double> coverage;       ///< per coordinate
  std::vector<double> mean_width;     ///< average CI width per coordinate
  Eigen::MatrixXd mean_plugin_acov;   ///< average plug-in covariance of β̂
  Eigen::MatrixXd monte_carlo_cov;    ///< empirical covariance of β̂ across replicates
  double relative_frobenius = 0.0;    ///< ‖mean_plugin_acov − MC‖_F / ‖MC‖_F
  std::size_t failed_fits = 0;
};

/// Environment laws are drawn once (redrawing μ until Σ n_z μ_z μ_zᵀ has
/// condition number < 1e6); each replicate redraws the data only.
CoverageResult coverage_study(const SimulationConfig& cfg, std::size_t replicates, double level,
                              std::uint64_t seed);

}  // namespace gi
