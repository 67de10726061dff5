#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gi/dataset.hpp"
#include "gi/estimator.hpp"

namespace gi {

/// Plug-in asymptotic covariance of β̂ and the normal confidence intervals it implies.
struct AsymptoticReport {
  Eigen::MatrixXd phi;                  ///< Φ̂ = (1/N) Σ n_z μ̂_z μ̂_zᵀ
  std::vector<Eigen::MatrixXd> omegas;  ///< Ω̂_z, one per environment
  Eigen::MatrixXd acov;                 ///< Φ̂⁻¹ [Σ (w_z²/n_z) Ω̂_z] Φ̂⁻¹, w_z = n_z/N
  Eigen::VectorXd beta_hat;
  Eigen::VectorXd std_errors;
  double level = 0.95;
  Eigen::VectorXd ci_lower;
  Eigen::VectorXd ci_upper;
};

Eigen::MatrixXd plug_in_phi(const std::vector<EnvironmentSummary>& summaries);

/// Ω_z = (μᵀβ)²Σ − μᵀβ(Kμᵀ + μKᵀ) + μμᵀσ².
Eigen::MatrixXd plug_in_omega(const EnvironmentSummary& summary, const Eigen::VectorXd& beta,
                              const Eigen::VectorXd& k, double sigma_sq);

/// Throws IdentifiabilityError when Φ̂ fails the rank gate.
AsymptoticReport asymptotic_covariance(const GIFit& fit, double level = 0.95,
                                       double rank_tol = kDefaultRankTol);

/// Inverse standard normal CDF. Rational initial guess refined by one Halley
/// step; absolute error below 1e-12 on (1e-300, 1 − 1e-16).
double normal_quantile(double prob);

/// Q(r) = Σ_z n_z/N² (μ̂_zᵀβ̄ sqrt(rᵀΣ̂_z r) − μ̂_zᵀr σ̂)², N = Σ n_z.
double efficiency_key(const std::vector<EnvironmentSummary>& summaries,
                      const Eigen::VectorXd& beta_bar, double sigma_hat, const Eigen::VectorXd& r);

struct ScoredCombo {
  std::vector<std::size_t> envs;  ///< ascending environment indices
  double det_score = 0.0;         ///< |det| of the stacked mean columns
};

/// Scores every subset of `subset_size` environments by |det[μ̂_{z1} … μ̂_{zp}]| and
/// keeps the top_b best (descending; ties in lexicographic order of indices).
/// subset_size must equal the covariate dimension. Throws NotEnoughSourcesError
/// when fewer environments than subset_size are available.
std::vector<ScoredCombo> det_prefilter(const std::vector<EnvironmentSummary>& summaries,
                                       std::size_t subset_size, std::size_t top_b);

/// Orthonormal vectors r_2..r_p completing `direction` to a basis of ℝᵖ, as
/// the columns of a p×(p−1) matrix. The standard basis vector most aligned
/// with the direction is dropped and the rest are orthonormalised in index
/// order (modified Gram–Schmidt, two passes). A zero direction is replaced by e₁.
Eigen::MatrixXd complete_orthonormal_basis(const Eigen::VectorXd& direction);

struct SourceSplit {
  std::vector<std::size_t> s1;
  std::vector<std::size_t> s2;
};

/// Uniform random halves (⌈Z/2⌉, ⌊Z/2⌋). Labels are sorted before shuffling,
/// so the split depends on the label strings and not on their row order.
SourceSplit split_sources(const std::vector<std::string>& labels, std::uint64_t split_seed);

struct RankedCombo {
  std::vector<std::size_t> envs;
  double det_score = 0.0;
  double key = 0.0;  ///< Q̃_b
  bool identifiable = true;
  Eigen::VectorXd beta_hat;  ///< empty when the combo could not be fitted
};

struct EfficiencyRanking {
  std::vector<RankedCombo> combos;  ///< best first
  SourceSplit split;
  Eigen::VectorXd beta_bar;
  double sigma_hat = 0.0;
  std::size_t s1_combos_used = 0;
  std::vector<std::string> notes;
};

struct SelectionOptions {
  std::uint64_t split_seed = 42;
  std::size_t top_b = 100;
  double rank_tol = kDefaultRankTol;
};

/// Source selection for asymptotic efficiency.
///
/// β̄ averages per-combo fits over the top_b det-ranked p-subsets of S1; every
/// p-subset b of S2 is fitted, β̂_b − β̄ is completed to an orthonormal basis
/// and Q̃_b = min_{j≥2} Q(r_j) is evaluated with the summaries of b's
/// environments and σ̂ from the pooled S1 fit. Combos of S2 that cannot be
/// fitted are kept with Q̃_b = 0 and ranked after every fitted combo.
/// Throws SelectionInfeasibleError when Z < 2p or either half has no fittable combo.
EfficiencyRanking select_sources(const Dataset& d, const SelectionOptions& options = {});

/// Per-row mean of the generated responses of each combo's fit. Combo k draws
/// its noise from derive_seed(seed, k), or from `seed` itself when shared_noise.
Eigen::VectorXd aggregate_predictions(const Dataset& d,
                                      const std::vector<std::vector<std::size_t>>& combos,
                                      const Eigen::MatrixXd& x_test, std::uint64_t seed,
                                      bool shared_noise = false,
                                      double rank_tol = kDefaultRankTol);

}  // namespace gi
