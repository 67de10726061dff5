#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "gi/dataset.hpp"

namespace gi {

/// Two-sample energy V-statistic between the rows of two samples.
struct EnergyResult {
  double value = 0.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
};

inline constexpr double kDefaultMaxPairs = 1e8;

/// (2/n₁n₂)ΣΣ‖a_i − b_m‖ − (1/n₁²)ΣΣ‖a_i − a_j‖ − (1/n₂²)ΣΣ‖b_l − b_m‖.
///
/// Exactly symmetric in its arguments. Throws DimensionMismatchError when the
/// column counts differ and InvalidDataError when n₁n₂ + n₁² + n₂² exceeds
/// max_pairs.
EnergyResult energy_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                             double max_pairs = kDefaultMaxPairs);

/// Z×Z matrix of energy distances between environment samples, either of the
/// covariates alone or of the joint (x, y) rows.
Eigen::MatrixXd energy_matrix(const Dataset& d, bool covariates_only);

/// Environment indices by descending row mean; ties by ascending index.
std::vector<std::size_t> peculiarity_ranking(const Eigen::MatrixXd& m);

double mse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth);

}  // namespace gi
