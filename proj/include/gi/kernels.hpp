#pragma once

// Data-parallel inner loops. Each kernel has a serial reference and an OpenMP
// variant with the same reduction order, so both return bitwise-identical
// results for any thread count.

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace gi::kernels {

struct GroupMoments {
  std::vector<std::size_t> counts;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covariances;  ///< denominator n_z
};

/// Row indices of each group, in ascending row order.
std::vector<std::vector<std::size_t>> group_rows(const std::vector<std::size_t>& group,
                                                 std::size_t num_groups);

namespace serial {

/// Σ_i Σ_j ‖a_i − b_j‖₂ over rows of a and b. Summed row by row.
double pairwise_distance_sum(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Two-pass per-group mean and covariance.
GroupMoments group_moments(const Eigen::MatrixXd& x, const std::vector<std::size_t>& group,
                           std::size_t num_groups);

}  // namespace serial

namespace parallel {

double pairwise_distance_sum(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

GroupMoments group_moments(const Eigen::MatrixXd& x, const std::vector<std::size_t>& group,
                           std::size_t num_groups);

}  // namespace parallel

/// Caps the OpenMP worker count (0 leaves the runtime default).
void set_max_threads(int threads);

}  // namespace gi::kernels
