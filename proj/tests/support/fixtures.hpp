#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gi/dataset.hpp"
#include "gi/random.hpp"

namespace fixture {

// Random multi-environment sample: environment z has mean shift of scale
// `mean_scale` and iid Gaussian rows; rows of different environments are
// interleaved so that row order differs from environment order.
inline gi::Dataset random_dataset(std::uint64_t seed, std::size_t z, std::size_t p,
                                  const std::vector<std::size_t>& sizes, double mean_scale = 3.0,
                                  bool intercept = false) {
  gi::Rng rng(seed);
  std::size_t n = 0;
  for (std::size_t k = 0; k < z; ++k) n += sizes[k % sizes.size()];
  const std::size_t cols = p;
  Eigen::MatrixXd shifts = mean_scale * rng.normal_matrix(static_cast<Eigen::Index>(z),
                                                          static_cast<Eigen::Index>(cols));
  std::vector<std::size_t> env;
  for (std::size_t k = 0; k < z; ++k)
    for (std::size_t i = 0; i < sizes[k % sizes.size()]; ++i) env.push_back(k);
  // Deterministic interleave: cycle through environments.
  std::vector<std::size_t> order;
  {
    std::vector<std::size_t> left(z);
    for (std::size_t k = 0; k < z; ++k) left[k] = sizes[k % sizes.size()];
    while (order.size() < n)
      for (std::size_t k = 0; k < z; ++k)
        if (left[k] > 0) {
          order.push_back(k);
          --left[k];
        }
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols));
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  const Eigen::VectorXd beta = rng.normal_vector(static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    x.row(r) = shifts.row(static_cast<Eigen::Index>(order[i])) +
               rng.normal_vector(static_cast<Eigen::Index>(cols)).transpose();
    if (intercept) x(r, 0) = 1.0;
    y(r) = x.row(r).dot(beta) + 0.5 * x(r, cols - 1) * rng.normal() + rng.normal();
  }
  // Labels assigned by first appearance, which is the cycling order.
  std::vector<std::string> labels;
  for (std::size_t k = 0; k < z; ++k) labels.push_back("e" + std::to_string(k + 1));
  return gi::Dataset(x, y, order, labels, intercept);
}

}  // namespace fixture
