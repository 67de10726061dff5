#include "gi/kernels.hpp"

#include <cmath>

#include <omp.h>

namespace gi::kernels {

namespace {

double row_distance_sum(const Eigen::MatrixXd& a, Eigen::Index i, const Eigen::MatrixXd& b) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    double sq = 0.0;
    for (Eigen::Index k = 0; k < a.cols(); ++k) {
      const double diff = a(i, k) - b(j, k);
      sq += diff * diff;
    }
    acc += std::sqrt(sq);
  }
  return acc;
}

void group_moment(const Eigen::MatrixXd& x, const std::vector<std::size_t>& rows,
                  Eigen::VectorXd& mean, Eigen::MatrixXd& cov) {
  const Eigen::Index p = x.cols();
  mean = Eigen::VectorXd::Zero(p);
  cov = Eigen::MatrixXd::Zero(p, p);
  if (rows.empty()) return;
  for (std::size_t r : rows) mean += x.row(static_cast<Eigen::Index>(r)).transpose();
  mean /= static_cast<double>(rows.size());
  for (std::size_t r : rows) {
    const Eigen::VectorXd c = x.row(static_cast<Eigen::Index>(r)).transpose() - mean;
    for (Eigen::Index j = 0; j < p; ++j)
      for (Eigen::Index i = j; i < p; ++i) cov(i, j) += c(i) * c(j);
  }
  cov /= static_cast<double>(rows.size());
  cov.triangularView<Eigen::StrictlyUpper>() = cov.transpose().triangularView<Eigen::StrictlyUpper>();
}

GroupMoments empty_moments(std::size_t num_groups) {
  GroupMoments out;
  out.counts.resize(num_groups);
  out.means.resize(num_groups);
  out.covariances.resize(num_groups);
  return out;
}

}  // namespace

std::vector<std::vector<std::size_t>> group_rows(const std::vector<std::size_t>& group,
                                                 std::size_t num_groups) {
  std::vector<std::vector<std::size_t>> rows(num_groups);
  for (std::size_t i = 0; i < group.size(); ++i) rows[group[i]].push_back(i);
  return rows;
}

namespace serial {

double pairwise_distance_sum(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  std::vector<double> partial(static_cast<std::size_t>(a.rows()));
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    partial[static_cast<std::size_t>(i)] = row_distance_sum(a, i, b);
  double total = 0.0;
  for (double v : partial) total += v;
  return total;
}

GroupMoments group_moments(const Eigen::MatrixXd& x, const std::vector<std::size_t>& group,
                           std::size_t num_groups) {
  const auto rows = group_rows(group, num_groups);
  GroupMoments out = empty_moments(num_groups);
  for (std::size_t z = 0; z < num_groups; ++z) {
    out.counts[z] = rows[z].size();
    group_moment(x, rows[z], out.means[z], out.covariances[z]);
  }
  return out;
}

}  // namespace serial

namespace parallel {

double pairwise_distance_sum(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::Index n = a.rows();
  std::vector<double> partial(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i)
    partial[static_cast<std::size_t>(i)] = row_distance_sum(a, i, b);
  double total = 0.0;
  for (double v : partial) total += v;
  return total;
}

GroupMoments group_moments(const Eigen::MatrixXd& x, const std::vector<std::size_t>& group,
                           std::size_t num_groups) {
  const auto rows = group_rows(group, num_groups);
  GroupMoments out = empty_moments(num_groups);
  const auto groups = static_cast<std::ptrdiff_t>(num_groups);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t z = 0; z < groups; ++z) {
    const auto g = static_cast<std::size_t>(z);
    out.counts[g] = rows[g].size();
    group_moment(x, rows[g], out.means[g], out.covariances[g]);
  }
  return out;
}

}  // namespace parallel

void set_max_threads(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

}  // namespace gi::kernels
