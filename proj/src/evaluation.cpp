#include "gi/evaluation.hpp"

#include <algorithm>
#include <numeric>

#include "gi/errors.hpp"
#include "gi/kernels.hpp"

namespace gi {

namespace {

// Strict weak order on samples, used to fix argument order so that
// energy_distance(a, b) and energy_distance(b, a) run identical arithmetic.
bool sample_less(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows()) return a.rows() < b.rows();
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (a(i, j) != b(i, j)) return a(i, j) < b(i, j);
  return false;
}

}  // namespace

EnergyResult energy_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                             double max_pairs) {
  if (a.cols() != b.cols())
    throw DimensionMismatchError("energy_distance: samples differ in dimension");
  if (a.cols() < 1 || a.rows() < 1 || b.rows() < 1)
    throw InvalidDataError("energy_distance: samples must be non-empty");
  if (!a.allFinite() || !b.allFinite())
    throw InvalidDataError("energy_distance: non-finite entry");
  const double n1 = static_cast<double>(a.rows());
  const double n2 = static_cast<double>(b.rows());
  if (n1 * n2 + n1 * n1 + n2 * n2 > max_pairs)
    throw InvalidDataError("energy_distance: sample sizes exceed the pair budget");

  const bool swap = sample_less(b, a);
  const Eigen::MatrixXd& first = swap ? b : a;
  const Eigen::MatrixXd& second = swap ? a : b;
  const double nf = static_cast<double>(first.rows());
  const double ns = static_cast<double>(second.rows());

  const double cross = kernels::parallel::pairwise_distance_sum(first, second);
  const double within_first = kernels::parallel::pairwise_distance_sum(first, first);
  const double within_second = kernels::parallel::pairwise_distance_sum(second, second);
  const double value =
      2.0 * cross / (nf * ns) - within_first / (nf * nf) - within_second / (ns * ns);

  EnergyResult out;
  out.value = std::max(0.0, value);
  out.n1 = static_cast<std::size_t>(a.rows());
  out.n2 = static_cast<std::size_t>(b.rows());
  return out;
}

Eigen::MatrixXd energy_matrix(const Dataset& d, bool covariates_only) {
  const std::size_t z = d.num_envs();
  const auto rows = kernels::group_rows(d.env(), z);
  std::vector<Eigen::MatrixXd> samples(z);
  for (std::size_t e = 0; e < z; ++e) {
    std::vector<Eigen::Index> idx(rows[e].begin(), rows[e].end());
    if (covariates_only) {
      samples[e] = d.x()(idx, Eigen::all);
    } else {
      samples[e].resize(static_cast<Eigen::Index>(idx.size()), d.x().cols() + 1);
      samples[e] << d.x()(idx, Eigen::all), d.y()(idx);
    }
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(z),
                                            static_cast<Eigen::Index>(z));
  for (std::size_t i = 0; i < z; ++i) {
    for (std::size_t j = i + 1; j < z; ++j) {
      const double v = energy_distance(samples[i], samples[j]).value;
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  }
  return m;
}

std::vector<std::size_t> peculiarity_ranking(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw DimensionMismatchError("peculiarity_ranking: matrix not square");
  const Eigen::VectorXd means = m.rowwise().mean();
  std::vector<std::size_t> order(static_cast<std::size_t>(m.rows()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return means(static_cast<Eigen::Index>(a)) > means(static_cast<Eigen::Index>(b));
  });
  return order;
}

double mse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
  if (pred.size() != truth.size()) throw DimensionMismatchError("mse: length mismatch");
  if (pred.size() == 0) return 0.0;
  return (pred - truth).squaredNorm() / static_cast<double>(pred.size());
}

}  // namespace gi
