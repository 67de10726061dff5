#include "gi/linalg.hpp"

#include <algorithm>
#include <functional>

namespace gi::linalg {

std::vector<double> sorted_eigenvalues(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = es.eigenvalues();
  std::vector<double> out(ev.data(), ev.data() + ev.size());
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

bool well_conditioned(const std::vector<double>& eig_desc, double rel_tol) {
  if (eig_desc.empty()) return false;
  const double largest = eig_desc.front();
  return largest > 0.0 && eig_desc.back() > rel_tol * largest;
}

bool solve_spd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double rel_tol,
               Eigen::MatrixXd& x) {
  if (!well_conditioned(sorted_eigenvalues(a), rel_tol)) return false;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) return false;
  x = llt.solve(b);
  return true;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

double tolerance_scale(const Eigen::MatrixXd& a) {
  return a.size() == 0 ? 1.0 : std::max(1.0, a.cwiseAbs().maxCoeff());
}

}  // namespace gi::linalg
