#pragma once

#include <vector>

#include <Eigen/Dense>

namespace gi::linalg {

/// Eigenvalues of a symmetric matrix, sorted descending.
std::vector<double> sorted_eigenvalues(const Eigen::MatrixXd& sym);

/// True iff the smallest eigenvalue exceeds rel_tol times the largest (and the
/// largest is positive).
bool well_conditioned(const std::vector<double>& eig_desc, double rel_tol);

/// Solves A x = b for symmetric positive definite A after eigenvalue gating.
/// Returns false (leaving x untouched) when A fails the gate.
bool solve_spd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double rel_tol,
               Eigen::MatrixXd& x);

/// Symmetric square root of a PSD matrix (negative eigenvalues clipped to 0).
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& sym);

/// max(1, max|A_ij|); the scale every relative tolerance is measured against.
double tolerance_scale(const Eigen::MatrixXd& a);

}  // namespace gi::linalg
