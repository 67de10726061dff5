#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gi {

/// Multi-source sample: covariates, response and one environment label per row.
///
/// Environments are stored as dense indices 0..Z-1 assigned in order of first
/// appearance; the original string labels are kept for output. When
/// `intercept()` is set, column 0 of `x()` is identically one.
class Dataset {
 public:
  /// Validates every invariant; throws InvalidDataError on violation.
  Dataset(Eigen::MatrixXd x, Eigen::VectorXd y, std::vector<std::size_t> env,
          std::vector<std::string> env_labels, bool intercept,
          std::vector<std::string> covariate_names = {});

  const Eigen::MatrixXd& x() const { return x_; }
  const Eigen::VectorXd& y() const { return y_; }
  const std::vector<std::size_t>& env() const { return env_; }
  const std::vector<std::string>& env_labels() const { return env_labels_; }
  const std::vector<std::string>& covariate_names() const { return covariate_names_; }
  bool intercept() const { return intercept_; }

  std::size_t rows() const { return static_cast<std::size_t>(x_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(x_.cols()); }
  std::size_t num_envs() const { return env_labels_.size(); }

  /// Row counts per environment index.
  std::vector<std::size_t> env_sizes() const;

  /// Rows belonging to the given environment indices, relabelled densely in
  /// the order the indices are listed.
  Dataset subset(const std::vector<std::size_t>& envs) const;

 private:
  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;
  std::vector<std::size_t> env_;
  std::vector<std::string> env_labels_;
  std::vector<std::string> covariate_names_;
  bool intercept_;
};

struct CsvSpec {
  std::string response_col;
  std::string env_col;
  std::vector<std::string> covariate_cols;
  bool add_intercept = false;
};

/// Reads an RFC-4180 CSV with a header row.
///
/// Environment cells may hold any string; labels map to dense ids by first
/// appearance. With `add_intercept` a ones column is prepended.
Dataset load_csv(const std::filesystem::path& path, const CsvSpec& spec);

/// Parses CSV text directly (same contract as load_csv).
Dataset parse_csv(const std::string& text, const CsvSpec& spec);

/// Reads only covariate columns (test samples have no response or labels).
Eigen::MatrixXd load_covariates_csv(const std::filesystem::path& path,
                                    const std::vector<std::string>& covariate_cols,
                                    bool add_intercept);

struct EnvironmentSummary {
  std::size_t env_id = 0;
  std::size_t n = 0;
  Eigen::VectorXd mu_hat;
  /// Covariance with denominator n (not n-1).
  Eigen::MatrixXd sigma_hat;
};

std::vector<EnvironmentSummary> summarize(const Dataset& d);

/// Row i holds the covariate mean of the environment of row i (M = H X).
/// The block-averaging operator H itself is never materialised.
struct CenteringMatrix {
  Eigen::MatrixXd m;
};

CenteringMatrix centering_matrix(const Dataset& d);

/// Applies per-environment row averaging to an arbitrary N×k matrix.
Eigen::MatrixXd average_within_envs(const Eigen::MatrixXd& values,
                                    const std::vector<std::size_t>& env,
                                    std::size_t num_envs);

struct IdentityReport {
  double cross_residual = 0.0;    ///< max|XᵀM − MᵀM|
  double scatter_residual = 0.0;  ///< max|XᵀX − MᵀM − Σ n_z Σ̂_z|
  double gram_residual = 0.0;     ///< max|MᵀM − Σ n_z μ̂_z μ̂_zᵀ|
  double scale = 1.0;             ///< max(1, max|XᵀX|)
  double tolerance = 1e-9;
  bool pass = false;
};

IdentityReport verify_identities(const Dataset& d);

/// Same checks against a caller-supplied M (used to validate external M).
IdentityReport verify_identities(const Dataset& d, const CenteringMatrix& m);

}  // namespace gi
