#include "gi/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "gi/errors.hpp"
#include "gi/kernels.hpp"

namespace gi {

namespace {

using Row = std::vector<std::string>;

// RFC-4180: quoted fields may contain separators, doubled quotes and newlines.
std::vector<Row> split_csv(const std::string& text) {
  std::vector<Row> rows;
  Row row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
    row.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field_started) quoted = true;
        else field.push_back(c);
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (quoted) throw SchemaError("unterminated quoted field");
  if (field_started || !row.empty()) end_row();
  return rows;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

double parse_number(const std::string& raw, std::size_t row, const std::string& column) {
  const std::string cell = trim(raw);
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (!cell.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (cell.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
    std::ostringstream msg;
    msg << "cannot parse '" << cell << "' as a number at row " << row << ", column '" << column
        << "'";
    throw ParseError(msg.str(), row, column);
  }
  return value;
}

std::size_t column_index(const Row& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw SchemaError("missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

std::vector<Row> read_table(const std::string& text) {
  auto rows = split_csv(text);
  if (rows.empty()) throw EmptyInputError("CSV input is empty");
  for (auto& cell : rows.front()) cell = trim(cell);
  if (rows.size() < 2) throw EmptyInputError("CSV input has a header but no data rows");
  const std::size_t width = rows.front().size();
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != width) {
      std::ostringstream msg;
      msg << "row " << r << " has " << rows[r].size() << " fields, header has " << width;
      throw SchemaError(msg.str());
    }
  }
  return rows;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) text.erase(0, 3);
  return text;
}

Eigen::MatrixXd covariate_block(const std::vector<Row>& rows,
                                const std::vector<std::string>& covariate_cols,
                                bool add_intercept) {
  const Row& header = rows.front();
  std::vector<std::size_t> idx;
  for (const auto& name : covariate_cols) idx.push_back(column_index(header, name));
  const auto n = static_cast<Eigen::Index>(rows.size() - 1);
  const auto offset = add_intercept ? 1 : 0;
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(idx.size()) + offset);
  if (add_intercept) x.col(0).setOnes();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Row& row = rows[static_cast<std::size_t>(i) + 1];
    for (std::size_t j = 0; j < idx.size(); ++j)
      x(i, static_cast<Eigen::Index>(j) + offset) =
          parse_number(row[idx[j]], static_cast<std::size_t>(i) + 1, covariate_cols[j]);
  }
  return x;
}

}  // namespace

Dataset::Dataset(Eigen::MatrixXd x, Eigen::VectorXd y, std::vector<std::size_t> env,
                 std::vector<std::string> env_labels, bool intercept,
                 std::vector<std::string> covariate_names)
    : x_(std::move(x)),
      y_(std::move(y)),
      env_(std::move(env)),
      env_labels_(std::move(env_labels)),
      covariate_names_(std::move(covariate_names)),
      intercept_(intercept) {
  if (x_.cols() < 1) throw InvalidDataError("dataset needs at least one covariate column");
  if (x_.rows() < 1) throw InvalidDataError("dataset has no rows");
  if (y_.size() != x_.rows() || env_.size() != rows())
    throw InvalidDataError("x, y and env must have the same number of rows");
  if (env_labels_.empty()) throw InvalidDataError("dataset needs at least one environment");
  if (!x_.allFinite() || !y_.allFinite()) throw InvalidDataError("non-finite entry in dataset");
  std::vector<bool> seen(env_labels_.size(), false);
  for (std::size_t e : env_) {
    if (e >= env_labels_.size()) throw InvalidDataError("environment index out of range");
    seen[e] = true;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end())
    throw InvalidDataError("every environment must contain at least one row");
  if (intercept_ && !(x_.col(0).array() == 1.0).all())
    throw InvalidDataError("intercept flag set but column 0 is not identically 1");
  if (covariate_names_.empty()) {
    for (std::size_t j = 0; j < cols(); ++j)
      covariate_names_.push_back(intercept_ && j == 0 ? "(intercept)" : "x" + std::to_string(j));
  }
  if (covariate_names_.size() != cols())
    throw InvalidDataError("covariate name count does not match column count");
}

std::vector<std::size_t> Dataset::env_sizes() const {
  std::vector<std::size_t> sizes(num_envs(), 0);
  for (std::size_t e : env_) ++sizes[e];
  return sizes;
}

Dataset Dataset::subset(const std::vector<std::size_t>& envs) const {
  std::vector<std::ptrdiff_t> remap(num_envs(), -1);
  std::vector<std::string> labels;
  for (std::size_t k = 0; k < envs.size(); ++k) {
    if (envs[k] >= num_envs()) throw InvalidDataError("subset: environment index out of range");
    if (remap[envs[k]] >= 0) throw InvalidDataError("subset: duplicate environment index");
    remap[envs[k]] = static_cast<std::ptrdiff_t>(k);
    labels.push_back(env_labels_[envs[k]]);
  }
  std::vector<Eigen::Index> keep;
  std::vector<std::size_t> new_env;
  for (std::size_t i = 0; i < rows(); ++i) {
    if (remap[env_[i]] >= 0) {
      keep.push_back(static_cast<Eigen::Index>(i));
      new_env.push_back(static_cast<std::size_t>(remap[env_[i]]));
    }
  }
  Eigen::MatrixXd xs = x_(keep, Eigen::all);
  Eigen::VectorXd ys = y_(keep);
  return Dataset(std::move(xs), std::move(ys), std::move(new_env), std::move(labels), intercept_,
                 covariate_names_);
}

Dataset parse_csv(const std::string& text, const CsvSpec& spec) {
  const auto rows = read_table(text);
  const Row& header = rows.front();
  const std::size_t y_idx = column_index(header, spec.response_col);
  const std::size_t env_idx = column_index(header, spec.env_col);
  Eigen::MatrixXd x = covariate_block(rows, spec.covariate_cols, spec.add_intercept);

  const std::size_t n = rows.size() - 1;
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  std::vector<std::size_t> env(n);
  std::vector<std::string> labels;
  std::unordered_map<std::string, std::size_t> ids;
  for (std::size_t i = 0; i < n; ++i) {
    const Row& row = rows[i + 1];
    y(static_cast<Eigen::Index>(i)) = parse_number(row[y_idx], i + 1, spec.response_col);
    const std::string label = trim(row[env_idx]);
    const auto [it, inserted] = ids.emplace(label, labels.size());
    if (inserted) labels.push_back(label);
    env[i] = it->second;
  }
  std::vector<std::string> names;
  if (spec.add_intercept) names.emplace_back("(intercept)");
  names.insert(names.end(), spec.covariate_cols.begin(), spec.covariate_cols.end());
  return Dataset(std::move(x), std::move(y), std::move(env), std::move(labels),
                 spec.add_intercept, std::move(names));
}

Dataset load_csv(const std::filesystem::path& path, const CsvSpec& spec) {
  return parse_csv(read_file(path), spec);
}

Eigen::MatrixXd load_covariates_csv(const std::filesystem::path& path,
                                    const std::vector<std::string>& covariate_cols,
                                    bool add_intercept) {
  return covariate_block(read_table(read_file(path)), covariate_cols, add_intercept);
}

std::vector<EnvironmentSummary> summarize(const Dataset& d) {
  const auto moments = kernels::parallel::group_moments(d.x(), d.env(), d.num_envs());
  std::vector<EnvironmentSummary> out(d.num_envs());
  for (std::size_t z = 0; z < d.num_envs(); ++z) {
    out[z].env_id = z;
    out[z].n = moments.counts[z];
    out[z].mu_hat = moments.means[z];
    out[z].sigma_hat = moments.covariances[z];
  }
  return out;
}

Eigen::MatrixXd average_within_envs(const Eigen::MatrixXd& values,
                                    const std::vector<std::size_t>& env, std::size_t num_envs) {
  const auto moments = kernels::serial::group_moments(values, env, num_envs);
  Eigen::MatrixXd out(values.rows(), values.cols());
  for (std::size_t i = 0; i < env.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = moments.means[env[i]].transpose();
  return out;
}

CenteringMatrix centering_matrix(const Dataset& d) {
  const auto summaries = summarize(d);
  CenteringMatrix out{Eigen::MatrixXd(d.x().rows(), d.x().cols())};
  for (std::size_t i = 0; i < d.rows(); ++i)
    out.m.row(static_cast<Eigen::Index>(i)) = summaries[d.env()[i]].mu_hat.transpose();
  return out;
}

IdentityReport verify_identities(const Dataset& d, const CenteringMatrix& cm) {
  const auto& x = d.x();
  const auto& m = cm.m;
  const auto summaries = summarize(d);
  const Eigen::MatrixXd xtx = x.transpose() * x;
  const Eigen::MatrixXd mtm = m.transpose() * m;
  Eigen::MatrixXd weighted_cov = Eigen::MatrixXd::Zero(x.cols(), x.cols());
  Eigen::MatrixXd weighted_outer = Eigen::MatrixXd::Zero(x.cols(), x.cols());
  for (const auto& s : summaries) {
    const double n = static_cast<double>(s.n);
    weighted_cov += n * s.sigma_hat;
    weighted_outer += n * s.mu_hat * s.mu_hat.transpose();
  }
  IdentityReport r;
  r.cross_residual = (x.transpose() * m - mtm).cwiseAbs().maxCoeff();
  r.scatter_residual = (xtx - mtm - weighted_cov).cwiseAbs().maxCoeff();
  r.gram_residual = (mtm - weighted_outer).cwiseAbs().maxCoeff();
  r.scale = std::max(1.0, xtx.cwiseAbs().maxCoeff());
  const double limit = r.tolerance * r.scale;
  r.pass = r.cross_residual <= limit && r.scatter_residual <= limit && r.gram_residual <= limit;
  return r;
}

IdentityReport verify_identities(const Dataset& d) {
  return verify_identities(d, centering_matrix(d));
}

}  // namespace gi
