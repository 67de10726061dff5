#include "gi/serialization.hpp"

#include <cmath>
#include <limits>

#include "gi/errors.hpp"

namespace gi {

namespace {

// JSON has no infinity; an unbounded condition number is written as null.
Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

template <typename T>
T field(const Json& j, const char* name) {
  if (!j.contains(name)) throw InvalidDataError(std::string("fit JSON: missing field '") + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidDataError(std::string("fit JSON: bad field '") + name + "': " + e.what());
  }
}

Json labels_of(const std::vector<std::size_t>& envs, const std::vector<std::string>& labels) {
  Json out = Json::array();
  for (std::size_t e : envs) out.push_back(labels[e]);
  return out;
}

}  // namespace

Json vector_to_json(const Eigen::VectorXd& v) {
  return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from_json(const Json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_to_json(m.row(i).transpose()));
  return rows;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw InvalidDataError("ragged matrix in JSON");
    for (std::size_t k = 0; k < rows[i].size(); ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  }
  return m;
}

Json to_json(const RankReport& r) {
  return {{"eigenvalues", r.eigenvalues},
          {"numerical_rank", r.numerical_rank},
          {"condition_number", finite_or_null(r.condition_number)},
          {"rank_tol", r.rank_tol},
          {"identifiable", r.identifiable}};
}

RankReport rank_report_from_json(const Json& j) {
  RankReport r;
  r.eigenvalues = field<std::vector<double>>(j, "eigenvalues");
  r.numerical_rank = field<std::size_t>(j, "numerical_rank");
  r.condition_number = j.at("condition_number").is_null()
                           ? std::numeric_limits<double>::infinity()
                           : field<double>(j, "condition_number");
  r.rank_tol = field<double>(j, "rank_tol");
  r.identifiable = field<bool>(j, "identifiable");
  return r;
}

Json to_json(const EnvironmentSummary& s, const std::string& label) {
  return {{"env", label},
          {"n", s.n},
          {"mu_hat", vector_to_json(s.mu_hat)},
          {"sigma_hat", matrix_to_json(s.sigma_hat)}};
}

Json to_json(const GIFit& fit) {
  Json summaries = Json::array();
  for (const auto& s : fit.summaries) summaries.push_back(to_json(s, fit.env_labels.at(s.env_id)));
  return {{"beta_hat", vector_to_json(fit.beta_hat)},
          {"k_opt_hat", vector_to_json(fit.k_opt_hat)},
          {"k_hat", vector_to_json(fit.k_hat)},
          {"sigma_y_sq_hat", fit.sigma_y_sq_hat},
          {"causal_resid_var", fit.causal_resid_var},
          {"gram", matrix_to_json(fit.gram)},
          {"scatter", matrix_to_json(fit.scatter)},
          {"n_total", fit.n_total},
          {"intercept", fit.intercept},
          {"covariates", fit.covariate_names},
          {"summaries", summaries},
          {"rank_report", to_json(fit.rank)}};
}

GIFit fit_from_json(const Json& j) {
  if (!j.is_object()) throw InvalidDataError("fit JSON: expected an object");
  GIFit fit;
  try {
    fit.beta_hat = vector_from_json(j.at("beta_hat"));
    fit.k_opt_hat = vector_from_json(j.at("k_opt_hat"));
    fit.k_hat = vector_from_json(j.at("k_hat"));
    fit.gram = matrix_from_json(j.at("gram"));
    fit.scatter = matrix_from_json(j.at("scatter"));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidDataError(std::string("fit JSON: ") + e.what());
  }
  fit.sigma_y_sq_hat = field<double>(j, "sigma_y_sq_hat");
  fit.causal_resid_var = field<double>(j, "causal_resid_var");
  fit.n_total = field<std::size_t>(j, "n_total");
  fit.intercept = field<bool>(j, "intercept");
  fit.covariate_names = field<std::vector<std::string>>(j, "covariates");
  fit.rank = rank_report_from_json(j.at("rank_report"));
  const auto p = fit.beta_hat.size();
  if (fit.k_opt_hat.size() != p || fit.k_hat.size() != p ||
      static_cast<Eigen::Index>(fit.covariate_names.size()) != p)
    throw InvalidDataError("fit JSON: inconsistent parameter dimensions");
  for (const auto& s : field<Json>(j, "summaries")) {
    EnvironmentSummary es;
    es.env_id = fit.env_labels.size();
    es.n = field<std::size_t>(s, "n");
    es.mu_hat = vector_from_json(s.at("mu_hat"));
    es.sigma_hat = matrix_from_json(s.at("sigma_hat"));
    fit.env_labels.push_back(field<std::string>(s, "env"));
    fit.summaries.push_back(std::move(es));
  }
  return fit;
}

Json to_json(const GeneratorSpec& spec) {
  return {{"beta", vector_to_json(spec.beta)},
          {"k", vector_to_json(spec.k)},
          {"sigma_y_sq", spec.sigma_y_sq},
          {"mu0", vector_to_json(spec.mu0)},
          {"sigma0", matrix_to_json(spec.sigma0)},
          {"intercept", spec.intercept},
          {"raw_radicand", spec.raw_radicand},
          {"radicand", spec.radicand},
          {"truncated", spec.truncated}};
}

Json to_json(const AsymptoticReport& r) {
  Json omegas = Json::array();
  for (const auto& o : r.omegas) omegas.push_back(matrix_to_json(o));
  return {{"phi", matrix_to_json(r.phi)},
          {"omegas", omegas},
          {"acov", matrix_to_json(r.acov)},
          {"beta_hat", vector_to_json(r.beta_hat)},
          {"std_errors", vector_to_json(r.std_errors)},
          {"level", r.level},
          {"ci_lower", vector_to_json(r.ci_lower)},
          {"ci_upper", vector_to_json(r.ci_upper)}};
}

Json to_json(const EfficiencyRanking& r, const std::vector<std::string>& labels) {
  Json combos = Json::array();
  for (std::size_t i = 0; i < r.combos.size(); ++i) {
    const auto& c = r.combos[i];
    combos.push_back({{"rank", i + 1},
                      {"envs", labels_of(c.envs, labels)},
                      {"det_score", c.det_score},
                      {"key", c.key},
                      {"identifiable", c.identifiable},
                      {"beta_hat", vector_to_json(c.beta_hat)}});
  }
  return {{"combos", combos},
          {"split", {{"s1", labels_of(r.split.s1, labels)}, {"s2", labels_of(r.split.s2, labels)}}},
          {"beta_bar", vector_to_json(r.beta_bar)},
          {"sigma_hat", r.sigma_hat},
          {"s1_combos_used", r.s1_combos_used},
          {"notes", r.notes}};
}

Json to_json(const SweepResult& r) {
  return {{"metric", r.metric}, {"grid", r.grid}, {"gi", r.gi}, {"ols", r.ols}, {"causal", r.causal}};
}

Json to_json(const CoverageResult& r) {
  return {{"level", r.level},
          {"replicates", r.replicates},
          {"failed_fits", r.failed_fits},
          {"coverage", r.coverage},
          {"mean_width", r.mean_width},
          {"mean_plugin_acov", matrix_to_json(r.mean_plugin_acov)},
          {"monte_carlo_cov", matrix_to_json(r.monte_carlo_cov)},
          {"relative_frobenius", r.relative_frobenius}};
}

Json to_json(const SimulationConfig& cfg) {
  return {{"p", cfg.p},
          {"z_envs", cfg.z_envs},
          {"n_per_env", cfg.n_per_env},
          {"beta_star", vector_to_json(cfg.beta_star)},
          {"k_star", vector_to_json(cfg.k_star)},
          {"s1", cfg.s1},
          {"s2", cfg.s2},
          {"intercept", cfg.intercept},
          {"seed", cfg.seed}};
}

}  // namespace gi
