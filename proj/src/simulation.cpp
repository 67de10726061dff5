#include "gi/simulation.hpp"

#include <cmath>
#include <optional>

#include "gi/asymptotics.hpp"
#include "gi/errors.hpp"
#include "gi/evaluation.hpp"
#include "gi/generator.hpp"
#include "gi/linalg.hpp"
#include "gi/random.hpp"

namespace gi {

namespace {

Eigen::Index gaussian_dim(std::size_t p, bool intercept) {
  return static_cast<Eigen::Index>(p) - (intercept ? 1 : 0);
}

Eigen::VectorXd active_block(const Eigen::VectorXd& v, bool intercept) {
  return intercept ? Eigen::VectorXd(v.tail(v.size() - 1)) : v;
}

EnvironmentLaw draw_law(Eigen::Index q, double s1, double s2, const Eigen::VectorXd& k_active,
                        Rng& rng) {
  EnvironmentLaw law;
  const Eigen::MatrixXd a = s1 * rng.normal_matrix(q, q);
  law.sigma = a.transpose() * a + Eigen::MatrixXd::Identity(q, q);
  law.mu = s2 * rng.normal_vector(q);
  law.noise_var = k_active.size() ? k_active.dot(law.sigma.ldlt().solve(k_active)) + 1.0 : 1.0;
  return law;
}

Eigen::MatrixXd joint(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  Eigen::MatrixXd out(x.rows(), x.cols() + 1);
  out << x, y;
  return out;
}

Eigen::MatrixXd prepend_ones(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out(x.rows(), x.cols() + 1);
  out << Eigen::VectorXd::Ones(x.rows()), x;
  return out;
}

Dataset with_intercept(const Dataset& d) {
  std::vector<std::string> names{"(intercept)"};
  names.insert(names.end(), d.covariate_names().begin(), d.covariate_names().end());
  return Dataset(prepend_ones(d.x()), d.y(), d.env(), d.env_labels(), true, std::move(names));
}

constexpr double kTrainMean = 1.0;
constexpr double kTrainVar = 2.0;  // Var ε_X + Var V

void check_univariate(const SimulationConfig& cfg) {
  if (cfg.p != 1 || cfg.z_envs != 1 || cfg.intercept)
    throw InvalidDataError("univariate shift needs p = 1, one environment and no intercept");
  if (cfg.beta_star.size() != 1 || cfg.k_star.size() != 1)
    throw InvalidDataError("univariate shift needs scalar β* and K*");
  // Test Σ₀ ≥ 1, so the ellipsoid holds in every test world iff K*² < σ²_Y = K*²/2 + 1.
  if (cfg.k_star(0) * cfg.k_star(0) >= 2.0)
    throw InvalidDataError("univariate shift needs |K*| < sqrt(2)");
}

double univariate_noise_var(const SimulationConfig& cfg) {
  return cfg.k_star(0) * cfg.k_star(0) / kTrainVar + 1.0;
}

}  // namespace

std::size_t SimulationConfig::env_size(std::size_t z) const {
  return n_per_env.size() == 1 ? n_per_env.front() : n_per_env.at(z);
}

void SimulationConfig::validate() const {
  if (p < 1 || z_envs < 1) throw InvalidDataError("simulation needs p ≥ 1 and Z ≥ 1");
  if (static_cast<std::size_t>(beta_star.size()) != p ||
      static_cast<std::size_t>(k_star.size()) != p)
    throw InvalidDataError("β* and K* must have length p");
  if (n_per_env.empty() || (n_per_env.size() != 1 && n_per_env.size() != z_envs))
    throw InvalidDataError("n_per_env must hold one count or one per environment");
  for (std::size_t n : n_per_env)
    if (n == 0) throw InvalidDataError("environment sizes must be positive");
  if (intercept && p < 2) throw InvalidDataError("intercept simulation needs p ≥ 2");
  if (intercept && k_star(0) != 0.0)
    throw InvalidDataError("K* must be 0 on the intercept coordinate");
  if (s1 < 0.0 || s2 < 0.0) throw InvalidDataError("heterogeneity scales must be non-negative");
}

std::vector<EnvironmentLaw> draw_environment_laws(const SimulationConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, 0));
  const Eigen::Index q = gaussian_dim(cfg.p, cfg.intercept);
  const Eigen::VectorXd k_active = active_block(cfg.k_star, cfg.intercept);
  std::vector<EnvironmentLaw> laws;
  for (std::size_t z = 0; z < cfg.z_envs; ++z) laws.push_back(draw_law(q, cfg.s1, cfg.s2, k_active, rng));
  return laws;
}

double unit_slack_noise_variance(const Eigen::VectorXd& k_star, const Eigen::MatrixXd& sigma,
                                 bool intercept) {
  const Eigen::VectorXd k = active_block(k_star, intercept);
  return k.dot(sigma.ldlt().solve(k)) + 1.0;
}

void sample_environment(const EnvironmentLaw& law, const Eigen::VectorXd& beta_star,
                        const Eigen::VectorXd& k_star, bool intercept, std::size_t n,
                        std::uint64_t seed, Eigen::MatrixXd& x, Eigen::VectorXd& y) {
  const Eigen::Index q = law.mu.size();
  const auto rows = static_cast<Eigen::Index>(n);
  const Eigen::VectorXd k = active_block(k_star, intercept);
  Rng rng(seed);
  const Eigen::MatrixXd root = linalg::psd_sqrt(law.sigma);
  const Eigen::MatrixXd centered = rng.normal_matrix(rows, q) * root;
  const Eigen::VectorXd loading = law.sigma.ldlt().solve(k);
  const double residual_var = law.noise_var - k.dot(loading);
  if (residual_var < 0.0)
    throw InvalidDataError("noise variance violates the causal ellipsoid condition");
  const Eigen::VectorXd eta = rng.normal_vector(rows);
  const Eigen::VectorXd eps = centered * loading + std::sqrt(residual_var) * eta;

  const Eigen::Index offset = intercept ? 1 : 0;
  x.resize(rows, q + offset);
  if (intercept) x.col(0).setOnes();
  x.rightCols(q) = centered.rowwise() + law.mu.transpose();
  y = x * beta_star + eps;
}

SimulatedData simulate_multienv(const SimulationConfig& cfg,
                                const std::vector<EnvironmentLaw>& laws, std::uint64_t data_seed) {
  cfg.validate();
  if (laws.size() != cfg.z_envs) throw InvalidDataError("one law per environment is required");
  std::size_t total = 0;
  for (std::size_t z = 0; z < cfg.z_envs; ++z) total += cfg.env_size(z);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(cfg.p));
  Eigen::VectorXd y(static_cast<Eigen::Index>(total));
  std::vector<std::size_t> env(total);
  std::vector<std::string> labels;
  Eigen::Index row = 0;
  for (std::size_t z = 0; z < cfg.z_envs; ++z) {
    Eigen::MatrixXd xz;
    Eigen::VectorXd yz;
    sample_environment(laws[z], cfg.beta_star, cfg.k_star, cfg.intercept, cfg.env_size(z),
                       derive_seed(data_seed, z + 1), xz, yz);
    x.middleRows(row, xz.rows()) = xz;
    y.segment(row, yz.size()) = yz;
    for (Eigen::Index i = 0; i < xz.rows(); ++i) env[static_cast<std::size_t>(row + i)] = z;
    row += xz.rows();
    labels.push_back("env" + std::to_string(z + 1));
  }
  GroundTruth truth{cfg.beta_star, cfg.k_star, laws};
  return {Dataset(std::move(x), std::move(y), std::move(env), std::move(labels), cfg.intercept),
          std::move(truth)};
}

SimulatedData simulate_multienv(const SimulationConfig& cfg) {
  return simulate_multienv(cfg, draw_environment_laws(cfg), derive_seed(cfg.seed, 1));
}

Dataset sample_univariate_train(const SimulationConfig& cfg, std::uint64_t seed) {
  check_univariate(cfg);
  const EnvironmentLaw law{Eigen::VectorXd::Constant(1, kTrainMean),
                           Eigen::MatrixXd::Constant(1, 1, kTrainVar), univariate_noise_var(cfg)};
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  sample_environment(law, cfg.beta_star, cfg.k_star, false, cfg.env_size(0), seed, x, y);
  std::vector<std::size_t> env(static_cast<std::size_t>(x.rows()), 0);
  return Dataset(std::move(x), std::move(y), std::move(env), {"train"}, false);
}

void sample_univariate_test(const SimulationConfig& cfg, double s, std::uint64_t seed,
                            Eigen::MatrixXd& x_test, Eigen::VectorXd& y_test, double& v_mean,
                            double& v_var) {
  check_univariate(cfg);
  if (s < 0.0) throw InvalidDataError("intervention strength must be non-negative");
  Rng rng(seed);
  v_var = s > 0.0 ? rng.uniform(0.0, s) : 0.0;
  v_mean = std::sqrt(std::max(0.0, s - v_var));
  const EnvironmentLaw law{Eigen::VectorXd::Constant(1, v_mean),
                           Eigen::MatrixXd::Constant(1, 1, 1.0 + v_var), univariate_noise_var(cfg)};
  sample_environment(law, cfg.beta_star, cfg.k_star, false, cfg.env_size(0),
                     derive_seed(seed, 1), x_test, y_test);
}

UnivariateShift simulate_univariate_shift(const SimulationConfig& cfg, double s,
                                          std::uint64_t seed) {
  UnivariateShift out{sample_univariate_train(cfg, derive_seed(seed, 0)), {}, {}, 0.0, 0.0};
  sample_univariate_test(cfg, s, derive_seed(seed, 1), out.x_test, out.y_test, out.v_mean,
                         out.v_var);
  return out;
}

SweepResult energy_benchmark(const SimulationConfig& cfg, const std::vector<double>& s_grid,
                             std::size_t replicates, std::uint64_t seed) {
  for (std::size_t g = 1; g < s_grid.size(); ++g)
    if (!(s_grid[g] > s_grid[g - 1])) throw InvalidDataError("grid must be strictly increasing");
  if (replicates == 0) throw InvalidDataError("need at least one replicate");

  const Dataset train = sample_univariate_train(cfg, derive_seed(seed, 0));
  const GIFit gi_fit = fit(train);
  // The OLS baseline carries an intercept: a line through the origin cannot
  // represent the training conditional mean, which has one.
  const OlsFit ols_fit = fit_ols(with_intercept(train));

  const std::size_t tasks = s_grid.size() * replicates;
  std::vector<double> gi(tasks), ols(tasks), causal(tasks);
  std::vector<std::exception_ptr> failures(tasks);
  const auto count = static_cast<std::ptrdiff_t>(tasks);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t t = 0; t < count; ++t) {
    const auto k = static_cast<std::size_t>(t);
    try {
      const std::uint64_t test_seed = derive_seed(seed, k + 1);
      Eigen::MatrixXd x0;
      Eigen::VectorXd y0;
      double m = 0.0, v = 0.0;
      sample_univariate_test(cfg, s_grid[k / replicates], test_seed, x0, y0, m, v);
      const Eigen::MatrixXd truth = joint(x0, y0);
      const GeneratorSpec spec = build_generator(gi_fit, x0, false);
      gi[k] = energy_distance(truth, joint(x0, generate_responses(spec, x0, derive_seed(test_seed, 2))))
                  .value;
      ols[k] = energy_distance(truth, joint(x0, ols_generator(ols_fit.beta, ols_fit.resid_var,
                                                              prepend_ones(x0),
                                                              derive_seed(test_seed, 3))))
                   .value;
      causal[k] = energy_distance(
                      truth, joint(x0, do_interventional_generator(gi_fit, x0, derive_seed(test_seed, 4))))
                      .value;
    } catch (...) {
      failures[k] = std::current_exception();
    }
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  SweepResult out;
  out.metric = "energy";
  out.grid = s_grid;
  for (std::size_t g = 0; g < s_grid.size(); ++g) {
    double a = 0.0, b = 0.0, c = 0.0;
    for (std::size_t r = 0; r < replicates; ++r) {
      a += gi[g * replicates + r];
      b += ols[g * replicates + r];
      c += causal[g * replicates + r];
    }
    const double n = static_cast<double>(replicates);
    out.gi.push_back(a / n);
    out.ols.push_back(b / n);
    out.causal.push_back(c / n);
  }
  return out;
}

SweepResult mse_sweep(const SimulationConfig& cfg, const std::vector<double>& strengths,
                      std::size_t replicates, std::uint64_t seed) {
  for (std::size_t g = 1; g < strengths.size(); ++g)
    if (!(strengths[g] > strengths[g - 1]))
      throw InvalidDataError("grid must be strictly increasing");
  if (replicates == 0) throw InvalidDataError("need at least one replicate");
  const SimulatedData train = simulate_multienv(cfg);
  const GIFit gi_fit = fit(train.data);
  const OlsFit ols_fit = fit_ols(train.data);
  const Eigen::Index q = gaussian_dim(cfg.p, cfg.intercept);
  const Eigen::VectorXd k_active = active_block(cfg.k_star, cfg.intercept);

  const std::size_t tasks = strengths.size() * replicates;
  std::vector<double> gi(tasks), ols(tasks), causal(tasks);
  std::vector<std::exception_ptr> failures(tasks);
  const auto count = static_cast<std::ptrdiff_t>(tasks);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t t = 0; t < count; ++t) {
    const auto k = static_cast<std::size_t>(t);
    try {
      const std::uint64_t test_seed = derive_seed(seed, k + 1);
      Rng rng(test_seed);
      const double strength = strengths[k / replicates];
      const double s1 = strength > 0.0 ? rng.uniform(0.0, strength) : 0.0;
      const EnvironmentLaw law = draw_law(q, s1, strength - s1, k_active, rng);
      Eigen::MatrixXd x0;
      Eigen::VectorXd y0;
      sample_environment(law, cfg.beta_star, cfg.k_star, cfg.intercept, cfg.env_size(0),
                         derive_seed(test_seed, 1), x0, y0);
      const GeneratorSpec spec = build_generator(gi_fit, x0, false);
      gi[k] = mse(generate_with_noise(spec, x0, Eigen::VectorXd::Zero(x0.rows())), y0);
      ols[k] = mse(x0 * ols_fit.beta, y0);
      causal[k] = mse(x0 * gi_fit.beta_hat, y0);
    } catch (...) {
      failures[k] = std::current_exception();
    }
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  SweepResult out;
  out.metric = "mse";
  out.grid = strengths;
  for (std::size_t g = 0; g < strengths.size(); ++g) {
    double a = 0.0, b = 0.0, c = 0.0;
    for (std::size_t r = 0; r < replicates; ++r) {
      a += gi[g * replicates + r];
      b += ols[g * replicates + r];
      c += causal[g * replicates + r];
    }
    const double n = static_cast<double>(replicates);
    out.gi.push_back(a / n);
    out.ols.push_back(b / n);
    out.causal.push_back(c / n);
  }
  return out;
}

CoverageResult coverage_study(const SimulationConfig& cfg, std::size_t replicates, double level,
                              std::uint64_t seed) {
  if (replicates < 2) throw InvalidDataError("coverage study needs at least two replicates");
  // Redraw environment laws until the mean Gram matrix is well conditioned.
  SimulationConfig law_cfg = cfg;
  std::vector<EnvironmentLaw> laws;
  for (std::uint64_t attempt = 0;; ++attempt) {
    if (attempt == 1000) throw InvalidDataError("could not draw identifiable environment means");
    law_cfg.seed = attempt == 0 ? cfg.seed : derive_seed(cfg.seed, 1000 + attempt);
    laws = draw_environment_laws(law_cfg);
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cfg.p),
                                                 static_cast<Eigen::Index>(cfg.p));
    for (std::size_t z = 0; z < laws.size(); ++z) {
      Eigen::VectorXd mu(static_cast<Eigen::Index>(cfg.p));
      if (cfg.intercept) mu << 1.0, laws[z].mu;
      else mu = laws[z].mu;
      gram += static_cast<double>(cfg.env_size(z)) * mu * mu.transpose();
    }
    const auto eig = linalg::sorted_eigenvalues(gram);
    if (eig.back() > 0.0 && eig.front() / eig.back() < 1e6) break;
  }

  const auto p = static_cast<Eigen::Index>(cfg.p);
  std::vector<std::optional<AsymptoticReport>> reports(replicates);
  const auto count = static_cast<std::ptrdiff_t>(replicates);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t r = 0; r < count; ++r) {
    const auto k = static_cast<std::size_t>(r);
    try {
      const SimulatedData sim = simulate_multienv(cfg, laws, derive_seed(seed, k + 1));
      reports[k] = asymptotic_covariance(fit(sim.data), level);
    } catch (const Error&) {
      reports[k].reset();
    }
  }

  CoverageResult out;
  out.level = level;
  out.coverage.assign(cfg.p, 0.0);
  out.mean_width.assign(cfg.p, 0.0);
  out.mean_plugin_acov = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd mean_beta = Eigen::VectorXd::Zero(p);
  std::vector<Eigen::VectorXd> betas;
  for (const auto& rep : reports) {
    if (!rep) {
      ++out.failed_fits;
      continue;
    }
    ++out.replicates;
    for (Eigen::Index j = 0; j < p; ++j) {
      const auto u = static_cast<std::size_t>(j);
      if (rep->ci_lower(j) <= cfg.beta_star(j) && cfg.beta_star(j) <= rep->ci_upper(j))
        out.coverage[u] += 1.0;
      out.mean_width[u] += rep->ci_upper(j) - rep->ci_lower(j);
    }
    out.mean_plugin_acov += rep->acov;
    mean_beta += rep->beta_hat;
    betas.push_back(rep->beta_hat);
  }
  if (out.replicates < 2) throw InvalidDataError("too few successful replicates");
  const double n = static_cast<double>(out.replicates);
  for (std::size_t j = 0; j < cfg.p; ++j) {
    out.coverage[j] /= n;
    out.mean_width[j] /= n;
  }
  out.mean_plugin_acov /= n;
  mean_beta /= n;
  out.monte_carlo_cov = Eigen::MatrixXd::Zero(p, p);
  for (const auto& b : betas) out.monte_carlo_cov += (b - mean_beta) * (b - mean_beta).transpose();
  out.monte_carlo_cov /= n - 1.0;
  out.relative_frobenius =
      (out.mean_plugin_acov - out.monte_carlo_cov).norm() / out.monte_carlo_cov.norm();
  return out;
}

}  // namespace gi
