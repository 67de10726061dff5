#include "cli.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include <CLI11.hpp>

#include "gi/asymptotics.hpp"
#include "gi/dataset.hpp"
#include "gi/errors.hpp"
#include "gi/evaluation.hpp"
#include "gi/generator.hpp"
#include "gi/kernels.hpp"
#include "gi/serialization.hpp"
#include "gi/simulation.hpp"

namespace gi::cli {

namespace {

namespace fs = std::filesystem;

struct RunConfig {
  std::string command;
  std::string input;
  std::string test;
  std::string response;
  std::string env;
  std::vector<std::string> covariates;
  bool intercept = false;
  std::uint64_t seed = kDefaultSeed;
  bool seed_given = false;
  bool strict = false;
  double rank_tol = kDefaultRankTol;
  double level = 0.95;
  std::size_t top_b = 100;
  std::uint64_t split_seed = kDefaultSeed;
  bool split_seed_given = false;
  std::string output;
  std::string format = "csv";
  int threads = 0;
  // energy
  bool joint = false;
  // simulate / coverage
  std::string mode = "multienv";
  std::size_t p = 0;
  std::size_t z_envs = 0;
  std::vector<std::size_t> n;
  std::vector<double> beta;
  std::vector<double> k;
  double s1 = -1;
  double s2 = -1;
  std::vector<double> grid;
  std::size_t replicates = 0;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

Json config_json(const RunConfig& c) {
  return {{"command", c.command},   {"input", c.input},         {"test", c.test},
          {"response", c.response}, {"env", c.env},             {"covariates", c.covariates},
          {"intercept", c.intercept}, {"seed", c.seed},         {"strict", c.strict},
          {"rank_tol", c.rank_tol}, {"level", c.level},         {"top_b", c.top_b},
          {"split_seed", c.split_seed}, {"output", c.output},   {"format", c.format},
          {"threads", c.threads},   {"joint", c.joint},         {"mode", c.mode},
          {"p", c.p},               {"z_envs", c.z_envs},       {"n", c.n},
          {"beta", c.beta},         {"k", c.k},                 {"s1", c.s1},
          {"s2", c.s2},             {"grid", c.grid},           {"replicates", c.replicates}};
}

void write_atomic(const fs::path& target, const std::string& payload) {
  const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + tmp.string() + " for writing");
    f << payload;
    f.flush();
    if (!f) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into place at " + target.string());
  }
}

// Results are fully computed before anything is written, so a failing
// command never leaves a partial output file behind.
void emit(const RunConfig& cfg, const std::string& payload, std::ostream& out) {
  if (cfg.output.empty()) {
    out << payload;
    return;
  }
  write_atomic(cfg.output, payload);
  const Json sidecar = {{"version", kVersion}, {"config", config_json(cfg)}};
  write_atomic(cfg.output + ".config.json", sidecar.dump(2) + "\n");
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void require(bool ok, const std::string& what) {
  if (!ok) throw CLI::ValidationError(what);
}

CsvSpec csv_spec(const RunConfig& cfg) {
  require(!cfg.input.empty(), "--input is required");
  require(!cfg.response.empty(), "--response is required");
  require(!cfg.env.empty(), "--env is required");
  require(!cfg.covariates.empty(), "--covariates is required");
  return CsvSpec{cfg.response, cfg.env, cfg.covariates, cfg.intercept};
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

int cmd_fit(const RunConfig& cfg, std::ostream& out) {
  const Dataset d = load_csv(cfg.input, csv_spec(cfg));
  const GIFit f = fit(d, cfg.rank_tol);
  if (cfg.format == "json") {
    emit(cfg, dump(to_json(f)), out);
    return kOk;
  }
  std::ostringstream s;
  s << "# sigma_y_sq_hat=" << num(f.sigma_y_sq_hat) << " causal_resid_var=" << num(f.causal_resid_var)
    << " n_total=" << f.n_total << " rank=" << f.rank.numerical_rank << "\n";
  s << "covariate,beta_hat,k_opt_hat,k_hat\n";
  for (Eigen::Index j = 0; j < f.beta_hat.size(); ++j)
    s << csv_field(f.covariate_names[static_cast<std::size_t>(j)]) << ',' << num(f.beta_hat(j)) << ','
      << num(f.k_opt_hat(j)) << ',' << num(f.k_hat(j)) << '\n';
  emit(cfg, s.str(), out);
  return kOk;
}

int cmd_predict(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require(!cfg.input.empty(), "--input (fit JSON) is required");
  require(!cfg.test.empty(), "--test (test covariate CSV) is required");
  Json doc;
  try {
    doc = Json::parse(read_text(cfg.input));
  } catch (const Json::parse_error& e) {
    throw InvalidDataError(std::string("fit document is not valid JSON: ") + e.what());
  }
  const GIFit f = fit_from_json(doc);
  std::vector<std::string> cols = cfg.covariates;
  if (cols.empty())
    for (std::size_t j = f.intercept ? 1 : 0; j < f.covariate_names.size(); ++j) cols.push_back(f.covariate_names[j]);
  const Eigen::MatrixXd x = load_covariates_csv(cfg.test, cols, f.intercept);
  const GeneratorSpec spec = build_generator(f, x, cfg.strict);
  if (spec.truncated)
    err << "warning: K lies outside the causal ellipsoid of the test covariance (slack "
        << num(spec.raw_radicand) << "); noise scale truncated to 0\n";
  const Eigen::VectorXd y = generate_responses(spec, x, cfg.seed);
  if (cfg.format == "json") {
    emit(cfg, dump({{"seed", cfg.seed}, {"generator", to_json(spec)}, {"y_generated", vector_to_json(y)}}), out);
    return kOk;
  }
  std::ostringstream s;
  s << "# seed=" << cfg.seed << "\n";
  s << "row";
  for (const auto& c : cols) s << ',' << csv_field(c);
  s << ",y_generated\n";
  const Eigen::Index first = f.intercept ? 1 : 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    s << i;
    for (Eigen::Index j = first; j < x.cols(); ++j) s << ',' << num(x(i, j));
    s << ',' << num(y(i)) << '\n';
  }
  emit(cfg, s.str(), out);
  return kOk;
}

int cmd_select(const RunConfig& cfg, std::ostream& out) {
  const Dataset d = load_csv(cfg.input, csv_spec(cfg));
  SelectionOptions opt;
  opt.split_seed = cfg.split_seed;
  opt.top_b = cfg.top_b;
  opt.rank_tol = cfg.rank_tol;
  const EfficiencyRanking r = select_sources(d, opt);
  if (cfg.format == "json") {
    emit(cfg, dump(to_json(r, d.env_labels())), out);
    return kOk;
  }
  std::ostringstream s;
  s << "rank,combo,det,key,identifiable\n";
  for (std::size_t i = 0; i < r.combos.size(); ++i) {
    const auto& c = r.combos[i];
    std::string combo;
    for (std::size_t e = 0; e < c.envs.size(); ++e) combo += (e ? "+" : "") + d.env_labels()[c.envs[e]];
    s << i + 1 << ',' << csv_field(combo) << ',' << num(c.det_score) << ',' << num(c.key) << ','
      << (c.identifiable ? "true" : "false") << '\n';
  }
  emit(cfg, s.str(), out);
  return kOk;
}

int cmd_energy(const RunConfig& cfg, std::ostream& out) {
  require(!cfg.input.empty(), "--input is required");
  require(!cfg.covariates.empty(), "--covariates is required");
  if (!cfg.test.empty()) {
    // Two-sample mode: covariate rows of --input against those of --test.
    const Eigen::MatrixXd a = load_covariates_csv(cfg.input, cfg.covariates, false);
    const Eigen::MatrixXd b = load_covariates_csv(cfg.test, cfg.covariates, false);
    const EnergyResult e = energy_distance(a, b);
    if (cfg.format == "json")
      emit(cfg, dump({{"energy", e.value}, {"n1", e.n1}, {"n2", e.n2}}), out);
    else
      emit(cfg, "energy,n1,n2\n" + num(e.value) + "," + std::to_string(e.n1) + "," + std::to_string(e.n2) + "\n", out);
    return kOk;
  }
  require(!cfg.env.empty(), "--env is required without --test");
  require(!cfg.joint || !cfg.response.empty(), "--joint needs --response");
  // Covariate-only matrices ignore the response; any numeric column will do.
  const CsvSpec spec{cfg.joint ? cfg.response : cfg.covariates.front(), cfg.env, cfg.covariates, false};
  const Dataset d = load_csv(cfg.input, spec);
  const Eigen::MatrixXd m = energy_matrix(d, !cfg.joint);
  const auto ranking = peculiarity_ranking(m);
  const auto& labels = d.env_labels();
  if (cfg.format == "json") {
    std::vector<std::string> ranked;
    for (auto e : ranking) ranked.push_back(labels[e]);
    emit(cfg, dump({{"envs", labels}, {"matrix", matrix_to_json(m)}, {"peculiarity", ranked}}), out);
    return kOk;
  }
  std::ostringstream s;
  s << "env";
  for (const auto& l : labels) s << ',' << csv_field(l);
  s << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    s << csv_field(labels[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < m.cols(); ++j) s << ',' << num(m(i, j));
    s << '\n';
  }
  emit(cfg, s.str(), out);
  return kOk;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Fills unset simulation flags with per-mode defaults and builds the config.
SimulationConfig simulation_config(RunConfig& cfg) {
  const bool univariate = cfg.command == "simulate" && cfg.mode == "energy-sweep";
  const bool coverage = cfg.command == "coverage";
  if (univariate) {
    if (cfg.p == 0) cfg.p = 1;
    if (cfg.z_envs == 0) cfg.z_envs = 1;
    if (cfg.n.empty()) cfg.n = {300};
    if (cfg.beta.empty()) cfg.beta = {1.0};
    if (cfg.k.empty()) cfg.k = {1.0};
  } else if (coverage) {
    if (cfg.p == 0) cfg.p = 2;
    if (cfg.z_envs == 0) cfg.z_envs = 3;
    if (cfg.n.empty()) cfg.n = {2000};
    if (cfg.beta.empty()) cfg.beta = {1.0, 2.0};
    if (cfg.k.empty()) cfg.k = {0.5, -0.5};
    if (cfg.s1 < 0) cfg.s1 = 1.0;
    if (cfg.s2 < 0) cfg.s2 = 2.0;
  } else {
    if (cfg.p == 0) cfg.p = 5;
    if (cfg.z_envs == 0) cfg.z_envs = 6;
    if (cfg.n.empty()) cfg.n = {200};
    if (cfg.beta.empty()) cfg.beta = {1, 5, 12, 6, 7};
    if (cfg.k.empty()) cfg.k = {2.6, -2.7, 2.1, 1.0, -1.7};
    if (cfg.s1 < 0) cfg.s1 = 0.5;
    if (cfg.s2 < 0) cfg.s2 = 10.0;
  }
  if (cfg.s1 < 0) cfg.s1 = 1.0;
  if (cfg.s2 < 0) cfg.s2 = 2.0;
  SimulationConfig sc;
  sc.p = cfg.p;
  sc.z_envs = cfg.z_envs;
  sc.n_per_env = cfg.n;
  sc.beta_star = to_vector(cfg.beta);
  sc.k_star = to_vector(cfg.k);
  sc.s1 = cfg.s1;
  sc.s2 = cfg.s2;
  sc.intercept = cfg.intercept;
  sc.seed = cfg.seed;
  sc.validate();
  return sc;
}

std::string sweep_csv(const SweepResult& r) {
  std::ostringstream s;
  s << "s," << r.metric << "_gi," << r.metric << "_ols," << r.metric << "_causal\n";
  for (std::size_t g = 0; g < r.grid.size(); ++g)
    s << num(r.grid[g]) << ',' << num(r.gi[g]) << ',' << num(r.ols[g]) << ',' << num(r.causal[g]) << '\n';
  return s.str();
}

int cmd_simulate(RunConfig& cfg, std::ostream& out) {
  const SimulationConfig sc = simulation_config(cfg);
  if (cfg.mode == "energy-sweep" || cfg.mode == "mse-sweep") {
    if (cfg.grid.empty())
      cfg.grid = cfg.mode == "energy-sweep" ? std::vector<double>{0.5, 2, 10, 100, 1000}
                                            : std::vector<double>{1, 10, 100, 1000};
    if (cfg.replicates == 0) cfg.replicates = 50;
    const SweepResult r = cfg.mode == "energy-sweep" ? energy_benchmark(sc, cfg.grid, cfg.replicates, cfg.seed)
                                                     : mse_sweep(sc, cfg.grid, cfg.replicates, cfg.seed);
    emit(cfg, cfg.format == "json" ? dump(to_json(r)) : sweep_csv(r), out);
    return kOk;
  }
  require(cfg.mode == "multienv", "--mode must be multienv, energy-sweep or mse-sweep");
  const SimulatedData sim = simulate_multienv(sc);
  const Dataset& d = sim.data;
  if (cfg.format == "json") {
    Json envs = Json::array();
    for (const auto& law : sim.truth.envs)
      envs.push_back({{"mu", vector_to_json(law.mu)}, {"sigma", matrix_to_json(law.sigma)}, {"noise_var", law.noise_var}});
    emit(cfg, dump({{"config", to_json(sc)}, {"environments", envs}}), out);
    return kOk;
  }
  std::ostringstream s;
  s << "y";
  const Eigen::Index first = d.intercept() ? 1 : 0;
  for (Eigen::Index j = first; j < d.x().cols(); ++j) s << ",x" << j + 1 - first;
  s << ",env\n";
  for (Eigen::Index i = 0; i < d.x().rows(); ++i) {
    s << num(d.y()(i));
    for (Eigen::Index j = first; j < d.x().cols(); ++j) s << ',' << num(d.x()(i, j));
    s << ',' << d.env_labels()[d.env()[static_cast<std::size_t>(i)]] << '\n';
  }
  emit(cfg, s.str(), out);
  return kOk;
}

int cmd_coverage(RunConfig& cfg, std::ostream& out) {
  const SimulationConfig sc = simulation_config(cfg);
  if (cfg.replicates == 0) cfg.replicates = 500;
  const CoverageResult r = coverage_study(sc, cfg.replicates, cfg.level, cfg.seed);
  if (cfg.format == "json") {
    emit(cfg, dump(to_json(r)), out);
    return kOk;
  }
  std::ostringstream s;
  s << "# level=" << num(r.level) << " replicates=" << r.replicates << " failed_fits=" << r.failed_fits
    << " relative_frobenius=" << num(r.relative_frobenius) << "\n";
  s << "coordinate,beta_star,coverage,mean_width\n";
  for (std::size_t j = 0; j < r.coverage.size(); ++j)
    s << j + 1 << ',' << num(sc.beta_star(static_cast<Eigen::Index>(j))) << ',' << num(r.coverage[j]) << ','
      << num(r.mean_width[j]) << '\n';
  emit(cfg, s.str(), out);
  return kOk;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v[i]);
  return s;
}

}  // namespace

std::uint64_t default_seed() {
  const char* env = std::getenv("GI_SEED");
  if (env == nullptr || *env == '\0') return kDefaultSeed;
  std::uint64_t v = 0;
  const char* end = env + std::char_traits<char>::length(env);
  const auto [ptr, ec] = std::from_chars(env, end, v);
  if (ec != std::errc() || ptr != end) return kDefaultSeed;
  return v;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Generative Invariance: fit, predict and select sources under hidden confounding"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--output", cfg.output, "Output file (written atomically, plus <output>.config.json)");
    sub->add_option("--format", cfg.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--threads", cfg.threads, "Maximum worker threads (0 = runtime default)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", cfg.seed, "Random seed (default: $GI_SEED or 42)");
    sub->add_option("--rank-tol", cfg.rank_tol, "Relative eigenvalue tolerance")->check(CLI::PositiveNumber);
  };
  auto add_data = [&](CLI::App* sub) {
    sub->add_option("--input", cfg.input, "Training CSV");
    sub->add_option("--response", cfg.response, "Response column");
    sub->add_option("--env", cfg.env, "Environment column");
    sub->add_option("--covariates", cfg.covariates, "Covariate columns (comma separated)")->delimiter(',');
    sub->add_flag("--intercept", cfg.intercept, "Prepend an intercept column");
  };
  auto add_sim = [&](CLI::App* sub) {
    sub->add_option("--p", cfg.p, "Covariate dimension");
    sub->add_option("--z-envs", cfg.z_envs, "Number of environments");
    sub->add_option("--n", cfg.n, "Rows per environment (one value or one per environment)")->delimiter(',');
    sub->add_option("--beta", cfg.beta, "β* (comma separated)")->delimiter(',');
    sub->add_option("--k", cfg.k, "K* (comma separated)")->delimiter(',');
    sub->add_option("--s1", cfg.s1, "Covariance heterogeneity scale");
    sub->add_option("--s2", cfg.s2, "Mean heterogeneity scale");
    sub->add_option("--replicates", cfg.replicates, "Monte Carlo replicates");
    sub->add_flag("--intercept", cfg.intercept, "Simulate an intercept column");
  };

  auto* fit_cmd = app.add_subcommand("fit", "Fit β̂, K̂ and σ̂² from multi-source data");
  add_common(fit_cmd);
  add_data(fit_cmd);

  auto* predict_cmd = app.add_subcommand("predict", "Generate test-environment responses from a fit");
  add_common(predict_cmd);
  predict_cmd->add_option("--input", cfg.input, "Fit JSON produced by `fit --format json`");
  predict_cmd->add_option("--test", cfg.test, "Test covariate CSV");
  predict_cmd->add_option("--covariates", cfg.covariates, "Covariate columns (default: from the fit)")
      ->delimiter(',');
  predict_cmd->add_flag("--strict", cfg.strict, "Fail instead of truncating outside the causal ellipsoid");

  auto* select_cmd = app.add_subcommand("select-sources", "Rank source combinations by determinant and energy");
  add_common(select_cmd);
  add_data(select_cmd);
  select_cmd->add_option("--top-b", cfg.top_b, "Determinant pre-filter size for S1")->check(CLI::PositiveNumber);
  auto* split_opt = select_cmd->add_option("--split-seed", cfg.split_seed, "Seed of the S1/S2 split (default: --seed)");

  auto* energy_cmd = app.add_subcommand("energy", "Energy distances between environments or two files");
  add_common(energy_cmd);
  add_data(energy_cmd);
  energy_cmd->add_option("--test", cfg.test, "Second CSV for a two-sample distance");
  energy_cmd->add_flag("--joint", cfg.joint, "Use (x, y) rows instead of covariates only");

  auto* sim_cmd = app.add_subcommand("simulate", "Simulated data or benchmark sweeps");
  add_common(sim_cmd);
  add_sim(sim_cmd);
  sim_cmd->add_option("--mode", cfg.mode, "multienv | energy-sweep | mse-sweep")
      ->check(CLI::IsMember({"multienv", "energy-sweep", "mse-sweep"}));
  sim_cmd->add_option("--grid", cfg.grid, "Intervention strengths (comma separated)")->delimiter(',');

  auto* cov_cmd = app.add_subcommand("coverage", "Confidence-interval coverage study");
  add_common(cov_cmd);
  add_sim(cov_cmd);
  cov_cmd->add_option("--level", cfg.level, "Confidence level")->check(CLI::Range(0.0, 1.0));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  auto* sub = app.get_subcommands().front();
  cfg.command = sub->get_name();
  cfg.seed_given = sub->count("--seed") > 0;
  if (!cfg.seed_given) cfg.seed = default_seed();
  cfg.split_seed_given = split_opt->count() > 0;
  if (!cfg.split_seed_given) cfg.split_seed = cfg.seed;
  if (cfg.threads > 0) kernels::set_max_threads(cfg.threads);

  try {
    if (cfg.command == "fit") return cmd_fit(cfg, out);
    if (cfg.command == "predict") return cmd_predict(cfg, out, err);
    if (cfg.command == "select-sources") return cmd_select(cfg, out);
    if (cfg.command == "energy") return cmd_energy(cfg, out);
    if (cfg.command == "simulate") return cmd_simulate(cfg, out);
    if (cfg.command == "coverage") return cmd_coverage(cfg, out);
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const IdentifiabilityError& e) {
    err << "error: " << e.what() << "\neigenvalues: " << join(e.eigenvalues()) << "\n";
    return kIdentifiability;
  } catch (const EllipsoidViolationError& e) {
    err << "error: " << e.what() << "\nslack: " << num(e.slack()) << "\n";
    return kEllipsoid;
  } catch (const DegenerateCovariatesError& e) {
    err << "error: " << e.what() << "\n";
    return kDegenerate;
  } catch (const SingularCovarianceError& e) {
    err << "error: " << e.what() << "\n";
    return kDegenerate;
  } catch (const InsufficientTestSampleError& e) {
    err << "error: " << e.what() << "\n";
    return kDegenerate;
  } catch (const SelectionInfeasibleError& e) {
    err << "error: " << e.what() << "\n";
    return kSelection;
  } catch (const NotEnoughSourcesError& e) {
    err << "error: " << e.what() << "\n";
    return kSelection;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  }
  return kUsage;
}

}  // namespace gi::cli
