#include "gi/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>

#include "gi/errors.hpp"
#include "gi/generator.hpp"
#include "gi/linalg.hpp"
#include "gi/random.hpp"

namespace gi {

namespace {

// Calls fn with every k-subset of {0..n-1} in lexicographic order.
void for_each_combination(std::size_t n, std::size_t k,
                          const std::function<void(const std::vector<std::size_t>&)>& fn) {
  if (k > n) return;
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  while (true) {
    fn(idx);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + (i - 1)) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

std::vector<EnvironmentSummary> pick(const std::vector<EnvironmentSummary>& all,
                                     const std::vector<std::size_t>& envs) {
  std::vector<EnvironmentSummary> out;
  for (std::size_t e : envs) out.push_back(all[e]);
  return out;
}

std::string combo_name(const std::vector<std::string>& labels, const std::vector<std::size_t>& c) {
  std::string s = "{";
  for (std::size_t i = 0; i < c.size(); ++i) s += (i ? "," : "") + labels[c[i]];
  return s + "}";
}

}  // namespace

Eigen::MatrixXd plug_in_phi(const std::vector<EnvironmentSummary>& summaries) {
  if (summaries.empty()) throw InvalidDataError("plug_in_phi: no summaries");
  const Eigen::Index p = summaries.front().mu_hat.size();
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(p, p);
  double total = 0.0;
  for (const auto& s : summaries) {
    phi += static_cast<double>(s.n) * s.mu_hat * s.mu_hat.transpose();
    total += static_cast<double>(s.n);
  }
  return phi / total;
}

Eigen::MatrixXd plug_in_omega(const EnvironmentSummary& summary, const Eigen::VectorXd& beta,
                              const Eigen::VectorXd& k, double sigma_sq) {
  const Eigen::VectorXd& mu = summary.mu_hat;
  if (beta.size() != mu.size() || k.size() != mu.size())
    throw DimensionMismatchError("plug_in_omega: dimension mismatch");
  const double mb = mu.dot(beta);
  const Eigen::MatrixXd cross = k * mu.transpose();
  return mb * mb * summary.sigma_hat - mb * (cross + cross.transpose()) +
         mu * mu.transpose() * sigma_sq;
}

AsymptoticReport asymptotic_covariance(const GIFit& fit, double level, double rank_tol) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidDataError("confidence level must lie in (0,1)");
  AsymptoticReport r;
  r.level = level;
  r.beta_hat = fit.beta_hat;
  r.phi = plug_in_phi(fit.summaries);
  const auto p = r.phi.rows();

  Eigen::MatrixXd phi_inv;
  if (!linalg::solve_spd(r.phi, Eigen::MatrixXd::Identity(p, p), rank_tol, phi_inv))
    throw IdentifiabilityError("Φ̂ is singular", linalg::sorted_eigenvalues(r.phi));

  const double total = static_cast<double>(fit.n_total);
  Eigen::MatrixXd middle = Eigen::MatrixXd::Zero(p, p);
  for (const auto& s : fit.summaries) {
    r.omegas.push_back(plug_in_omega(s, fit.beta_hat, fit.k_hat, fit.sigma_y_sq_hat));
    const double n = static_cast<double>(s.n);
    const double w = n / total;
    middle += (w * w / n) * r.omegas.back();
  }
  r.acov = phi_inv * middle * phi_inv;
  r.acov = 0.5 * (r.acov + r.acov.transpose()).eval();
  r.std_errors = r.acov.diagonal().cwiseMax(0.0).cwiseSqrt();
  const double zq = normal_quantile(0.5 + 0.5 * level);
  r.ci_lower = r.beta_hat - zq * r.std_errors;
  r.ci_upper = r.beta_hat + zq * r.std_errors;
  return r;
}

double normal_quantile(double prob) {
  if (!(prob > 0.0 && prob < 1.0)) {
    if (prob == 0.0) return -std::numeric_limits<double>::infinity();
    if (prob == 1.0) return std::numeric_limits<double>::infinity();
    throw InvalidDataError("normal_quantile: probability outside [0,1]");
  }
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double low = 0.02425;
  double x = 0.0;
  if (prob < low) {
    const double q = std::sqrt(-2.0 * std::log(prob));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (prob <= 1.0 - low) {
    const double q = prob - 0.5;
    const double t = q * q;
    x = (((((a[0] * t + a[1]) * t + a[2]) * t + a[3]) * t + a[4]) * t + a[5]) * q /
        (((((b[0] * t + b[1]) * t + b[2]) * t + b[3]) * t + b[4]) * t + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-prob));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley step on Φ(x) − p.
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - prob;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

double efficiency_key(const std::vector<EnvironmentSummary>& summaries,
                      const Eigen::VectorXd& beta_bar, double sigma_hat, const Eigen::VectorXd& r) {
  double total = 0.0;
  for (const auto& s : summaries) total += static_cast<double>(s.n);
  if (total <= 0.0) return 0.0;
  double q = 0.0;
  for (const auto& s : summaries) {
    const double spread = std::sqrt(std::max(0.0, r.dot(s.sigma_hat * r)));
    const double term = s.mu_hat.dot(beta_bar) * spread - s.mu_hat.dot(r) * sigma_hat;
    q += static_cast<double>(s.n) / (total * total) * term * term;
  }
  return q;
}

std::vector<ScoredCombo> det_prefilter(const std::vector<EnvironmentSummary>& summaries,
                                       std::size_t subset_size, std::size_t top_b) {
  if (summaries.size() < subset_size)
    throw NotEnoughSourcesError("need at least " + std::to_string(subset_size) +
                                " environments, have " + std::to_string(summaries.size()));
  if (subset_size == 0 ||
      static_cast<std::size_t>(summaries.front().mu_hat.size()) != subset_size)
    throw DimensionMismatchError("det_prefilter: subset size must equal the covariate dimension");
  const auto p = static_cast<Eigen::Index>(subset_size);
  std::vector<ScoredCombo> scored;
  for_each_combination(summaries.size(), subset_size, [&](const std::vector<std::size_t>& c) {
    Eigen::MatrixXd stacked(p, p);
    for (Eigen::Index j = 0; j < p; ++j)
      stacked.col(j) = summaries[c[static_cast<std::size_t>(j)]].mu_hat;
    std::vector<std::size_t> envs;
    for (std::size_t i : c) envs.push_back(summaries[i].env_id);
    scored.push_back({std::move(envs), std::abs(stacked.determinant())});
  });
  std::stable_sort(scored.begin(), scored.end(), [](const ScoredCombo& a, const ScoredCombo& b) {
    if (a.det_score != b.det_score) return a.det_score > b.det_score;
    return a.envs < b.envs;
  });
  if (scored.size() > top_b) scored.resize(top_b);
  return scored;
}

Eigen::MatrixXd complete_orthonormal_basis(const Eigen::VectorXd& direction) {
  const Eigen::Index p = direction.size();
  Eigen::VectorXd u = direction;
  const double norm = u.norm();
  if (norm > 0.0 && std::isfinite(norm)) {
    u /= norm;
  } else {
    u = Eigen::VectorXd::Unit(p, 0);
  }
  Eigen::Index dropped = 0;
  u.cwiseAbs().maxCoeff(&dropped);

  Eigen::MatrixXd basis(p, p);
  basis.col(0) = u;
  Eigen::Index filled = 1;
  for (Eigen::Index i = 0; i < p; ++i) {
    if (i == dropped) continue;
    Eigen::VectorXd v = Eigen::VectorXd::Unit(p, i);
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index j = 0; j < filled; ++j) v -= basis.col(j).dot(v) * basis.col(j);
    basis.col(filled++) = v.normalized();
  }
  return basis.rightCols(p - 1);
}

SourceSplit split_sources(const std::vector<std::string>& labels, std::uint64_t split_seed) {
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });
  Rng rng(split_seed);
  std::shuffle(order.begin(), order.end(), rng.engine());
  const std::size_t half = (labels.size() + 1) / 2;
  SourceSplit split;
  split.s1.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(half));
  split.s2.assign(order.begin() + static_cast<std::ptrdiff_t>(half), order.end());
  auto by_label = [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; };
  std::sort(split.s1.begin(), split.s1.end(), by_label);
  std::sort(split.s2.begin(), split.s2.end(), by_label);
  return split;
}

EfficiencyRanking select_sources(const Dataset& d, const SelectionOptions& options) {
  const std::size_t p = d.cols();
  const std::size_t z = d.num_envs();
  if (z < 2 * p)
    throw SelectionInfeasibleError("source selection needs at least 2p = " +
                                   std::to_string(2 * p) + " environments, have " +
                                   std::to_string(z));
  const auto& labels = d.env_labels();
  const auto summaries = summarize(d);

  EfficiencyRanking out;
  out.split = split_sources(labels, options.split_seed);

  // Halves are in label order, so combos and tie-breaks do not depend on the
  // order environments first appear in the data.
  std::vector<EnvironmentSummary> s1_summaries = pick(summaries, out.split.s1);
  for (std::size_t i = 0; i < s1_summaries.size(); ++i) s1_summaries[i].env_id = i;
  std::vector<EnvironmentSummary> s2_summaries = pick(summaries, out.split.s2);
  for (std::size_t i = 0; i < s2_summaries.size(); ++i) s2_summaries[i].env_id = i;

  auto to_global = [&](std::vector<ScoredCombo> scored, const std::vector<std::size_t>& half) {
    for (auto& c : scored)
      for (auto& e : c.envs) e = half[e];
    return scored;
  };
  const auto s1_scored = to_global(det_prefilter(s1_summaries, p, options.top_b), out.split.s1);
  const auto s2_scored = to_global(
      det_prefilter(s2_summaries, p, std::numeric_limits<std::size_t>::max()), out.split.s2);

  // Independent per-combo fits; results land in fixed slots.
  auto fit_all = [&](const std::vector<ScoredCombo>& scored) {
    std::vector<std::optional<GIFit>> fits(scored.size());
    std::vector<std::string> errors(scored.size());
    const auto count = static_cast<std::ptrdiff_t>(scored.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      const auto k = static_cast<std::size_t>(i);
      try {
        fits[k] = fit(d.subset(scored[k].envs), options.rank_tol);
      } catch (const Error& e) {
        errors[k] = e.what();
      }
    }
    return std::make_pair(std::move(fits), std::move(errors));
  };

  const auto [s1_fits, s1_errors] = fit_all(s1_scored);
  out.beta_bar = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < s1_fits.size(); ++i) {
    if (s1_fits[i]) {
      out.beta_bar += s1_fits[i]->beta_hat;
      ++out.s1_combos_used;
    } else {
      out.notes.push_back("S1 combo " + combo_name(labels, s1_scored[i].envs) +
                          " skipped: " + s1_errors[i]);
    }
  }
  if (out.s1_combos_used == 0)
    throw SelectionInfeasibleError("no identifiable p-subset of environments in S1");
  out.beta_bar /= static_cast<double>(out.s1_combos_used);

  try {
    out.sigma_hat = std::sqrt(fit(d.subset(out.split.s1), options.rank_tol).sigma_y_sq_hat);
  } catch (const Error& e) {
    throw SelectionInfeasibleError(std::string("pooled S1 fit failed: ") + e.what());
  }

  const auto [s2_fits, s2_errors] = fit_all(s2_scored);
  std::size_t fitted = 0;
  for (std::size_t i = 0; i < s2_scored.size(); ++i) {
    RankedCombo rc;
    rc.envs = s2_scored[i].envs;
    rc.det_score = s2_scored[i].det_score;
    if (!s2_fits[i]) {
      rc.identifiable = false;
      rc.key = 0.0;
      out.notes.push_back("S2 combo " + combo_name(labels, rc.envs) +
                          " not fitted: " + s2_errors[i]);
    } else {
      ++fitted;
      const GIFit& f = *s2_fits[i];
      rc.beta_hat = f.beta_hat;
      const Eigen::MatrixXd basis = complete_orthonormal_basis(f.beta_hat - out.beta_bar);
      if (basis.cols() == 0) {
        rc.key = efficiency_key(f.summaries, out.beta_bar, out.sigma_hat,
                                Eigen::VectorXd::Unit(static_cast<Eigen::Index>(p), 0));
      } else {
        rc.key = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < basis.cols(); ++j)
          rc.key = std::min(rc.key,
                            efficiency_key(f.summaries, out.beta_bar, out.sigma_hat, basis.col(j)));
      }
    }
    out.combos.push_back(std::move(rc));
  }
  if (fitted == 0) throw SelectionInfeasibleError("no identifiable p-subset of environments in S2");

  auto label_key = [&](const std::vector<std::size_t>& envs) {
    std::vector<std::string> k;
    for (std::size_t e : envs) k.push_back(labels[e]);
    return k;
  };
  std::stable_sort(out.combos.begin(), out.combos.end(),
                   [&](const RankedCombo& a, const RankedCombo& b) {
                     if (a.identifiable != b.identifiable) return a.identifiable;
                     if (a.key != b.key) return a.key > b.key;
                     if (a.det_score != b.det_score) return a.det_score > b.det_score;
                     return label_key(a.envs) < label_key(b.envs);
                   });
  return out;
}

Eigen::VectorXd aggregate_predictions(const Dataset& d,
                                      const std::vector<std::vector<std::size_t>>& combos,
                                      const Eigen::MatrixXd& x_test, std::uint64_t seed,
                                      bool shared_noise, double rank_tol) {
  if (combos.empty()) throw InvalidDataError("aggregate_predictions: no combos given");
  std::vector<Eigen::VectorXd> preds(combos.size());
  std::vector<std::exception_ptr> failures(combos.size());
  const auto count = static_cast<std::ptrdiff_t>(combos.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      const GIFit f = fit(d.subset(combos[k]), rank_tol);
      const GeneratorSpec spec = build_generator(f, x_test, false);
      preds[k] = generate_responses(spec, x_test, shared_noise ? seed : derive_seed(seed, k));
    } catch (...) {
      failures[k] = std::current_exception();
    }
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(x_test.rows());
  for (const auto& pr : preds) sum += pr;
  return sum / static_cast<double>(combos.size());
}

}  // namespace gi
