#include <doctest.h>

#include <limits>

#include "gi/errors.hpp"
#include "gi/serialization.hpp"
#include "support/fixtures.hpp"

TEST_CASE("GIFit JSON round trip is lossless") {
  const auto d = fixture::random_dataset(1, 3, 2, {20, 30, 25});
  const auto f = gi::fit(d);
  const std::string text = gi::to_json(f).dump();
  const auto back = gi::fit_from_json(gi::Json::parse(text));
  CHECK((back.beta_hat.array() == f.beta_hat.array()).all());
  CHECK((back.k_opt_hat.array() == f.k_opt_hat.array()).all());
  CHECK((back.k_hat.array() == f.k_hat.array()).all());
  CHECK(back.sigma_y_sq_hat == f.sigma_y_sq_hat);
  CHECK(back.causal_resid_var == f.causal_resid_var);
  CHECK((back.gram.array() == f.gram.array()).all());
  CHECK((back.scatter.array() == f.scatter.array()).all());
  CHECK(back.n_total == f.n_total);
  CHECK(back.env_labels == f.env_labels);
  REQUIRE(back.summaries.size() == 3);
  CHECK((back.summaries[1].sigma_hat.array() == f.summaries[1].sigma_hat.array()).all());
  CHECK(back.rank.eigenvalues == f.rank.eigenvalues);
  CHECK(back.rank.identifiable);
  CHECK(gi::to_json(back).dump() == text);
}

TEST_CASE("document fields") {
  const auto f = gi::fit(fixture::random_dataset(2, 2, 1, {10, 10}));
  const auto j = gi::to_json(f);
  for (const char* key : {"beta_hat", "k_opt_hat", "k_hat", "sigma_y_sq_hat", "summaries", "rank_report"})
    CHECK(j.contains(key));
  CHECK(j["summaries"][0].contains("env"));
  gi::RankReport r;
  r.eigenvalues = {1.0, 0.0};
  r.condition_number = std::numeric_limits<double>::infinity();
  const auto rj = gi::to_json(r);
  CHECK(rj["condition_number"].is_null());
  CHECK(std::isinf(gi::rank_report_from_json(rj).condition_number));
}

TEST_CASE("malformed documents are rejected") {
  CHECK_THROWS_AS(gi::fit_from_json(gi::Json::parse("{}")), gi::InvalidDataError);
  auto j = gi::to_json(gi::fit(fixture::random_dataset(3, 2, 1, {10, 10})));
  j["beta_hat"] = "oops";
  CHECK_THROWS_AS(gi::fit_from_json(j), gi::InvalidDataError);
  CHECK_THROWS_AS(gi::matrix_from_json(gi::Json::parse("[[1,2],[3]]")), gi::InvalidDataError);
}

TEST_CASE("matrix and vector helpers") {
  Eigen::MatrixXd m(2, 3);
  m << 1, 2, 3, 4, 5, 0.1;
  const auto j = gi::matrix_to_json(m);
  CHECK(j.size() == 2);
  CHECK(j[0].size() == 3);
  CHECK((gi::matrix_from_json(j).array() == m.array()).all());
  const Eigen::Vector3d v(0.1, 1e-300, -7);
  CHECK((gi::vector_from_json(gi::vector_to_json(v)).array() == v.array()).all());
}
