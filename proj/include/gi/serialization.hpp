#pragma once

// JSON documents for fits, generators and reports. Doubles are written in
// shortest round-trip form, so parsing a dumped document restores every
// value bit for bit.

#include <json.hpp>

#include "gi/asymptotics.hpp"
#include "gi/estimator.hpp"
#include "gi/generator.hpp"
#include "gi/simulation.hpp"

namespace gi {

using Json = nlohmann::json;

Json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const Json& j);
Json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j);

Json to_json(const RankReport& r);
RankReport rank_report_from_json(const Json& j);

Json to_json(const EnvironmentSummary& s, const std::string& label);

Json to_json(const GIFit& fit);
/// Throws InvalidDataError on a malformed document.
GIFit fit_from_json(const Json& j);

Json to_json(const GeneratorSpec& spec);
Json to_json(const AsymptoticReport& r);
Json to_json(const EfficiencyRanking& r, const std::vector<std::string>& labels);
Json to_json(const SweepResult& r);
Json to_json(const CoverageResult& r);
Json to_json(const SimulationConfig& cfg);

}  // namespace gi
