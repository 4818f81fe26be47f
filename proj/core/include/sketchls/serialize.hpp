#pragma once

#include <json.hpp>
#include <ostream>
#include <string>

#include "sketchls/estimators.hpp"
#include "sketchls/inference.hpp"
#include "sketchls/montecarlo.hpp"

namespace sketchls {

using json = nlohmann::json;

// Shortest decimal string that round-trips to the same double.
std::string format_double(double x);

json to_json(const SketchSpec& spec);
json to_json(const Estimate& e);
json to_json(const VarianceReport& v);
json to_json(const ConfidenceIntervals& ci);
json to_json(const ExperimentConfig& cfg);
json to_json(const ExperimentReport& report);

SketchSpec sketch_spec_from_json(const json& j);
// Throws ParseError on schema violations (missing/ill-typed fields).
ExperimentConfig experiment_config_from_json(const json& j);

// One row per report cell: kind,k,estimator,mse_mean,mse_se,coverage,...
void write_cells_csv(std::ostream& os, const ExperimentReport& report);
// One row per (replication, estimator): deterministic audit trail.
void write_records_csv(std::ostream& os, const ExperimentReport& report);
// Tidy long format: n,k,kind,target,value.
void write_normality_csv(std::ostream& os, const ExperimentReport& report);

void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& header = {});

}  // namespace sketchls
