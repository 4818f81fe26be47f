#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "sketchls/dataset.hpp"
#include "sketchls/estimators.hpp"
#include "sketchls/inference.hpp"
#include "sketchls/sketches.hpp"

namespace sketchls {

struct SyntheticSpec {
  Eigen::Index n = 0;
  Eigen::Index p = 0;
  std::uint64_t seed = 0;
  double noise_var = 0.45;
  double beta_var = 0.01;
  double rho = 0.5;
};

struct CsvSpec {
  std::string path;
  std::string response;
  bool intercept = false;
};

using DatasetSource = std::variant<SyntheticSpec, CsvSpec>;

enum class PhiMode { oracle, plugin, fixed };

struct PhiChoice {
  PhiMode mode = PhiMode::oracle;
  double value = 0.5;  // used when mode == fixed
};

struct ExperimentConfig {
  DatasetSource dataset = SyntheticSpec{};
  std::vector<SketchKind> kinds;
  std::vector<Eigen::Index> ks;
  std::vector<EstimatorKind> estimators;
  int replications = 100;
  double alpha = 0.05;
  std::uint64_t master_seed = 0;
  int parallelism = 0;  // 0 = hardware concurrency
  PhiChoice phi;
  // normality suite only
  std::vector<Eigen::Index> n_grid;
  std::vector<Eigen::Index> k_grid;
  // timing suite only
  int timing_runs = 10;
};

struct ReplicationRecord {
  int rep = 0;
  SketchKind kind = SketchKind::gaussian;
  Eigen::Index k = 0;
  EstimatorKind estimator = EstimatorKind::full;
  double err_sq = 0.0;
  int covered = 0;    // coverage suite: covered coefficients
  int intervals = 0;  // coverage suite: intervals per replication
  bool failed = false;
};

struct ReportCell {
  SketchKind kind = SketchKind::gaussian;
  Eigen::Index k = 0;
  EstimatorKind estimator = EstimatorKind::full;
  double mse_mean = 0.0;
  double mse_se = 0.0;
  Eigen::VectorXd bias;
  double coverage = -1.0;  // -1 when not a coverage cell
  double coverage_se = 0.0;
  double timing_seconds = -1.0;  // -1 when not a timing cell
  int failed_reps = 0;
  long pairs = 0;  // pooled (replication, coefficient) pairs
};

struct NormalityCell {
  Eigen::Index n = 0;
  Eigen::Index k = 0;
  SketchKind kind = SketchKind::gaussian;
  std::string target;  // "full_row" or "residual"
  double rejection_rate = 0.0;
};

struct ExperimentReport {
  std::vector<ReportCell> cells;
  std::vector<NormalityCell> normality;
  std::vector<ReplicationRecord> records;
  std::uint64_t master_seed = 0;
};

struct SyntheticData {
  Dataset dataset;
  PopulationModel population;
};

// AR(1)-correlated Gaussian design, y = X beta0 + eps.
SyntheticData synthetic_dataset(Eigen::Index n, Eigen::Index p,
                                std::uint64_t seed, double noise_var = 0.45,
                                double beta_var = 0.01, double rho = 0.5);

SyntheticData synthetic_dataset(const SyntheticSpec& spec);

// Resolve a config's dataset source (population model absent for CSV data).
struct ResolvedData {
  Dataset dataset;
  std::optional<PopulationModel> population;
};
ResolvedData resolve_dataset(const DatasetSource& source);

// Deterministic per-replication sketch seed.
std::uint64_t child_seed(std::uint64_t master, int rep, SketchKind kind,
                         Eigen::Index k);

ExperimentReport run_mse_experiment(const ExperimentConfig& cfg);
ExperimentReport run_coverage_experiment(const ExperimentConfig& cfg);
ExperimentReport run_normality_experiment(const ExperimentConfig& cfg);
ExperimentReport run_timing_experiment(const ExperimentConfig& cfg);

}  // namespace sketchls
