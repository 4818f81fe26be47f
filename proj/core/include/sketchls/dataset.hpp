#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "sketchls/errors.hpp"

namespace sketchls {

// Immutable after construction; safe for concurrent shared reads.
struct Dataset {
  Eigen::VectorXd y;               // n responses
  Eigen::MatrixXd X;               // n x p design, full column rank expected
  std::vector<std::string> names;  // p column labels

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index p() const { return X.cols(); }

  // Stacked source matrix A = [y, X], d = p + 1 columns.
  Eigen::MatrixXd stacked() const;
};

struct FitSummary {
  Eigen::VectorXd beta_f;
  double tss = 0.0;
  double rss = 0.0;
  double mss = 0.0;
  double r_squared = 0.0;
  double sigma_min_x = 0.0;  // smallest singular value of X
};

struct LeverageProfile {
  Eigen::VectorXd scores;  // one per row, each in [0,1]
  double max_score = 0.0;
  double sum_scores = 0.0;  // equals the numerical rank
};

enum class LeverageTarget { design_only, stacked };

// Singular values below max(rows, cols) * sigma_max * 1e-12 count as zero.
double rank_threshold(const Eigen::MatrixXd& m, double sigma_max);

// Numeric CSV with a mandatory header row; missing values are a hard error.
// When add_intercept is set a leading column of ones is prepended to X.
Dataset load_csv(const std::string& path, const std::string& response,
                 bool add_intercept = false);

Dataset make_dataset(Eigen::VectorXd y, Eigen::MatrixXd X,
                     std::vector<std::string> names = {});

// Exact least squares via SVD; throws DataError on rank deficiency.
FitSummary fit_full(const Dataset& d);

LeverageProfile leverage_profile(const Dataset& d, LeverageTarget which);

// Leverage scores of an arbitrary full-column-rank matrix.
LeverageProfile leverage_scores(const Eigen::MatrixXd& m);

}  // namespace sketchls
