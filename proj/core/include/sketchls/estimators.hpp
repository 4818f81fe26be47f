#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "sketchls/dataset.hpp"
#include "sketchls/sketches.hpp"

namespace sketchls {

enum class EstimatorKind {
  full,
  complete,
  partial,
  partial_unbiased,
  combined,
  one_step,
};

const char* to_string(EstimatorKind kind);
EstimatorKind estimator_kind_from_string(const std::string& s);

// Exact full-data moments retained alongside a sketch (partial sketching
// keeps X'y exact; the inverse Gram feeds the variance formulas).
struct FullMoments {
  Eigen::VectorXd xty;
  Eigen::MatrixXd xtx_inv;
  double mss = 0.0;
  double rss = 0.0;
  Eigen::VectorXd beta_f;  // optional, for error evaluation
};

FullMoments full_moments(const Dataset& d, const FitSummary& fs);

struct Estimate {
  EstimatorKind kind = EstimatorKind::full;
  Eigen::VectorXd beta;
  std::optional<Eigen::MatrixXd> variance;
  SketchSpec spec;
  // Sketched fit summaries, when the estimator produces them.
  std::optional<double> rss_s;
  std::optional<double> mss_s;
  bool rank_deficient = false;
};

// (X~'X~)^-1 via QR of X~, pseudo-inverse on rank deficiency.
struct SketchedGramInverse {
  Eigen::MatrixXd inv;
  bool rank_deficient = false;
};
SketchedGramInverse sketched_gram_inverse(const Eigen::MatrixXd& x_tilde);

// Least squares on the sketched data (complete sketching).
Estimate beta_complete(const SketchedData& sd);

// Solve (X~'X~) b = X'y (partial sketching, biased by k/(k-p-1)).
Estimate beta_partial(const SketchedData& sd, const FullMoments& fm);

// Bias-corrected partial estimator, factor (k-p-1)/k; needs k > p+1.
Estimate beta_partial_unbiased(const SketchedData& sd, const FullMoments& fm);

// MSE-optimal convex weight for combining the complete and unbiased-partial
// estimators from one sketch.
double phi_opt(double trace_var_s, double trace_var_pstar);

Estimate beta_combined(const Estimate& e_s, const Estimate& e_pstar, double phi);

// Single Newton-like correction using the sketched Gram inverse and the
// exact full-data gradient.
Estimate beta_onestep(const Estimate& e_s, const SketchedData& sd,
                      const Dataset& d);

}  // namespace sketchls
