#pragma once

#include <Eigen/Dense>
#include <string>

#include "sketchls/dataset.hpp"
#include "sketchls/estimators.hpp"
#include "sketchls/sketches.hpp"

namespace sketchls {

enum class VarianceBasis { analytic_conditional, analytic_unconditional, plugin };
const char* to_string(VarianceBasis basis);

struct VarianceReport {
  Eigen::MatrixXd matrix;
  double trace = 0.0;
  VarianceBasis basis = VarianceBasis::analytic_conditional;
  std::string formula_tag;  // "eq6", "eq7", "eq8", "eq9", "sec5_complete", ...
};

enum class CiMethod { exact_t, asymptotic_normal };
const char* to_string(CiMethod method);

struct ConfidenceIntervals {
  double level = 0.0;  // 1 - alpha
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  CiMethod method = CiMethod::exact_t;
};

// Population-level model y = X beta0 + eps for unconditional variances.
struct PopulationModel {
  Eigen::VectorXd beta0;
  double sigma2 = 0.0;   // noise variance
  double gamma2 = 0.0;   // ||X beta0||^2 / n
};

// Conditional variance of the complete estimator: RSS_F/(k-p+1) (X'X)^-1.
VarianceReport var_complete(double rss_f, Eigen::Index k, Eigen::Index p,
                            const Eigen::MatrixXd& xtx_inv);

// Conditional variance of the partial estimator; corrected=false gives the
// biased-estimator formula, corrected=true the unbiased one. Needs k > p+3.
VarianceReport var_partial(double mss_f, Eigen::Index k, Eigen::Index p,
                           const Eigen::MatrixXd& xtx_inv,
                           const Eigen::VectorXd& beta_f, bool corrected);

// Plug-in variance of the unbiased partial estimator from the sketch alone.
VarianceReport var_partial_plugin(const SketchedData& sd,
                                  const Estimate& e_pstar,
                                  const FullMoments& fm);

// Plug-in variance of the complete estimator, consistent with the exact-CI
// residual variance estimate RSS_S/(k-p).
VarianceReport var_complete_plugin(const SketchedData& sd, const Estimate& e_s);

// Exact (Student-t) intervals for the complete estimator; the normal-quantile
// variant serves the asymptotic regime of the non-Gaussian sketches.
ConfidenceIntervals ci_complete(const SketchedData& sd, const Estimate& e_s,
                                double alpha,
                                CiMethod method = CiMethod::exact_t);

ConfidenceIntervals ci_partial(const Estimate& e_pstar,
                               const VarianceReport& v, double alpha);

// Smallest eps such that S is an eps-subspace embedding for A, from the
// singular values of S U.
double embedding_epsilon(const Eigen::MatrixXd& s_realized,
                         const Eigen::MatrixXd& a);
// Same, with S realized from the spec (identical stream as apply_sketch).
double embedding_epsilon(const SketchSpec& spec, const Eigen::MatrixXd& a);

struct BoundAudit {
  double bound_complete = 0.0;
  double bound_partial = 0.0;
  bool partial_applicable = false;  // requires eps < 0.5
  double err_sq = 0.0;
  bool satisfied = false;
};

BoundAudit check_worst_case_bounds(double eps, const FitSummary& fs,
                                   const Estimate& e,
                                   const Eigen::VectorXd& beta_f);

enum class UnconditionalKind { complete, partial_unbiased };

VarianceReport unconditional_variance(const PopulationModel& pm,
                                      Eigen::Index n, Eigen::Index k,
                                      Eigen::Index p,
                                      const Eigen::MatrixXd& xtx_inv,
                                      UnconditionalKind kind);

struct NormalityTest {
  double statistic = 0.0;
  double p_value = 0.0;
  bool reject = false;
};

// KS test of the squared Mahalanobis distances of the sketched rows of
// sqrt(k/n) A~ against chi^2_d, under mean 0 and covariance A'A/n.
NormalityTest mahalanobis_normality_test(const SketchedData& sd,
                                         const Eigen::MatrixXd& gram_over_n,
                                         double alpha);

// Same test for an arbitrary k x d matrix of sketched rows.
NormalityTest mahalanobis_normality_rows(const Eigen::MatrixXd& rows,
                                         Eigen::Index source_n,
                                         const Eigen::MatrixXd& gram_over_n,
                                         double alpha);

struct AssumptionDiagnostics {
  double max_leverage = 0.0;
  double gram_condition = 0.0;
  bool warning = false;  // heuristic threshold max_leverage > 0.1
};

AssumptionDiagnostics assumption_diagnostics(const Dataset& d);

}  // namespace sketchls
