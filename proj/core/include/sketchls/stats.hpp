#pragma once

#include <Eigen/Dense>

namespace sketchls::stats {

// Quantile of the standard normal (Wichura's AS241, ~1e-15 absolute error).
double normal_quantile(double p);

// CDF / quantile of Student's t with nu degrees of freedom.
double student_t_cdf(double t, double nu);
double student_t_quantile(double p, double nu);

// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

// Chi-squared CDF with d degrees of freedom.
double chi2_cdf(double x, double d);

// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

struct KsResult {
  double statistic;  // D_n
  double p_value;    // asymptotic, Stephens small-sample correction
};

// One-sample Kolmogorov-Smirnov test: `u` must hold the model CDF evaluated
// at each observation.
KsResult ks_test_uniform(Eigen::VectorXd u);

}  // namespace sketchls::stats
