#include "sketchls/inference.hpp"

#include <cmath>

#include "sketchls/stats.hpp"

namespace sketchls {

const char* to_string(VarianceBasis basis) {
  switch (basis) {
    case VarianceBasis::analytic_conditional: return "analytic_conditional";
    case VarianceBasis::analytic_unconditional: return "analytic_unconditional";
    case VarianceBasis::plugin: return "plugin";
  }
  return "?";
}

const char* to_string(CiMethod method) {
  return method == CiMethod::exact_t ? "exact_t" : "asymptotic_normal";
}

VarianceReport var_complete(double rss_f, Eigen::Index k, Eigen::Index p,
                            const Eigen::MatrixXd& xtx_inv) {
  if (k <= p + 1)
    throw DataError("var_complete needs k > p+1, got k=" + std::to_string(k) +
                    ", p=" + std::to_string(p));
  VarianceReport v;
  // beta_S is multivariate Student with k-p+1 df and scale
  // RSS_F/(k-p+1) (X'X)^-1; its variance carries the extra nu/(nu-2)
  // factor, giving RSS_F/(k-p-1) (X'X)^-1. This also equals
  // E[(RSS_F/k) (X~'X~)^-1] via the Inverse-Wishart mean, and is what the
  // Monte Carlo covariance oracle reproduces.
  v.matrix = (rss_f / static_cast<double>(k - p - 1)) * xtx_inv;
  v.trace = v.matrix.trace();
  v.basis = VarianceBasis::analytic_conditional;
  v.formula_tag = "eq6";
  return v;
}

VarianceReport var_partial(double mss_f, Eigen::Index k, Eigen::Index p,
                           const Eigen::MatrixXd& xtx_inv,
                           const Eigen::VectorXd& beta_f, bool corrected) {
  if (k <= p + 3)
    throw DataError("var_partial needs k > p+3, got k=" + std::to_string(k) +
                    ", p=" + std::to_string(p));
  const double kd = static_cast<double>(k);
  const double kp = static_cast<double>(k - p);
  const double kp1 = static_cast<double>(k - p - 1);
  const double kp3 = static_cast<double>(k - p - 3);
  const double factor = corrected ? kp1 / (kp * kp3)
                                  : kd * kd / (kp * kp1 * kp3);
  const Eigen::MatrixXd bracket =
      mss_f * xtx_inv +
      (static_cast<double>(k - p + 1) / kp1) * (beta_f * beta_f.transpose());
  VarianceReport v;
  v.matrix = factor * bracket;
  v.trace = v.matrix.trace();
  v.basis = VarianceBasis::analytic_conditional;
  v.formula_tag = corrected ? "eq8" : "eq7";
  return v;
}

VarianceReport var_partial_plugin(const SketchedData& sd,
                                  const Estimate& e_pstar,
                                  const FullMoments& fm) {
  const Eigen::Index k = sd.k();
  const Eigen::Index p = sd.p();
  if (k <= p + 3)
    throw DataError("var_partial_plugin needs k > p+3, got k=" +
                    std::to_string(k) + ", p=" + std::to_string(p));
  const auto gram = sketched_gram_inverse(sd.x_tilde);
  if (gram.rank_deficient)
    throw DataError("var_partial_plugin: sketched design is rank deficient");

  // MSS_S from the complete fit on the same sketch.
  double mss_s;
  if (e_pstar.mss_s) {
    mss_s = *e_pstar.mss_s;
  } else {
    const Estimate e_s = beta_complete(sd);
    mss_s = *e_s.mss_s;
  }
  const double kd = static_cast<double>(k);
  const double kp = static_cast<double>(k - p);
  const double kp1 = static_cast<double>(k - p - 1);
  const double kp3 = static_cast<double>(k - p - 3);
  VarianceReport v;
  v.matrix = (kp1 / (kp * kp3)) *
             ((kp1 / kd) * mss_s * gram.inv +
              e_pstar.beta * e_pstar.beta.transpose());
  v.trace = v.matrix.trace();
  v.basis = VarianceBasis::plugin;
  v.formula_tag = "eq9";
  return v;
}

VarianceReport var_complete_plugin(const SketchedData& sd, const Estimate& e_s) {
  const Eigen::Index k = sd.k();
  const Eigen::Index p = sd.p();
  if (k <= p + 1)
    throw DataError("var_complete_plugin needs k > p+1");
  const auto gram = sketched_gram_inverse(sd.x_tilde);
  const double rss_s = e_s.rss_s ? *e_s.rss_s : 0.0;
  VarianceReport v;
  v.matrix = (rss_s / static_cast<double>(k - p)) *
             (static_cast<double>(k) / static_cast<double>(k - p + 1)) *
             gram.inv;
  v.trace = v.matrix.trace();
  v.basis = VarianceBasis::plugin;
  v.formula_tag = "eq6_plugin";
  return v;
}

ConfidenceIntervals ci_complete(const SketchedData& sd, const Estimate& e_s,
                                double alpha, CiMethod method) {
  const Eigen::Index k = sd.k();
  const Eigen::Index p = sd.p();
  if (k <= p)
    throw DataError("ci_complete needs k > p, got k=" + std::to_string(k) +
                    ", p=" + std::to_string(p));
  if (!e_s.rss_s) throw DataError("ci_complete: estimate lacks RSS_S");

  const auto gram = sketched_gram_inverse(sd.x_tilde);
  const double s2 = *e_s.rss_s / static_cast<double>(k - p);
  const double crit =
      (method == CiMethod::exact_t)
          ? stats::student_t_quantile(1.0 - alpha / 2.0,
                                      static_cast<double>(k - p))
          : stats::normal_quantile(1.0 - alpha / 2.0);

  ConfidenceIntervals ci;
  ci.level = 1.0 - alpha;
  ci.method = method;
  ci.lower.resize(p);
  ci.upper.resize(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const double half = crit * std::sqrt(gram.inv(i, i) * s2);
    ci.lower[i] = e_s.beta[i] - half;
    ci.upper[i] = e_s.beta[i] + half;
  }
  return ci;
}

ConfidenceIntervals ci_partial(const Estimate& e_pstar,
                               const VarianceReport& v, double alpha) {
  const Eigen::Index p = e_pstar.beta.size();
  const double z = stats::normal_quantile(1.0 - alpha / 2.0);
  ConfidenceIntervals ci;
  ci.level = 1.0 - alpha;
  ci.method = CiMethod::asymptotic_normal;
  ci.lower.resize(p);
  ci.upper.resize(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const double half = z * std::sqrt(std::max(0.0, v.matrix(i, i)));
    ci.lower[i] = e_pstar.beta[i] - half;
    ci.upper[i] = e_pstar.beta[i] + half;
  }
  return ci;
}

double embedding_epsilon(const Eigen::MatrixXd& s_realized,
                         const Eigen::MatrixXd& a) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  if (sv[sv.size() - 1] <= rank_threshold(a, sv[0]))
    throw DataError("embedding_epsilon: A is rank deficient");
  Eigen::MatrixXd u = svd.matrixU();
  if (s_realized.cols() > u.rows()) {
    // Hadamard realization carries zero-padded columns.
    Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(s_realized.cols(), u.cols());
    padded.topRows(u.rows()) = u;
    u.swap(padded);
  }
  const Eigen::MatrixXd su = s_realized * u;
  const Eigen::MatrixXd m = su.transpose() * su;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const auto& ev = es.eigenvalues();
  return std::max(ev[ev.size() - 1] - 1.0, 1.0 - ev[0]);
}

double embedding_epsilon(const SketchSpec& spec, const Eigen::MatrixXd& a) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  if (sv[sv.size() - 1] <= rank_threshold(a, sv[0]))
    throw DataError("embedding_epsilon: A is rank deficient");
  std::optional<Eigen::VectorXd> weights;
  if (spec.kind == SketchKind::leverage_aware) {
    const auto lp = leverage_scores(a);
    weights = (lp.scores / static_cast<double>(a.cols())).eval();
  }
  const Eigen::MatrixXd su = apply_sketch(svd.matrixU(), spec, weights);
  const Eigen::MatrixXd m = su.transpose() * su;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const auto& ev = es.eigenvalues();
  return std::max(ev[ev.size() - 1] - 1.0, 1.0 - ev[0]);
}

BoundAudit check_worst_case_bounds(double eps, const FitSummary& fs,
                                   const Estimate& e,
                                   const Eigen::VectorXd& beta_f) {
  BoundAudit audit;
  const double s2 = fs.sigma_min_x * fs.sigma_min_x;
  audit.bound_complete = eps * eps / s2 * fs.rss;
  audit.bound_partial = 4.0 * eps * eps / s2 * fs.mss;
  audit.partial_applicable = eps < 0.5;
  audit.err_sq = (e.beta - beta_f).squaredNorm();
  switch (e.kind) {
    case EstimatorKind::complete:
      audit.satisfied = audit.err_sq <= audit.bound_complete;
      break;
    case EstimatorKind::partial:
      audit.satisfied =
          !audit.partial_applicable || audit.err_sq <= audit.bound_partial;
      break;
    default:
      audit.satisfied = true;  // no bound stated for the other estimators
      break;
  }
  return audit;
}

VarianceReport unconditional_variance(const PopulationModel& pm,
                                      Eigen::Index n, Eigen::Index k,
                                      Eigen::Index p,
                                      const Eigen::MatrixXd& xtx_inv,
                                      UnconditionalKind kind) {
  VarianceReport v;
  v.basis = VarianceBasis::analytic_unconditional;
  if (kind == UnconditionalKind::complete) {
    if (k <= p + 1) throw DataError("unconditional complete needs k > p+1");
    // E_y[RSS_F] = (n-p) sigma^2 substituted into the conditional variance
    // (same k-p-1 denominator as var_complete).
    v.matrix = (static_cast<double>(n - p) * pm.sigma2 /
                static_cast<double>(k - p - 1)) *
               xtx_inv;
    v.formula_tag = "sec5_complete";
  } else {
    if (k <= p + 3) throw DataError("unconditional partial needs k > p+3");
    const double kp = static_cast<double>(k - p);
    const double kp1 = static_cast<double>(k - p - 1);
    const double kp3 = static_cast<double>(k - p - 3);
    const double ratio = static_cast<double>(k - p + 1) / kp1;
    v.matrix =
        (kp1 / (kp * kp3)) *
        ((static_cast<double>(p) * pm.sigma2 +
          static_cast<double>(n) * pm.gamma2) *
             xtx_inv +
         ratio * pm.sigma2 * xtx_inv +
         ratio * (pm.beta0 * pm.beta0.transpose()));
    v.formula_tag = "sec5_partial";
  }
  v.trace = v.matrix.trace();
  return v;
}

NormalityTest mahalanobis_normality_rows(const Eigen::MatrixXd& rows,
                                         Eigen::Index source_n,
                                         const Eigen::MatrixXd& gram_over_n,
                                         double alpha) {
  const Eigen::Index k = rows.rows();
  const Eigen::Index d = rows.cols();
  Eigen::LLT<Eigen::MatrixXd> llt(gram_over_n);
  if (llt.info() != Eigen::Success)
    throw DataError("normality test: reference covariance is not positive definite");

  // Squared Mahalanobis distances of the rows of sqrt(k/n) * rows.
  const double scale =
      static_cast<double>(k) / static_cast<double>(source_n);
  Eigen::VectorXd u(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const Eigen::VectorXd r = rows.row(j).transpose();
    const Eigen::VectorXd w = llt.matrixL().solve(r);
    const double dist2 = scale * w.squaredNorm();
    u[j] = stats::chi2_cdf(dist2, static_cast<double>(d));
  }
  const auto ks = stats::ks_test_uniform(u);
  return {ks.statistic, ks.p_value, ks.p_value < alpha};
}

NormalityTest mahalanobis_normality_test(const SketchedData& sd,
                                         const Eigen::MatrixXd& gram_over_n,
                                         double alpha) {
  if (sd.source_n < 1)
    throw DataError("normality test: sketch lacks source-size provenance");
  return mahalanobis_normality_rows(sd.stacked(), sd.source_n, gram_over_n,
                                    alpha);
}

AssumptionDiagnostics assumption_diagnostics(const Dataset& d) {
  const auto lp = leverage_profile(d, LeverageTarget::stacked);
  const Eigen::MatrixXd a = d.stacked();
  const Eigen::MatrixXd gram = a.transpose() * a / static_cast<double>(d.n());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const auto& ev = es.eigenvalues();
  AssumptionDiagnostics out;
  out.max_leverage = lp.max_score;
  out.gram_condition = (ev[0] > 0.0) ? ev[ev.size() - 1] / ev[0]
                                     : std::numeric_limits<double>::infinity();
  out.warning = out.max_leverage > 0.1;  // heuristic threshold
  return out;
}

}  // namespace sketchls
