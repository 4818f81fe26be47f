#include "sketchls/estimators.hpp"

#include <cmath>

namespace sketchls {

const char* to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::full: return "full";
    case EstimatorKind::complete: return "complete";
    case EstimatorKind::partial: return "partial";
    case EstimatorKind::partial_unbiased: return "partial_unbiased";
    case EstimatorKind::combined: return "combined";
    case EstimatorKind::one_step: return "one_step";
  }
  return "?";
}

EstimatorKind estimator_kind_from_string(const std::string& s) {
  if (s == "full") return EstimatorKind::full;
  if (s == "complete" || s == "s") return EstimatorKind::complete;
  if (s == "partial" || s == "p") return EstimatorKind::partial;
  if (s == "partial_unbiased" || s == "pstar")
    return EstimatorKind::partial_unbiased;
  if (s == "combined") return EstimatorKind::combined;
  if (s == "one_step" || s == "onestep") return EstimatorKind::one_step;
  throw std::invalid_argument("unknown estimator kind: " + s);
}

FullMoments full_moments(const Dataset& d, const FitSummary& fs) {
  FullMoments fm;
  fm.xty = d.X.transpose() * d.y;
  // (X'X)^-1 = R^-1 R^-T from the QR of X; the Gram matrix is never formed.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(d.X);
  const Eigen::MatrixXd r =
      qr.matrixQR().topRows(d.p()).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      r.triangularView<Eigen::Upper>().solve(
          Eigen::MatrixXd::Identity(d.p(), d.p()));
  fm.xtx_inv = r_inv * r_inv.transpose();
  fm.mss = fs.mss;
  fm.rss = fs.rss;
  fm.beta_f = fs.beta_f;
  return fm;
}

SketchedGramInverse sketched_gram_inverse(const Eigen::MatrixXd& x_tilde) {
  const Eigen::Index p = x_tilde.cols();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x_tilde);
  qr.setThreshold(1e-12);
  SketchedGramInverse out;
  if (qr.rank() == p) {
    const Eigen::MatrixXd r =
        qr.matrixR().topRows(p).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd r_inv = r.triangularView<Eigen::Upper>().solve(
        Eigen::MatrixXd::Identity(p, p));
    out.inv = qr.colsPermutation() * (r_inv * r_inv.transpose()) *
              qr.colsPermutation().transpose();
  } else {
    // (X~'X~)^+ = V S^-2 V' over the numerical-rank part.
    Eigen::BDCSVD<Eigen::MatrixXd> svd(x_tilde, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double thresh = rank_threshold(x_tilde, sv[0]);
    Eigen::VectorXd inv2 = Eigen::VectorXd::Zero(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv[i] > thresh) inv2[i] = 1.0 / (sv[i] * sv[i]);
    out.inv = svd.matrixV() * inv2.asDiagonal() * svd.matrixV().transpose();
    out.rank_deficient = true;
  }
  return out;
}

Estimate beta_complete(const SketchedData& sd) {
  Estimate e;
  e.kind = EstimatorKind::complete;
  e.spec = sd.spec;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sd.x_tilde);
  qr.setThreshold(1e-12);
  if (qr.rank() == sd.p()) {
    e.beta = qr.solve(sd.y_tilde);
  } else {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(sd.x_tilde,
                                       Eigen::ComputeThinU | Eigen::ComputeThinV);
    e.beta = svd.solve(sd.y_tilde);
    e.rank_deficient = true;
  }
  const Eigen::VectorXd fitted = sd.x_tilde * e.beta;
  e.rss_s = (sd.y_tilde - fitted).squaredNorm();
  e.mss_s = fitted.squaredNorm();
  return e;
}

Estimate beta_partial(const SketchedData& sd, const FullMoments& fm) {
  Estimate e;
  e.kind = EstimatorKind::partial;
  e.spec = sd.spec;
  const Eigen::Index p = sd.p();

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sd.x_tilde);
  qr.setThreshold(1e-12);
  if (qr.rank() == p) {
    // (X~'X~) b = X'y via two triangular solves on R.
    const Eigen::MatrixXd r =
        qr.matrixR().topRows(p).triangularView<Eigen::Upper>();
    Eigen::VectorXd w = qr.colsPermutation().transpose() * fm.xty;
    Eigen::VectorXd u =
        r.transpose().triangularView<Eigen::Lower>().solve(w);
    Eigen::VectorXd v = r.triangularView<Eigen::Upper>().solve(u);
    e.beta = qr.colsPermutation() * v;
  } else {
    const auto gram = sketched_gram_inverse(sd.x_tilde);
    e.beta = gram.inv * fm.xty;
    e.rank_deficient = true;
  }
  return e;
}

Estimate beta_partial_unbiased(const SketchedData& sd, const FullMoments& fm) {
  const Eigen::Index k = sd.k();
  const Eigen::Index p = sd.p();
  if (k <= p + 1)
    throw DataError("partial_unbiased needs k > p+1, got k=" +
                    std::to_string(k) + ", p=" + std::to_string(p));
  Estimate e = beta_partial(sd, fm);
  e.kind = EstimatorKind::partial_unbiased;
  e.beta *= static_cast<double>(k - p - 1) / static_cast<double>(k);
  return e;
}

double phi_opt(double trace_var_s, double trace_var_pstar) {
  if (trace_var_s < 0.0 || trace_var_pstar < 0.0)
    throw std::invalid_argument("phi_opt: traces must be nonnegative");
  const double total = trace_var_s + trace_var_pstar;
  if (total == 0.0) throw std::invalid_argument("phi_opt: both traces zero");
  return trace_var_pstar / total;
}

Estimate beta_combined(const Estimate& e_s, const Estimate& e_pstar,
                       double phi) {
  if (phi < 0.0 || phi > 1.0)
    throw std::invalid_argument("combined weight phi must lie in [0,1]");
  if (e_s.beta.size() != e_pstar.beta.size())
    throw DataError("combined: dimension mismatch");
  if (e_s.spec.kind != e_pstar.spec.kind || e_s.spec.k != e_pstar.spec.k ||
      e_s.spec.seed != e_pstar.spec.seed)
    throw DataError("combined: estimates come from different sketches");
  Estimate e;
  e.kind = EstimatorKind::combined;
  e.spec = e_s.spec;
  e.beta = phi * e_s.beta + (1.0 - phi) * e_pstar.beta;
  e.rank_deficient = e_s.rank_deficient || e_pstar.rank_deficient;
  return e;
}

Estimate beta_onestep(const Estimate& e_s, const SketchedData& sd,
                      const Dataset& d) {
  const auto gram = sketched_gram_inverse(sd.x_tilde);
  Estimate e;
  e.kind = EstimatorKind::one_step;
  e.spec = sd.spec;
  const Eigen::VectorXd gradient =
      d.X.transpose() * (d.y - d.X * e_s.beta);
  e.beta = e_s.beta + gram.inv * gradient;
  e.rank_deficient = gram.rank_deficient || e_s.rank_deficient;
  return e;
}

}  // namespace sketchls
