#include <doctest.h>

#include <cmath>

#include "sketchls/estimators.hpp"
#include "sketchls/rng.hpp"

using namespace sketchls;

namespace {

Dataset random_dataset(Eigen::Index n, Eigen::Index p, std::uint64_t seed,
                       double noise = 0.5) {
  rng::Engine eng(seed);
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = eng.normal();
  Eigen::VectorXd beta(p);
  for (Eigen::Index j = 0; j < p; ++j) beta[j] = eng.normal();
  Eigen::VectorXd y = x * beta;
  for (Eigen::Index i = 0; i < n; ++i) y[i] += noise * eng.normal();
  return make_dataset(y, x);
}

// A "sketch" that is just the original data: every estimator should then
// reproduce the exact least-squares fit.
SketchedData identity_sketch(const Dataset& d) {
  SketchedData sd;
  sd.y_tilde = d.y;
  sd.x_tilde = d.X;
  sd.spec = SketchSpec{SketchKind::gaussian, d.n(), 0};
  sd.source_n = d.n();
  return sd;
}

}  // namespace

TEST_CASE("full moments agree with the direct normal equations") {
  const Dataset d = random_dataset(60, 4, 1);
  const FitSummary fs = fit_full(d);
  const FullMoments fm = full_moments(d, fs);
  CHECK((fm.xty - d.X.transpose() * d.y).cwiseAbs().maxCoeff() < 1e-10);
  const Eigen::MatrixXd gram = d.X.transpose() * d.X;
  CHECK((fm.xtx_inv * gram - Eigen::MatrixXd::Identity(4, 4))
            .cwiseAbs()
            .maxCoeff() < 1e-10);
  CHECK(fm.rss == fs.rss);
  CHECK(fm.mss == fs.mss);
}

TEST_CASE("complete estimator on unsketched data equals the exact fit") {
  const Dataset d = random_dataset(50, 3, 2);
  const FitSummary fs = fit_full(d);
  const Estimate e = beta_complete(identity_sketch(d));
  CHECK((e.beta - fs.beta_f).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(*e.rss_s == doctest::Approx(fs.rss).epsilon(1e-10));
  CHECK(*e.mss_s == doctest::Approx(fs.mss).epsilon(1e-10));
  CHECK_FALSE(e.rank_deficient);
}

TEST_CASE("partial estimator on unsketched data equals the exact fit") {
  const Dataset d = random_dataset(50, 3, 3);
  const FitSummary fs = fit_full(d);
  const FullMoments fm = full_moments(d, fs);
  const Estimate e = beta_partial(identity_sketch(d), fm);
  CHECK((e.beta - fs.beta_f).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("bias correction rescales by (k-p-1)/k") {
  const Dataset d = random_dataset(40, 3, 4);
  const FitSummary fs = fit_full(d);
  const FullMoments fm = full_moments(d, fs);
  const SketchedData sd = sketch_dataset(d, {SketchKind::gaussian, 20, 9});
  const Estimate ep = beta_partial(sd, fm);
  const Estimate eps = beta_partial_unbiased(sd, fm);
  const double factor = (20.0 - 3.0 - 1.0) / 20.0;
  CHECK((eps.beta - factor * ep.beta).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("bias correction enforces its sketch-size threshold") {
  const Dataset d = random_dataset(40, 3, 5);
  const FullMoments fm = full_moments(d, fit_full(d));
  const SketchedData sd = sketch_dataset(d, {SketchKind::gaussian, 4, 9});
  CHECK_THROWS_AS(beta_partial_unbiased(sd, fm), DataError);
}

TEST_CASE("optimal combination weight is the variance ratio") {
  CHECK(phi_opt(3.0, 1.0) == doctest::Approx(0.25));
  CHECK(phi_opt(1.0, 3.0) == doctest::Approx(0.75));
  CHECK(phi_opt(0.0, 2.0) == doctest::Approx(1.0));
  CHECK_THROWS(phi_opt(0.0, 0.0));
  CHECK_THROWS(phi_opt(-1.0, 2.0));
}

TEST_CASE("combined estimator interpolates and checks provenance") {
  const Dataset d = random_dataset(40, 3, 6);
  const FullMoments fm = full_moments(d, fit_full(d));
  const SketchedData sd = sketch_dataset(d, {SketchKind::gaussian, 20, 9});
  const Estimate e_s = beta_complete(sd);
  const Estimate e_p = beta_partial_unbiased(sd, fm);
  const Estimate e_c = beta_combined(e_s, e_p, 0.3);
  CHECK((e_c.beta - (0.3 * e_s.beta + 0.7 * e_p.beta)).cwiseAbs().maxCoeff() <
        1e-14);
  CHECK_THROWS(beta_combined(e_s, e_p, 1.5));
  const SketchedData other = sketch_dataset(d, {SketchKind::gaussian, 20, 10});
  const Estimate e_p2 = beta_partial_unbiased(other, fm);
  CHECK_THROWS_AS(beta_combined(e_s, e_p2, 0.5), DataError);
}

TEST_CASE("one-step correction sharply reduces the complete-sketch error") {
  const Dataset d = random_dataset(400, 5, 7);
  const FitSummary fs = fit_full(d);
  const SketchedData sd = sketch_dataset(d, {SketchKind::gaussian, 100, 9});
  const Estimate e_s = beta_complete(sd);
  const Estimate e_h = beta_onestep(e_s, sd, d);
  const double err_s = (e_s.beta - fs.beta_f).squaredNorm();
  const double err_h = (e_h.beta - fs.beta_f).squaredNorm();
  CHECK(err_h < err_s);
}

TEST_CASE("one-step is exact when the sketched Gram is exact") {
  const Dataset d = random_dataset(50, 3, 8);
  const FitSummary fs = fit_full(d);
  const SketchedData sd = identity_sketch(d);
  Estimate start = beta_complete(sd);
  start.beta.setZero();  // any starting point works when the Gram is exact
  const Estimate e_h = beta_onestep(start, sd, d);
  CHECK((e_h.beta - fs.beta_f).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("rank-deficient sketches are flagged, not fatal") {
  const Dataset d = random_dataset(40, 5, 9);
  // k < p forces a rank-deficient sketched design.
  const SketchedData sd = sketch_dataset(d, {SketchKind::gaussian, 3, 9});
  const Estimate e = beta_complete(sd);
  CHECK(e.rank_deficient);
  CHECK(e.beta.allFinite());
  const auto gram = sketched_gram_inverse(sd.x_tilde);
  CHECK(gram.rank_deficient);
  CHECK(gram.inv.allFinite());
}

TEST_CASE("estimator names round-trip, including aliases") {
  for (const auto kind :
       {EstimatorKind::full, EstimatorKind::complete, EstimatorKind::partial,
        EstimatorKind::partial_unbiased, EstimatorKind::combined,
        EstimatorKind::one_step})
    CHECK(estimator_kind_from_string(to_string(kind)) == kind);
  CHECK(estimator_kind_from_string("s") == EstimatorKind::complete);
  CHECK(estimator_kind_from_string("p") == EstimatorKind::partial);
  CHECK(estimator_kind_from_string("pstar") == EstimatorKind::partial_unbiased);
  CHECK(estimator_kind_from_string("onestep") == EstimatorKind::one_step);
  CHECK_THROWS(estimator_kind_from_string("bogus"));
}
