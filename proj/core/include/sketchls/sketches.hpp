#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>

#include "sketchls/dataset.hpp"
#include "sketchls/errors.hpp"

namespace sketchls {

enum class SketchKind {
  gaussian,
  hadamard,
  clarkson_woodruff,
  uniform,
  leverage_aware,
};

const char* to_string(SketchKind kind);
SketchKind sketch_kind_from_string(const std::string& s);

// Fully determines the random compression: same (A, spec) in, same bits out.
struct SketchSpec {
  SketchKind kind = SketchKind::gaussian;
  Eigen::Index k = 0;
  std::uint64_t seed = 0;
};

struct SketchedData {
  Eigen::VectorXd y_tilde;
  Eigen::MatrixXd x_tilde;
  SketchSpec spec;
  std::uint64_t source_fingerprint = 0;
  Eigen::Index source_n = 0;

  Eigen::Index k() const { return x_tilde.rows(); }
  Eigen::Index p() const { return x_tilde.cols(); }
  Eigen::MatrixXd stacked() const;
};

// In-place unnormalised fast Walsh-Hadamard transform (Sylvester order).
// Length must be a power of two; fwht(fwht(v)) == 2^m * v.
void fwht(Eigen::Ref<Eigen::VectorXd> v);

Eigen::Index next_pow2(Eigen::Index n);

Eigen::MatrixXd apply_gaussian(const Eigen::MatrixXd& a, const SketchSpec& spec);
Eigen::MatrixXd apply_hadamard(const Eigen::MatrixXd& a, const SketchSpec& spec);
Eigen::MatrixXd apply_clarkson_woodruff(const Eigen::MatrixXd& a,
                                        const SketchSpec& spec);
// Hansen-Hurwitz row subsampling; weights must be strictly positive and sum
// to one (tolerance 1e-8). kind==uniform forces 1/n, kind==leverage_aware
// defaults to leverage scores of `a` divided by d.
Eigen::MatrixXd apply_subsample(
    const Eigen::MatrixXd& a, const SketchSpec& spec,
    const std::optional<Eigen::VectorXd>& weights = std::nullopt);

// Dispatch on spec.kind.
Eigen::MatrixXd apply_sketch(
    const Eigen::MatrixXd& a, const SketchSpec& spec,
    const std::optional<Eigen::VectorXd>& weights = std::nullopt);

// Sketch the stacked matrix [y, X] of a dataset.
SketchedData sketch_dataset(const Dataset& d, const SketchSpec& spec);

std::uint64_t fingerprint(const Eigen::MatrixXd& a);

// Dense realization of S for the same seed; apply_*(A) == S * A_padded.
// For hadamard the returned S has next_pow2(n) columns. Guard: k*n <= 1e7.
Eigen::MatrixXd materialize_sketch(const SketchSpec& spec, Eigen::Index n,
                                   const std::optional<Eigen::VectorXd>& weights
                                   = std::nullopt);

// Advisory sketch size from published embedding bounds with unit constants.
// Defined for the three data-oblivious kinds.
Eigen::Index recommend_sketch_size(SketchKind kind, Eigen::Index d,
                                   Eigen::Index n, double epsilon,
                                   double delta);

}  // namespace sketchls
