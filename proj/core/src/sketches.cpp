#include "sketchls/sketches.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "sketchls/rng.hpp"

namespace sketchls {

const char* to_string(SketchKind kind) {
  switch (kind) {
    case SketchKind::gaussian: return "gaussian";
    case SketchKind::hadamard: return "hadamard";
    case SketchKind::clarkson_woodruff: return "clarkson_woodruff";
    case SketchKind::uniform: return "uniform";
    case SketchKind::leverage_aware: return "leverage_aware";
  }
  return "?";
}

SketchKind sketch_kind_from_string(const std::string& s) {
  if (s == "gaussian") return SketchKind::gaussian;
  if (s == "hadamard") return SketchKind::hadamard;
  if (s == "clarkson_woodruff" || s == "cw") return SketchKind::clarkson_woodruff;
  if (s == "uniform") return SketchKind::uniform;
  if (s == "leverage_aware" || s == "leverage") return SketchKind::leverage_aware;
  throw std::invalid_argument("unknown sketch kind: " + s);
}

Eigen::MatrixXd SketchedData::stacked() const {
  Eigen::MatrixXd a(k(), p() + 1);
  a.col(0) = y_tilde;
  a.rightCols(p()) = x_tilde;
  return a;
}

Eigen::Index next_pow2(Eigen::Index n) {
  Eigen::Index m = 1;
  while (m < n) m <<= 1;
  return m;
}

void fwht(Eigen::Ref<Eigen::VectorXd> v) {
  const Eigen::Index n = v.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw std::invalid_argument("fwht: length must be a power of two");
  for (Eigen::Index h = 1; h < n; h <<= 1) {
    for (Eigen::Index i = 0; i < n; i += h << 1) {
      for (Eigen::Index j = i; j < i + h; ++j) {
        const double x = v[j];
        const double y = v[j + h];
        v[j] = x + y;
        v[j + h] = x - y;
      }
    }
  }
}

namespace {

void check_spec(const SketchSpec& spec, SketchKind expected) {
  if (spec.kind != expected)
    throw std::invalid_argument(std::string("sketch spec kind is ") +
                                to_string(spec.kind) + ", expected " +
                                to_string(expected));
  if (spec.k < 1) throw std::invalid_argument("sketch size k must be >= 1");
}

// Gaussian rows of S in row-major draw order; shared by the streaming and
// dense paths so the realized S is identical.
Eigen::MatrixXd gaussian_rows(rng::Engine& eng, Eigen::Index rows,
                              Eigen::Index n, double scale) {
  Eigen::MatrixXd s(rows, n);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < n; ++c) s(r, c) = eng.normal() * scale;
  return s;
}

struct HadamardDraws {
  Eigen::VectorXd signs;             // n' Rademacher diagonal of D
  std::vector<Eigen::Index> rows;    // k sampled rows of H, with replacement
};

HadamardDraws hadamard_draws(const SketchSpec& spec, Eigen::Index n_pad) {
  rng::Engine eng(spec.seed);
  HadamardDraws d;
  d.signs.resize(n_pad);
  for (Eigen::Index i = 0; i < n_pad; ++i) d.signs[i] = eng.rademacher();
  d.rows.resize(static_cast<std::size_t>(spec.k));
  for (auto& r : d.rows)
    r = static_cast<Eigen::Index>(eng.bounded(static_cast<std::uint64_t>(n_pad)));
  return d;
}

struct SubsampleDraws {
  std::vector<Eigen::Index> rows;  // k sampled source rows
  Eigen::VectorXd pi;              // sampling weights used
};

SubsampleDraws subsample_draws(const SketchSpec& spec, Eigen::Index n,
                               const std::optional<Eigen::VectorXd>& weights,
                               const Eigen::MatrixXd* a) {
  Eigen::VectorXd pi;
  if (spec.kind == SketchKind::uniform) {
    pi = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  } else if (weights) {
    pi = *weights;
  } else if (a != nullptr) {
    const auto lp = leverage_scores(*a);
    pi = lp.scores / static_cast<double>(a->cols());
  } else {
    throw std::invalid_argument(
        "leverage_aware sketch needs explicit weights here");
  }
  if (pi.size() != n) throw std::invalid_argument("weights length must be n");
  if (pi.minCoeff() <= 0.0)
    throw DataError("sampling weights must be strictly positive");
  if (std::abs(pi.sum() - 1.0) > 1e-8)
    throw DataError("sampling weights must sum to 1, got " +
                    std::to_string(pi.sum()));

  Eigen::VectorXd cum(n);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    acc += pi[i];
    cum[i] = acc;
  }
  cum[n - 1] = 1.0;

  rng::Engine eng(spec.seed);
  SubsampleDraws d;
  d.pi = std::move(pi);
  d.rows.resize(static_cast<std::size_t>(spec.k));
  for (auto& r : d.rows) {
    const double u = eng.uniform();
    const double* it = std::upper_bound(cum.data(), cum.data() + n, u);
    r = std::min<Eigen::Index>(it - cum.data(), n - 1);
  }
  return d;
}

}  // namespace

Eigen::MatrixXd apply_gaussian(const Eigen::MatrixXd& a, const SketchSpec& spec) {
  check_spec(spec, SketchKind::gaussian);
  const Eigen::Index n = a.rows();
  const double scale = 1.0 / std::sqrt(static_cast<double>(spec.k));
  rng::Engine eng(spec.seed);

  Eigen::MatrixXd out(spec.k, a.cols());
  constexpr Eigen::Index kBlock = 256;
  for (Eigen::Index r0 = 0; r0 < spec.k; r0 += kBlock) {
    const Eigen::Index rows = std::min(kBlock, spec.k - r0);
    out.middleRows(r0, rows).noalias() = gaussian_rows(eng, rows, n, scale) * a;
  }
  return out;
}

Eigen::MatrixXd apply_hadamard(const Eigen::MatrixXd& a, const SketchSpec& spec) {
  check_spec(spec, SketchKind::hadamard);
  const Eigen::Index n = a.rows();
  const Eigen::Index d = a.cols();
  const Eigen::Index n_pad = next_pow2(n);
  const auto draws = hadamard_draws(spec, n_pad);

  // B = H D A_padded, column by column.
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n_pad, d);
  b.topRows(n) = draws.signs.head(n).asDiagonal() * a;
  for (Eigen::Index j = 0; j < d; ++j) fwht(b.col(j));

  const double scale = 1.0 / std::sqrt(static_cast<double>(spec.k));
  Eigen::MatrixXd out(spec.k, d);
  for (Eigen::Index r = 0; r < spec.k; ++r)
    out.row(r) = b.row(draws.rows[static_cast<std::size_t>(r)]) * scale;
  return out;
}

Eigen::MatrixXd apply_clarkson_woodruff(const Eigen::MatrixXd& a,
                                        const SketchSpec& spec) {
  check_spec(spec, SketchKind::clarkson_woodruff);
  rng::Engine eng(spec.seed);
  // Row-major accumulator: each source row updates one contiguous output
  // row, keeping the streaming pass cache-friendly for any k.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> acc =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                    Eigen::RowMajor>::Zero(spec.k, a.cols());
  // Single streaming pass over the source rows.
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const auto z = static_cast<Eigen::Index>(
        eng.bounded(static_cast<std::uint64_t>(spec.k)));
    const double r = eng.rademacher();
    acc.row(z) += r * a.row(i);
  }
  return acc;
}

Eigen::MatrixXd apply_subsample(const Eigen::MatrixXd& a, const SketchSpec& spec,
                                const std::optional<Eigen::VectorXd>& weights) {
  if (spec.kind != SketchKind::uniform &&
      spec.kind != SketchKind::leverage_aware)
    throw std::invalid_argument("apply_subsample needs a subsampling kind");
  if (spec.k < 1) throw std::invalid_argument("sketch size k must be >= 1");
  const auto draws = subsample_draws(spec, a.rows(), weights, &a);

  Eigen::MatrixXd out(spec.k, a.cols());
  const double kd = static_cast<double>(spec.k);
  for (Eigen::Index r = 0; r < spec.k; ++r) {
    const Eigen::Index j = draws.rows[static_cast<std::size_t>(r)];
    out.row(r) = a.row(j) / std::sqrt(kd * draws.pi[j]);
  }
  return out;
}

Eigen::MatrixXd apply_sketch(const Eigen::MatrixXd& a, const SketchSpec& spec,
                             const std::optional<Eigen::VectorXd>& weights) {
  switch (spec.kind) {
    case SketchKind::gaussian: return apply_gaussian(a, spec);
    case SketchKind::hadamard: return apply_hadamard(a, spec);
    case SketchKind::clarkson_woodruff: return apply_clarkson_woodruff(a, spec);
    case SketchKind::uniform:
    case SketchKind::leverage_aware: return apply_subsample(a, spec, weights);
  }
  throw std::invalid_argument("unknown sketch kind");
}

std::uint64_t fingerprint(const Eigen::MatrixXd& a) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto fold = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  fold(static_cast<std::uint64_t>(a.rows()));
  fold(static_cast<std::uint64_t>(a.cols()));
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      std::uint64_t bits;
      const double v = a(i, j);
      std::memcpy(&bits, &v, sizeof(bits));
      fold(bits);
    }
  return h;
}

SketchedData sketch_dataset(const Dataset& d, const SketchSpec& spec) {
  const Eigen::MatrixXd a = d.stacked();
  const Eigen::MatrixXd sa = apply_sketch(a, spec);
  SketchedData sd;
  sd.y_tilde = sa.col(0);
  sd.x_tilde = sa.rightCols(sa.cols() - 1);
  sd.spec = spec;
  sd.source_fingerprint = fingerprint(a);
  sd.source_n = d.n();
  return sd;
}

Eigen::MatrixXd materialize_sketch(const SketchSpec& spec, Eigen::Index n,
                                   const std::optional<Eigen::VectorXd>& weights) {
  const Eigen::Index cols =
      (spec.kind == SketchKind::hadamard) ? next_pow2(n) : n;
  if (spec.k * cols > 10'000'000)
    throw DataError("materialize_sketch: k*n exceeds dense-storage guard");

  switch (spec.kind) {
    case SketchKind::gaussian: {
      rng::Engine eng(spec.seed);
      return gaussian_rows(eng, spec.k, n,
                           1.0 / std::sqrt(static_cast<double>(spec.k)));
    }
    case SketchKind::hadamard: {
      const auto draws = hadamard_draws(spec, cols);
      const double scale = 1.0 / std::sqrt(static_cast<double>(spec.k));
      Eigen::MatrixXd s(spec.k, cols);
      for (Eigen::Index r = 0; r < spec.k; ++r) {
        const auto hr = static_cast<std::uint64_t>(
            draws.rows[static_cast<std::size_t>(r)]);
        for (Eigen::Index c = 0; c < cols; ++c) {
          const double h =
              (std::popcount(hr & static_cast<std::uint64_t>(c)) & 1) ? -1.0
                                                                      : 1.0;
          s(r, c) = h * draws.signs[c] * scale;
        }
      }
      return s;
    }
    case SketchKind::clarkson_woodruff: {
      rng::Engine eng(spec.seed);
      Eigen::MatrixXd s = Eigen::MatrixXd::Zero(spec.k, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto z = static_cast<Eigen::Index>(
            eng.bounded(static_cast<std::uint64_t>(spec.k)));
        s(z, i) = eng.rademacher();
      }
      return s;
    }
    case SketchKind::uniform:
    case SketchKind::leverage_aware: {
      const auto draws = subsample_draws(spec, n, weights, nullptr);
      Eigen::MatrixXd s = Eigen::MatrixXd::Zero(spec.k, n);
      const double kd = static_cast<double>(spec.k);
      for (Eigen::Index r = 0; r < spec.k; ++r) {
        const Eigen::Index j = draws.rows[static_cast<std::size_t>(r)];
        s(r, j) += 1.0 / std::sqrt(kd * draws.pi[j]);
      }
      return s;
    }
  }
  throw std::invalid_argument("unknown sketch kind");
}

Eigen::Index recommend_sketch_size(SketchKind kind, Eigen::Index d,
                                   Eigen::Index n, double epsilon,
                                   double delta) {
  if (!(epsilon > 0.0 && epsilon <= 1.0) || !(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("recommend_sketch_size: need eps in (0,1], delta in (0,1)");
  const double dd = static_cast<double>(d);
  const double e2 = epsilon * epsilon;
  double value;
  switch (kind) {
    case SketchKind::gaussian:
      value = (dd + std::log(1.0 / delta)) / e2;
      break;
    case SketchKind::hadamard: {
      const double root = std::sqrt(dd) + std::sqrt(std::log(static_cast<double>(n)));
      value = root * root * std::log(dd / delta) / e2;
      break;
    }
    case SketchKind::clarkson_woodruff:
      value = dd * dd / (delta * e2);
      break;
    default:
      throw std::invalid_argument(
          "recommend_sketch_size: defined for the data-oblivious kinds only");
  }
  return static_cast<Eigen::Index>(std::ceil(value));
}

}  // namespace sketchls
