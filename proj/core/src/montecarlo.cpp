#include "sketchls/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <thread>

#include "sketchls/rng.hpp"

namespace sketchls {

namespace {

void parallel_for(int total, int parallelism,
                  const std::function<void(int)>& body) {
  int workers = parallelism > 0
                    ? parallelism
                    : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  workers = std::min(workers, total);
  if (workers <= 1) {
    for (int i = 0; i < total; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < total; i = next.fetch_add(1))
        body(i);
    });
  }
  for (auto& t : pool) t.join();
}

// Compensated summation keeps aggregates stable against ordering noise.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - c_;
    const double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

double kahan_mean(const std::vector<double>& xs, const std::vector<bool>& ok) {
  KahanSum sum;
  long count = 0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (ok[i]) {
      sum.add(xs[i]);
      ++count;
    }
  return count > 0 ? sum.value() / static_cast<double>(count) : 0.0;
}

double kahan_se(const std::vector<double>& xs, const std::vector<bool>& ok,
                double mean) {
  KahanSum sum;
  long count = 0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (ok[i]) {
      const double d = xs[i] - mean;
      sum.add(d * d);
      ++count;
    }
  if (count < 2) return 0.0;
  return std::sqrt(sum.value() / static_cast<double>(count - 1) /
                   static_cast<double>(count));
}

}  // namespace

SyntheticData synthetic_dataset(Eigen::Index n, Eigen::Index p,
                                std::uint64_t seed, double noise_var,
                                double beta_var, double rho) {
  if (n <= p) throw DataError("synthetic_dataset: need n > p");
  rng::Engine eng(seed);

  Eigen::VectorXd beta0(p);
  const double beta_sd = std::sqrt(beta_var);
  for (Eigen::Index j = 0; j < p; ++j) beta0[j] = eng.normal() * beta_sd;

  // AR(1) recursion realizes the Cholesky factor of Sigma_ij = rho^|i-j|.
  Eigen::MatrixXd x(n, p);
  const double innov = std::sqrt(1.0 - rho * rho);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = eng.normal();
    for (Eigen::Index j = 1; j < p; ++j)
      x(i, j) = rho * x(i, j - 1) + innov * eng.normal();
  }

  Eigen::VectorXd eps(n);
  const double noise_sd = std::sqrt(noise_var);
  for (Eigen::Index i = 0; i < n; ++i) eps[i] = eng.normal() * noise_sd;

  SyntheticData out{
      make_dataset(x * beta0 + eps, x),
      PopulationModel{beta0, noise_var, (x * beta0).squaredNorm() /
                                            static_cast<double>(n)}};
  return out;
}

SyntheticData synthetic_dataset(const SyntheticSpec& spec) {
  return synthetic_dataset(spec.n, spec.p, spec.seed, spec.noise_var,
                           spec.beta_var, spec.rho);
}

ResolvedData resolve_dataset(const DatasetSource& source) {
  if (std::holds_alternative<SyntheticSpec>(source)) {
    auto sd = synthetic_dataset(std::get<SyntheticSpec>(source));
    return {std::move(sd.dataset), std::move(sd.population)};
  }
  const auto& csv = std::get<CsvSpec>(source);
  return {load_csv(csv.path, csv.response, csv.intercept), std::nullopt};
}

std::uint64_t child_seed(std::uint64_t master, int rep, SketchKind kind,
                         Eigen::Index k) {
  const std::uint64_t tag = (static_cast<std::uint64_t>(kind) + 1) |
                            (static_cast<std::uint64_t>(k) << 8);
  return rng::mix(master, static_cast<std::uint64_t>(rep), tag);
}

namespace {

struct EstimateSet {
  std::optional<Estimate> s, p, pstar, combined, onestep;
};

// Compute the requested estimators from one sketch, sharing work.
EstimateSet compute_estimators(const SketchedData& sd, const FullMoments& fm,
                               const std::vector<EstimatorKind>& wanted,
                               const PhiChoice& phi_choice, double phi_oracle) {
  EstimateSet es;
  auto want = [&wanted](EstimatorKind k) {
    return std::find(wanted.begin(), wanted.end(), k) != wanted.end();
  };
  const bool need_s = want(EstimatorKind::complete) ||
                      want(EstimatorKind::combined) ||
                      want(EstimatorKind::one_step);
  const bool need_pstar =
      want(EstimatorKind::partial_unbiased) || want(EstimatorKind::combined);
  if (need_s) es.s = beta_complete(sd);
  if (want(EstimatorKind::partial)) es.p = beta_partial(sd, fm);
  if (need_pstar) es.pstar = beta_partial_unbiased(sd, fm);
  if (want(EstimatorKind::combined)) {
    double phi = phi_oracle;
    if (phi_choice.mode == PhiMode::fixed) {
      phi = phi_choice.value;
    } else if (phi_choice.mode == PhiMode::plugin) {
      const double ts = var_complete_plugin(sd, *es.s).trace;
      const double tp = var_partial_plugin(sd, *es.pstar, fm).trace;
      phi = phi_opt(ts, tp);
    }
    es.combined = beta_combined(*es.s, *es.pstar, phi);
  }
  if (want(EstimatorKind::one_step)) {
    // one_step needs the full dataset; done by the caller.
  }
  return es;
}

const Estimate* pick(const EstimateSet& es, EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::complete: return es.s ? &*es.s : nullptr;
    case EstimatorKind::partial: return es.p ? &*es.p : nullptr;
    case EstimatorKind::partial_unbiased: return es.pstar ? &*es.pstar : nullptr;
    case EstimatorKind::combined: return es.combined ? &*es.combined : nullptr;
    case EstimatorKind::one_step: return es.onestep ? &*es.onestep : nullptr;
    default: return nullptr;
  }
}

double oracle_phi(const ExperimentConfig& cfg, const FullMoments& fm,
                  Eigen::Index k, Eigen::Index p) {
  if (cfg.phi.mode != PhiMode::oracle ||
      std::find(cfg.estimators.begin(), cfg.estimators.end(),
                EstimatorKind::combined) == cfg.estimators.end())
    return 0.5;
  const double ts = var_complete(fm.rss, k, p, fm.xtx_inv).trace;
  const double tp =
      var_partial(fm.mss, k, p, fm.xtx_inv, fm.beta_f, true).trace;
  return phi_opt(ts, tp);
}

}  // namespace

ExperimentReport run_mse_experiment(const ExperimentConfig& cfg) {
  if (cfg.replications < 1) throw DataError("replications must be >= 1");
  const auto rd = resolve_dataset(cfg.dataset);
  const Dataset& d = rd.dataset;
  const FitSummary fs = fit_full(d);
  const FullMoments fm = full_moments(d, fs);
  const int reps = cfg.replications;

  ExperimentReport report;
  report.master_seed = cfg.master_seed;

  for (const SketchKind kind : cfg.kinds) {
    for (const Eigen::Index k : cfg.ks) {
      const double phi_orc = oracle_phi(cfg, fm, k, d.p());
      const std::size_t n_est = cfg.estimators.size();
      std::vector<std::vector<double>> err(n_est,
                                           std::vector<double>(reps, 0.0));
      std::vector<Eigen::MatrixXd> betas(
          n_est, Eigen::MatrixXd::Zero(d.p(), reps));
      std::vector<bool> ok(reps, true);

      parallel_for(reps, cfg.parallelism, [&](int rep) {
        try {
          const SketchSpec spec{kind, k, child_seed(cfg.master_seed, rep,
                                                    kind, k)};
          const SketchedData sd = sketch_dataset(d, spec);
          EstimateSet es =
              compute_estimators(sd, fm, cfg.estimators, cfg.phi, phi_orc);
          if (std::find(cfg.estimators.begin(), cfg.estimators.end(),
                        EstimatorKind::one_step) != cfg.estimators.end()) {
            const Estimate base = es.s ? *es.s : beta_complete(sd);
            es.onestep = beta_onestep(base, sd, d);
          }
          for (std::size_t e = 0; e < n_est; ++e) {
            if (cfg.estimators[e] == EstimatorKind::full) {
              err[e][rep] = 0.0;
              betas[e].col(rep) = fs.beta_f;
              continue;
            }
            const Estimate* est = pick(es, cfg.estimators[e]);
            if (est == nullptr || est->rank_deficient) {
              ok[rep] = false;
              continue;
            }
            err[e][rep] = (est->beta - fs.beta_f).squaredNorm();
            betas[e].col(rep) = est->beta;
          }
        } catch (const std::exception&) {
          ok[rep] = false;
        }
      });

      for (std::size_t e = 0; e < n_est; ++e) {
        ReportCell cell;
        cell.kind = kind;
        cell.k = k;
        cell.estimator = cfg.estimators[e];
        cell.mse_mean = kahan_mean(err[e], ok);
        cell.mse_se = kahan_se(err[e], ok, cell.mse_mean);
        Eigen::VectorXd mean_beta = Eigen::VectorXd::Zero(d.p());
        long count = 0;
        for (int rep = 0; rep < reps; ++rep)
          if (ok[rep]) {
            mean_beta += betas[e].col(rep);
            ++count;
          }
        cell.bias = (count > 0)
                        ? Eigen::VectorXd((mean_beta / count) - fs.beta_f)
                        : Eigen::VectorXd::Zero(d.p());
        cell.failed_reps =
            reps - static_cast<int>(std::count(ok.begin(), ok.end(), true));
        report.cells.push_back(std::move(cell));
        for (int rep = 0; rep < reps; ++rep)
          report.records.push_back({rep, kind, k, cfg.estimators[e],
                                    err[e][rep], 0, 0, !ok[rep]});
      }
    }
  }
  return report;
}

ExperimentReport run_coverage_experiment(const ExperimentConfig& cfg) {
  if (cfg.replications < 1) throw DataError("replications must be >= 1");
  for (const auto est : cfg.estimators)
    if (est != EstimatorKind::complete && est != EstimatorKind::partial_unbiased)
      throw DataError("coverage experiment supports complete and "
                      "partial_unbiased estimators only");
  const auto rd = resolve_dataset(cfg.dataset);
  const Dataset& d = rd.dataset;
  const FitSummary fs = fit_full(d);
  const FullMoments fm = full_moments(d, fs);
  const int reps = cfg.replications;

  ExperimentReport report;
  report.master_seed = cfg.master_seed;

  for (const SketchKind kind : cfg.kinds) {
    const CiMethod complete_method = (kind == SketchKind::gaussian)
                                         ? CiMethod::exact_t
                                         : CiMethod::asymptotic_normal;
    for (const Eigen::Index k : cfg.ks) {
      const std::size_t n_est = cfg.estimators.size();
      std::vector<std::vector<int>> covered(n_est,
                                            std::vector<int>(reps, 0));
      std::vector<bool> ok(reps, true);

      parallel_for(reps, cfg.parallelism, [&](int rep) {
        try {
          const SketchSpec spec{kind, k, child_seed(cfg.master_seed, rep,
                                                    kind, k)};
          const SketchedData sd = sketch_dataset(d, spec);
          for (std::size_t e = 0; e < n_est; ++e) {
            ConfidenceIntervals ci;
            if (cfg.estimators[e] == EstimatorKind::complete) {
              const Estimate e_s = beta_complete(sd);
              if (e_s.rank_deficient) { ok[rep] = false; continue; }
              ci = ci_complete(sd, e_s, cfg.alpha, complete_method);
            } else {
              const Estimate e_pstar = beta_partial_unbiased(sd, fm);
              if (e_pstar.rank_deficient) { ok[rep] = false; continue; }
              const VarianceReport v = var_partial_plugin(sd, e_pstar, fm);
              ci = ci_partial(e_pstar, v, cfg.alpha);
            }
            int c = 0;
            for (Eigen::Index i = 0; i < d.p(); ++i)
              if (fs.beta_f[i] >= ci.lower[i] && fs.beta_f[i] <= ci.upper[i])
                ++c;
            covered[e][rep] = c;
          }
        } catch (const std::exception&) {
          ok[rep] = false;
        }
      });

      for (std::size_t e = 0; e < n_est; ++e) {
        ReportCell cell;
        cell.kind = kind;
        cell.k = k;
        cell.estimator = cfg.estimators[e];
        long hits = 0, pairs = 0;
        for (int rep = 0; rep < reps; ++rep)
          if (ok[rep]) {
            hits += covered[e][rep];
            pairs += d.p();
          }
        cell.coverage = pairs > 0 ? static_cast<double>(hits) / pairs : 0.0;
        cell.coverage_se =
            pairs > 0 ? std::sqrt(cell.coverage * (1.0 - cell.coverage) /
                                  static_cast<double>(pairs))
                      : 0.0;
        cell.pairs = pairs;
        cell.failed_reps =
            reps - static_cast<int>(std::count(ok.begin(), ok.end(), true));
        report.cells.push_back(std::move(cell));
        for (int rep = 0; rep < reps; ++rep)
          report.records.push_back({rep, kind, k, cfg.estimators[e], 0.0,
                                    covered[e][rep],
                                    static_cast<int>(d.p()), !ok[rep]});
      }
    }
  }
  return report;
}

ExperimentReport run_normality_experiment(const ExperimentConfig& cfg) {
  if (cfg.n_grid.empty() || cfg.k_grid.empty())
    throw DataError("normality experiment needs n_grid and k_grid");
  const auto rd = resolve_dataset(cfg.dataset);
  const Dataset& parent = rd.dataset;
  for (const auto n : cfg.n_grid)
    if (n > parent.n())
      throw DataError("n_grid value exceeds parent dataset size");
  const int reps = cfg.replications;

  ExperimentReport report;
  report.master_seed = cfg.master_seed;

  for (const Eigen::Index n : cfg.n_grid) {
    // One fixed subsample per n: the leading rows of the parent.
    const Dataset sub = make_dataset(parent.y.head(n), parent.X.topRows(n),
                                     parent.names);
    const Eigen::MatrixXd a = sub.stacked();
    const Eigen::MatrixXd gram = a.transpose() * a / static_cast<double>(n);
    const FitSummary fs = fit_full(sub);
    const Eigen::VectorXd resid = sub.y - sub.X * fs.beta_f;
    Eigen::MatrixXd resid_gram(1, 1);
    resid_gram(0, 0) = resid.squaredNorm() / static_cast<double>(n);
    const std::uint64_t seed_base =
        rng::mix(cfg.master_seed, static_cast<std::uint64_t>(n));

    for (const SketchKind kind : cfg.kinds) {
      for (const Eigen::Index k : cfg.k_grid) {
        std::vector<int> reject_row(reps, 0), reject_resid(reps, 0);
        parallel_for(reps, cfg.parallelism, [&](int rep) {
          const SketchSpec spec{kind, k, child_seed(seed_base, rep, kind, k)};
          const Eigen::MatrixXd sa = apply_sketch(a, spec);
          const auto row_test =
              mahalanobis_normality_rows(sa, n, gram, cfg.alpha);
          reject_row[rep] = row_test.reject ? 1 : 0;
          // Sketched residual e~ = y~ - X~ beta_F from the same sketch.
          const Eigen::MatrixXd e_tilde =
              sa.col(0) - sa.rightCols(sub.p()) * fs.beta_f;
          const auto resid_test =
              mahalanobis_normality_rows(e_tilde, n, resid_gram, cfg.alpha);
          reject_resid[rep] = resid_test.reject ? 1 : 0;
        });
        const double denom = static_cast<double>(reps);
        report.normality.push_back(
            {n, k, kind, "full_row",
             std::accumulate(reject_row.begin(), reject_row.end(), 0) / denom});
        report.normality.push_back(
            {n, k, kind, "residual",
             std::accumulate(reject_resid.begin(), reject_resid.end(), 0) /
                 denom});
      }
    }
  }
  return report;
}

ExperimentReport run_timing_experiment(const ExperimentConfig& cfg) {
  const auto rd = resolve_dataset(cfg.dataset);
  const Eigen::MatrixXd a = rd.dataset.stacked();
  const int runs = std::max(cfg.timing_runs, 10);

  ExperimentReport report;
  report.master_seed = cfg.master_seed;

  for (const SketchKind kind : cfg.kinds) {
    for (const Eigen::Index k : cfg.ks) {
      std::vector<double> secs(static_cast<std::size_t>(runs));
      // Warm-up run discarded.
      (void)apply_sketch(a, {kind, k, child_seed(cfg.master_seed, -1, kind, k)});
      for (int r = 0; r < runs; ++r) {
        const SketchSpec spec{kind, k, child_seed(cfg.master_seed, r, kind, k)};
        const auto t0 = std::chrono::steady_clock::now();
        volatile double sink = apply_sketch(a, spec)(0, 0);
        (void)sink;
        const auto t1 = std::chrono::steady_clock::now();
        secs[static_cast<std::size_t>(r)] =
            std::chrono::duration<double>(t1 - t0).count();
      }
      // Median of pair means.
      std::vector<double> means;
      for (std::size_t i = 0; i + 1 < secs.size(); i += 2)
        means.push_back(0.5 * (secs[i] + secs[i + 1]));
      std::sort(means.begin(), means.end());
      ReportCell cell;
      cell.kind = kind;
      cell.k = k;
      cell.estimator = EstimatorKind::full;
      cell.timing_seconds = means[means.size() / 2];
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

}  // namespace sketchls
