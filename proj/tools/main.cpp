#include <CLI11.hpp>
#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sketchls/montecarlo.hpp"
#include "sketchls/rng.hpp"
#include "sketchls/serialize.hpp"

namespace {

using namespace sketchls;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open output file: " + path);
  return os;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  auto os = open_out(path);
  os << text;
}

struct IoFlags {
  std::string input;
  std::string response;
  bool intercept = false;
  std::string out;
};

void add_io_flags(CLI::App* cmd, IoFlags& io) {
  cmd->add_option("--input", io.input, "input CSV path")->required();
  cmd->add_option("--response", io.response, "response column name")
      ->required();
  cmd->add_flag("--intercept", io.intercept, "prepend a column of ones");
  cmd->add_option("-o,--out", io.out, "output path (default: stdout)");
}

struct SketchFlags {
  std::string method = "gaussian";
  Eigen::Index k = 0;
  std::uint64_t seed = 0;
};

void add_sketch_flags(CLI::App* cmd, SketchFlags& sf) {
  cmd->add_option("--method", sf.method,
                  "gaussian|hadamard|cw|uniform|leverage")
      ->required()
      ->check(CLI::IsMember({"gaussian", "hadamard", "cw", "clarkson_woodruff",
                             "uniform", "leverage", "leverage_aware"}));
  cmd->add_option("--k", sf.k, "sketch size")->required()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", sf.seed, "sketch seed")->required();
}

int cmd_sketch(const IoFlags& io, const SketchFlags& sf, bool materialize) {
  const SketchKind kind = sketch_kind_from_string(sf.method);
  const Dataset d = load_csv(io.input, io.response, io.intercept);
  const SketchSpec spec{kind, sf.k, sf.seed};
  std::ostringstream body;
  if (materialize) {
    std::optional<Eigen::VectorXd> weights;
    if (kind == SketchKind::leverage_aware) {
      const auto lp = leverage_scores(d.stacked());
      weights = Eigen::VectorXd(lp.scores / lp.sum_scores);
    }
    write_matrix_csv(body, materialize_sketch(spec, d.n(), weights));
  } else {
    const SketchedData sd = sketch_dataset(d, spec);
    std::vector<std::string> header{"y_tilde"};
    header.insert(header.end(), d.names.begin(), d.names.end());
    write_matrix_csv(body, sd.stacked(), header);
  }
  emit(io.out, body.str());
  return 0;
}

double resolve_phi(const std::string& phi_arg, const SketchedData& sd,
                   const FullMoments& fm, const Estimate& e_s,
                   const Estimate& e_pstar) {
  if (phi_arg == "oracle") {
    const double ts =
        var_complete(fm.rss, sd.k(), sd.p(), fm.xtx_inv).trace;
    const double tp =
        var_partial(fm.mss, sd.k(), sd.p(), fm.xtx_inv, fm.beta_f, true).trace;
    return phi_opt(ts, tp);
  }
  if (phi_arg == "plugin") {
    return phi_opt(var_complete_plugin(sd, e_s).trace,
                   var_partial_plugin(sd, e_pstar, fm).trace);
  }
  std::size_t pos = 0;
  const double v = std::stod(phi_arg, &pos);
  if (pos != phi_arg.size() || v < 0.0 || v > 1.0)
    throw ParseError("--phi must be oracle, plugin, or a value in [0,1]");
  return v;
}

int cmd_fit(const IoFlags& io, const SketchFlags& sf,
            const std::string& estimator, double alpha,
            const std::string& phi_arg) {
  const EstimatorKind ekind = estimator_kind_from_string(estimator);
  const Dataset d = load_csv(io.input, io.response, io.intercept);
  const FitSummary fs = fit_full(d);
  json out;

  if (ekind == EstimatorKind::full) {
    Estimate e;
    e.kind = EstimatorKind::full;
    e.beta = fs.beta_f;
    out["estimate"] = to_json(e);
    out["rss"] = fs.rss;
    out["r_squared"] = fs.r_squared;
  } else {
    const SketchKind kind = sketch_kind_from_string(sf.method);
    if ((ekind == EstimatorKind::partial_unbiased ||
         ekind == EstimatorKind::combined) &&
        sf.k <= d.p() + 3)
      throw DataError("k must exceed p+3 for partial variance");
    const FullMoments fm = full_moments(d, fs);
    const SketchSpec spec{kind, sf.k, sf.seed};
    const SketchedData sd = sketch_dataset(d, spec);
    const CiMethod method = (kind == SketchKind::gaussian)
                                ? CiMethod::exact_t
                                : CiMethod::asymptotic_normal;
    switch (ekind) {
      case EstimatorKind::complete: {
        const Estimate e = beta_complete(sd);
        out["estimate"] = to_json(e);
        out["variance"] = to_json(var_complete_plugin(sd, e));
        out["intervals"] = to_json(ci_complete(sd, e, alpha, method));
        break;
      }
      case EstimatorKind::partial: {
        const Estimate e = beta_partial(sd, fm);
        out["estimate"] = to_json(e);
        const auto v =
            var_partial(fm.mss, sd.k(), sd.p(), fm.xtx_inv, fm.beta_f, false);
        out["variance"] = to_json(v);
        out["intervals"] = to_json(ci_partial(e, v, alpha));
        break;
      }
      case EstimatorKind::partial_unbiased: {
        const Estimate e = beta_partial_unbiased(sd, fm);
        const auto v = var_partial_plugin(sd, e, fm);
        out["estimate"] = to_json(e);
        out["variance"] = to_json(v);
        out["intervals"] = to_json(ci_partial(e, v, alpha));
        break;
      }
      case EstimatorKind::combined: {
        const Estimate e_s = beta_complete(sd);
        const Estimate e_pstar = beta_partial_unbiased(sd, fm);
        const double phi = resolve_phi(phi_arg, sd, fm, e_s, e_pstar);
        const Estimate e = beta_combined(e_s, e_pstar, phi);
        out["estimate"] = to_json(e);
        out["phi"] = phi;
        // The two components are uncorrelated, so variances add in squares.
        VarianceReport v;
        v.matrix = phi * phi * var_complete_plugin(sd, e_s).matrix +
                   (1.0 - phi) * (1.0 - phi) *
                       var_partial_plugin(sd, e_pstar, fm).matrix;
        v.trace = v.matrix.trace();
        v.basis = VarianceBasis::plugin;
        v.formula_tag = "combined_plugin";
        out["variance"] = to_json(v);
        out["intervals"] = to_json(ci_partial(e, v, alpha));
        break;
      }
      case EstimatorKind::one_step: {
        const Estimate e = beta_onestep(beta_complete(sd), sd, d);
        out["estimate"] = to_json(e);
        break;
      }
      default:
        throw ParseError("unsupported estimator: " + estimator);
    }
    const auto ad = assumption_diagnostics(d);
    json diag{{"max_leverage", ad.max_leverage},
              {"gram_condition", ad.gram_condition},
              {"leverage_warning", ad.warning}};
    try {
      diag["epsilon"] = embedding_epsilon(spec, d.stacked());
    } catch (const std::exception&) {
      // Materialization guard tripped at large n; epsilon omitted.
    }
    out["diagnostics"] = diag;
  }
  emit(io.out, out.dump(2) + "\n");
  return 0;
}

int cmd_diagnose(const IoFlags& io, const SketchFlags& sf, int reps) {
  const SketchKind kind = sketch_kind_from_string(sf.method);
  const Dataset d = load_csv(io.input, io.response, io.intercept);
  const FitSummary fs = fit_full(d);
  const Eigen::MatrixXd a = d.stacked();
  const Eigen::MatrixXd gram = a.transpose() * a / static_cast<double>(d.n());
  const auto ad = assumption_diagnostics(d);

  json out;
  out["max_leverage"] = ad.max_leverage;
  out["gram_condition"] = ad.gram_condition;
  out["leverage_warning"] = ad.warning;

  std::vector<double> eps(static_cast<std::size_t>(std::max(reps, 1)));
  int violations = 0;
  json first;
  for (std::size_t r = 0; r < eps.size(); ++r) {
    const SketchSpec spec{
        kind, sf.k,
        reps > 1 ? rng::mix(sf.seed, static_cast<std::uint64_t>(r)) : sf.seed};
    eps[r] = embedding_epsilon(spec, a);
    const SketchedData sd = sketch_dataset(d, spec);
    const Estimate e_s = beta_complete(sd);
    const auto audit = check_worst_case_bounds(eps[r], fs, e_s, fs.beta_f);
    if (!audit.satisfied) ++violations;
    if (r == 0) {
      first = json{{"epsilon", eps[r]},
                   {"bound_complete", audit.bound_complete},
                   {"bound_partial", audit.bound_partial},
                   {"partial_applicable", audit.partial_applicable},
                   {"err_sq", audit.err_sq},
                   {"satisfied", audit.satisfied}};
      const auto nt = mahalanobis_normality_test(sd, gram, 0.05);
      out["mahalanobis"] = json{{"statistic", nt.statistic},
                                {"p_value", nt.p_value},
                                {"reject", nt.reject}};
    }
  }
  out["bound_audit"] = first;
  if (reps > 1) {
    std::sort(eps.begin(), eps.end());
    out["epsilon_quantiles"] =
        json{{"median", eps[eps.size() / 2]},
             {"q95", eps[static_cast<std::size_t>(0.95 * (eps.size() - 1))]},
             {"reps", reps},
             {"bound_violations", violations}};
  } else {
    out["epsilon"] = eps[0];
  }

  json table = json::array();
  const Eigen::Index dcols = d.p() + 1;
  for (const auto rk : {SketchKind::gaussian, SketchKind::hadamard,
                        SketchKind::clarkson_woodruff}) {
    table.push_back(
        json{{"kind", to_string(rk)},
             {"k", recommend_sketch_size(rk, dcols, d.n(), 0.5, 0.05)},
             {"epsilon", 0.5},
             {"delta", 0.05},
             {"advisory", true}});
  }
  out["recommended_k"] = table;

  emit(io.out, out.dump(2) + "\n");
  return 0;
}

int cmd_experiment(const std::string& suite, const std::string& config_path,
                   const json& inline_cfg, const std::string& out_path,
                   const std::string& cells_csv, const std::string& records_csv,
                   const std::string& normality_csv) {
  ExperimentConfig cfg;
  try {
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      if (!is) throw ParseError("cannot open config: " + config_path);
      json j;
      is >> j;
      cfg = experiment_config_from_json(j);
    } else {
      cfg = experiment_config_from_json(inline_cfg);
    }
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  }

  ExperimentReport report;
  if (suite == "mse") report = run_mse_experiment(cfg);
  else if (suite == "coverage") report = run_coverage_experiment(cfg);
  else if (suite == "normality") report = run_normality_experiment(cfg);
  else if (suite == "timing") report = run_timing_experiment(cfg);
  else {
    std::cerr << "unknown suite: " << suite << "\n";
    return kExitUsage;
  }

  emit(out_path, to_json(report).dump(2) + "\n");
  if (!cells_csv.empty()) {
    auto os = open_out(cells_csv);
    write_cells_csv(os, report);
  }
  if (!records_csv.empty()) {
    auto os = open_out(records_csv);
    write_records_csv(os, report);
  }
  if (!normality_csv.empty()) {
    auto os = open_out(normality_csv);
    write_normality_csv(os, report);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sketched least-squares regression toolkit"};
  app.require_subcommand(1);

  IoFlags io;
  SketchFlags sf;

  auto* sketch = app.add_subcommand("sketch", "compress a dataset");
  bool materialize = false;
  add_io_flags(sketch, io);
  add_sketch_flags(sketch, sf);
  sketch->add_flag("--materialize", materialize,
                   "write the dense sketching matrix instead");

  auto* fit = app.add_subcommand("fit", "estimate regression coefficients");
  std::string estimator = "full";
  double alpha = 0.05;
  std::string phi_arg = "oracle";
  add_io_flags(fit, io);
  fit->add_option("--method", sf.method,
                  "gaussian|hadamard|cw|uniform|leverage")
      ->check(CLI::IsMember({"gaussian", "hadamard", "cw", "clarkson_woodruff",
                             "uniform", "leverage", "leverage_aware"}));
  fit->add_option("--k", sf.k, "sketch size");
  fit->add_option("--seed", sf.seed, "sketch seed");
  fit->add_option("--estimator", estimator, "s|p|pstar|combined|onestep|full")
      ->required();
  fit->add_option("--alpha", alpha, "interval miss probability");
  fit->add_option("--phi", phi_arg, "oracle|plugin|<value in [0,1]>");

  auto* diagnose = app.add_subcommand("diagnose", "audit sketch quality");
  int reps = 1;
  add_io_flags(diagnose, io);
  add_sketch_flags(diagnose, sf);
  diagnose->add_option("--reps", reps, "sketch realizations for quantiles")
      ->check(CLI::PositiveNumber);

  auto* experiment = app.add_subcommand("experiment", "run a Monte Carlo suite");
  std::string suite, config_path, out_path;
  std::string cells_csv, records_csv, normality_csv;
  Eigen::Index syn_n = 0, syn_p = 0;
  std::uint64_t data_seed = 0, master_seed = 0;
  std::vector<std::string> kinds, estimators;
  std::vector<Eigen::Index> ks, n_grid, k_grid;
  int replications = 100, parallelism = 0, timing_runs = 10;
  double exp_alpha = 0.05;
  std::string exp_phi = "oracle";
  experiment->add_option("--suite", suite, "mse|coverage|normality|timing")
      ->required();
  experiment->add_option("--config", config_path, "JSON config path");
  experiment->add_option("-o,--out", out_path, "report JSON path");
  experiment->add_option("--cells-csv", cells_csv, "per-cell CSV path");
  experiment->add_option("--records-csv", records_csv,
                         "per-replication CSV path");
  experiment->add_option("--normality-csv", normality_csv,
                         "tidy normality CSV path");
  experiment->add_option("--n", syn_n, "synthetic rows");
  experiment->add_option("--p", syn_p, "synthetic columns");
  experiment->add_option("--data-seed", data_seed, "synthetic data seed");
  experiment->add_option("--kinds", kinds, "sketch kinds");
  experiment->add_option("--ks", ks, "sketch sizes");
  experiment->add_option("--estimators", estimators, "estimator kinds");
  experiment->add_option("--reps", replications, "replications");
  experiment->add_option("--alpha", exp_alpha, "interval miss probability");
  experiment->add_option("--master-seed", master_seed, "master seed");
  experiment->add_option("--parallelism", parallelism, "worker threads");
  experiment->add_option("--phi", exp_phi, "oracle|plugin|<value>");
  experiment->add_option("--n-grid", n_grid, "normality suite n values");
  experiment->add_option("--k-grid", k_grid, "normality suite k values");
  experiment->add_option("--timing-runs", timing_runs, "timing repetitions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : kExitUsage;
  }

  try {
    if (sketch->parsed()) return cmd_sketch(io, sf, materialize);
    if (fit->parsed()) return cmd_fit(io, sf, estimator, alpha, phi_arg);
    if (diagnose->parsed()) return cmd_diagnose(io, sf, reps);
    if (experiment->parsed()) {
      json inline_cfg{
          {"dataset", json{{"type", "synthetic"},
                           {"n", syn_n},
                           {"p", syn_p},
                           {"seed", data_seed}}},
          {"kinds", kinds},
          {"ks", ks},
          {"estimators", estimators},
          {"replications", replications},
          {"alpha", exp_alpha},
          {"master_seed", master_seed},
          {"parallelism", parallelism},
          {"n_grid", n_grid},
          {"k_grid", k_grid},
          {"timing_runs", timing_runs}};
      if (exp_phi == "oracle" || exp_phi == "plugin")
        inline_cfg["phi"] = exp_phi;
      else
        inline_cfg["phi"] = std::stod(exp_phi);
      return cmd_experiment(suite, config_path, inline_cfg, out_path,
                            cells_csv, records_csv, normality_csv);
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
