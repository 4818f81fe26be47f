#include "sketchls/serialize.hpp"

#include <charconv>

#include "sketchls/errors.hpp"

namespace sketchls {

std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json mat_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <typename T>
T require(const json& j, const char* key) {
  if (!j.contains(key))
    throw ParseError(std::string("missing config field: ") + key);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string("ill-typed config field: ") + key);
  }
}

template <typename T>
T optional_field(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string("ill-typed config field: ") + key);
  }
}

}  // namespace

json to_json(const SketchSpec& spec) {
  return json{{"kind", to_string(spec.kind)},
              {"k", spec.k},
              {"seed", spec.seed}};
}

json to_json(const Estimate& e) {
  json j{{"kind", to_string(e.kind)}, {"beta", vec_to_json(e.beta)}};
  if (e.variance) j["variance"] = mat_to_json(*e.variance);
  if (e.rss_s) j["rss_s"] = *e.rss_s;
  if (e.mss_s) j["mss_s"] = *e.mss_s;
  if (e.kind != EstimatorKind::full) j["spec"] = to_json(e.spec);
  if (e.rank_deficient) j["rank_deficient"] = true;
  return j;
}

json to_json(const VarianceReport& v) {
  return json{{"matrix", mat_to_json(v.matrix)},
              {"trace", v.trace},
              {"basis", to_string(v.basis)},
              {"formula_tag", v.formula_tag}};
}

json to_json(const ConfidenceIntervals& ci) {
  return json{{"level", ci.level},
              {"lower", vec_to_json(ci.lower)},
              {"upper", vec_to_json(ci.upper)},
              {"method", to_string(ci.method)}};
}

json to_json(const ExperimentConfig& cfg) {
  json dataset;
  if (std::holds_alternative<SyntheticSpec>(cfg.dataset)) {
    const auto& s = std::get<SyntheticSpec>(cfg.dataset);
    dataset = json{{"type", "synthetic"}, {"n", s.n},
                   {"p", s.p},            {"seed", s.seed},
                   {"noise_var", s.noise_var}, {"beta_var", s.beta_var},
                   {"rho", s.rho}};
  } else {
    const auto& c = std::get<CsvSpec>(cfg.dataset);
    dataset = json{{"type", "csv"},
                   {"path", c.path},
                   {"response", c.response},
                   {"intercept", c.intercept}};
  }
  json kinds = json::array();
  for (const auto k : cfg.kinds) kinds.push_back(to_string(k));
  json estimators = json::array();
  for (const auto e : cfg.estimators) estimators.push_back(to_string(e));
  json phi;
  switch (cfg.phi.mode) {
    case PhiMode::oracle: phi = "oracle"; break;
    case PhiMode::plugin: phi = "plugin"; break;
    case PhiMode::fixed: phi = cfg.phi.value; break;
  }
  return json{{"dataset", dataset},
              {"kinds", kinds},
              {"ks", cfg.ks},
              {"estimators", estimators},
              {"replications", cfg.replications},
              {"alpha", cfg.alpha},
              {"master_seed", cfg.master_seed},
              {"parallelism", cfg.parallelism},
              {"phi", phi},
              {"n_grid", cfg.n_grid},
              {"k_grid", cfg.k_grid},
              {"timing_runs", cfg.timing_runs}};
}

json to_json(const ExperimentReport& report) {
  json cells = json::array();
  json timing = json::array();
  for (const auto& c : report.cells) {
    if (c.timing_seconds >= 0.0) {
      // Durations are machine-dependent; kept out of the canonical section.
      timing.push_back(json{{"kind", to_string(c.kind)},
                            {"k", c.k},
                            {"seconds", c.timing_seconds}});
      continue;
    }
    json jc{{"kind", to_string(c.kind)},
            {"k", c.k},
            {"estimator", to_string(c.estimator)},
            {"failed_reps", c.failed_reps}};
    if (c.coverage >= 0.0) {
      jc["coverage"] = c.coverage;
      jc["coverage_se"] = c.coverage_se;
      jc["pairs"] = c.pairs;
    } else {
      jc["mse_mean"] = c.mse_mean;
      jc["mse_se"] = c.mse_se;
      jc["bias"] = vec_to_json(c.bias);
    }
    cells.push_back(std::move(jc));
  }
  json normality = json::array();
  for (const auto& nc : report.normality)
    normality.push_back(json{{"n", nc.n},
                             {"k", nc.k},
                             {"kind", to_string(nc.kind)},
                             {"target", nc.target},
                             {"rejection_rate", nc.rejection_rate}});
  json j{{"master_seed", report.master_seed}, {"cells", cells}};
  if (!normality.empty()) j["normality"] = normality;
  if (!timing.empty()) j["timing"] = timing;
  return j;
}

SketchSpec sketch_spec_from_json(const json& j) {
  SketchSpec spec;
  spec.kind = sketch_kind_from_string(require<std::string>(j, "kind"));
  spec.k = require<Eigen::Index>(j, "k");
  spec.seed = require<std::uint64_t>(j, "seed");
  return spec;
}

ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig cfg;
  const json& ds = j.contains("dataset") ? j.at("dataset") : json{};
  if (ds.is_null() || ds.empty())
    throw ParseError("missing config field: dataset");
  const auto type = require<std::string>(ds, "type");
  if (type == "synthetic") {
    SyntheticSpec s;
    s.n = require<Eigen::Index>(ds, "n");
    s.p = require<Eigen::Index>(ds, "p");
    s.seed = require<std::uint64_t>(ds, "seed");
    s.noise_var = optional_field(ds, "noise_var", s.noise_var);
    s.beta_var = optional_field(ds, "beta_var", s.beta_var);
    s.rho = optional_field(ds, "rho", s.rho);
    cfg.dataset = s;
  } else if (type == "csv") {
    CsvSpec c;
    c.path = require<std::string>(ds, "path");
    c.response = require<std::string>(ds, "response");
    c.intercept = optional_field(ds, "intercept", false);
    cfg.dataset = c;
  } else {
    throw ParseError("dataset.type must be \"synthetic\" or \"csv\"");
  }
  for (const auto& s : require<std::vector<std::string>>(j, "kinds"))
    cfg.kinds.push_back(sketch_kind_from_string(s));
  cfg.ks = optional_field(j, "ks", std::vector<Eigen::Index>{});
  for (const auto& s :
       optional_field(j, "estimators", std::vector<std::string>{}))
    cfg.estimators.push_back(estimator_kind_from_string(s));
  cfg.replications = optional_field(j, "replications", cfg.replications);
  cfg.alpha = optional_field(j, "alpha", cfg.alpha);
  cfg.master_seed = require<std::uint64_t>(j, "master_seed");
  cfg.parallelism = optional_field(j, "parallelism", cfg.parallelism);
  if (j.contains("phi")) {
    const json& phi = j.at("phi");
    if (phi.is_string()) {
      const auto s = phi.get<std::string>();
      if (s == "oracle") cfg.phi.mode = PhiMode::oracle;
      else if (s == "plugin") cfg.phi.mode = PhiMode::plugin;
      else throw ParseError("phi must be \"oracle\", \"plugin\", or a number");
    } else if (phi.is_number()) {
      cfg.phi.mode = PhiMode::fixed;
      cfg.phi.value = phi.get<double>();
    } else {
      throw ParseError("phi must be \"oracle\", \"plugin\", or a number");
    }
  }
  cfg.n_grid = optional_field(j, "n_grid", std::vector<Eigen::Index>{});
  cfg.k_grid = optional_field(j, "k_grid", std::vector<Eigen::Index>{});
  cfg.timing_runs = optional_field(j, "timing_runs", cfg.timing_runs);
  return cfg;
}

void write_cells_csv(std::ostream& os, const ExperimentReport& report) {
  os << "kind,k,estimator,mse_mean,mse_se,coverage,coverage_se,pairs,"
        "timing_seconds,failed_reps\n";
  for (const auto& c : report.cells) {
    os << to_string(c.kind) << ',' << c.k << ',' << to_string(c.estimator)
       << ',' << format_double(c.mse_mean) << ',' << format_double(c.mse_se)
       << ',' << format_double(c.coverage) << ','
       << format_double(c.coverage_se) << ',' << c.pairs << ','
       << format_double(c.timing_seconds) << ',' << c.failed_reps << '\n';
  }
}

void write_records_csv(std::ostream& os, const ExperimentReport& report) {
  os << "rep,kind,k,estimator,err_sq,covered,intervals,failed\n";
  for (const auto& r : report.records) {
    os << r.rep << ',' << to_string(r.kind) << ',' << r.k << ','
       << to_string(r.estimator) << ',' << format_double(r.err_sq) << ','
       << r.covered << ',' << r.intervals << ',' << (r.failed ? 1 : 0)
       << '\n';
  }
}

void write_normality_csv(std::ostream& os, const ExperimentReport& report) {
  os << "n,k,kind,target,value\n";
  for (const auto& nc : report.normality) {
    os << nc.n << ',' << nc.k << ',' << to_string(nc.kind) << ',' << nc.target
       << ',' << format_double(nc.rejection_rate) << '\n';
  }
}

void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& header) {
  if (!header.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j)
      os << (j ? "," : "") << header[j];
    os << '\n';
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      os << (j ? "," : "") << format_double(m(i, j));
    os << '\n';
  }
}

}  // namespace sketchls
