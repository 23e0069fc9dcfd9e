#include "regweights/cli.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "regweights/dataset.hpp"
#include "regweights/diagnostics.hpp"
#include "regweights/errors.hpp"
#include "regweights/estimators.hpp"
#include "regweights/qp_oracle.hpp"
#include "regweights/report.hpp"
#include "regweights/simulation.hpp"
#include "regweights/weights.hpp"

namespace regweights {

namespace {

std::string command_name(Command c) {
  switch (c) {
    case Command::Weights: return "weights";
    case Command::Estimate: return "estimate";
    case Command::Diagnose: return "diagnose";
    case Command::QpCheck: return "qp-check";
    case Command::Simulate: return "simulate";
  }
  return "unknown";
}

bool is_multi_method(const std::string& method) {
  return method == "multi-uri" || method == "multi-mri";
}

bool needs_base(const std::string& method) {
  return method == "wuri" || method == "wmri" || method == "dr";
}

bool takes_profile(const std::string& method) {
  return method == "mri" || method == "wmri" || method == "mri-no-intercept";
}

void validate_method_name(const std::string& method) {
  static const std::vector<std::string> known = {
      "uri",       "mri",  "wuri",
      "wmri",      "dr",   "multi-uri",
      "multi-mri", "uri-no-intercept", "mri-no-intercept"};
  for (const std::string& m : known) {
    if (m == method) return;
  }
  throw ConfigError("unknown method '" + method + "'");
}

void validate_estimand_name(const std::string& estimand) {
  if (estimand.empty() || estimand == "ate" || estimand == "att" ||
      estimand == "atc" || estimand == "cate")
    return;
  throw ConfigError("unknown estimand '" + estimand + "'");
}

DatasetSchema schema_from(const RunConfig& cfg) {
  DatasetSchema schema;
  schema.treatment_column = cfg.treatment_col;
  schema.outcome_column = cfg.outcome_col;
  schema.base_weight_column = cfg.base_weight_col;
  schema.covariate_columns = cfg.covariates;
  schema.treatment_kind = is_multi_method(cfg.method)
                              ? TreatmentKind::MultiValued
                              : TreatmentKind::Binary;
  schema.delimiter = cfg.delimiter;
  return schema;
}

CovariateProfile resolve_profile(const Dataset& d, const RunConfig& cfg) {
  if (!cfg.estimand.empty() && !cfg.profile.empty())
    throw ConfigError("give either --estimand or --profile, not both");
  std::string prof = cfg.profile;
  if (prof.empty()) {
    if (cfg.estimand.empty() || cfg.estimand == "ate") {
      prof = "full-mean";
    } else if (cfg.estimand == "att") {
      prof = "treated-mean";
    } else if (cfg.estimand == "atc") {
      prof = "control-mean";
    } else {  // cate
      prof = "custom";
    }
  }
  if (prof == "full-mean") return profile(d, ProfileKind::FullMean);
  if (prof == "treated-mean") return profile(d, ProfileKind::TreatedMean);
  if (prof == "control-mean") return profile(d, ProfileKind::ControlMean);
  if (prof == "uri-implied") {
    return d.has_base_weights() && needs_base(cfg.method)
               ? wuri_implied_profile(d, d.base_weights())
               : uri_implied_profile(d);
  }
  if (prof == "custom") {
    if (static_cast<Eigen::Index>(cfg.target.size()) != d.k())
      throw ConfigError("--target needs one value per covariate");
    Eigen::VectorXd values(d.k());
    for (Eigen::Index j = 0; j < d.k(); ++j)
      values(j) = cfg.target[static_cast<std::size_t>(j)];
    return custom_profile(std::move(values));
  }
  throw ConfigError("unknown profile '" + prof + "'");
}

WeightSet build_weight_set(const Dataset& d, const RunConfig& cfg) {
  validate_method_name(cfg.method);
  validate_estimand_name(cfg.estimand);

  if (!takes_profile(cfg.method)) {
    if (!cfg.profile.empty())
      throw ConfigError("method '" + cfg.method +
                        "' does not take a profile; its target is implied");
    if (!cfg.estimand.empty() && cfg.estimand != "ate")
      throw ConfigError(
          "method '" + cfg.method +
          "' does not support the '" + cfg.estimand +
          "' estimand; a pooled fit pins its own covariate profile, use a "
          "per-group method for group-mean targets");
  }
  if (needs_base(cfg.method) && !d.has_base_weights())
    throw ConfigError("method '" + cfg.method +
                      "' requires a base-weight column");
  if (is_multi_method(cfg.method) && cfg.level < 2)
    throw ConfigError("--level must name a non-reference level (>= 2)");

  if (cfg.method == "uri") return uri_weights(d);
  if (cfg.method == "mri") return mri_weights(d, resolve_profile(d, cfg));
  if (cfg.method == "wuri") return wuri_weights(d, d.base_weights());
  if (cfg.method == "wmri")
    return wmri_weights(d, d.base_weights(), resolve_profile(d, cfg));
  if (cfg.method == "dr") return dr_weights(d, d.base_weights());
  if (cfg.method == "multi-uri")
    return multivalued_weights(d, cfg.level, MultiFlavor::PooledIndicator);
  if (cfg.method == "multi-mri")
    return multivalued_weights(d, cfg.level, MultiFlavor::PerGroup);
  if (cfg.method == "uri-no-intercept")
    return no_intercept_weights(d, NoInterceptFlavor::Pooled);
  return no_intercept_weights(d, NoInterceptFlavor::PerGroup,
                              resolve_profile(d, cfg));
}

JsonValue optional_string_json(const std::optional<std::string>& value) {
  return value ? JsonValue::string(*value) : JsonValue::null();
}

JsonValue config_json(const RunConfig& cfg,
                      const std::vector<std::string>& covariate_names) {
  JsonValue out = JsonValue::object();
  out.set("input", JsonValue::string(cfg.input));
  out.set("treatment_column", JsonValue::string(cfg.treatment_col));
  out.set("outcome_column", optional_string_json(cfg.outcome_col));
  out.set("base_weight_column", optional_string_json(cfg.base_weight_col));
  JsonValue covs = JsonValue::array();
  for (const std::string& name : covariate_names)
    covs.push_back(JsonValue::string(name));
  out.set("covariates", std::move(covs));
  out.set("delimiter", JsonValue::string(std::string(1, cfg.delimiter)));
  out.set("method", JsonValue::string(cfg.method));
  out.set("estimand", JsonValue::string(cfg.estimand));
  out.set("profile", JsonValue::string(cfg.profile));
  JsonValue target = JsonValue::array();
  for (double v : cfg.target) target.push_back(JsonValue::number(v));
  out.set("target", std::move(target));
  out.set("level", JsonValue::integer(cfg.level));
  out.set("threshold_multiple", JsonValue::number(cfg.threshold_multiple));
  out.set("covariate_index", JsonValue::integer(cfg.covariate_index));
  out.set("scenario", JsonValue::string(cfg.scenario));
  out.set("seed", JsonValue::integer(static_cast<std::int64_t>(cfg.seed)));
  JsonValue grid = JsonValue::array();
  for (long n : cfg.n_grid)
    grid.push_back(JsonValue::integer(static_cast<std::int64_t>(n)));
  out.set("n_grid", std::move(grid));
  out.set("replications", JsonValue::integer(cfg.replications));
  out.set("out_dir", JsonValue::string(cfg.out_dir));
  out.set("out_delimiter",
          JsonValue::string(std::string(1, cfg.out_delimiter)));
  return out;
}

JsonValue profile_json(const CovariateProfile& p) {
  JsonValue out = JsonValue::object();
  out.set("label", JsonValue::string(p.label));
  JsonValue values = JsonValue::array();
  for (Eigen::Index j = 0; j < p.values.size(); ++j)
    values.push_back(JsonValue::number(p.values(j)));
  out.set("values", std::move(values));
  return out;
}

JsonValue weight_set_json(const WeightSet& w) {
  JsonValue out = JsonValue::object();
  out.set("method", JsonValue::string(to_string(w.method)));
  out.set("estimand", JsonValue::string(to_string(w.estimand)));
  if (w.active_level != 0)
    out.set("active_level", JsonValue::integer(w.active_level));
  out.set("target", profile_json(w.target));
  JsonValue sums = JsonValue::object();
  for (const auto& [label, sum] : w.group_sums)
    sums.set(std::to_string(label), JsonValue::number(sum));
  out.set("group_sums", std::move(sums));
  return out;
}

// The target profile repeats on every row so a weight table alone suffices
// to audit the balance constraint; no side channel is needed.
Table weights_table(const Dataset& d, const WeightSet& w) {
  Table table;
  table.name = "weights";
  table.columns = {"row", "group", "weight"};
  const bool with_base = w.base.has_value();
  if (with_base) table.columns.push_back("base");
  for (const std::string& name : d.covariate_names())
    table.columns.push_back("target_" + name);
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    std::vector<TableCell> row = {
        static_cast<std::int64_t>(i + 1),
        static_cast<std::int64_t>(d.treatment()[static_cast<std::size_t>(i)]),
        w.weights(i)};
    if (with_base) row.push_back((*w.base)(i));
    for (Eigen::Index j = 0; j < w.target.values.size(); ++j)
      row.push_back(w.target.values(j));
    table.rows.push_back(std::move(row));
  }
  return table;
}

Table balance_csv_table(const BalanceTable& balance) {
  Table table;
  table.name = "balance";
  table.columns = {"covariate",     "mean_treated", "mean_control",
                   "target_value",  "asmd",         "tasmd_treated",
                   "tasmd_control", "zero_variance"};
  const auto cell = [](const std::optional<double>& v) -> TableCell {
    if (v) return *v;
    return std::string();
  };
  for (const BalanceRow& row : balance.rows) {
    table.rows.push_back({row.covariate, row.mean_treated, row.mean_control,
                          row.target_value, cell(row.asmd),
                          cell(row.tasmd_treated), cell(row.tasmd_control),
                          static_cast<std::int64_t>(row.zero_variance ? 1
                                                                      : 0)});
  }
  return table;
}

JsonValue diagnostics_json(const WeightDiagnostics& diag) {
  JsonValue groups = JsonValue::array();
  for (const GroupWeightStats& g : diag.groups) {
    JsonValue entry = JsonValue::object();
    entry.set("group", JsonValue::integer(g.label));
    entry.set("size", JsonValue::integer(static_cast<std::int64_t>(g.size)));
    entry.set("sum", JsonValue::number(g.sum));
    entry.set("ess", JsonValue::number(g.ess));
    entry.set("ess_fraction", JsonValue::number(g.ess_fraction));
    entry.set("variance", JsonValue::number(g.variance));
    entry.set("variance_closed_form",
              g.variance_closed_form
                  ? JsonValue::number(*g.variance_closed_form)
                  : JsonValue::null());
    entry.set("min", JsonValue::number(g.min));
    entry.set("max", JsonValue::number(g.max));
    entry.set("negative_count",
              JsonValue::integer(static_cast<std::int64_t>(g.negative_count)));
    groups.push_back(std::move(entry));
  }
  JsonValue out = JsonValue::object();
  out.set("groups", std::move(groups));
  out.set("full_sample_dispersion",
          JsonValue::number(diag.full_sample_dispersion));
  return out;
}

JsonValue estimate_json(const EstimateResult& est) {
  JsonValue out = JsonValue::object();
  out.set("method", JsonValue::string(to_string(est.method)));
  out.set("estimand", JsonValue::string(to_string(est.estimand)));
  if (est.active_level != 0)
    out.set("active_level", JsonValue::integer(est.active_level));
  out.set("value", JsonValue::number(est.value));
  JsonValue means = JsonValue::object();
  for (const auto& [label, value] : est.weighted_means)
    means.set(std::to_string(label), JsonValue::number(value));
  out.set("weighted_means", std::move(means));
  JsonValue bounded = JsonValue::object();
  for (const auto& [label, flag] : est.sample_bounded)
    bounded.set(std::to_string(label), JsonValue::boolean(flag));
  out.set("sample_bounded", std::move(bounded));
  if (est.target) out.set("target", profile_json(*est.target));
  return out;
}

JsonValue extrapolation_json(const ExtrapolationReport& report) {
  JsonValue out = JsonValue::object();
  out.set("threshold_multiple", JsonValue::number(report.threshold_multiple));
  JsonValue flagged = JsonValue::array();
  for (const FlaggedUnit& unit : report.flagged) {
    JsonValue entry = JsonValue::object();
    entry.set("row", JsonValue::integer(static_cast<std::int64_t>(unit.row + 1)));
    entry.set("group", JsonValue::integer(unit.group));
    entry.set("weight", JsonValue::number(unit.weight));
    entry.set("negative", JsonValue::boolean(unit.negative));
    entry.set("extreme", JsonValue::boolean(unit.extreme));
    flagged.push_back(std::move(entry));
  }
  out.set("flagged", std::move(flagged));
  JsonValue sums = JsonValue::object();
  for (const auto& [label, value] : report.weighted_outcome_sum)
    sums.set(std::to_string(label), JsonValue::number(value));
  out.set("weighted_outcome_sum", std::move(sums));
  JsonValue bounded = JsonValue::object();
  for (const auto& [label, flag] : report.sample_bounded)
    bounded.set(std::to_string(label), JsonValue::boolean(flag));
  out.set("sample_bounded", std::move(bounded));
  return out;
}

JsonValue certification_json(const CertificationReport& cert) {
  JsonValue out = JsonValue::object();
  out.set("method", JsonValue::string(to_string(cert.method)));
  out.set("tolerance", JsonValue::number(cert.tolerance));
  out.set("pass", JsonValue::boolean(cert.pass));
  JsonValue groups = JsonValue::array();
  for (const GroupCertification& g : cert.groups) {
    JsonValue entry = JsonValue::object();
    entry.set("group", JsonValue::integer(g.label));
    entry.set("max_abs_discrepancy", JsonValue::number(g.max_abs_discrepancy));
    entry.set("kkt_residual", JsonValue::number(g.kkt_residual));
    entry.set("pass", JsonValue::boolean(g.pass));
    groups.push_back(std::move(entry));
  }
  out.set("groups", std::move(groups));
  return out;
}

JsonValue summaries_json(const SimulationReport& report) {
  JsonValue out = JsonValue::array();
  for (const SimulationSummary& s : report.summaries) {
    JsonValue entry = JsonValue::object();
    entry.set("series", JsonValue::string(s.series));
    entry.set("n", JsonValue::integer(static_cast<std::int64_t>(s.n)));
    entry.set("mean", JsonValue::number(s.mean));
    entry.set("median", JsonValue::number(s.median));
    entry.set("q25", JsonValue::number(s.q25));
    entry.set("q75", JsonValue::number(s.q75));
    out.push_back(std::move(entry));
  }
  return out;
}

// Accumulates the report document and the files written under out_dir.
class OutputWriter {
 public:
  explicit OutputWriter(const RunConfig& cfg) : cfg_(cfg) {
    dir_ = cfg.out_dir.empty() ? "." : cfg.out_dir;
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec)
      throw IoError("cannot create output directory '" + dir_.string() +
                    "': " + ec.message());
  }

  void write_table(const std::string& filename, const Table& table) {
    write_text_file((dir_ / filename).string(),
                    render_table(table, cfg_.out_delimiter));
    outputs_.push_back(filename);
  }

  void write_report(JsonValue body) {
    JsonValue files = JsonValue::array();
    for (const std::string& name : outputs_)
      files.push_back(JsonValue::string(name));
    files.push_back(JsonValue::string("report.json"));
    body.set("outputs", std::move(files));
    write_text_file((dir_ / "report.json").string(), body.dump() + "\n");
  }

 private:
  const RunConfig& cfg_;
  std::filesystem::path dir_;
  std::vector<std::string> outputs_;
};

JsonValue report_header(const RunConfig& cfg,
                        const std::vector<std::string>& covariate_names) {
  JsonValue body = JsonValue::object();
  body.set("tool", JsonValue::string(kToolName));
  body.set("version", JsonValue::string(kToolVersion));
  body.set("command", JsonValue::string(command_name(cfg.command)));
  body.set("config", config_json(cfg, covariate_names));
  return body;
}

Dataset load_input(const RunConfig& cfg) {
  if (cfg.input.empty())
    throw ConfigError("an input file is required; pass --input");
  return load_dataset(cfg.input, schema_from(cfg));
}

int cmd_weights(const RunConfig& cfg) {
  const Dataset d = load_input(cfg);
  const WeightSet w = build_weight_set(d, cfg);
  OutputWriter out(cfg);
  out.write_table("weights.csv", weights_table(d, w));
  JsonValue body = report_header(cfg, d.covariate_names());
  body.set("weights", weight_set_json(w));
  body.set("diagnostics", diagnostics_json(weight_diagnostics(d, w)));
  out.write_report(std::move(body));
  return 0;
}

int cmd_estimate(const RunConfig& cfg) {
  if (!cfg.outcome_col)
    throw ConfigError("the estimate command needs --outcome");
  const Dataset d = load_input(cfg);
  const WeightSet w = build_weight_set(d, cfg);
  const EstimateResult est = hajek_estimate(d, w);
  OutputWriter out(cfg);
  out.write_table("weights.csv", weights_table(d, w));
  if (d.treatment_kind() == TreatmentKind::Binary)
    out.write_table("balance.csv",
                    balance_csv_table(balance_table(d, w, w.target)));
  JsonValue body = report_header(cfg, d.covariate_names());
  body.set("weights", weight_set_json(w));
  body.set("estimate", estimate_json(est));
  body.set("diagnostics", diagnostics_json(weight_diagnostics(d, w)));
  out.write_report(std::move(body));
  return 0;
}

int cmd_diagnose(const RunConfig& cfg) {
  const Dataset d = load_input(cfg);
  const WeightSet w = build_weight_set(d, cfg);
  OutputWriter out(cfg);
  out.write_table("weights.csv", weights_table(d, w));
  const bool binary = d.treatment_kind() == TreatmentKind::Binary;
  if (binary) {
    out.write_table("balance.csv",
                    balance_csv_table(balance_table(d, w, w.target)));
    out.write_table("love.csv", plot_data(d, w, PlotKind::Love));
  }
  out.write_table("weight_density.csv",
                  plot_data(d, w, PlotKind::WeightDensity));
  out.write_table("bubble.csv",
                  plot_data(d, w, PlotKind::Bubble, cfg.covariate_index));
  const bool influence = (w.method == WeightMethod::URI ||
                          w.method == WeightMethod::MRI) &&
                         d.has_outcome();
  if (influence)
    out.write_table("influence.csv", plot_data(d, w, PlotKind::Influence));
  JsonValue body = report_header(cfg, d.covariate_names());
  body.set("weights", weight_set_json(w));
  body.set("diagnostics", diagnostics_json(weight_diagnostics(d, w)));
  body.set("extrapolation",
           extrapolation_json(
               extrapolation_report(d, w, cfg.threshold_multiple)));
  out.write_report(std::move(body));
  return 0;
}

int cmd_qp_check(const RunConfig& cfg, std::ostream& err) {
  const Dataset d = load_input(cfg);
  const WeightSet w = build_weight_set(d, cfg);
  const CertificationReport cert = certify(w, d);
  OutputWriter out(cfg);
  out.write_table("weights.csv", weights_table(d, w));
  JsonValue body = report_header(cfg, d.covariate_names());
  body.set("weights", weight_set_json(w));
  body.set("certification", certification_json(cert));
  out.write_report(std::move(body));
  if (!cert.pass) {
    err << "qp-check: the independently solved balance program disagrees "
           "with the closed-form weights beyond tolerance "
        << format_number(cert.tolerance) << "\n";
    return 4;
  }
  return 0;
}

int cmd_simulate(const RunConfig& cfg) {
  if (cfg.scenario.empty()) {
    std::string names;
    for (const std::string& name : scenario_names()) {
      if (!names.empty()) names += ", ";
      names += name;
    }
    throw ConfigError("--scenario is required; one of: " + names);
  }
  if (cfg.n_grid.empty())
    throw ConfigError("--n-grid is required (e.g. --n-grid 1000 4000)");
  if (cfg.replications < 1)
    throw ConfigError("--replications must be at least 1");
  const Scenario scenario = make_scenario(cfg.scenario, cfg.seed);
  std::vector<Eigen::Index> grid;
  grid.reserve(cfg.n_grid.size());
  for (long n : cfg.n_grid) grid.push_back(static_cast<Eigen::Index>(n));
  const SimulationReport report =
      run_scenario(scenario, grid, cfg.replications);
  OutputWriter out(cfg);
  out.write_table("simulation.csv", simulation_table(report));
  JsonValue body = report_header(cfg, {});
  body.set("experiment", JsonValue::string(report.experiment));
  body.set("scenario", JsonValue::string(report.scenario));
  body.set("true_ate", JsonValue::number(report.true_ate));
  body.set("overlap_weighted_effect",
           report.overlap_weighted_effect
               ? JsonValue::number(*report.overlap_weighted_effect)
               : JsonValue::null());
  body.set("summaries", summaries_json(report));
  out.write_report(std::move(body));
  return 0;
}

}  // namespace

int run(const RunConfig& config, std::ostream& err) {
  try {
    switch (config.command) {
      case Command::Weights: return cmd_weights(config);
      case Command::Estimate: return cmd_estimate(config);
      case Command::Diagnose: return cmd_diagnose(config);
      case Command::QpCheck: return cmd_qp_check(config, err);
      case Command::Simulate: return cmd_simulate(config);
    }
    throw ConfigError("unknown command");
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << "\n";
    return 5;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace regweights
