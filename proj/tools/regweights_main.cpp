#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "regweights/cli.hpp"

namespace {

struct CliBuffers {
  std::string outcome;
  std::string base_weights;
  std::string delimiter = ",";
  std::string out_delimiter = ",";
  std::string format;
};

void add_schema_options(CLI::App* cmd, regweights::RunConfig& cfg,
                        CliBuffers& buf) {
  cmd->add_option("-i,--input", cfg.input, "Input delimited text file")
      ->required();
  cmd->add_option("--treatment-col,--treatment", cfg.treatment_col,
                  "Treatment column (0/1, or 1..V for multi-valued methods)");
  cmd->add_option("--outcome-col,--outcome", buf.outcome, "Outcome column");
  cmd->add_option("--base-weight-col,--base-weights", buf.base_weights,
                  "Strictly positive base-weight column (wuri/wmri/dr)");
  cmd->add_option("--covariates", cfg.covariates,
                  "Covariate columns (default: all remaining columns)");
  cmd->add_option("--delimiter", buf.delimiter,
                  "Single-character field delimiter (default ',')");
}

void add_method_options(CLI::App* cmd, regweights::RunConfig& cfg) {
  cmd->add_option("-m,--method", cfg.method,
                  "uri | mri | wuri | wmri | dr | multi-uri | multi-mri | "
                  "uri-no-intercept | mri-no-intercept");
  cmd->add_option("--estimand", cfg.estimand, "ate | att | atc | cate");
  cmd->add_option("--profile", cfg.profile,
                  "full-mean | treated-mean | control-mean | uri-implied | "
                  "custom");
  cmd->add_option("--target", cfg.target,
                  "Covariate profile values for --profile custom");
  cmd->add_option("--level", cfg.level,
                  "Active treatment level for multi-valued methods (>= 2)");
}

void add_output_options(CLI::App* cmd, regweights::RunConfig& cfg,
                        CliBuffers& buf) {
  cmd->add_option("-o,--out-dir", cfg.out_dir,
                  "Output directory (default: current directory)");
  CLI::Option* format =
      cmd->add_option("--format", buf.format, "Table format: csv | tsv");
  CLI::Option* delimiter =
      cmd->add_option("--out-delimiter", buf.out_delimiter,
                      "Delimiter for emitted tables (default ',')");
  format->excludes(delimiter);
  delimiter->excludes(format);
}

char single_char(const std::string& value, const char* what) {
  if (value.size() != 1)
    throw CLI::ValidationError(std::string(what) +
                               " must be a single character");
  return value[0];
}

}  // namespace

int main(int argc, char** argv) {
  regweights::RunConfig cfg;
  CliBuffers buf;

  CLI::App app{"Implied unit-level weights of regression-based causal "
               "effect estimators"};
  app.require_subcommand(1);

  CLI::App* weights =
      app.add_subcommand("weights", "Compute the implied unit weights");
  CLI::App* estimate = app.add_subcommand(
      "estimate", "Weighted-contrast estimate with its weight set");
  CLI::App* diagnose = app.add_subcommand(
      "diagnose", "Balance, dispersion, extrapolation and plot data");
  CLI::App* qp_check = app.add_subcommand(
      "qp-check", "Re-derive the weights from their balance program");
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Sampling experiments on synthetic data");

  for (CLI::App* cmd : {weights, estimate, diagnose, qp_check}) {
    add_schema_options(cmd, cfg, buf);
    add_method_options(cmd, cfg);
    add_output_options(cmd, cfg, buf);
  }
  estimate->get_option("--outcome-col")->required();
  diagnose->add_option("--threshold-multiple", cfg.threshold_multiple,
                       "Extreme-weight threshold as a multiple of the "
                       "uniform group weight (default 10)");
  diagnose->add_option("--covariate-index", cfg.covariate_index,
                       "Zero-based covariate shown in the bubble data");

  simulate->add_option("--scenario", cfg.scenario, "Scenario name")
      ->required();
  simulate->add_option("--seed", cfg.seed, "Base seed (default 0)");
  simulate->add_option("--n-grid", cfg.n_grid, "Sample sizes")->required();
  simulate->add_option("--reps,--replications", cfg.replications,
                       "Replications per sample size (default 50)");
  add_output_options(simulate, cfg, buf);

  try {
    app.parse(argc, argv);
    if (weights->parsed()) cfg.command = regweights::Command::Weights;
    if (estimate->parsed()) cfg.command = regweights::Command::Estimate;
    if (diagnose->parsed()) cfg.command = regweights::Command::Diagnose;
    if (qp_check->parsed()) cfg.command = regweights::Command::QpCheck;
    if (simulate->parsed()) cfg.command = regweights::Command::Simulate;
    if (!buf.outcome.empty()) cfg.outcome_col = buf.outcome;
    if (!buf.base_weights.empty()) cfg.base_weight_col = buf.base_weights;
    if (!buf.format.empty()) {
      if (buf.format == "csv")
        buf.out_delimiter = ",";
      else if (buf.format == "tsv")
        buf.out_delimiter = "\t";
      else
        throw CLI::ValidationError("--format must be csv or tsv");
    }
    cfg.delimiter = single_char(buf.delimiter, "--delimiter");
    cfg.out_delimiter = single_char(buf.out_delimiter, "--out-delimiter");
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // command-line problems are configuration errors
  }

  return regweights::run(cfg, std::cerr);
}
