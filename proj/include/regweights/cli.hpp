#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace regweights {

enum class Command { Weights, Estimate, Diagnose, QpCheck, Simulate };

struct RunConfig {
  Command command = Command::Weights;

  // Input schema.
  std::string input;
  std::string treatment_col = "treatment";
  std::optional<std::string> outcome_col;
  std::optional<std::string> base_weight_col;
  std::vector<std::string> covariates;
  char delimiter = ',';

  // Estimator selection.
  std::string method = "uri";
  std::string estimand;  // empty: default for the method
  std::string profile;   // full-mean | treated-mean | control-mean | uri-implied | custom
  std::vector<double> target;  // custom profile values
  int level = 2;               // multi-valued active level

  // Diagnostics.
  double threshold_multiple = 10.0;
  int covariate_index = 0;

  // Simulation.
  std::string scenario;
  std::uint64_t seed = 0;
  std::vector<long> n_grid;
  int replications = 50;

  // Output.
  std::string out_dir;
  char out_delimiter = ',';
};

// Executes one command, writing its tables and report under out_dir.
// Returns the process exit code: 0 success, 2 config error, 3 data error,
// 4 numerical error, 5 I/O error.  Diagnostic messages go to `err`.
int run(const RunConfig& config, std::ostream& err);

}  // namespace regweights
