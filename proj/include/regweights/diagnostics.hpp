#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "regweights/dataset.hpp"
#include "regweights/table.hpp"
#include "regweights/weights.hpp"

namespace regweights {

// Modified effective sample size (sum |w|)^2 / sum w^2: penalizes negative
// weights and lies in [1, m] for any nonzero weight vector of length m.
double effective_sample_size(const Eigen::VectorXd& weights);

struct BalanceRow {
  std::string covariate;
  double mean_treated = 0.0;  // weighted, normalized within group
  double mean_control = 0.0;
  double target_value = 0.0;
  // Absent when the denominator standard deviation is zero.
  std::optional<double> asmd;
  std::optional<double> tasmd_treated;
  std::optional<double> tasmd_control;
  bool zero_variance = false;
};

struct BalanceTable {
  std::vector<BalanceRow> rows;
  std::string target_label;
  // Sample whose unweighted standard deviation scales the TASMD columns:
  // the treated sample for ATT targets, the control sample for ATC targets,
  // the full sample otherwise.
  std::string sd_reference;
};

// ASMD uses the unweighted pooled sd sqrt((s_t^2 + s_c^2)/2); TASMD uses the
// sd_reference sample's unweighted sd.  Zero-variance covariates are flagged
// instead of producing non-finite values.  Binary treatments only.
BalanceTable balance_table(const Dataset& d, const WeightSet& w,
                           const CovariateProfile& target);

struct GroupWeightStats {
  int label = 0;
  Eigen::Index size = 0;
  double sum = 0.0;
  double ess = 0.0;
  double ess_fraction = 0.0;
  double variance = 0.0;  // (1/n_g) sum (w_i - mean w)^2
  // Closed-form variance implied by the moment formulas (URI/MRI only).
  std::optional<double> variance_closed_form;
  double min = 0.0;
  double max = 0.0;
  Eigen::Index negative_count = 0;
};

struct WeightDiagnostics {
  std::vector<GroupWeightStats> groups;
  // sum over all units of (w_i - wbar)^2 with wbar the full-sample mean
  // weight; orders the per-group-fit and pooled-fit weight dispersion.
  double full_sample_dispersion = 0.0;
};

WeightDiagnostics weight_diagnostics(const Dataset& d, const WeightSet& w);

struct FlaggedUnit {
  Eigen::Index row = 0;
  int group = 0;
  double weight = 0.0;
  bool negative = false;
  bool extreme = false;  // |w| > threshold_multiple / n_g
};

struct ExtrapolationReport {
  double threshold_multiple = 0.0;
  std::vector<FlaggedUnit> flagged;
  // Present when the dataset has outcomes.
  std::map<int, double> weighted_outcome_sum;
  std::map<int, bool> sample_bounded;
};

// Units whose weights are negative or exceed threshold_multiple times the
// uniform weight of their group.  Negative weights mean the estimator
// extrapolates beyond the covariate support of its own sample.
ExtrapolationReport extrapolation_report(const Dataset& d, const WeightSet& w,
                                         double threshold_multiple = 10.0);

enum class PlotKind { Love, WeightDensity, Bubble, Influence };

// Long-format plot data:
//   Love:          covariate, statistic, weighting, value (may be empty)
//   WeightDensity: group, weight                  (one row per unit)
//   Bubble:        group, covariate value, weight, sign (one row per unit)
//   Influence:     row, scaled |influence|, max-scaled to 1 (URI/MRI only)
Table plot_data(const Dataset& d, const WeightSet& w, PlotKind kind,
                Eigen::Index covariate_index = 0);

}  // namespace regweights
