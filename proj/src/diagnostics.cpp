#include "regweights/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Cholesky>

#include "regweights/errors.hpp"
#include "regweights/estimators.hpp"
#include "regweights/numeric.hpp"

namespace regweights {

namespace {

double canonical_mean(const std::vector<double>& terms) {
  return canonical_sum(terms) / static_cast<double>(terms.size());
}

// Unweighted sample variance (n-1 denominator).
double sample_variance(const std::vector<double>& values) {
  const std::size_t m = values.size();
  if (m < 2) return 0.0;
  const double mean = canonical_mean(values);
  std::vector<double> sq(m);
  for (std::size_t i = 0; i < m; ++i)
    sq[i] = (values[i] - mean) * (values[i] - mean);
  return canonical_sum(std::move(sq)) / static_cast<double>(m - 1);
}

std::vector<double> column_values(const Dataset& d, Eigen::Index j,
                                  const std::vector<Eigen::Index>& rows) {
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out[i] = d.covariates()(rows[i], j);
  return out;
}

double weighted_group_mean(const Dataset& d, const Eigen::VectorXd& w,
                           int label, Eigen::Index j) {
  const auto& rows = d.group_rows(label);
  std::vector<double> terms(rows.size());
  std::vector<double> weight_terms(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    terms[i] = w(rows[i]) * d.covariates()(rows[i], j);
    weight_terms[i] = w(rows[i]);
  }
  const double numerator = canonical_sum(std::move(terms));
  const double weight_sum = canonical_sum(std::move(weight_terms));
  double magnitude = 0.0;
  for (Eigen::Index r : rows) magnitude += std::abs(w(r));
  if (std::abs(weight_sum) <= 1e-12 * std::max(1.0, magnitude)) {
    throw NumericalError("weights of group " + std::to_string(label) +
                         " sum to zero; weighted means are undefined");
  }
  return numerator / weight_sum;
}

}  // namespace

double effective_sample_size(const Eigen::VectorXd& weights) {
  if (weights.size() == 0) throw DataError("weight vector is empty");
  if (!weights.allFinite())
    throw DataError("weights contain a non-finite value");
  std::vector<double> abs_terms(static_cast<std::size_t>(weights.size()));
  std::vector<double> sq_terms(static_cast<std::size_t>(weights.size()));
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    abs_terms[static_cast<std::size_t>(i)] = std::abs(weights(i));
    sq_terms[static_cast<std::size_t>(i)] = weights(i) * weights(i);
  }
  const double abs_sum = canonical_sum(std::move(abs_terms));
  const double sq_sum = canonical_sum(std::move(sq_terms));
  if (sq_sum <= 0.0) throw DataError("weights are all zero");
  return abs_sum * abs_sum / sq_sum;
}

BalanceTable balance_table(const Dataset& d, const WeightSet& w,
                           const CovariateProfile& target) {
  if (d.treatment_kind() != TreatmentKind::Binary)
    throw ConfigError("the balance table requires a binary treatment");
  if (w.weights.size() != d.n())
    throw DataError("weight set length does not match the dataset rows");
  if (target.values.size() != d.k())
    throw ConfigError("target profile length does not match the covariates");

  BalanceTable table;
  table.target_label = target.label;
  const auto& treated_rows = d.group_rows(1);
  const auto& control_rows = d.group_rows(0);
  std::vector<Eigen::Index> full_rows(static_cast<std::size_t>(d.n()));
  for (Eigen::Index i = 0; i < d.n(); ++i)
    full_rows[static_cast<std::size_t>(i)] = i;

  const std::vector<Eigen::Index>* reference_rows = &full_rows;
  table.sd_reference = "full_sample";
  if (w.estimand == Estimand::ATT) {
    reference_rows = &treated_rows;
    table.sd_reference = "treated_sample";
  } else if (w.estimand == Estimand::ATC) {
    reference_rows = &control_rows;
    table.sd_reference = "control_sample";
  }

  for (Eigen::Index j = 0; j < d.k(); ++j) {
    BalanceRow row;
    row.covariate = d.covariate_names()[static_cast<std::size_t>(j)];
    row.mean_treated = weighted_group_mean(d, w.weights, 1, j);
    row.mean_control = weighted_group_mean(d, w.weights, 0, j);
    row.target_value = target.values(j);

    const double var_t = sample_variance(column_values(d, j, treated_rows));
    const double var_c = sample_variance(column_values(d, j, control_rows));
    const double pooled_sd = std::sqrt(0.5 * (var_t + var_c));
    const double reference_sd =
        std::sqrt(sample_variance(column_values(d, j, *reference_rows)));

    row.zero_variance = pooled_sd == 0.0 || reference_sd == 0.0;
    if (pooled_sd > 0.0)
      row.asmd = std::abs(row.mean_treated - row.mean_control) / pooled_sd;
    if (reference_sd > 0.0) {
      row.tasmd_treated =
          std::abs(row.mean_treated - row.target_value) / reference_sd;
      row.tasmd_control =
          std::abs(row.mean_control - row.target_value) / reference_sd;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

WeightDiagnostics weight_diagnostics(const Dataset& d, const WeightSet& w) {
  if (w.weights.size() != d.n())
    throw DataError("weight set length does not match the dataset rows");

  WeightDiagnostics out;
  for (int label : d.group_labels()) {
    const auto& rows = d.group_rows(label);
    const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
    Eigen::VectorXd group_w(m);
    for (Eigen::Index i = 0; i < m; ++i)
      group_w(i) = w.weights(rows[static_cast<std::size_t>(i)]);

    GroupWeightStats stats;
    stats.label = label;
    stats.size = m;
    std::vector<double> terms(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) terms[i] = group_w(i);
    stats.sum = canonical_sum(terms);
    stats.ess = effective_sample_size(group_w);
    stats.ess_fraction = stats.ess / static_cast<double>(m);
    const double mean_w = stats.sum / static_cast<double>(m);
    for (Eigen::Index i = 0; i < m; ++i)
      terms[i] = (group_w(i) - mean_w) * (group_w(i) - mean_w);
    stats.variance = canonical_sum(terms) / static_cast<double>(m);
    stats.min = group_w.minCoeff();
    stats.max = group_w.maxCoeff();
    stats.negative_count = (group_w.array() < 0.0).count();
    out.groups.push_back(std::move(stats));
  }

  // Moment-based closed forms for the pooled-fit and per-group-fit weights.
  if (w.method == WeightMethod::URI &&
      d.treatment_kind() == TreatmentKind::Binary) {
    const GroupMoments& mt = d.raw_group_moments(1);
    const GroupMoments& mc = d.raw_group_moments(0);
    const double n = static_cast<double>(d.n());
    const double n_t = static_cast<double>(mt.size);
    const double n_c = static_cast<double>(mc.size);
    const Eigen::MatrixXd pooled = mt.scatter + mc.scatter;
    const auto solver = pooled.ldlt();
    for (auto& stats : out.groups) {
      const GroupMoments& own = stats.label == 1 ? mt : mc;
      const Eigen::MatrixXd& own_scatter = own.scatter;
      const double own_n = stats.label == 1 ? n_t : n_c;
      const double other_n = stats.label == 1 ? n_c : n_t;
      const Eigen::VectorXd gap = d.full_mean() - own.mean;
      const Eigen::VectorXd u = solver.solve(gap);
      stats.variance_closed_form =
          (n * n) / (own_n * other_n * other_n) * u.dot(own_scatter * u);
    }
  } else if (w.method == WeightMethod::MRI &&
             d.treatment_kind() == TreatmentKind::Binary) {
    for (auto& stats : out.groups) {
      const GroupMoments& m = d.group_moments(stats.label);
      const Eigen::VectorXd gap = w.target.values - m.mean;
      const Eigen::VectorXd u = m.scatter.ldlt().solve(gap);
      stats.variance_closed_form =
          u.dot(gap) / static_cast<double>(stats.size);
    }
  }

  std::vector<double> all(static_cast<std::size_t>(d.n()));
  for (Eigen::Index i = 0; i < d.n(); ++i) all[i] = w.weights(i);
  const double overall_mean = canonical_sum(all) / static_cast<double>(d.n());
  for (Eigen::Index i = 0; i < d.n(); ++i)
    all[i] = (w.weights(i) - overall_mean) * (w.weights(i) - overall_mean);
  out.full_sample_dispersion = canonical_sum(std::move(all));
  return out;
}

ExtrapolationReport extrapolation_report(const Dataset& d, const WeightSet& w,
                                         double threshold_multiple) {
  if (w.weights.size() != d.n())
    throw DataError("weight set length does not match the dataset rows");
  if (threshold_multiple <= 0.0)
    throw ConfigError("the extreme-weight threshold multiple must be "
                      "positive");

  ExtrapolationReport report;
  report.threshold_multiple = threshold_multiple;
  for (int label : d.group_labels()) {
    const auto& rows = d.group_rows(label);
    const double uniform = 1.0 / static_cast<double>(rows.size());
    for (Eigen::Index r : rows) {
      FlaggedUnit unit;
      unit.row = r;
      unit.group = label;
      unit.weight = w.weights(r);
      unit.negative = w.weights(r) < 0.0;
      unit.extreme = std::abs(w.weights(r)) > threshold_multiple * uniform;
      if (unit.negative || unit.extreme) report.flagged.push_back(unit);
    }
  }
  std::sort(report.flagged.begin(), report.flagged.end(),
            [](const FlaggedUnit& a, const FlaggedUnit& b) {
              return a.row < b.row;
            });

  if (d.has_outcome()) {
    for (int label : d.group_labels()) {
      const auto& rows = d.group_rows(label);
      std::vector<double> terms(rows.size());
      double lo = d.outcome()(rows.front());
      double hi = lo;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        terms[i] = w.weights(rows[i]) * d.outcome()(rows[i]);
        lo = std::min(lo, d.outcome()(rows[i]));
        hi = std::max(hi, d.outcome()(rows[i]));
      }
      const double sum = canonical_sum(std::move(terms));
      report.weighted_outcome_sum[label] = sum;
      report.sample_bounded[label] = sum >= lo && sum <= hi;
    }
  }
  return report;
}

Table plot_data(const Dataset& d, const WeightSet& w, PlotKind kind,
                Eigen::Index covariate_index) {
  Table table;
  switch (kind) {
    case PlotKind::Love: {
      table.name = "love";
      table.columns = {"covariate", "statistic", "weighting", "value"};
      Eigen::VectorXd uniform(d.n());
      for (int label : d.group_labels()) {
        const auto& rows = d.group_rows(label);
        for (Eigen::Index r : rows)
          uniform(r) = 1.0 / static_cast<double>(rows.size());
      }
      WeightSet unadjusted =
          custom_weight_set(d, uniform, w.estimand, w.target);
      const BalanceTable before = balance_table(d, unadjusted, w.target);
      const BalanceTable after = balance_table(d, w, w.target);
      const auto emit = [&table](const BalanceRow& row,
                                 const std::string& weighting) {
        const auto cell = [](const std::optional<double>& v) -> TableCell {
          if (v) return *v;
          return std::string();
        };
        table.rows.push_back(
            {row.covariate, std::string("asmd"), weighting, cell(row.asmd)});
        table.rows.push_back({row.covariate, std::string("tasmd_treated"),
                              weighting, cell(row.tasmd_treated)});
        table.rows.push_back({row.covariate, std::string("tasmd_control"),
                              weighting, cell(row.tasmd_control)});
      };
      for (std::size_t j = 0; j < before.rows.size(); ++j) {
        emit(before.rows[j], "unadjusted");
        emit(after.rows[j], "adjusted");
      }
      break;
    }
    case PlotKind::WeightDensity: {
      table.name = "weight_density";
      table.columns = {"group", "weight"};
      for (Eigen::Index i = 0; i < d.n(); ++i) {
        table.rows.push_back(
            {static_cast<std::int64_t>(d.treatment()[static_cast<std::size_t>(i)]),
             w.weights(i)});
      }
      break;
    }
    case PlotKind::Bubble: {
      if (covariate_index < 0 || covariate_index >= d.k())
        throw ConfigError("bubble plot covariate index is out of range");
      table.name = "bubble";
      table.columns = {"group", "covariate_value", "weight", "sign"};
      for (Eigen::Index i = 0; i < d.n(); ++i) {
        const double weight = w.weights(i);
        const std::int64_t sign = weight > 0.0 ? 1 : (weight < 0.0 ? -1 : 0);
        table.rows.push_back(
            {static_cast<std::int64_t>(d.treatment()[static_cast<std::size_t>(i)]),
             d.covariates()(i, covariate_index), weight, sign});
      }
      break;
    }
    case PlotKind::Influence: {
      if (w.method != WeightMethod::URI && w.method != WeightMethod::MRI)
        throw ConfigError("the influence plot requires the uri or mri method");
      const InfluenceVector influence = sample_influence(d, w.method);
      const double max_abs = influence.sic.cwiseAbs().maxCoeff();
      table.name = "influence";
      table.columns = {"row", "scaled_abs_influence"};
      for (Eigen::Index i = 0; i < d.n(); ++i) {
        const double scaled =
            max_abs > 0.0 ? std::abs(influence.sic(i)) / max_abs : 0.0;
        table.rows.push_back({static_cast<std::int64_t>(i + 1), scaled});
      }
      break;
    }
  }
  return table;
}

}  // namespace regweights
