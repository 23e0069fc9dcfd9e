#include "regweights/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <Eigen/SVD>

#include "regweights/errors.hpp"
#include "regweights/numeric.hpp"

namespace regweights {

namespace {

double column_reciprocal_condition(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0.0) return 0.0;
  return sv(sv.size() - 1) / sv(0);
}

GroupMoments compute_moments(const Eigen::MatrixXd& covariates,
                             const std::vector<Eigen::Index>& rows, int label) {
  const Eigen::Index k = covariates.cols();
  const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
  GroupMoments out;
  out.label = label;
  out.size = m;
  out.mean.resize(k);
  out.scatter.resize(k, k);

  std::vector<double> terms(static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) terms[i] = covariates(rows[i], j);
    out.mean(j) = canonical_sum(terms) / static_cast<double>(m);
  }
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index l = j; l < k; ++l) {
      for (Eigen::Index i = 0; i < m; ++i) {
        terms[i] = (covariates(rows[i], j) - out.mean(j)) *
                   (covariates(rows[i], l) - out.mean(l));
      }
      const double s = canonical_sum(terms);
      out.scatter(j, l) = s;
      out.scatter(l, j) = s;
    }
  }
  out.reciprocal_condition = column_reciprocal_condition(out.scatter);
  return out;
}

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r'))
    --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_line(const std::string& line, char delimiter) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, delimiter)) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == delimiter) cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, const std::string& column,
                  std::size_t line_no) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  double value = 0.0;
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end || cell.empty()) {
    throw DataError("non-numeric cell '" + cell + "' in column '" + column +
                    "' at line " + std::to_string(line_no));
  }
  if (!std::isfinite(value)) {
    throw DataError("non-finite value in column '" + column + "' at line " +
                    std::to_string(line_no));
  }
  return value;
}

}  // namespace

Dataset::Dataset(Eigen::MatrixXd covariates, std::vector<int> treatment,
                 std::optional<Eigen::VectorXd> outcome,
                 std::optional<Eigen::VectorXd> base_weights,
                 std::vector<std::string> covariate_names, TreatmentKind kind)
    : covariates_(std::move(covariates)),
      treatment_(std::move(treatment)),
      outcome_(std::move(outcome)),
      base_weights_(std::move(base_weights)),
      covariate_names_(std::move(covariate_names)),
      kind_(kind) {
  const Eigen::Index n = covariates_.rows();
  const Eigen::Index k = covariates_.cols();
  if (n < 1) throw DataError("dataset has no rows");
  if (k < 1) throw DataError("dataset has no covariates");
  if (static_cast<Eigen::Index>(treatment_.size()) != n)
    throw DataError("treatment length does not match the covariate rows");
  if (covariate_names_.empty()) {
    for (Eigen::Index j = 0; j < k; ++j)
      covariate_names_.push_back("x" + std::to_string(j + 1));
  }
  if (static_cast<Eigen::Index>(covariate_names_.size()) != k)
    throw DataError("covariate name count does not match the columns");
  if (!covariates_.allFinite())
    throw DataError("covariates contain a non-finite value");
  if (outcome_) {
    if (outcome_->size() != n)
      throw DataError("outcome length does not match the covariate rows");
    if (!outcome_->allFinite())
      throw DataError("outcome contains a non-finite value");
  }
  if (base_weights_) {
    if (base_weights_->size() != n)
      throw DataError("base weight length does not match the covariate rows");
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = (*base_weights_)(i);
      if (!std::isfinite(w) || w <= 0.0) {
        throw DataError("base weight at row " + std::to_string(i + 1) +
                        " is not strictly positive");
      }
    }
  }

  std::set<int> labels(treatment_.begin(), treatment_.end());
  if (kind_ == TreatmentKind::Binary) {
    for (int z : labels) {
      if (z != 0 && z != 1) {
        throw DataError("treatment value " + std::to_string(z) +
                        " is invalid for a binary treatment (expected 0 or 1)");
      }
    }
    if (labels.size() != 2)
      throw DataError("binary treatment requires both groups to be non-empty");
  } else {
    const int v_max = *labels.rbegin();
    if (*labels.begin() < 1) {
      throw DataError("treatment value " + std::to_string(*labels.begin()) +
                      " is invalid for a multi-valued treatment (levels are "
                      "1..V)");
    }
    if (v_max < 2)
      throw DataError("multi-valued treatment requires at least two levels");
    for (int v = 1; v <= v_max; ++v) {
      if (labels.count(v) == 0) {
        throw DataError("treatment level " + std::to_string(v) +
                        " is empty; levels must cover 1..V");
      }
    }
  }

  group_labels_.assign(labels.begin(), labels.end());
  for (int label : group_labels_) group_rows_[label] = {};
  for (Eigen::Index i = 0; i < n; ++i)
    group_rows_[treatment_[static_cast<std::size_t>(i)]].push_back(i);
  for (int label : group_labels_)
    moments_[label] = compute_moments(covariates_, group_rows_[label], label);

  full_mean_.resize(k);
  std::vector<double> terms(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) terms[i] = covariates_(i, j);
    full_mean_(j) = canonical_sum(terms) / static_cast<double>(n);
  }
}

const Eigen::VectorXd& Dataset::outcome() const {
  if (!outcome_) throw DataError("dataset has no outcome column");
  return *outcome_;
}

const Eigen::VectorXd& Dataset::base_weights() const {
  if (!base_weights_) throw DataError("dataset has no base weight column");
  return *base_weights_;
}

const std::vector<Eigen::Index>& Dataset::group_rows(int label) const {
  const auto it = group_rows_.find(label);
  if (it == group_rows_.end())
    throw DataError("unknown treatment group " + std::to_string(label));
  return it->second;
}

Eigen::Index Dataset::group_size(int label) const {
  return static_cast<Eigen::Index>(group_rows(label).size());
}

const GroupMoments& Dataset::raw_group_moments(int label) const {
  const auto it = moments_.find(label);
  if (it == moments_.end())
    throw DataError("unknown treatment group " + std::to_string(label));
  return it->second;
}

const GroupMoments& Dataset::group_moments(int label) const {
  const GroupMoments& m = raw_group_moments(label);
  if (m.size < k() + 1) {
    throw DataError("group " + std::to_string(label) + " has " +
                    std::to_string(m.size) + " rows; at least k+1 = " +
                    std::to_string(k() + 1) +
                    " are required for a nonsingular scatter");
  }
  if (m.reciprocal_condition < kSingularityThreshold) {
    const auto& rows = group_rows(label);
    for (Eigen::Index j = 0; j < k(); ++j) {
      double lo = covariates_(rows.front(), j);
      double hi = lo;
      for (Eigen::Index r : rows) {
        lo = std::min(lo, covariates_(r, j));
        hi = std::max(hi, covariates_(r, j));
      }
      if (lo == hi) {
        throw NumericalError("covariate '" + covariate_names_[j] +
                             "' is constant within group " +
                             std::to_string(label) +
                             "; its scatter is singular");
      }
    }
    std::ostringstream msg;
    msg << "scatter of group " << label
        << " is singular (reciprocal condition "
        << m.reciprocal_condition << " below threshold)";
    throw NumericalError(msg.str());
  }
  return m;
}

Dataset load_dataset(const std::string& path, const DatasetSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open input file '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  if (in.bad()) throw IoError("failed reading input file '" + path + "'");
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw DataError("input file '" + path + "' is empty");

  const std::vector<std::string> header = split_line(lines[0], schema.delimiter);
  std::map<std::string, std::size_t> column_index;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j].empty())
      throw DataError("empty header name in column " + std::to_string(j + 1));
    if (!column_index.emplace(header[j], j).second)
      throw DataError("duplicate header name '" + header[j] + "'");
  }
  const auto require_column = [&](const std::string& name) {
    const auto it = column_index.find(name);
    if (it == column_index.end())
      throw DataError("column '" + name + "' not found in '" + path + "'");
    return it->second;
  };

  const std::size_t treatment_idx = require_column(schema.treatment_column);
  std::optional<std::size_t> outcome_idx;
  if (schema.outcome_column) outcome_idx = require_column(*schema.outcome_column);
  std::optional<std::size_t> base_idx;
  if (schema.base_weight_column)
    base_idx = require_column(*schema.base_weight_column);

  std::set<std::size_t> role_columns = {treatment_idx};
  if (outcome_idx) role_columns.insert(*outcome_idx);
  if (base_idx) role_columns.insert(*base_idx);
  const std::size_t role_count =
      1 + (outcome_idx ? 1 : 0) + (base_idx ? 1 : 0);
  if (role_columns.size() != role_count)
    throw ConfigError("treatment, outcome and base-weight columns must be "
                      "distinct");

  std::vector<std::size_t> covariate_idx;
  std::vector<std::string> covariate_names;
  if (!schema.covariate_columns.empty()) {
    for (const std::string& name : schema.covariate_columns) {
      const std::size_t j = require_column(name);
      if (role_columns.count(j)) {
        throw ConfigError("column '" + name +
                          "' is both a covariate and a role column");
      }
      covariate_idx.push_back(j);
      covariate_names.push_back(name);
    }
  } else {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (!role_columns.count(j)) {
        covariate_idx.push_back(j);
        covariate_names.push_back(header[j]);
      }
    }
  }
  if (covariate_idx.empty())
    throw DataError("no covariate columns in '" + path + "'");

  const std::size_t n = lines.size() - 1;
  Eigen::MatrixXd covariates(static_cast<Eigen::Index>(n),
                             static_cast<Eigen::Index>(covariate_idx.size()));
  std::vector<int> treatment(n);
  Eigen::VectorXd outcome(outcome_idx ? static_cast<Eigen::Index>(n) : 0);
  Eigen::VectorXd base(base_idx ? static_cast<Eigen::Index>(n) : 0);

  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t line_no = r + 2;
    const std::vector<std::string> cells =
        split_line(lines[r + 1], schema.delimiter);
    if (cells.size() != header.size()) {
      throw DataError("line " + std::to_string(line_no) + " has " +
                      std::to_string(cells.size()) + " fields, expected " +
                      std::to_string(header.size()));
    }
    const double z =
        parse_cell(cells[treatment_idx], schema.treatment_column, line_no);
    const double z_rounded = std::nearbyint(z);
    if (z != z_rounded) {
      throw DataError("treatment value '" + cells[treatment_idx] +
                      "' at line " + std::to_string(line_no) +
                      " is not an integer label");
    }
    treatment[r] = static_cast<int>(z_rounded);
    if (schema.treatment_kind == TreatmentKind::Binary && treatment[r] != 0 &&
        treatment[r] != 1) {
      throw DataError("treatment value " + std::to_string(treatment[r]) +
                      " at line " + std::to_string(line_no) +
                      " is invalid for a binary treatment (expected 0 or 1)");
    }
    for (std::size_t c = 0; c < covariate_idx.size(); ++c) {
      covariates(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          parse_cell(cells[covariate_idx[c]], covariate_names[c], line_no);
    }
    if (outcome_idx) {
      outcome(static_cast<Eigen::Index>(r)) =
          parse_cell(cells[*outcome_idx], *schema.outcome_column, line_no);
    }
    if (base_idx) {
      base(static_cast<Eigen::Index>(r)) =
          parse_cell(cells[*base_idx], *schema.base_weight_column, line_no);
      if (base(static_cast<Eigen::Index>(r)) <= 0.0) {
        throw DataError("base weight '" + cells[*base_idx] + "' at line " +
                        std::to_string(line_no) + " is not strictly positive");
      }
    }
  }

  return Dataset(std::move(covariates), std::move(treatment),
                 outcome_idx ? std::optional<Eigen::VectorXd>(std::move(outcome))
                             : std::nullopt,
                 base_idx ? std::optional<Eigen::VectorXd>(std::move(base))
                          : std::nullopt,
                 std::move(covariate_names), schema.treatment_kind);
}

WeightedMoments weighted_moments(const Dataset& d, int label,
                                 const Eigen::VectorXd& weights) {
  const auto& rows = d.group_rows(label);
  const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index k = d.k();
  if (weights.size() != m) {
    throw DataError("weight length " + std::to_string(weights.size()) +
                    " does not match group " + std::to_string(label) +
                    " size " + std::to_string(m));
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!std::isfinite(weights(i)) || weights(i) < 0.0)
      throw DataError("weighted moments require nonnegative finite weights");
  }

  WeightedMoments out;
  out.size = m;
  std::vector<double> terms(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) terms[i] = weights(i);
  out.weight_sum = canonical_sum(terms);
  if (out.weight_sum <= 0.0)
    throw DataError("weighted moments require a positive weight sum");

  out.mean.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < m; ++i)
      terms[i] = weights(i) * d.covariates()(rows[i], j);
    out.mean(j) = canonical_sum(terms) / out.weight_sum;
  }
  out.scatter.resize(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index l = j; l < k; ++l) {
      for (Eigen::Index i = 0; i < m; ++i) {
        terms[i] = weights(i) * (d.covariates()(rows[i], j) - out.mean(j)) *
                   (d.covariates()(rows[i], l) - out.mean(l));
      }
      const double s = static_cast<double>(m) * canonical_sum(terms);
      out.scatter(j, l) = s;
      out.scatter(l, j) = s;
    }
  }
  return out;
}

CovariateProfile profile(const Dataset& d, ProfileKind kind) {
  switch (kind) {
    case ProfileKind::FullMean:
      return {d.full_mean(), "full_mean"};
    case ProfileKind::TreatedMean:
      if (d.treatment_kind() != TreatmentKind::Binary)
        throw ConfigError("treated-mean profile requires a binary treatment");
      return {d.raw_group_moments(1).mean, "treated_mean"};
    case ProfileKind::ControlMean:
      if (d.treatment_kind() != TreatmentKind::Binary)
        throw ConfigError("control-mean profile requires a binary treatment");
      return {d.raw_group_moments(0).mean, "control_mean"};
  }
  throw ConfigError("unknown profile kind");
}

CovariateProfile custom_profile(Eigen::VectorXd values) {
  if (!values.allFinite())
    throw ConfigError("custom profile contains a non-finite value");
  return {std::move(values), "custom"};
}

}  // namespace regweights
