#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace regweights {

enum class TreatmentKind { Binary, MultiValued };

struct DatasetSchema {
  std::string treatment_column = "treatment";
  std::optional<std::string> outcome_column;
  std::optional<std::string> base_weight_column;
  // Empty means: every column that is not treatment/outcome/base-weight is a
  // covariate, in file order.
  std::vector<std::string> covariate_columns;
  TreatmentKind treatment_kind = TreatmentKind::Binary;
  char delimiter = ',';
};

// Unweighted per-group first and second moments.  `scatter` is the sum of
// centered outer products (not normalized by the group size).
struct GroupMoments {
  int label = 0;
  Eigen::Index size = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd scatter;
  // sigma_min / sigma_max of `scatter`; 0 when the scatter is all zeros.
  double reciprocal_condition = 0.0;
};

// Weighted per-group moments.  `scatter` carries the group-size multiplier:
// scatter = n_g * sum_i w_i (x_i - mean)(x_i - mean)^T, so uniform weights
// 1/n_g reproduce the unweighted scatter.
struct WeightedMoments {
  Eigen::Index size = 0;
  double weight_sum = 0.0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd scatter;
};

struct CovariateProfile {
  Eigen::VectorXd values;
  std::string label;
};

enum class ProfileKind { FullMean, TreatedMean, ControlMean };

class Dataset {
 public:
  // Binary treatments use labels {0, 1}; multi-valued treatments use the
  // contiguous labels {1, ..., V} with V >= 2.  Every declared level must be
  // non-empty, covariates/outcome/base weights must be finite, and base
  // weights must be strictly positive.
  Dataset(Eigen::MatrixXd covariates, std::vector<int> treatment,
          std::optional<Eigen::VectorXd> outcome,
          std::optional<Eigen::VectorXd> base_weights,
          std::vector<std::string> covariate_names, TreatmentKind kind);

  Eigen::Index n() const { return covariates_.rows(); }
  Eigen::Index k() const { return covariates_.cols(); }
  const Eigen::MatrixXd& covariates() const { return covariates_; }
  const std::vector<int>& treatment() const { return treatment_; }
  TreatmentKind treatment_kind() const { return kind_; }

  bool has_outcome() const { return outcome_.has_value(); }
  const Eigen::VectorXd& outcome() const;
  bool has_base_weights() const { return base_weights_.has_value(); }
  const Eigen::VectorXd& base_weights() const;
  const std::vector<std::string>& covariate_names() const {
    return covariate_names_;
  }

  // Sorted distinct treatment labels ({0,1} or {1..V}).
  const std::vector<int>& group_labels() const { return group_labels_; }
  int group_count() const { return static_cast<int>(group_labels_.size()); }
  const std::vector<Eigen::Index>& group_rows(int label) const;
  Eigen::Index group_size(int label) const;

  // Validated moments: throws DataError when the group has fewer than k+1
  // members and NumericalError when the scatter is singular at the shared
  // threshold (naming a constant column when one exists).
  const GroupMoments& group_moments(int label) const;
  // Same moments without the singularity gate (mean/scatter are always
  // well-defined sums).
  const GroupMoments& raw_group_moments(int label) const;

  const Eigen::VectorXd& full_mean() const { return full_mean_; }

 private:
  Eigen::MatrixXd covariates_;
  std::vector<int> treatment_;
  std::optional<Eigen::VectorXd> outcome_;
  std::optional<Eigen::VectorXd> base_weights_;
  std::vector<std::string> covariate_names_;
  TreatmentKind kind_;

  std::vector<int> group_labels_;
  std::map<int, std::vector<Eigen::Index>> group_rows_;
  std::map<int, GroupMoments> moments_;
  Eigen::VectorXd full_mean_;
};

Dataset load_dataset(const std::string& path, const DatasetSchema& schema);

// Weighted moments for one group; `weights` is aligned with group_rows(label)
// and must be nonnegative with a positive sum.
WeightedMoments weighted_moments(const Dataset& d, int label,
                                 const Eigen::VectorXd& weights);

CovariateProfile profile(const Dataset& d, ProfileKind kind);
CovariateProfile custom_profile(Eigen::VectorXd values);

}  // namespace regweights
