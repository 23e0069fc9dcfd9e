#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>

#include "regweights/dataset.hpp"
#include "regweights/weights.hpp"

namespace regweights {

// Factorization-backed least squares.  Throws NumericalError when the design
// is rank-deficient at the shared threshold or when the normal-equation
// residual check fails.  Case weights, when given, must be strictly positive.
struct LeastSquaresFit {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd fitted;
  Eigen::VectorXd residuals;
  Eigen::VectorXd leverages;  // diagonal of the (weighted) hat matrix
  double reciprocal_condition = 0.0;
};

LeastSquaresFit least_squares_fit(const Eigen::MatrixXd& design,
                                  const Eigen::VectorXd& response,
                                  const Eigen::VectorXd* case_weights = nullptr);

struct EstimateResult {
  WeightMethod method = WeightMethod::Custom;
  Estimand estimand = Estimand::ATE;
  double value = 0.0;
  // Per-group contrast components: sum_i w_i Y_i within the group (the
  // weighted outcome mean whenever the group's weights sum to 1).
  std::map<int, double> weighted_means;
  // Whether the component lies within the group's observed outcome range.
  std::map<int, bool> sample_bounded;
  std::optional<CovariateProfile> target;
  int active_level = 0;
};

// Weighted-contrast estimate from an explicit weight set.  Binary methods
// return sum_t w Y - sum_c w Y; MultiURI contrasts level v against all other
// groups combined; MultiMRI contrasts level v against the reference level.
EstimateResult hajek_estimate(const Dataset& d, const WeightSet& w);

// Direct regression estimators (independent of the weighting path).
EstimateResult uri_estimate_direct(const Dataset& d);
EstimateResult mri_estimate_direct(const Dataset& d, Estimand estimand,
                                   std::optional<CovariateProfile> x = {});
EstimateResult dr_estimate_direct(const Dataset& d,
                                  const Eigen::VectorXd& base);
EstimateResult multivalued_estimate_direct(const Dataset& d, int level,
                                           MultiFlavor flavor);

// Exact leave-one-out influence of each unit on the estimator, computed in
// closed form from residuals, leverages and implied weights:
// sic_i = (m - 1) * (estimate_with_all - estimate_without_i), where m is the
// fitted sample size (n for the pooled fit, n_g for per-group fits).
struct InfluenceVector {
  Eigen::VectorXd sic;
  Eigen::VectorXd residuals;
  Eigen::VectorXd leverages;
  WeightMethod method = WeightMethod::URI;
};

// `method` must be URI or MRI (MRI uses the full-mean profile).  Requires
// n >= k+3 for URI and every group size >= k+3 for MRI; a unit with leverage
// 1 is reported by index.
InfluenceVector sample_influence(const Dataset& d, WeightMethod method);

}  // namespace regweights
