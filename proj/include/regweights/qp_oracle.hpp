#pragma once

#include <Eigen/Dense>
#include <vector>

#include "regweights/dataset.hpp"
#include "regweights/weights.hpp"

namespace regweights {

// Equality-constrained quadratic program for one treatment group:
//   minimize   sum_i (w_i - base_i)^2 / scale_i
//   subject to sum_i w_i = 1  and  sum_i w_i rows_i = target.
// `base` must sum to 1 and `scale` must be strictly positive.
struct BalanceQP {
  Eigen::MatrixXd rows;    // n_g x k covariate rows of the group
  Eigen::VectorXd base;    // n_g, the anchor weights
  Eigen::VectorXd scale;   // n_g, per-unit penalty scales
  Eigen::VectorXd target;  // k, required weighted covariate sum
};

// Stationarity reads 2 (w_i - base_i) / scale_i + lambda_intercept +
// lambda_balance . rows_i = 0, which pins lambda_intercept =
// -lambda_balance . (scale-weighted covariate mean).
struct QPSolution {
  Eigen::VectorXd weights;
  double lambda_intercept = 0.0;
  Eigen::VectorXd lambda_balance;
  // Max-abs residual of the assembled KKT system, relative to
  // max(1, max-abs right-hand side).
  double kkt_residual = 0.0;
  double objective = 0.0;
};

// Assembles and solves the full dense KKT system; no closed-form shortcuts.
QPSolution solve_balance_qp(const BalanceQP& qp);

struct GroupCertification {
  int label = 0;
  double max_abs_discrepancy = 0.0;
  double kkt_residual = 0.0;
  bool pass = false;
};

struct CertificationReport {
  WeightMethod method = WeightMethod::Custom;
  double tolerance = 0.0;
  std::vector<GroupCertification> groups;
  bool pass = false;
};

// Reconstructs the per-group QP each supported weight method solves (URI,
// MRI, WURI, WMRI, DR), re-solves it through the KKT system and reports the
// entrywise discrepancy.  Other methods are rejected.
CertificationReport certify(const WeightSet& w, const Dataset& d,
                            double tolerance = 1e-8);

}  // namespace regweights
