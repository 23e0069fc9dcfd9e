#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>

#include "regweights/dataset.hpp"

namespace regweights {

enum class WeightMethod {
  URI,            // single pooled fit of outcome on covariates and treatment
  MRI,            // separate per-group fits, predictions at a profile
  WURI,           // pooled fit with caller-supplied case weights
  WMRI,           // per-group fits with caller-supplied case weights
  DR,             // augmented (bias-corrected) weighting estimator
  MultiURI,       // pooled fit with one indicator per non-reference level
  MultiMRI,       // per-group fits, active level versus reference level
  NoInterceptURI, // pooled fit without an intercept
  NoInterceptMRI, // per-group fits without an intercept
  Custom,         // weights supplied directly by the caller
};

enum class Estimand { ATE, ATT, ATC, CATE, MultiLevel };

std::string to_string(WeightMethod m);
std::string to_string(Estimand e);

// Implied per-unit weights of one estimator on one dataset.  Weights align
// with dataset rows.  For every method except the no-intercept variants and
// MultiURI's inactive groups, each group's weights sum to 1; MultiURI inactive
// groups sum to 0 and no-intercept control sums are unconstrained.
struct WeightSet {
  WeightMethod method = WeightMethod::Custom;
  Estimand estimand = Estimand::ATE;
  Eigen::VectorXd weights;
  CovariateProfile target;
  std::map<int, double> group_sums;
  // Active level v for multi-valued methods (contrast of level v versus the
  // reference level 1); 0 otherwise.
  int active_level = 0;
  // Base weights the caller supplied (WURI/WMRI/DR), kept so the solution can
  // be re-derived independently.
  std::optional<Eigen::VectorXd> base;
};

// --- Binary treatment ------------------------------------------------------

WeightSet uri_weights(const Dataset& d);
// Profile the pooled-fit estimator implicitly imputes toward:
// x* = S_c (S_t + S_c)^{-1} xbar_t + S_t (S_t + S_c)^{-1} xbar_c.
CovariateProfile uri_implied_profile(const Dataset& d);

// Per-group-fit weights toward profile x.  Estimand is tagged ATE/ATT/ATC
// when x coincides with the full/treated/control mean and CATE otherwise.
WeightSet mri_weights(const Dataset& d, const CovariateProfile& x);

// Case-weighted variants; `base` must be strictly positive, length n.
WeightSet wuri_weights(const Dataset& d, const Eigen::VectorXd& base);
CovariateProfile wuri_implied_profile(const Dataset& d,
                                      const Eigen::VectorXd& base);
WeightSet wmri_weights(const Dataset& d, const Eigen::VectorXd& base,
                       const CovariateProfile& x);

// Augmented estimator: base weights bias-corrected toward the full mean.
WeightSet dr_weights(const Dataset& d, const Eigen::VectorXd& base);

// --- Multi-valued treatment -------------------------------------------------

enum class MultiFlavor { PooledIndicator, PerGroup };

// Contrast of level v (>= 2) versus reference level 1.  PooledIndicator uses
// the single fit with V-1 level indicators; PerGroup uses fits in groups v
// and 1 imputing toward the full-sample covariate mean.
WeightSet multivalued_weights(const Dataset& d, int level, MultiFlavor flavor);

// --- No-intercept variants ---------------------------------------------------

enum class NoInterceptFlavor { Pooled, PerGroup };

// Pooled: weights of the treatment coefficient in the intercept-free pooled
// fit; weighted covariate sums (not means) balance across groups.  PerGroup:
// intercept-free per-group fits toward profile x (defaults to the full mean);
// each group's weighted covariate sum equals x.
WeightSet no_intercept_weights(const Dataset& d, NoInterceptFlavor flavor,
                               std::optional<CovariateProfile> x = {});

// --- Matched pairs -----------------------------------------------------------

struct MatchedSample {
  Eigen::MatrixXd treated_covariates;  // pairs x k
  Eigen::MatrixXd control_covariates;  // pairs x k
  std::optional<Eigen::VectorXd> treated_outcome;
  std::optional<Eigen::VectorXd> control_outcome;

  Eigen::Index pairs() const { return treated_covariates.rows(); }
  Eigen::Index k() const { return treated_covariates.cols(); }
};

// Weights of the fit of within-pair outcome differences on within-pair
// covariate differences (with intercept).  pair_weights sum to 1 and the
// weighted treated and control covariate means coincide at implied_profile.
struct PairWeightSet {
  Eigen::VectorXd pair_weights;
  CovariateProfile implied_profile;
};

PairWeightSet matched_pair_weights(const MatchedSample& m);
double matched_pair_estimate(const MatchedSample& m, const PairWeightSet& w);

// Wraps caller-supplied weights (e.g. reloaded from a weight table) so the
// diagnostic and estimation paths can run on them.
WeightSet custom_weight_set(const Dataset& d, Eigen::VectorXd weights,
                            Estimand estimand, CovariateProfile target);

}  // namespace regweights
