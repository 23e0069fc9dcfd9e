#include "regweights/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/SVD>

#include "regweights/errors.hpp"
#include "regweights/numeric.hpp"

namespace regweights {

namespace {

// Shared SVD-backed solver so coefficient estimates, leverages and implied
// linear functionals all come from one factorization.
struct SvdFit {
  Eigen::MatrixXd thin_u;        // of the weight-scaled design
  Eigen::VectorXd singular_values;
  Eigen::MatrixXd thin_v;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd fitted;
  Eigen::VectorXd residuals;
  Eigen::VectorXd leverages;
  double reciprocal_condition = 0.0;
};

SvdFit svd_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
               const Eigen::VectorXd* case_weights) {
  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.cols();
  if (response.size() != n)
    throw DataError("response length does not match the design rows");
  if (n < p)
    throw DataError("least squares requires at least as many rows as columns");
  if (!design.allFinite() || !response.allFinite())
    throw DataError("least squares inputs contain a non-finite value");

  Eigen::VectorXd sqrt_w;
  if (case_weights != nullptr) {
    if (case_weights->size() != n)
      throw DataError("case weight length does not match the design rows");
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = (*case_weights)(i);
      if (!std::isfinite(w) || w <= 0.0)
        throw DataError("case weights must be strictly positive");
    }
    sqrt_w = case_weights->cwiseSqrt();
  }

  const Eigen::MatrixXd scaled_design =
      case_weights ? Eigen::MatrixXd(sqrt_w.asDiagonal() * design) : design;
  const Eigen::VectorXd scaled_response =
      case_weights ? Eigen::VectorXd(sqrt_w.asDiagonal() * response) : response;

  Eigen::BDCSVD<Eigen::MatrixXd> svd(scaled_design,
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdFit fit;
  fit.singular_values = svd.singularValues();
  const double sv_max = fit.singular_values(0);
  const double sv_min = fit.singular_values(p - 1);
  fit.reciprocal_condition = sv_max > 0.0 ? sv_min / sv_max : 0.0;
  if (fit.reciprocal_condition < kSingularityThreshold) {
    std::ostringstream msg;
    msg << "design matrix is rank-deficient (reciprocal condition "
        << fit.reciprocal_condition << " below threshold)";
    throw NumericalError(msg.str());
  }
  fit.thin_u = svd.matrixU();
  fit.thin_v = svd.matrixV();
  fit.coefficients =
      fit.thin_v *
      (fit.singular_values.cwiseInverse().asDiagonal() *
       (fit.thin_u.transpose() * scaled_response));
  fit.fitted = design * fit.coefficients;
  fit.residuals = response - fit.fitted;
  fit.leverages = fit.thin_u.rowwise().squaredNorm();

  // Normal-equation residual check: the factored solve must satisfy the
  // stationarity conditions to near machine precision.
  const Eigen::VectorXd weighted_residuals =
      case_weights ? Eigen::VectorXd(case_weights->asDiagonal() * fit.residuals)
                   : fit.residuals;
  const Eigen::VectorXd weighted_response =
      case_weights ? Eigen::VectorXd(case_weights->asDiagonal() * response)
                   : response;
  const double gradient_norm =
      (design.transpose() * weighted_residuals).cwiseAbs().maxCoeff();
  const double scale =
      std::max({1.0,
                (design.transpose() * weighted_response).cwiseAbs().maxCoeff(),
                (scaled_design.transpose() * scaled_design).cwiseAbs().maxCoeff() *
                    fit.coefficients.cwiseAbs().maxCoeff()});
  if (!(gradient_norm <= 1e-10 * scale)) {
    std::ostringstream msg;
    msg << "normal-equation residual check failed (" << gradient_norm
        << " > 1e-10 * " << scale << ")";
    throw NumericalError(msg.str());
  }
  return fit;
}

// c = D (D^T D)^{-1} l for an unweighted fit: c_i y_i decomposes l^T beta-hat
// into per-unit contributions.
Eigen::VectorXd functional_weights(const SvdFit& fit,
                                   const Eigen::VectorXd& l) {
  return fit.thin_u * (fit.singular_values.cwiseInverse().asDiagonal() *
                       (fit.thin_v.transpose() * l));
}

void require_binary(const Dataset& d, const char* what) {
  if (d.treatment_kind() != TreatmentKind::Binary)
    throw ConfigError(std::string(what) + " requires a binary treatment");
}

Eigen::MatrixXd pooled_design(const Dataset& d) {
  const Eigen::Index n = d.n();
  const Eigen::Index k = d.k();
  Eigen::MatrixXd design(n, k + 2);
  design.col(0).setOnes();
  design.middleCols(1, k) = d.covariates();
  for (Eigen::Index i = 0; i < n; ++i)
    design(i, k + 1) = d.treatment()[static_cast<std::size_t>(i)] == 1 ? 1.0 : 0.0;
  return design;
}

Eigen::MatrixXd group_design(const Dataset& d, int label) {
  const auto& rows = d.group_rows(label);
  Eigen::MatrixXd design(static_cast<Eigen::Index>(rows.size()), d.k() + 1);
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    design(i, 0) = 1.0;
    design.row(i).tail(d.k()) = d.covariates().row(rows[i]);
  }
  return design;
}

Eigen::VectorXd group_vector(const Eigen::VectorXd& full,
                             const std::vector<Eigen::Index>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = full(rows[i]);
  return out;
}

double predict(const Eigen::VectorXd& coefficients, const Eigen::VectorXd& x) {
  return coefficients(0) + coefficients.tail(x.size()).dot(x);
}

double group_outcome_component(const Dataset& d, const Eigen::VectorXd& w,
                               const std::vector<Eigen::Index>& rows) {
  std::vector<double> terms(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    terms[i] = w(rows[i]) * d.outcome()(rows[i]);
  return canonical_sum(std::move(terms));
}

void fill_sample_bounds(const Dataset& d, EstimateResult& result) {
  for (int label : d.group_labels()) {
    const auto& rows = d.group_rows(label);
    double lo = d.outcome()(rows.front());
    double hi = lo;
    for (Eigen::Index r : rows) {
      lo = std::min(lo, d.outcome()(r));
      hi = std::max(hi, d.outcome()(r));
    }
    const auto it = result.weighted_means.find(label);
    if (it != result.weighted_means.end())
      result.sample_bounded[label] = it->second >= lo && it->second <= hi;
  }
}

}  // namespace

LeastSquaresFit least_squares_fit(const Eigen::MatrixXd& design,
                                  const Eigen::VectorXd& response,
                                  const Eigen::VectorXd* case_weights) {
  const SvdFit fit = svd_fit(design, response, case_weights);
  LeastSquaresFit out;
  out.coefficients = fit.coefficients;
  out.fitted = fit.fitted;
  out.residuals = fit.residuals;
  out.leverages = fit.leverages;
  out.reciprocal_condition = fit.reciprocal_condition;
  return out;
}

EstimateResult hajek_estimate(const Dataset& d, const WeightSet& w) {
  if (!d.has_outcome())
    throw DataError("estimation requires an outcome column");
  if (w.weights.size() != d.n())
    throw DataError("weight set length does not match the dataset rows");

  EstimateResult result;
  result.method = w.method;
  result.estimand = w.estimand;
  result.target = w.target;
  result.active_level = w.active_level;
  for (int label : d.group_labels()) {
    result.weighted_means[label] =
        group_outcome_component(d, w.weights, d.group_rows(label));
  }

  if (w.method == WeightMethod::MultiURI) {
    double others = 0.0;
    for (const auto& [label, component] : result.weighted_means)
      if (label != w.active_level) others += component;
    result.value = result.weighted_means.at(w.active_level) - others;
  } else if (w.method == WeightMethod::MultiMRI) {
    result.value = result.weighted_means.at(w.active_level) -
                   result.weighted_means.at(1);
  } else {
    require_binary(d, "a binary-method weight set");
    result.value = result.weighted_means.at(1) - result.weighted_means.at(0);
  }
  fill_sample_bounds(d, result);
  return result;
}

EstimateResult uri_estimate_direct(const Dataset& d) {
  require_binary(d, "the pooled-fit estimator");
  if (!d.has_outcome())
    throw DataError("estimation requires an outcome column");
  const Eigen::MatrixXd design = pooled_design(d);
  const SvdFit fit = svd_fit(design, d.outcome(), nullptr);
  Eigen::VectorXd l = Eigen::VectorXd::Zero(design.cols());
  l(design.cols() - 1) = 1.0;
  const Eigen::VectorXd c = functional_weights(fit, l);

  EstimateResult result;
  result.method = WeightMethod::URI;
  result.estimand = Estimand::ATE;
  result.weighted_means[1] = group_outcome_component(d, c, d.group_rows(1));
  result.weighted_means[0] = -group_outcome_component(d, c, d.group_rows(0));
  result.value = result.weighted_means[1] - result.weighted_means[0];
  fill_sample_bounds(d, result);
  return result;
}

EstimateResult mri_estimate_direct(const Dataset& d, Estimand estimand,
                                   std::optional<CovariateProfile> x) {
  require_binary(d, "the per-group-fit estimator");
  if (!d.has_outcome())
    throw DataError("estimation requires an outcome column");

  std::map<int, Eigen::VectorXd> coef;
  for (int label : d.group_labels()) {
    const auto& rows = d.group_rows(label);
    if (static_cast<Eigen::Index>(rows.size()) < d.k() + 2) {
      throw DataError("group " + std::to_string(label) +
                      " is too small for a per-group fit");
    }
    coef[label] = svd_fit(group_design(d, label),
                          group_vector(d.outcome(), rows), nullptr)
                      .coefficients;
  }

  const Eigen::Index n = d.n();
  const auto mean_prediction = [&](int label,
                                   const std::vector<Eigen::Index>& rows) {
    std::vector<double> terms(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
      terms[i] = predict(coef[label], d.covariates().row(rows[i]).transpose());
    return canonical_sum(std::move(terms)) / static_cast<double>(rows.size());
  };
  std::vector<Eigen::Index> all_rows(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) all_rows[static_cast<std::size_t>(i)] = i;

  EstimateResult result;
  result.method = WeightMethod::MRI;
  result.estimand = estimand;
  switch (estimand) {
    case Estimand::ATE:
      result.weighted_means[1] = mean_prediction(1, all_rows);
      result.weighted_means[0] = mean_prediction(0, all_rows);
      result.target = CovariateProfile{d.full_mean(), "full_mean"};
      break;
    case Estimand::ATT: {
      const auto& rows = d.group_rows(1);
      std::vector<double> terms(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i)
        terms[i] = d.outcome()(rows[i]);
      result.weighted_means[1] =
          canonical_sum(std::move(terms)) / static_cast<double>(rows.size());
      result.weighted_means[0] = mean_prediction(0, rows);
      result.target = CovariateProfile{d.raw_group_moments(1).mean,
                                       "treated_mean"};
      break;
    }
    case Estimand::ATC: {
      const auto& rows = d.group_rows(0);
      result.weighted_means[1] = mean_prediction(1, rows);
      std::vector<double> terms(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i)
        terms[i] = d.outcome()(rows[i]);
      result.weighted_means[0] =
          canonical_sum(std::move(terms)) / static_cast<double>(rows.size());
      result.target = CovariateProfile{d.raw_group_moments(0).mean,
                                       "control_mean"};
      break;
    }
    case Estimand::CATE: {
      if (!x) throw ConfigError("a conditional estimate requires a profile");
      result.weighted_means[1] = predict(coef[1], x->values);
      result.weighted_means[0] = predict(coef[0], x->values);
      result.target = *x;
      break;
    }
    case Estimand::MultiLevel:
      throw ConfigError("multi-level estimands use the multi-valued methods");
  }
  result.value = result.weighted_means[1] - result.weighted_means[0];
  fill_sample_bounds(d, result);
  return result;
}

EstimateResult dr_estimate_direct(const Dataset& d,
                                  const Eigen::VectorXd& base) {
  require_binary(d, "the augmented estimator");
  if (!d.has_outcome())
    throw DataError("estimation requires an outcome column");
  if (base.size() != d.n())
    throw DataError("base weight length does not match the dataset rows");

  EstimateResult result;
  result.method = WeightMethod::DR;
  result.estimand = Estimand::ATE;
  result.target = CovariateProfile{d.full_mean(), "full_mean"};
  const Eigen::Index n = d.n();
  for (int label : d.group_labels()) {
    const auto& rows = d.group_rows(label);
    if (static_cast<Eigen::Index>(rows.size()) < d.k() + 2) {
      throw DataError("group " + std::to_string(label) +
                      " is too small for a per-group fit");
    }
    const Eigen::VectorXd coefficients =
        svd_fit(group_design(d, label), group_vector(d.outcome(), rows),
                nullptr)
            .coefficients;
    std::vector<double> base_terms(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) base_terms[i] = base(rows[i]);
    const double base_sum = canonical_sum(base_terms);

    std::vector<double> prediction_terms(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      prediction_terms[static_cast<std::size_t>(i)] =
          predict(coefficients, d.covariates().row(i).transpose());
    }
    const double mean_prediction =
        canonical_sum(std::move(prediction_terms)) / static_cast<double>(n);

    std::vector<double> residual_terms(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double prediction =
          predict(coefficients, d.covariates().row(rows[i]).transpose());
      residual_terms[i] =
          (base(rows[i]) / base_sum) * (d.outcome()(rows[i]) - prediction);
    }
    result.weighted_means[label] =
        mean_prediction + canonical_sum(std::move(residual_terms));
  }
  result.value = result.weighted_means[1] - result.weighted_means[0];
  fill_sample_bounds(d, result);
  return result;
}

EstimateResult multivalued_estimate_direct(const Dataset& d, int level,
                                           MultiFlavor flavor) {
  if (d.treatment_kind() != TreatmentKind::MultiValued)
    throw ConfigError("multi-valued estimators require a multi-valued "
                      "treatment");
  if (!d.has_outcome())
    throw DataError("estimation requires an outcome column");
  const int v_max = d.group_labels().back();
  if (level < 2 || level > v_max) {
    throw ConfigError("active level " + std::to_string(level) +
                      " is outside 2..V");
  }

  EstimateResult result;
  result.estimand = Estimand::MultiLevel;
  result.active_level = level;

  if (flavor == MultiFlavor::PooledIndicator) {
    const Eigen::Index n = d.n();
    const Eigen::Index k = d.k();
    const int v_count = v_max - 1;
    Eigen::MatrixXd design(n, 1 + k + v_count);
    design.col(0).setOnes();
    design.middleCols(1, k) = d.covariates();
    design.rightCols(v_count).setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      const int z = d.treatment()[static_cast<std::size_t>(i)];
      if (z >= 2) design(i, 1 + k + (z - 2)) = 1.0;
    }
    const SvdFit fit = svd_fit(design, d.outcome(), nullptr);
    Eigen::VectorXd l = Eigen::VectorXd::Zero(design.cols());
    l(1 + k + (level - 2)) = 1.0;
    const Eigen::VectorXd c = functional_weights(fit, l);
    result.method = WeightMethod::MultiURI;
    double others = 0.0;
    for (int label : d.group_labels()) {
      const double component =
          group_outcome_component(d, c, d.group_rows(label));
      if (label == level) {
        result.weighted_means[label] = component;
      } else {
        result.weighted_means[label] = -component;
        others += -component;
      }
    }
    result.value = result.weighted_means[level] - others;
  } else {
    result.method = WeightMethod::MultiMRI;
    const Eigen::Index n = d.n();
    for (int label : {1, level}) {
      const auto& rows = d.group_rows(label);
      if (static_cast<Eigen::Index>(rows.size()) < d.k() + 2) {
        throw DataError("group " + std::to_string(label) +
                        " is too small for a per-group fit");
      }
      const Eigen::VectorXd coefficients =
          svd_fit(group_design(d, label), group_vector(d.outcome(), rows),
                  nullptr)
              .coefficients;
      std::vector<double> terms(static_cast<std::size_t>(n));
      for (Eigen::Index i = 0; i < n; ++i) {
        terms[static_cast<std::size_t>(i)] =
            predict(coefficients, d.covariates().row(i).transpose());
      }
      result.weighted_means[label] =
          canonical_sum(std::move(terms)) / static_cast<double>(n);
    }
    result.value = result.weighted_means[level] - result.weighted_means[1];
    result.target = CovariateProfile{d.full_mean(), "full_mean"};
  }
  fill_sample_bounds(d, result);
  return result;
}

InfluenceVector sample_influence(const Dataset& d, WeightMethod method) {
  if (!d.has_outcome())
    throw DataError("influence requires an outcome column");
  require_binary(d, "influence analysis");
  InfluenceVector out;
  out.method = method;
  out.sic.resize(d.n());
  out.residuals.resize(d.n());
  out.leverages.resize(d.n());

  const auto check_leverage = [](double leverage, Eigen::Index row) {
    if (leverage >= 1.0 - 1e-10) {
      throw NumericalError("unit at row " + std::to_string(row + 1) +
                           " has leverage 1; its leave-one-out estimate is "
                           "undefined");
    }
  };

  if (method == WeightMethod::URI) {
    if (d.n() < d.k() + 3)
      throw DataError("influence for the pooled fit requires n >= k+3");
    const SvdFit fit = svd_fit(pooled_design(d), d.outcome(), nullptr);
    const WeightSet w = uri_weights(d);
    for (Eigen::Index i = 0; i < d.n(); ++i) {
      check_leverage(fit.leverages(i), i);
      const double sign =
          d.treatment()[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
      out.residuals(i) = fit.residuals(i);
      out.leverages(i) = fit.leverages(i);
      out.sic(i) = static_cast<double>(d.n() - 1) * sign * fit.residuals(i) *
                   w.weights(i) / (1.0 - fit.leverages(i));
    }
    return out;
  }
  if (method != WeightMethod::MRI)
    throw ConfigError("influence is defined for the pooled-fit and "
                      "per-group-fit methods only");

  const WeightSet w = mri_weights(d, profile(d, ProfileKind::FullMean));
  for (int label : d.group_labels()) {
    const auto& rows = d.group_rows(label);
    const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
    if (m < d.k() + 3) {
      throw DataError("influence for per-group fits requires every group "
                      "size >= k+3");
    }
    const SvdFit fit =
        svd_fit(group_design(d, label), group_vector(d.outcome(), rows),
                nullptr);
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::Index row = rows[static_cast<std::size_t>(i)];
      check_leverage(fit.leverages(i), row);
      out.residuals(row) = fit.residuals(i);
      out.leverages(row) = fit.leverages(i);
      out.sic(row) = static_cast<double>(m - 1) * fit.residuals(i) *
                     w.weights(row) / (1.0 - fit.leverages(i));
    }
  }
  return out;
}

}  // namespace regweights
