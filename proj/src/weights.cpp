#include "regweights/weights.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "regweights/errors.hpp"
#include "regweights/numeric.hpp"

namespace regweights {

namespace {

double matrix_reciprocal_condition(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0.0) return 0.0;
  return sv(sv.size() - 1) / sv(0);
}

// Factors a symmetric scatter-like matrix for repeated solves, enforcing the
// shared singularity threshold.  Inverses are never formed explicitly.
Eigen::LDLT<Eigen::MatrixXd> factor_scatter(const Eigen::MatrixXd& m,
                                            const std::string& what) {
  const double rc = matrix_reciprocal_condition(m);
  if (rc < kSingularityThreshold) {
    std::ostringstream msg;
    msg << what << " is singular (reciprocal condition " << rc
        << " below threshold)";
    throw NumericalError(msg.str());
  }
  return m.ldlt();
}

void require_binary(const Dataset& d, const char* what) {
  if (d.treatment_kind() != TreatmentKind::Binary)
    throw ConfigError(std::string(what) + " requires a binary treatment");
}

void validate_base(const Dataset& d, const Eigen::VectorXd& base) {
  if (base.size() != d.n())
    throw DataError("base weight length does not match the dataset rows");
  for (Eigen::Index i = 0; i < base.size(); ++i) {
    if (!std::isfinite(base(i)) || base(i) <= 0.0) {
      throw DataError("base weight at row " + std::to_string(i + 1) +
                      " is not strictly positive");
    }
  }
}

void require_profile_dimension(const Dataset& d, const CovariateProfile& x) {
  if (x.values.size() != d.k()) {
    throw ConfigError("profile has " + std::to_string(x.values.size()) +
                      " entries; the dataset has " + std::to_string(d.k()) +
                      " covariates");
  }
}

std::map<int, double> compute_group_sums(const Dataset& d,
                                         const Eigen::VectorXd& w) {
  std::map<int, double> sums;
  for (int label : d.group_labels()) {
    const auto& rows = d.group_rows(label);
    std::vector<double> terms(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) terms[i] = w(rows[i]);
    sums[label] = canonical_sum(std::move(terms));
  }
  return sums;
}

bool profiles_match(const Eigen::VectorXd& x, const Eigen::VectorXd& ref) {
  const double scale = 1.0 + ref.cwiseAbs().maxCoeff();
  return (x - ref).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

// ATE / ATT / ATC when the profile coincides with the full / treated /
// control covariate mean; CATE otherwise.
Estimand classify_profile(const Dataset& d, const CovariateProfile& x,
                          std::string* label) {
  if (profiles_match(x.values, d.full_mean())) {
    *label = "full_mean";
    return Estimand::ATE;
  }
  if (profiles_match(x.values, d.raw_group_moments(1).mean)) {
    *label = "treated_mean";
    return Estimand::ATT;
  }
  if (profiles_match(x.values, d.raw_group_moments(0).mean)) {
    *label = "control_mean";
    return Estimand::ATC;
  }
  *label = x.label.empty() ? "custom" : x.label;
  return Estimand::CATE;
}

Eigen::VectorXd group_subvector(const Eigen::VectorXd& full,
                                const std::vector<Eigen::Index>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = full(rows[i]);
  return out;
}

// Weighted covariate sum over one group.
Eigen::VectorXd weighted_covariate_sum(const Dataset& d,
                                       const Eigen::VectorXd& w, int label) {
  const auto& rows = d.group_rows(label);
  Eigen::VectorXd out(d.k());
  std::vector<double> terms(rows.size());
  for (Eigen::Index j = 0; j < d.k(); ++j) {
    for (std::size_t i = 0; i < rows.size(); ++i)
      terms[i] = w(rows[i]) * d.covariates()(rows[i], j);
    out(j) = canonical_sum(terms);
  }
  return out;
}

Eigen::MatrixXd group_covariate_rows(const Dataset& d, int label) {
  const auto& rows = d.group_rows(label);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), d.k());
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    out.row(i) = d.covariates().row(rows[i]);
  return out;
}

}  // namespace

std::string to_string(WeightMethod m) {
  switch (m) {
    case WeightMethod::URI: return "uri";
    case WeightMethod::MRI: return "mri";
    case WeightMethod::WURI: return "wuri";
    case WeightMethod::WMRI: return "wmri";
    case WeightMethod::DR: return "dr";
    case WeightMethod::MultiURI: return "multi-uri";
    case WeightMethod::MultiMRI: return "multi-mri";
    case WeightMethod::NoInterceptURI: return "noint-uri";
    case WeightMethod::NoInterceptMRI: return "noint-mri";
    case WeightMethod::Custom: return "custom";
  }
  return "unknown";
}

std::string to_string(Estimand e) {
  switch (e) {
    case Estimand::ATE: return "ate";
    case Estimand::ATT: return "att";
    case Estimand::ATC: return "atc";
    case Estimand::CATE: return "cate";
    case Estimand::MultiLevel: return "level-contrast";
  }
  return "unknown";
}

CovariateProfile uri_implied_profile(const Dataset& d) {
  require_binary(d, "the pooled-fit implied profile");
  const Eigen::MatrixXd& s_t = d.raw_group_moments(1).scatter;
  const Eigen::MatrixXd& s_c = d.raw_group_moments(0).scatter;
  const auto solver = factor_scatter(s_t + s_c, "the pooled scatter S_t + S_c");
  const Eigen::VectorXd u = solver.solve(d.raw_group_moments(1).mean);
  const Eigen::VectorXd v = solver.solve(d.raw_group_moments(0).mean);
  return {s_c * u + s_t * v, "pooled_implied"};
}

WeightSet uri_weights(const Dataset& d) {
  require_binary(d, "pooled-fit weights");
  const GroupMoments& mt = d.raw_group_moments(1);
  const GroupMoments& mc = d.raw_group_moments(0);
  const double n = static_cast<double>(d.n());
  const double n_t = static_cast<double>(mt.size);
  const double n_c = static_cast<double>(mc.size);
  const auto solver =
      factor_scatter(mt.scatter + mc.scatter, "the pooled scatter S_t + S_c");
  const Eigen::VectorXd to_treated = solver.solve(d.full_mean() - mt.mean);
  const Eigen::VectorXd to_control = solver.solve(d.full_mean() - mc.mean);

  WeightSet w;
  w.method = WeightMethod::URI;
  w.estimand = Estimand::ATE;
  w.weights.resize(d.n());
  for (Eigen::Index i : d.group_rows(1)) {
    w.weights(i) = 1.0 / n_t +
                   (n / n_c) * (d.covariates().row(i).transpose() - mt.mean)
                                   .dot(to_treated);
  }
  for (Eigen::Index i : d.group_rows(0)) {
    w.weights(i) = 1.0 / n_c +
                   (n / n_t) * (d.covariates().row(i).transpose() - mc.mean)
                                   .dot(to_control);
  }
  w.target = uri_implied_profile(d);
  w.group_sums = compute_group_sums(d, w.weights);
  return w;
}

WeightSet mri_weights(const Dataset& d, const CovariateProfile& x) {
  require_binary(d, "per-group-fit weights");
  require_profile_dimension(d, x);

  WeightSet w;
  w.method = WeightMethod::MRI;
  w.weights.resize(d.n());
  for (int label : d.group_labels()) {
    const GroupMoments& m = d.group_moments(label);
    const auto solver = factor_scatter(
        m.scatter, "the scatter of group " + std::to_string(label));
    const Eigen::VectorXd direction = solver.solve(x.values - m.mean);
    const double uniform = 1.0 / static_cast<double>(m.size);
    for (Eigen::Index i : d.group_rows(label)) {
      w.weights(i) = uniform + (d.covariates().row(i).transpose() - m.mean)
                                   .dot(direction);
    }
  }
  std::string label;
  w.estimand = classify_profile(d, x, &label);
  w.target = CovariateProfile{x.values, label};
  w.group_sums = compute_group_sums(d, w.weights);
  return w;
}

CovariateProfile wuri_implied_profile(const Dataset& d,
                                      const Eigen::VectorXd& base) {
  require_binary(d, "the case-weighted implied profile");
  validate_base(d, base);
  const WeightedMoments mt =
      weighted_moments(d, 1, group_subvector(base, d.group_rows(1)));
  const WeightedMoments mc =
      weighted_moments(d, 0, group_subvector(base, d.group_rows(0)));
  // Scale-weighted per-group second moments (invariant to the overall base
  // normalization because both terms below carry one factor each).
  const double total = base.sum();
  const Eigen::MatrixXd m_t =
      mt.scatter / (static_cast<double>(mt.size) * total);
  const Eigen::MatrixXd m_c =
      mc.scatter / (static_cast<double>(mc.size) * total);
  const auto solver =
      factor_scatter(m_t + m_c, "the case-weighted pooled scatter");
  const Eigen::VectorXd u = solver.solve(mt.mean);
  const Eigen::VectorXd v = solver.solve(mc.mean);
  return {m_c * u + m_t * v, "pooled_implied"};
}

WeightSet wuri_weights(const Dataset& d, const Eigen::VectorXd& base) {
  require_binary(d, "case-weighted pooled-fit weights");
  validate_base(d, base);
  const CovariateProfile target = wuri_implied_profile(d, base);
  const double total = base.sum();

  WeightSet w;
  w.method = WeightMethod::WURI;
  w.estimand = Estimand::ATE;
  w.weights.resize(d.n());
  for (int label : d.group_labels()) {
    const auto& rows = d.group_rows(label);
    const Eigen::VectorXd group_base = group_subvector(base, rows);
    const WeightedMoments wm = weighted_moments(d, label, group_base);
    // S_scale / n_g with the globally normalized base as scale weights.
    const Eigen::MatrixXd m_g =
        wm.scatter / (static_cast<double>(wm.size) * total);
    const auto solver = factor_scatter(
        m_g, "the case-weighted scatter of group " + std::to_string(label));
    const Eigen::VectorXd direction = solver.solve(target.values - wm.mean);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const Eigen::Index row = rows[i];
      const double anchor = base(row) / wm.weight_sum;
      const double scale = base(row) / total;
      w.weights(row) =
          anchor + scale * (d.covariates().row(row).transpose() - wm.mean)
                               .dot(direction);
    }
  }
  w.target = target;
  w.group_sums = compute_group_sums(d, w.weights);
  w.base = base;
  return w;
}

WeightSet wmri_weights(const Dataset& d, const Eigen::VectorXd& base,
                       const CovariateProfile& x) {
  require_binary(d, "case-weighted per-group-fit weights");
  validate_base(d, base);
  require_profile_dimension(d, x);

  WeightSet w;
  w.method = WeightMethod::WMRI;
  w.weights.resize(d.n());
  for (int label : d.group_labels()) {
    const auto& rows = d.group_rows(label);
    const Eigen::VectorXd group_base = group_subvector(base, rows);
    const WeightedMoments wm = weighted_moments(d, label, group_base);
    const Eigen::MatrixXd m_g =
        wm.scatter / (static_cast<double>(wm.size) * wm.weight_sum);
    const auto solver = factor_scatter(
        m_g, "the case-weighted scatter of group " + std::to_string(label));
    const Eigen::VectorXd direction = solver.solve(x.values - wm.mean);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const Eigen::Index row = rows[i];
      const double anchor = base(row) / wm.weight_sum;
      w.weights(row) =
          anchor * (1.0 + (d.covariates().row(row).transpose() - wm.mean)
                              .dot(direction));
    }
  }
  std::string label;
  w.estimand = classify_profile(d, x, &label);
  w.target = CovariateProfile{x.values, label};
  w.group_sums = compute_group_sums(d, w.weights);
  w.base = base;
  return w;
}

WeightSet dr_weights(const Dataset& d, const Eigen::VectorXd& base) {
  require_binary(d, "augmented-estimator weights");
  validate_base(d, base);

  WeightSet w;
  w.method = WeightMethod::DR;
  w.estimand = Estimand::ATE;
  w.weights.resize(d.n());
  for (int label : d.group_labels()) {
    const auto& rows = d.group_rows(label);
    const GroupMoments& m = d.group_moments(label);
    const auto solver = factor_scatter(
        m.scatter, "the scatter of group " + std::to_string(label));
    const Eigen::VectorXd group_base = group_subvector(base, rows);
    const double base_sum = group_base.sum();
    // Base-weighted covariate mean of the group.
    Eigen::VectorXd base_mean = Eigen::VectorXd::Zero(d.k());
    for (std::size_t i = 0; i < rows.size(); ++i)
      base_mean += (group_base(static_cast<Eigen::Index>(i)) / base_sum) *
                   d.covariates().row(rows[i]).transpose();
    const Eigen::VectorXd direction =
        solver.solve(d.full_mean() - base_mean);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const Eigen::Index row = rows[i];
      w.weights(row) = base(row) / base_sum +
                       (d.covariates().row(row).transpose() - m.mean)
                           .dot(direction);
    }
  }
  w.target = CovariateProfile{d.full_mean(), "full_mean"};
  w.group_sums = compute_group_sums(d, w.weights);
  w.base = base;
  return w;
}

WeightSet multivalued_weights(const Dataset& d, int level, MultiFlavor flavor) {
  if (d.treatment_kind() != TreatmentKind::MultiValued) {
    throw ConfigError(
        "multi-valued weights require a multi-valued treatment");
  }
  const int v_max = d.group_labels().back();
  if (level < 2 || level > v_max) {
    throw ConfigError("active level " + std::to_string(level) +
                      " is outside 2..V");
  }

  WeightSet w;
  w.estimand = Estimand::MultiLevel;
  w.active_level = level;
  w.weights = Eigen::VectorXd::Zero(d.n());

  if (flavor == MultiFlavor::PooledIndicator) {
    // The single fit spans every level, so every level's design must be
    // well-posed for the weights to carry their balance interpretation.
    for (int label : d.group_labels()) {
      const Eigen::MatrixXd rows_g = group_covariate_rows(d, label);
      Eigen::MatrixXd design(rows_g.rows(), d.k() + 1);
      design.col(0).setOnes();
      design.rightCols(d.k()) = rows_g;
      if (design.rows() < design.cols() ||
          matrix_reciprocal_condition(design) < kSingularityThreshold) {
        throw NumericalError("the design of treatment group " +
                             std::to_string(label) +
                             " is singular; its implied weights are not "
                             "identified");
      }
    }
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
    Eigen::BDCSVD<Eigen::MatrixXd> svd(
        design, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv(0) <= 0.0 || sv(sv.size() - 1) / sv(0) < kSingularityThreshold)
      throw NumericalError("the pooled multi-level design is singular");
    Eigen::VectorXd l = Eigen::VectorXd::Zero(design.cols());
    l(1 + k + (level - 2)) = 1.0;
    const Eigen::VectorXd functional =
        svd.matrixU() * (sv.cwiseInverse().asDiagonal() *
                         (svd.matrixV().transpose() * l));
    for (Eigen::Index i = 0; i < n; ++i) {
      const int z = d.treatment()[static_cast<std::size_t>(i)];
      w.weights(i) = z == level ? functional(i) : -functional(i);
    }
    w.method = WeightMethod::MultiURI;
    w.target = CovariateProfile{weighted_covariate_sum(d, w.weights, level),
                                "active_level_balance"};
  } else {
    for (int label : {1, level}) {
      const GroupMoments& m = d.group_moments(label);
      const auto solver = factor_scatter(
          m.scatter, "the scatter of group " + std::to_string(label));
      const Eigen::VectorXd direction = solver.solve(d.full_mean() - m.mean);
      const double uniform = 1.0 / static_cast<double>(m.size);
      for (Eigen::Index i : d.group_rows(label)) {
        w.weights(i) = uniform + (d.covariates().row(i).transpose() - m.mean)
                                     .dot(direction);
      }
    }
    w.method = WeightMethod::MultiMRI;
    w.target = CovariateProfile{d.full_mean(), "full_mean"};
  }
  w.group_sums = compute_group_sums(d, w.weights);
  return w;
}

WeightSet no_intercept_weights(const Dataset& d, NoInterceptFlavor flavor,
                               std::optional<CovariateProfile> x) {
  require_binary(d, "no-intercept weights");

  WeightSet w;
  w.weights.resize(d.n());
  if (flavor == NoInterceptFlavor::Pooled) {
    const Eigen::MatrixXd& covariates = d.covariates();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(
        covariates, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv(0) <= 0.0 || sv(sv.size() - 1) / sv(0) < kSingularityThreshold)
      throw NumericalError("the no-intercept covariate design is singular");
    Eigen::VectorXd z(d.n());
    for (Eigen::Index i = 0; i < d.n(); ++i)
      z(i) = d.treatment()[static_cast<std::size_t>(i)] == 1 ? 1.0 : 0.0;
    const Eigen::VectorXd projected =
        svd.matrixU() * (svd.matrixU().transpose() * z);
    const Eigen::VectorXd residual = z - projected;
    // z . residual equals the squared residual norm; compare it to |z|^2 so
    // the gate is scale-free.
    const double denominator = z.dot(residual);
    if (!(denominator > kSingularityThreshold * z.squaredNorm())) {
      throw NumericalError(
          "the treatment indicator lies in the covariate span; no-intercept "
          "weights are not identified");
    }
    for (Eigen::Index i = 0; i < d.n(); ++i) {
      const double sign =
          d.treatment()[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
      w.weights(i) = sign * residual(i) / denominator;
    }
    w.method = WeightMethod::NoInterceptURI;
    w.estimand = Estimand::ATE;
    w.target = CovariateProfile{weighted_covariate_sum(d, w.weights, 1),
                                "balanced_sum"};
  } else {
    const CovariateProfile prof =
        x ? *x : CovariateProfile{d.full_mean(), "full_mean"};
    require_profile_dimension(d, prof);
    for (int label : d.group_labels()) {
      const Eigen::MatrixXd rows_g = group_covariate_rows(d, label);
      if (rows_g.rows() < rows_g.cols()) {
        throw DataError("group " + std::to_string(label) +
                        " has fewer rows than covariates");
      }
      Eigen::BDCSVD<Eigen::MatrixXd> svd(
          rows_g, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const auto& sv = svd.singularValues();
      if (sv(0) <= 0.0 || sv(sv.size() - 1) / sv(0) < kSingularityThreshold) {
        throw NumericalError("the no-intercept design of group " +
                             std::to_string(label) + " is singular");
      }
      const Eigen::VectorXd group_w =
          svd.matrixU() * (sv.cwiseInverse().asDiagonal() *
                           (svd.matrixV().transpose() * prof.values));
      const auto& rows = d.group_rows(label);
      for (std::size_t i = 0; i < rows.size(); ++i)
        w.weights(rows[i]) = group_w(static_cast<Eigen::Index>(i));
    }
    w.method = WeightMethod::NoInterceptMRI;
    std::string label;
    w.estimand = classify_profile(d, prof, &label);
    w.target = CovariateProfile{prof.values, label};
  }
  w.group_sums = compute_group_sums(d, w.weights);
  return w;
}

PairWeightSet matched_pair_weights(const MatchedSample& m) {
  const Eigen::Index pairs = m.pairs();
  const Eigen::Index k = m.k();
  if (m.control_covariates.rows() != pairs || m.control_covariates.cols() != k)
    throw DataError("matched sample covariate blocks have mismatched shapes");
  if (pairs < k + 2)
    throw DataError("matched samples require at least k+2 pairs");
  if (!m.treated_covariates.allFinite() || !m.control_covariates.allFinite())
    throw DataError("matched sample contains a non-finite covariate");

  const Eigen::MatrixXd difference = m.treated_covariates - m.control_covariates;
  std::vector<double> terms(static_cast<std::size_t>(pairs));
  Eigen::VectorXd mean_t(k), mean_c(k), mean_d(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < pairs; ++i) terms[i] = m.treated_covariates(i, j);
    mean_t(j) = canonical_sum(terms) / static_cast<double>(pairs);
    for (Eigen::Index i = 0; i < pairs; ++i) terms[i] = m.control_covariates(i, j);
    mean_c(j) = canonical_sum(terms) / static_cast<double>(pairs);
    mean_d(j) = mean_t(j) - mean_c(j);
  }
  const auto centered_cross = [&](const Eigen::MatrixXd& a,
                                  const Eigen::VectorXd& a_mean,
                                  const Eigen::MatrixXd& b,
                                  const Eigen::VectorXd& b_mean) {
    Eigen::MatrixXd s(k, k);
    for (Eigen::Index j = 0; j < k; ++j) {
      for (Eigen::Index l = 0; l < k; ++l) {
        for (Eigen::Index i = 0; i < pairs; ++i)
          terms[i] = (a(i, j) - a_mean(j)) * (b(i, l) - b_mean(l));
        s(j, l) = canonical_sum(terms);
      }
    }
    return s;
  };
  const Eigen::MatrixXd s_t =
      centered_cross(m.treated_covariates, mean_t, m.treated_covariates, mean_t);
  const Eigen::MatrixXd s_c =
      centered_cross(m.control_covariates, mean_c, m.control_covariates, mean_c);
  const Eigen::MatrixXd s_tc =
      centered_cross(m.treated_covariates, mean_t, m.control_covariates, mean_c);
  const Eigen::MatrixXd s_d = s_t + s_c - s_tc - s_tc.transpose();

  const auto solver =
      factor_scatter(s_d, "the within-pair difference scatter");
  const Eigen::VectorXd direction = solver.solve(mean_d);

  PairWeightSet out;
  out.pair_weights.resize(pairs);
  for (Eigen::Index i = 0; i < pairs; ++i) {
    out.pair_weights(i) =
        1.0 / static_cast<double>(pairs) -
        direction.dot(difference.row(i).transpose() - mean_d);
  }
  out.implied_profile.values = (s_c - s_tc.transpose()) * solver.solve(mean_t) +
                               (s_t - s_tc) * solver.solve(mean_c);
  out.implied_profile.label = "pair_implied";
  return out;
}

double matched_pair_estimate(const MatchedSample& m, const PairWeightSet& w) {
  if (!m.treated_outcome || !m.control_outcome)
    throw DataError("matched-pair estimation requires both outcomes");
  if (m.treated_outcome->size() != m.pairs() ||
      m.control_outcome->size() != m.pairs())
    throw DataError("matched sample outcome lengths do not match the pairs");
  if (w.pair_weights.size() != m.pairs())
    throw DataError("pair weight length does not match the pairs");
  std::vector<double> terms(static_cast<std::size_t>(m.pairs()));
  for (Eigen::Index i = 0; i < m.pairs(); ++i) {
    terms[i] =
        w.pair_weights(i) * ((*m.treated_outcome)(i) - (*m.control_outcome)(i));
  }
  return canonical_sum(std::move(terms));
}

WeightSet custom_weight_set(const Dataset& d, Eigen::VectorXd weights,
                            Estimand estimand, CovariateProfile target) {
  if (weights.size() != d.n())
    throw DataError("weight length does not match the dataset rows");
  if (!weights.allFinite())
    throw DataError("weights contain a non-finite value");
  WeightSet w;
  w.method = WeightMethod::Custom;
  w.estimand = estimand;
  w.weights = std::move(weights);
  w.target = std::move(target);
  w.group_sums = compute_group_sums(d, w.weights);
  return w;
}

}  // namespace regweights
