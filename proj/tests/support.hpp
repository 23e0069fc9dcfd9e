#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "regweights/dataset.hpp"

namespace testsupport {

// Four units, two per group, one covariate taking the same values in both
// groups; every implied weight is 1/2 by symmetry.
inline regweights::Dataset make_f1() {
  Eigen::MatrixXd x(4, 1);
  x << 1, 2, 1, 2;
  Eigen::VectorXd y(4);
  y << 3.0, 5.0, 1.0, 2.0;
  return regweights::Dataset(x, {1, 1, 0, 0}, y, std::nullopt, {"x1"},
                             regweights::TreatmentKind::Binary);
}

// Six units with hand-computable moments: treated mean 1 and scatter 2,
// control mean 2 and scatter 8, full mean 1.5.
inline regweights::Dataset make_f2(bool with_base = false) {
  Eigen::MatrixXd x(6, 1);
  x << 0, 1, 2, 0, 2, 4;
  Eigen::VectorXd y(6);
  y << 1.0, 2.0, 4.0, 1.5, 3.0, 6.0;
  std::optional<Eigen::VectorXd> base;
  if (with_base) {
    Eigen::VectorXd b(6);
    b << 1, 1, 2, 1, 1, 2;
    base = b;
  }
  return regweights::Dataset(x, {1, 1, 1, 0, 0, 0}, y, base, {"x1"},
                             regweights::TreatmentKind::Binary);
}

struct RandomSpec {
  Eigen::Index n = 40;
  Eigen::Index k = 2;
  bool with_outcome = true;
  bool with_base = false;
  int groups = 2;  // 2: labels {0,1}; >= 3: labels {1..groups}
  double treated_fraction = 0.4;
};

// Deterministic dataset with continuous covariates (group scatters are
// nonsingular with probability one) and fixed group sizes.
inline regweights::Dataset random_dataset(std::uint64_t seed,
                                          const RandomSpec& spec) {
  std::mt19937_64 engine(seed * 0x9E3779B97F4A7C15ULL + 12345);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const Eigen::Index n = spec.n;
  const Eigen::Index k = spec.k;
  Eigen::MatrixXd x(n, k);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < k; ++j) x(i, j) = normal(engine);

  std::vector<int> labels(static_cast<std::size_t>(n));
  if (spec.groups == 2) {
    Eigen::Index n_t = static_cast<Eigen::Index>(
        std::lround(spec.treated_fraction * static_cast<double>(n)));
    n_t = std::max(n_t, k + 3);
    n_t = std::min(n_t, n - (k + 3));
    for (Eigen::Index i = 0; i < n; ++i) labels[i] = i < n_t ? 1 : 0;
  } else {
    for (Eigen::Index i = 0; i < n; ++i)
      labels[i] = 1 + static_cast<int>(i % spec.groups);
  }
  std::shuffle(labels.begin(), labels.end(), engine);

  std::optional<Eigen::VectorXd> outcome;
  if (spec.with_outcome) {
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double mean = 1.0 + 0.5 * static_cast<double>(labels[i]);
      for (Eigen::Index j = 0; j < k; ++j)
        mean += (0.8 + 0.3 * static_cast<double>(j)) * x(i, j);
      y(i) = mean + normal(engine);
    }
    outcome = y;
  }
  std::optional<Eigen::VectorXd> base;
  if (spec.with_base) {
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) b(i) = 0.2 + 2.0 * unit(engine);
    base = b;
  }
  return regweights::Dataset(
      x, labels, outcome, base, {},
      spec.groups == 2 ? regweights::TreatmentKind::Binary
                       : regweights::TreatmentKind::MultiValued);
}

// Reference least squares through a rank-revealing QR factorization, a
// different decomposition from the production path.
inline Eigen::VectorXd ref_ols(const Eigen::MatrixXd& design,
                               const Eigen::VectorXd& response) {
  return design.colPivHouseholderQr().solve(response);
}

// Hat-matrix diagonal through an explicit normal-equation inverse.
inline Eigen::VectorXd ref_leverages(const Eigen::MatrixXd& design) {
  const Eigen::MatrixXd gram_inverse =
      (design.transpose() * design).fullPivLu().inverse();
  Eigen::VectorXd h(design.rows());
  for (Eigen::Index i = 0; i < design.rows(); ++i)
    h(i) = design.row(i) * gram_inverse * design.row(i).transpose();
  return h;
}

// Pooled design [1 X Z] and per-group design [1 X_g], rebuilt from raw data
// so checks do not reuse library internals.
inline Eigen::MatrixXd ref_pooled_design(const regweights::Dataset& d) {
  Eigen::MatrixXd design(d.n(), d.k() + 2);
  design.col(0).setOnes();
  design.middleCols(1, d.k()) = d.covariates();
  for (Eigen::Index i = 0; i < d.n(); ++i)
    design(i, d.k() + 1) =
        static_cast<double>(d.treatment()[static_cast<std::size_t>(i)]);
  return design;
}

inline Eigen::MatrixXd ref_group_design(const regweights::Dataset& d,
                                        int label) {
  const auto& rows = d.group_rows(label);
  Eigen::MatrixXd design(static_cast<Eigen::Index>(rows.size()), d.k() + 1);
  design.col(0).setOnes();
  for (std::size_t i = 0; i < rows.size(); ++i)
    design.row(static_cast<Eigen::Index>(i)).tail(d.k()) =
        d.covariates().row(rows[i]);
  return design;
}

inline Eigen::VectorXd ref_group_vector(const regweights::Dataset& d,
                                        int label, const Eigen::VectorXd& v) {
  const auto& rows = d.group_rows(label);
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    out(static_cast<Eigen::Index>(i)) = v(rows[i]);
  return out;
}

}  // namespace testsupport
