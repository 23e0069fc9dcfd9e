#include "regweights/qp_oracle.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/LU>

#include "regweights/errors.hpp"
#include "regweights/numeric.hpp"

namespace regweights {

namespace {

void validate_qp(const BalanceQP& qp) {
  const Eigen::Index n = qp.rows.rows();
  const Eigen::Index k = qp.rows.cols();
  if (n < k + 1)
    throw DataError("the balance program needs at least k+1 units");
  if (qp.base.size() != n || qp.scale.size() != n)
    throw DataError("balance program vector lengths do not match the rows");
  if (qp.target.size() != k)
    throw DataError("balance program target length does not match the "
                    "covariates");
  if (!qp.rows.allFinite() || !qp.base.allFinite() || !qp.scale.allFinite() ||
      !qp.target.allFinite())
    throw DataError("balance program contains a non-finite value");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (qp.scale(i) <= 0.0)
      throw DataError("balance program scales must be strictly positive");
  }
  if (std::abs(qp.base.sum() - 1.0) > 1e-9)
    throw DataError("balance program base weights must sum to 1");
}

Eigen::VectorXd subvector(const Eigen::VectorXd& full,
                          const std::vector<Eigen::Index>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = full(rows[i]);
  return out;
}

Eigen::MatrixXd covariate_rows(const Dataset& d, int label) {
  const auto& rows = d.group_rows(label);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), d.k());
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    out.row(i) = d.covariates().row(rows[i]);
  return out;
}

}  // namespace

QPSolution solve_balance_qp(const BalanceQP& qp) {
  validate_qp(qp);
  const Eigen::Index n = qp.rows.rows();
  const Eigen::Index k = qp.rows.cols();
  const Eigen::Index dim = n + 1 + k;

  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    kkt(i, i) = 2.0 / qp.scale(i);
    kkt(i, n) = 1.0;
    kkt(n, i) = 1.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      kkt(i, n + 1 + j) = qp.rows(i, j);
      kkt(n + 1 + j, i) = qp.rows(i, j);
    }
    rhs(i) = 2.0 * qp.base(i) / qp.scale(i);
  }
  rhs(n) = 1.0;
  rhs.tail(k) = qp.target;

  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(kkt);
  const Eigen::VectorXd solution = lu.solve(rhs);
  const double rhs_scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
  const double residual =
      (kkt * solution - rhs).cwiseAbs().maxCoeff() / rhs_scale;
  if (!solution.allFinite() || !(residual <= 1e-6)) {
    std::ostringstream msg;
    msg << "the KKT system is singular or severely ill-conditioned "
        << "(relative residual " << residual << ")";
    throw NumericalError(msg.str());
  }

  QPSolution out;
  out.weights = solution.head(n);
  out.lambda_intercept = solution(n);
  out.lambda_balance = solution.tail(k);
  out.kkt_residual = residual;
  out.objective =
      ((out.weights - qp.base).array().square() / qp.scale.array()).sum();
  return out;
}

CertificationReport certify(const WeightSet& w, const Dataset& d,
                            double tolerance) {
  if (w.weights.size() != d.n())
    throw DataError("weight set length does not match the dataset rows");

  CertificationReport report;
  report.method = w.method;
  report.tolerance = tolerance;

  Eigen::VectorXd anchor_base;   // per-group normalized
  Eigen::VectorXd scale_source;  // per-unit penalty scales
  bool scaled_by_base = false;
  switch (w.method) {
    case WeightMethod::URI:
    case WeightMethod::MRI:
    case WeightMethod::DR:
      break;
    case WeightMethod::WURI:
    case WeightMethod::WMRI:
      scaled_by_base = true;
      break;
    default:
      throw ConfigError("certification supports the uri, mri, wuri, wmri and "
                        "dr methods");
  }
  const bool needs_base = w.method == WeightMethod::WURI ||
                          w.method == WeightMethod::WMRI ||
                          w.method == WeightMethod::DR;
  if (needs_base && !w.base)
    throw ConfigError("certification of base-weighted methods requires the "
                      "stored base weights");

  for (int label : d.group_labels()) {
    const auto& rows = d.group_rows(label);
    const Eigen::Index m = static_cast<Eigen::Index>(rows.size());

    BalanceQP qp;
    qp.rows = covariate_rows(d, label);
    qp.target = w.target.values;
    if (needs_base) {
      const Eigen::VectorXd base_g = subvector(*w.base, rows);
      qp.base = base_g / base_g.sum();
      qp.scale = scaled_by_base ? base_g : Eigen::VectorXd::Ones(m);
    } else {
      qp.base = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
      qp.scale = Eigen::VectorXd::Ones(m);
    }

    const QPSolution solution = solve_balance_qp(qp);
    GroupCertification cert;
    cert.label = label;
    cert.kkt_residual = solution.kkt_residual;
    cert.max_abs_discrepancy =
        (solution.weights - subvector(w.weights, rows)).cwiseAbs().maxCoeff();
    cert.pass = cert.max_abs_discrepancy <= tolerance &&
                cert.kkt_residual <= tolerance;
    report.groups.push_back(cert);
  }
  report.pass = true;
  for (const auto& g : report.groups) report.pass = report.pass && g.pass;
  return report;
}

}  // namespace regweights
