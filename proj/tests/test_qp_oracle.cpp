#include <doctest.h>

#include <cmath>

#include "regweights/dataset.hpp"
#include "regweights/errors.hpp"
#include "regweights/qp_oracle.hpp"
#include "regweights/weights.hpp"
#include "support.hpp"

using namespace regweights;

TEST_CASE("solves a one-covariate program with a hand solution") {
  BalanceQP qp;
  qp.rows.resize(3, 1);
  qp.rows << 0, 1, 2;
  qp.base = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
  qp.scale = Eigen::VectorXd::Ones(3);
  qp.target = Eigen::VectorXd::Constant(1, 1.5);

  const QPSolution sol = solve_balance_qp(qp);
  // w_i = 1/3 - 1/4 + x_i/4 by the two equality constraints
  CHECK(sol.weights(0) == doctest::Approx(1.0 / 12.0).epsilon(1e-12));
  CHECK(sol.weights(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(sol.weights(2) == doctest::Approx(7.0 / 12.0).epsilon(1e-12));
  CHECK(sol.kkt_residual <= 1e-12);
  const double expected_objective = 2.0 * 0.0625;  // two units move by 1/4
  CHECK(sol.objective == doctest::Approx(expected_objective).epsilon(1e-12));

  // Already-balanced target: the anchor itself is optimal.
  qp.target(0) = 1.0;
  const QPSolution idle = solve_balance_qp(qp);
  for (Eigen::Index i = 0; i < 3; ++i)
    CHECK(idle.weights(i) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(idle.objective <= 1e-20);
}

TEST_CASE("stationarity and feasibility hold with unequal scales") {
  BalanceQP qp;
  qp.rows.resize(4, 2);
  qp.rows << 0.0, 1.0, 1.0, 0.5, 2.0, -0.5, -1.0, 1.5;
  qp.base.resize(4);
  qp.base << 0.4, 0.3, 0.2, 0.1;
  qp.scale.resize(4);
  qp.scale << 1.0, 2.0, 0.5, 4.0;
  qp.target.resize(2);
  qp.target << 0.6, 0.4;

  const QPSolution sol = solve_balance_qp(qp);
  CHECK(std::abs(sol.weights.sum() - 1.0) <= 1e-12);
  const Eigen::VectorXd balanced = qp.rows.transpose() * sol.weights;
  CHECK(std::abs(balanced(0) - 0.6) <= 1e-12);
  CHECK(std::abs(balanced(1) - 0.4) <= 1e-12);
  // stationarity: 2 (w - base) / scale + lambda0 + rows lambda = 0
  for (Eigen::Index i = 0; i < 4; ++i) {
    const double gradient =
        2.0 * (sol.weights(i) - qp.base(i)) / qp.scale(i) +
        sol.lambda_intercept + qp.rows.row(i).dot(sol.lambda_balance);
    CHECK(std::abs(gradient) <= 1e-10);
  }
  double objective = 0.0;
  for (Eigen::Index i = 0; i < 4; ++i)
    objective +=
        (sol.weights(i) - qp.base(i)) * (sol.weights(i) - qp.base(i)) /
        qp.scale(i);
  CHECK(sol.objective == doctest::Approx(objective).epsilon(1e-12));
}

TEST_CASE("input validation") {
  BalanceQP qp;
  qp.rows.resize(2, 2);
  qp.rows.setOnes();
  qp.base = Eigen::VectorXd::Constant(2, 0.5);
  qp.scale = Eigen::VectorXd::Ones(2);
  qp.target = Eigen::VectorXd::Ones(2);
  CHECK_THROWS_AS(solve_balance_qp(qp), DataError);  // n < k+1

  BalanceQP bad;
  bad.rows.resize(4, 1);
  bad.rows << 0, 1, 2, 3;
  bad.base = Eigen::VectorXd::Constant(4, 0.3);  // sums to 1.2
  bad.scale = Eigen::VectorXd::Ones(4);
  bad.target = Eigen::VectorXd::Constant(1, 1.0);
  CHECK_THROWS_AS(solve_balance_qp(bad), DataError);

  bad.base = Eigen::VectorXd::Constant(4, 0.25);
  bad.scale(2) = 0.0;
  CHECK_THROWS_AS(solve_balance_qp(bad), DataError);
}

TEST_CASE("an unreachable target makes the system singular") {
  BalanceQP qp;
  qp.rows.resize(4, 1);
  qp.rows << 2.0, 2.0, 2.0, 2.0;  // no spread: only target 2 is reachable
  qp.base = Eigen::VectorXd::Constant(4, 0.25);
  qp.scale = Eigen::VectorXd::Ones(4);
  qp.target = Eigen::VectorXd::Constant(1, 3.0);
  CHECK_THROWS_AS(solve_balance_qp(qp), NumericalError);
}

TEST_CASE("certifies every closed-form method on random data") {
  for (std::uint64_t seed : {201, 202, 203}) {
    testsupport::RandomSpec spec;
    spec.n = 46;
    spec.k = 2;
    spec.with_base = true;
    const Dataset d = testsupport::random_dataset(seed, spec);
    const Eigen::VectorXd base = d.base_weights();
    const CovariateProfile mean = profile(d, ProfileKind::FullMean);

    for (const WeightSet& w :
         {uri_weights(d), mri_weights(d, mean),
          mri_weights(d, profile(d, ProfileKind::TreatedMean)),
          wuri_weights(d, base), wmri_weights(d, base, mean),
          dr_weights(d, base)}) {
      const CertificationReport cert = certify(w, d);
      CHECK(cert.pass);
      for (const GroupCertification& g : cert.groups) {
        CHECK(g.max_abs_discrepancy <= 1e-8);
        CHECK(g.kkt_residual <= 1e-8);
      }
    }
  }
}

TEST_CASE("certification detects corrupted weights") {
  testsupport::RandomSpec spec;
  spec.n = 40;
  spec.k = 2;
  const Dataset d = testsupport::random_dataset(211, spec);
  WeightSet w = uri_weights(d);
  w.weights(3) += 1e-3;
  const CertificationReport cert = certify(w, d);
  CHECK_FALSE(cert.pass);
}

TEST_CASE("certification rejects unsupported inputs") {
  const Dataset d = testsupport::make_f2();
  const WeightSet custom = custom_weight_set(
      d, Eigen::VectorXd::Constant(6, 1.0 / 3.0), Estimand::ATE,
      profile(d, ProfileKind::FullMean));
  CHECK_THROWS_AS(certify(custom, d), ConfigError);

  WeightSet stripped = wuri_weights(
      testsupport::make_f2(true), testsupport::make_f2(true).base_weights());
  stripped.base.reset();
  CHECK_THROWS_AS(certify(stripped, testsupport::make_f2(true)), ConfigError);
}
