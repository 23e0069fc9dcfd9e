#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "regweights/dataset.hpp"
#include "regweights/table.hpp"

namespace regweights {

enum class PropensityKind {
  Constant,       // e(x) = p
  Linear,         // e(x) = a0 + a1 . x
  InverseLinear,  // e(x) = 1 / (b0 + b1 . x)
  Logistic,       // e(x) = 1 / (1 + exp(-(c0 + c1 . x)))
  // Treated covariates uniform on the box, control covariates with an affine
  // (trapezoid) density on the same box; the implied propensity is exactly
  // inverse-linear and p^2 Var_t = (1-p)^2 Var_c holds by construction.
  // One covariate only; p is determined by the slope.
  GroupConditional,
};

enum class OutcomeKind {
  Linear,               // m0 affine, constant effect
  LinearHeterogeneous,  // m0 affine, effect affine in x
  NonlinearControl,     // m0 affine plus a quadratic term, effect affine
  NonlinearEffect,      // m0 affine, effect has a quadratic term
};

struct DgpConfig {
  int k = 1;
  double p = 0.5;  // target mean propensity (derived for GroupConditional)
  PropensityKind propensity = PropensityKind::Constant;
  OutcomeKind outcome = OutcomeKind::Linear;
  Eigen::VectorXd box_lower;  // covariates uniform on this box
  Eigen::VectorXd box_upper;
  Eigen::VectorXd propensity_slope;  // a1 / b1 / c1 / trapezoid slope
  double control_intercept = 0.0;
  Eigen::VectorXd control_slope;
  double effect_intercept = 1.0;
  Eigen::VectorXd effect_slope;      // zero for a constant effect
  double quadratic_coefficient = 0.0;  // first covariate squared
  double noise_sd = 1.0;
  std::uint64_t seed = 0;
  double propensity_min = 0.1;  // required bounds over the box
  double propensity_max = 0.9;
};

struct GeneratedSample {
  Dataset data;
  Eigen::VectorXd propensities;  // true e(X_i)
  double true_ate = 0.0;
};

// Validated data-generating process.  Construction resolves the propensity
// intercept so the mean propensity over the box equals p (bisection against
// Gauss-Legendre quadrature), checks the propensity bounds at the box
// corners, and precomputes the analytic estimands.
class Dgp {
 public:
  explicit Dgp(DgpConfig config);

  const DgpConfig& config() const { return config_; }
  double propensity(const Eigen::VectorXd& x) const;
  double conditional_effect(const Eigen::VectorXd& x) const;
  double control_mean_function(const Eigen::VectorXd& x) const;
  double true_ate() const { return true_ate_; }
  // E[e(X(1-e(X)) tau(X)] / E[e(X)(1-e(X))] by quadrature: the limit of the
  // pooled-fit estimator when the effect varies and the propensity does.
  double overlap_weighted_effect() const { return overlap_effect_; }
  double propensity_intercept() const { return intercept_; }
  double mean_propensity() const;  // quadrature value of E[e(X)]

  // Deterministic in (config.seed, replication); both treatment groups are
  // guaranteed at least k+2 members (bounded retries, then an error).
  GeneratedSample generate(Eigen::Index n, std::uint64_t replication) const;

 private:
  DgpConfig config_;
  double intercept_ = 0.0;  // a0 / b0 / c0 (unused for Constant)
  double true_ate_ = 0.0;
  double overlap_effect_ = 0.0;
};

// Coefficients (a0, a1) of the linear propensity e(x) = a0 + a1 . x implied
// by a treatment fraction and group-conditional covariate moments.
std::pair<double, Eigen::VectorXd> linear_propensity_coefficients(
    double p, const Eigen::VectorXd& mu_t, const Eigen::VectorXd& mu_c,
    const Eigen::MatrixXd& sigma_t, const Eigen::MatrixXd& sigma_c);

enum class ConvergenceMeasure {
  PerGroupTreated,  // sup over treated of |n w_i - 1/e(X_i)|, per-group fits
  PerGroupControl,  // sup over control of |n w_i - 1/(1-e(X_i))|
  PooledTreated,    // same suprema for the pooled-fit weights
  PooledControl,
};

struct SimulationRow {
  std::string series;  // estimator/measure identifier
  Eigen::Index n = 0;
  int replication = 0;
  double value = 0.0;
};

struct SimulationSummary {
  std::string series;
  Eigen::Index n = 0;
  double mean = 0.0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
};

struct SimulationReport {
  std::string experiment;
  std::string scenario;
  std::vector<SimulationRow> rows;
  std::vector<SimulationSummary> summaries;
  // Analytic reference values: true ATE and, when meaningful, the
  // overlap-weighted effect the pooled fit converges to.
  double true_ate = 0.0;
  std::optional<double> overlap_weighted_effect;
};

// Scaled-weight convergence toward inverse propensities over an n-grid.
SimulationReport weight_convergence_experiment(
    const Dgp& dgp, ConvergenceMeasure measure,
    const std::vector<Eigen::Index>& n_grid, int replications);

// Pooled-fit and per-group-fit estimates over an n-grid; rows carry the raw
// estimates per replication, summaries their means and quartiles.
SimulationReport consistency_experiment(const Dgp& dgp,
                                        const std::vector<Eigen::Index>& n_grid,
                                        int replications);

// Named, fully pinned-down experiment configurations for the CLI and the
// acceptance checks.  Throws ConfigError for unknown names.
struct Scenario {
  std::string name;
  Dgp dgp;
  bool convergence = false;  // convergence vs consistency experiment
  ConvergenceMeasure measure = ConvergenceMeasure::PerGroupTreated;
};
Scenario make_scenario(const std::string& name, std::uint64_t seed);
std::vector<std::string> scenario_names();

SimulationReport run_scenario(const Scenario& scenario,
                              const std::vector<Eigen::Index>& n_grid,
                              int replications);

Table simulation_table(const SimulationReport& report);

}  // namespace regweights
