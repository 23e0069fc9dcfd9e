#include "regweights/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>

#include <Eigen/Cholesky>

#include "regweights/errors.hpp"
#include "regweights/estimators.hpp"
#include "regweights/numeric.hpp"
#include "regweights/weights.hpp"

namespace regweights {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t replication_seed(std::uint64_t seed, std::uint64_t replication,
                               std::uint64_t retry) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ splitmix64(replication + 1));
  h = splitmix64(h ^ splitmix64(retry + 1));
  return h;
}

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// Tensor Gauss-Legendre integral of g over the box (up to 3 dimensions).
double integrate_box(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                     const std::function<double(const Eigen::VectorXd&)>& g) {
  using Quad = boost::math::quadrature::gauss<double, 30>;
  const Eigen::Index k = lower.size();
  if (k > 3)
    throw ConfigError("simulation quadrature supports at most 3 covariates");
  Eigen::VectorXd x(k);
  std::function<double(Eigen::Index)> rec = [&](Eigen::Index j) -> double {
    return Quad::integrate(
        [&](double value) {
          x(j) = value;
          return j + 1 == k ? g(x) : rec(j + 1);
        },
        lower(j), upper(j));
  };
  return rec(0);
}

std::vector<double> sorted_copy(const std::vector<double>& values) {
  std::vector<double> out = values;
  std::sort(out.begin(), out.end());
  return out;
}

double quantile_of_sorted(const std::vector<double>& sorted, double q) {
  const std::size_t m = sorted.size();
  if (m == 1) return sorted[0];
  const double pos = q * static_cast<double>(m - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= m) return sorted[m - 1];
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

SimulationSummary summarize(const std::string& series, Eigen::Index n,
                            const std::vector<double>& values) {
  SimulationSummary s;
  s.series = series;
  s.n = n;
  s.mean = canonical_sum(values) / static_cast<double>(values.size());
  const std::vector<double> sorted = sorted_copy(values);
  s.median = quantile_of_sorted(sorted, 0.5);
  s.q25 = quantile_of_sorted(sorted, 0.25);
  s.q75 = quantile_of_sorted(sorted, 0.75);
  return s;
}

}  // namespace

Dgp::Dgp(DgpConfig config) : config_(std::move(config)) {
  const int k = config_.k;
  if (k < 1) throw ConfigError("the simulation needs at least one covariate");
  if (config_.box_lower.size() != k || config_.box_upper.size() != k)
    throw ConfigError("covariate box bounds must have length k");
  for (int j = 0; j < k; ++j) {
    if (!(config_.box_lower(j) < config_.box_upper(j)))
      throw ConfigError("covariate box bounds must satisfy lower < upper");
  }
  const auto default_vector = [&](Eigen::VectorXd& v, const char* what) {
    if (v.size() == 0) v = Eigen::VectorXd::Zero(k);
    if (v.size() != k)
      throw ConfigError(std::string(what) + " must have length k");
  };
  default_vector(config_.propensity_slope, "the propensity slope");
  default_vector(config_.control_slope, "the control slope");
  default_vector(config_.effect_slope, "the effect slope");
  if (config_.noise_sd < 0.0)
    throw ConfigError("the noise standard deviation must be nonnegative");
  if (!(config_.propensity_min > 0.0 && config_.propensity_max < 1.0 &&
        config_.propensity_min < config_.propensity_max))
    throw ConfigError("propensity bounds must satisfy 0 < min < max < 1");

  const Eigen::VectorXd center =
      0.5 * (config_.box_lower + config_.box_upper);

  if (config_.propensity == PropensityKind::GroupConditional) {
    if (k != 1)
      throw ConfigError(
          "the group-conditional process supports one covariate");
    const double h = 0.5 * (config_.box_upper(0) - config_.box_lower(0));
    const double gamma = config_.propensity_slope(0);
    if (!(std::abs(gamma) * h < 1.0))
      throw ConfigError("the trapezoid slope must satisfy |slope| * "
                        "half-width < 1");
    // p is pinned by the requirement p^2 Var_t = (1-p)^2 Var_c.
    const double s = std::sqrt(1.0 - gamma * gamma * h * h / 3.0);
    config_.p = s / (1.0 + s);
  } else {
    if (!(config_.p > 0.0 && config_.p < 1.0))
      throw ConfigError("the treatment fraction must lie in (0, 1)");
  }

  // Resolve the propensity intercept so the mean propensity over the
  // covariate distribution equals p.
  switch (config_.propensity) {
    case PropensityKind::Constant:
    case PropensityKind::GroupConditional:
      intercept_ = 0.0;
      break;
    case PropensityKind::Linear:
      intercept_ = config_.p - config_.propensity_slope.dot(center);
      break;
    case PropensityKind::InverseLinear:
    case PropensityKind::Logistic: {
      const double volume =
          (config_.box_upper - config_.box_lower).prod();
      const auto mean_e = [&](double intercept) {
        return integrate_box(
                   config_.box_lower, config_.box_upper,
                   [&](const Eigen::VectorXd& x) {
                     const double t =
                         intercept + config_.propensity_slope.dot(x);
                     return config_.propensity == PropensityKind::Logistic
                                ? logistic(t)
                                : 1.0 / t;
                   }) /
               volume;
      };
      double lo, hi;
      if (config_.propensity == PropensityKind::InverseLinear) {
        double min_affine = 0.0;
        for (int j = 0; j < k; ++j) {
          min_affine += std::min(
              config_.propensity_slope(j) * config_.box_lower(j),
              config_.propensity_slope(j) * config_.box_upper(j));
        }
        lo = 1.0 + 1e-6 - min_affine;  // keeps e < 1 over the whole box
        hi = lo + 1e7;
      } else {
        lo = -80.0;
        hi = 80.0;
      }
      // mean_e is monotone in the intercept (decreasing for inverse-linear,
      // increasing for logistic); bisect to the target fraction.
      const double direction =
          config_.propensity == PropensityKind::InverseLinear ? -1.0 : 1.0;
      if ((direction * (mean_e(lo) - config_.p) > 0.0) ==
          (direction * (mean_e(hi) - config_.p) > 0.0)) {
        throw ConfigError("the requested treatment fraction is not "
                          "attainable over the covariate box");
      }
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (direction * (mean_e(mid) - config_.p) > 0.0) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      intercept_ = 0.5 * (lo + hi);
      break;
    }
  }

  // The propensity is monotone in each coordinate for every supported kind,
  // so its extremes over the box sit at corners.
  const int corners = 1 << k;
  for (int mask = 0; mask < corners; ++mask) {
    Eigen::VectorXd corner(k);
    for (int j = 0; j < k; ++j) {
      corner(j) =
          (mask >> j) & 1 ? config_.box_upper(j) : config_.box_lower(j);
    }
    const double e = propensity(corner);
    if (!(e >= config_.propensity_min && e <= config_.propensity_max)) {
      std::ostringstream msg;
      msg << "propensity " << e << " at a box corner violates the bounds ["
          << config_.propensity_min << ", " << config_.propensity_max << "]";
      throw ConfigError(msg.str());
    }
  }

  const auto density = [this, center](const Eigen::VectorXd& x) {
    const double volume = (config_.box_upper - config_.box_lower).prod();
    if (config_.propensity != PropensityKind::GroupConditional)
      return 1.0 / volume;
    const double gamma = config_.propensity_slope(0);
    const double u = x(0) - center(0);
    return (config_.p + (1.0 - config_.p) * (1.0 + gamma * u)) / volume;
  };
  true_ate_ = integrate_box(
      config_.box_lower, config_.box_upper,
      [&](const Eigen::VectorXd& x) {
        return conditional_effect(x) * density(x);
      });
  const double numerator = integrate_box(
      config_.box_lower, config_.box_upper, [&](const Eigen::VectorXd& x) {
        const double e = propensity(x);
        return e * (1.0 - e) * conditional_effect(x) * density(x);
      });
  const double denominator = integrate_box(
      config_.box_lower, config_.box_upper, [&](const Eigen::VectorXd& x) {
        const double e = propensity(x);
        return e * (1.0 - e) * density(x);
      });
  overlap_effect_ = numerator / denominator;
}

double Dgp::propensity(const Eigen::VectorXd& x) const {
  switch (config_.propensity) {
    case PropensityKind::Constant:
      return config_.p;
    case PropensityKind::Linear:
      return intercept_ + config_.propensity_slope.dot(x);
    case PropensityKind::InverseLinear:
      return 1.0 / (intercept_ + config_.propensity_slope.dot(x));
    case PropensityKind::Logistic:
      return logistic(intercept_ + config_.propensity_slope.dot(x));
    case PropensityKind::GroupConditional: {
      const double center = 0.5 * (config_.box_lower(0) + config_.box_upper(0));
      const double u = x(0) - center;
      const double gamma = config_.propensity_slope(0);
      return config_.p /
             (config_.p + (1.0 - config_.p) * (1.0 + gamma * u));
    }
  }
  throw ConfigError("unknown propensity kind");
}

double Dgp::control_mean_function(const Eigen::VectorXd& x) const {
  double value = config_.control_intercept + config_.control_slope.dot(x);
  if (config_.outcome == OutcomeKind::NonlinearControl)
    value += config_.quadratic_coefficient * x(0) * x(0);
  return value;
}

double Dgp::conditional_effect(const Eigen::VectorXd& x) const {
  double value = config_.effect_intercept + config_.effect_slope.dot(x);
  if (config_.outcome == OutcomeKind::NonlinearEffect)
    value += config_.quadratic_coefficient * x(0) * x(0);
  return value;
}

double Dgp::mean_propensity() const {
  const Eigen::VectorXd center = 0.5 * (config_.box_lower + config_.box_upper);
  const double volume = (config_.box_upper - config_.box_lower).prod();
  return integrate_box(
      config_.box_lower, config_.box_upper, [&](const Eigen::VectorXd& x) {
        double density = 1.0 / volume;
        if (config_.propensity == PropensityKind::GroupConditional) {
          const double gamma = config_.propensity_slope(0);
          const double u = x(0) - center(0);
          density = (config_.p + (1.0 - config_.p) * (1.0 + gamma * u)) /
                    volume;
        }
        return propensity(x) * density;
      });
}

GeneratedSample Dgp::generate(Eigen::Index n, std::uint64_t replication) const {
  const int k = config_.k;
  if (n < 2 * (k + 2))
    throw ConfigError("the sample size is too small for both groups");

  for (std::uint64_t retry = 0; retry < 100; ++retry) {
    std::mt19937_64 engine(replication_seed(config_.seed, replication, retry));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Eigen::MatrixXd covariates(n, k);
    std::vector<int> treatment(static_cast<std::size_t>(n));
    Eigen::VectorXd outcome(n);
    Eigen::VectorXd propensities(n);

    const double center = 0.5 * (config_.box_lower(0) + config_.box_upper(0));
    const double h = 0.5 * (config_.box_upper(0) - config_.box_lower(0));
    const double gamma = config_.propensity == PropensityKind::GroupConditional
                             ? config_.propensity_slope(0)
                             : 0.0;

    for (Eigen::Index i = 0; i < n; ++i) {
      if (config_.propensity == PropensityKind::GroupConditional) {
        const bool treated = unit(engine) < config_.p;
        treatment[static_cast<std::size_t>(i)] = treated ? 1 : 0;
        if (treated) {
          covariates(i, 0) =
              config_.box_lower(0) +
              (config_.box_upper(0) - config_.box_lower(0)) * unit(engine);
        } else {
          // Rejection sampling from the trapezoid density 1 + gamma * u.
          const double bound = 1.0 + std::abs(gamma) * h;
          double u;
          do {
            u = -h + 2.0 * h * unit(engine);
          } while (unit(engine) * bound > 1.0 + gamma * u);
          covariates(i, 0) = center + u;
        }
        propensities(i) = propensity(covariates.row(i).transpose());
      } else {
        for (int j = 0; j < k; ++j) {
          covariates(i, j) =
              config_.box_lower(j) +
              (config_.box_upper(j) - config_.box_lower(j)) * unit(engine);
        }
        propensities(i) = propensity(covariates.row(i).transpose());
        treatment[static_cast<std::size_t>(i)] =
            unit(engine) < propensities(i) ? 1 : 0;
      }
      const Eigen::VectorXd x = covariates.row(i).transpose();
      const double mean = treatment[static_cast<std::size_t>(i)] == 1
                              ? control_mean_function(x) + conditional_effect(x)
                              : control_mean_function(x);
      outcome(i) = mean + config_.noise_sd * gauss(engine);
    }

    Eigen::Index treated_count = 0;
    for (int z : treatment) treated_count += z;
    const Eigen::Index control_count = n - treated_count;
    if (treated_count < k + 2 || control_count < k + 2) continue;

    return GeneratedSample{
        Dataset(std::move(covariates), std::move(treatment),
                std::optional<Eigen::VectorXd>(std::move(outcome)),
                std::nullopt, {}, TreatmentKind::Binary),
        std::move(propensities), true_ate_};
  }
  throw NumericalError("failed to generate a sample with both groups "
                       "populated after 100 retries");
}

std::pair<double, Eigen::VectorXd> linear_propensity_coefficients(
    double p, const Eigen::VectorXd& mu_t, const Eigen::VectorXd& mu_c,
    const Eigen::MatrixXd& sigma_t, const Eigen::MatrixXd& sigma_c) {
  if (!(p > 0.0 && p < 1.0))
    throw ConfigError("the treatment fraction must lie in (0, 1)");
  const Eigen::Index k = mu_t.size();
  if (mu_c.size() != k || sigma_t.rows() != k || sigma_t.cols() != k ||
      sigma_c.rows() != k || sigma_c.cols() != k)
    throw ConfigError("moment dimensions are inconsistent");
  const Eigen::MatrixXd blended = p * sigma_t + (1.0 - p) * sigma_c;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(blended);
  const auto& sv = svd.singularValues();
  if (sv(0) <= 0.0 || sv(sv.size() - 1) / sv(0) < kSingularityThreshold)
    throw NumericalError("the blended covariance is singular");
  const Eigen::VectorXd gap = mu_t - mu_c;
  const Eigen::VectorXd direction = blended.ldlt().solve(gap);
  const double c = gap.dot(direction);
  const double factor = p * (1.0 - p) / (1.0 + p * (1.0 - p) * c);
  const Eigen::VectorXd slope = factor * direction;
  const Eigen::VectorXd mu = p * mu_t + (1.0 - p) * mu_c;
  return {p - slope.dot(mu), slope};
}

SimulationReport weight_convergence_experiment(
    const Dgp& dgp, ConvergenceMeasure measure,
    const std::vector<Eigen::Index>& n_grid, int replications) {
  if (n_grid.empty() || replications < 1)
    throw ConfigError("the experiment needs a sample grid and replications");

  const bool pooled = measure == ConvergenceMeasure::PooledTreated ||
                      measure == ConvergenceMeasure::PooledControl;
  const bool treated_side = measure == ConvergenceMeasure::PerGroupTreated ||
                            measure == ConvergenceMeasure::PooledTreated;
  std::string series;
  switch (measure) {
    case ConvergenceMeasure::PerGroupTreated: series = "per_group_treated"; break;
    case ConvergenceMeasure::PerGroupControl: series = "per_group_control"; break;
    case ConvergenceMeasure::PooledTreated: series = "pooled_treated"; break;
    case ConvergenceMeasure::PooledControl: series = "pooled_control"; break;
  }

  SimulationReport report;
  report.experiment = "weight_convergence";
  report.true_ate = dgp.true_ate();
  for (Eigen::Index n : n_grid) {
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(replications));
    for (int rep = 0; rep < replications; ++rep) {
      const GeneratedSample sample =
          dgp.generate(n, static_cast<std::uint64_t>(rep));
      const WeightSet w =
          pooled ? uri_weights(sample.data)
                 : mri_weights(sample.data,
                               profile(sample.data, ProfileKind::FullMean));
      const int label = treated_side ? 1 : 0;
      double sup = 0.0;
      for (Eigen::Index r : sample.data.group_rows(label)) {
        const double e = sample.propensities(r);
        const double limit = treated_side ? 1.0 / e : 1.0 / (1.0 - e);
        sup = std::max(sup, std::abs(static_cast<double>(n) * w.weights(r) -
                                     limit));
      }
      report.rows.push_back(SimulationRow{series, n, rep, sup});
      values.push_back(sup);
    }
    report.summaries.push_back(summarize(series, n, values));
  }
  return report;
}

SimulationReport consistency_experiment(const Dgp& dgp,
                                        const std::vector<Eigen::Index>& n_grid,
                                        int replications) {
  if (n_grid.empty() || replications < 1)
    throw ConfigError("the experiment needs a sample grid and replications");

  SimulationReport report;
  report.experiment = "consistency";
  report.true_ate = dgp.true_ate();
  report.overlap_weighted_effect = dgp.overlap_weighted_effect();
  for (Eigen::Index n : n_grid) {
    std::vector<double> pooled_estimates;
    std::vector<double> per_group_estimates;
    for (int rep = 0; rep < replications; ++rep) {
      const GeneratedSample sample =
          dgp.generate(n, static_cast<std::uint64_t>(rep));
      const double pooled =
          hajek_estimate(sample.data, uri_weights(sample.data)).value;
      const double per_group =
          hajek_estimate(sample.data,
                         mri_weights(sample.data,
                                     profile(sample.data,
                                             ProfileKind::FullMean)))
              .value;
      report.rows.push_back(SimulationRow{"pooled", n, rep, pooled});
      report.rows.push_back(SimulationRow{"per_group", n, rep, per_group});
      pooled_estimates.push_back(pooled);
      per_group_estimates.push_back(per_group);
    }
    report.summaries.push_back(summarize("pooled", n, pooled_estimates));
    report.summaries.push_back(
        summarize("per_group", n, per_group_estimates));
  }
  return report;
}

Scenario make_scenario(const std::string& name, std::uint64_t seed) {
  DgpConfig cfg;
  cfg.k = 1;
  cfg.seed = seed;
  cfg.box_lower = Eigen::VectorXd::Constant(1, -1.0);
  cfg.box_upper = Eigen::VectorXd::Constant(1, 1.0);
  cfg.control_intercept = 1.0;
  cfg.control_slope = Eigen::VectorXd::Constant(1, 2.0);
  cfg.effect_intercept = 1.0;
  cfg.effect_slope = Eigen::VectorXd::Zero(1);
  cfg.noise_sd = 1.0;

  bool convergence = false;
  ConvergenceMeasure measure = ConvergenceMeasure::PerGroupTreated;
  if (name == "convergence-per-group") {
    cfg.propensity = PropensityKind::InverseLinear;
    cfg.propensity_slope = Eigen::VectorXd::Constant(1, 0.8);
    convergence = true;
    measure = ConvergenceMeasure::PerGroupTreated;
  } else if (name == "convergence-per-group-misspecified") {
    cfg.propensity = PropensityKind::Logistic;
    cfg.propensity_slope = Eigen::VectorXd::Constant(1, 2.0);
    convergence = true;
    measure = ConvergenceMeasure::PerGroupTreated;
  } else if (name == "convergence-pooled") {
    cfg.propensity = PropensityKind::GroupConditional;
    cfg.propensity_slope = Eigen::VectorXd::Constant(1, 0.8);
    convergence = true;
    measure = ConvergenceMeasure::PooledTreated;
  } else if (name == "convergence-control-constant") {
    cfg.propensity = PropensityKind::Constant;
    convergence = true;
    measure = ConvergenceMeasure::PerGroupControl;
  } else if (name == "consistency-linear-outcomes") {
    cfg.propensity = PropensityKind::Linear;
    cfg.p = 0.6;
    cfg.propensity_slope = Eigen::VectorXd::Constant(1, 0.25);
    cfg.outcome = OutcomeKind::LinearHeterogeneous;
    cfg.effect_slope = Eigen::VectorXd::Constant(1, 2.0);
  } else if (name == "consistency-constant-propensity") {
    cfg.propensity = PropensityKind::Constant;
    cfg.outcome = OutcomeKind::NonlinearControl;
    cfg.quadratic_coefficient = 1.5;
    cfg.effect_slope = Eigen::VectorXd::Constant(1, 0.8);
  } else if (name == "consistency-m0-linear") {
    cfg.propensity = PropensityKind::InverseLinear;
    cfg.propensity_slope = Eigen::VectorXd::Constant(1, 0.8);
    cfg.outcome = OutcomeKind::NonlinearEffect;
    cfg.quadratic_coefficient = 1.0;
    cfg.effect_slope = Eigen::VectorXd::Constant(1, 0.5);
  } else {
    std::string known;
    for (const std::string& s : scenario_names())
      known += (known.empty() ? "" : ", ") + s;
    throw ConfigError("unknown scenario '" + name + "'; available: " + known);
  }
  return Scenario{name, Dgp(cfg), convergence, measure};
}

std::vector<std::string> scenario_names() {
  return {"convergence-per-group",
          "convergence-per-group-misspecified",
          "convergence-pooled",
          "convergence-control-constant",
          "consistency-linear-outcomes",
          "consistency-constant-propensity",
          "consistency-m0-linear"};
}

SimulationReport run_scenario(const Scenario& scenario,
                              const std::vector<Eigen::Index>& n_grid,
                              int replications) {
  SimulationReport report =
      scenario.convergence
          ? weight_convergence_experiment(scenario.dgp, scenario.measure,
                                          n_grid, replications)
          : consistency_experiment(scenario.dgp, n_grid, replications);
  report.scenario = scenario.name;
  return report;
}

Table simulation_table(const SimulationReport& report) {
  Table table;
  table.name = "simulation";
  table.columns = {"series", "n", "replication", "value"};
  for (const SimulationRow& row : report.rows) {
    table.rows.push_back({row.series, static_cast<std::int64_t>(row.n),
                          static_cast<std::int64_t>(row.replication),
                          row.value});
  }
  return table;
}

}  // namespace regweights
