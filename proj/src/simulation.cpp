/*
 * Copyright 2026 the hsd authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "hsd/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "hsd/design.hpp"
#include "hsd/errors.hpp"

namespace hsd {
namespace {

// Control-arm and treated-arm logits per scenario. x is one row.
double control_logit(int scenario, std::span<const double> x) {
  switch (scenario) {
    case 1: return x[0] + 0.5 * x[1] + x[2] * x[3] - 4.0;
    case 2: return x[0] * x[0] + 0.5 * x[1] + x[2] * x[3] - 7.0;
    case 3: return 0.1 * std::exp(x[0]) + 0.5 * x[1] * x[1] * x[1] + x[2] - 7.0;
  }
  throw ValidationError("scenario must be 1, 2 or 3");
}

double treatment_shift(int scenario, std::span<const double> x) {
  switch (scenario) {
    case 1: return 0.1;
    case 2: return 1.1 + x[4];
    case 3: return 0.1 + x[4] * x[5];
  }
  throw ValidationError("scenario must be 1, 2 or 3");
}

std::vector<std::string> feature_names(std::size_t d) {
  std::vector<std::string> names;
  names.reserve(d);
  for (std::size_t j = 1; j <= d; ++j) names.push_back("x" + std::to_string(j));
  return names;
}

struct Generated {
  std::vector<double> values;
  SimulatedTruth truth;
};

Generated generate_features_and_truth(const ScenarioSpec& spec) {
  Generated out;
  out.values.resize(spec.n_rows * spec.n_features);
  out.truth.mu0.resize(spec.n_rows);
  out.truth.tau.resize(spec.n_rows);

  Rng rng(spec.seed.stream("x"));
  for (double& v : out.values) v = rng.normal();

  for (std::size_t i = 0; i < spec.n_rows; ++i) {
    const std::span<const double> row{out.values.data() + i * spec.n_features, spec.n_features};
    const double z0 = control_logit(spec.scenario, row);
    const double z1 = z0 + treatment_shift(spec.scenario, row);
    out.truth.mu0[i] = sigmoid(z0);
    out.truth.tau[i] = sigmoid(z1) - sigmoid(z0);
  }
  return out;
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

double pearson(std::span<const double> a, std::span<const double> b, double mean_a, double mean_b) {
  double cov = 0.0;
  double var_a = 0.0;
  double var_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a == 0.0 || var_b == 0.0) return 0.0;
  return cov / std::sqrt(var_a * var_b);
}

// True variance of the stratified estimator per unit 1/N: weights are the
// population stratum shares, sampled fractions come from the plan, and the
// per-stratum variance combines both arms' Bernoulli mixture variances.
struct StratumMoments {
  double share = 0.0;
  double mean0 = 0.0;  // E[mu0 | stratum]
  double mean1 = 0.0;  // E[mu0 + tau | stratum]
};

StratumMoments stratum_moments(const SimulatedTruth& truth, std::span<const double> predictions,
                               double threshold, bool upper) {
  StratumMoments m;
  std::size_t count = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool in_h = predictions[i] > threshold;
    if (in_h != upper) continue;
    count += 1;
    m.mean0 += truth.mu0[i];
    m.mean1 += truth.mu0[i] + truth.tau[i];
  }
  if (count == 0) return m;
  m.share = static_cast<double>(count) / static_cast<double>(predictions.size());
  m.mean0 /= static_cast<double>(count);
  m.mean1 /= static_cast<double>(count);
  return m;
}

double arm_combined_variance(const StratumMoments& m, double p) {
  return m.mean1 * (1.0 - m.mean1) / p + m.mean0 * (1.0 - m.mean0) / (1.0 - p);
}

// Variance (times N) of the stratified estimator when stratum H is sampled
// at fraction f_h of the cohort.
double stratified_variance_times_n(const StratumMoments& high, const StratumMoments& low,
                                   double f_h, double p) {
  const double v_h = arm_combined_variance(high, p);
  const double v_l = arm_combined_variance(low, p);
  return high.share * high.share * v_h / f_h + low.share * low.share * v_l / (1.0 - f_h);
}

}  // namespace

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void ScenarioSpec::validate() const {
  if (scenario < 1 || scenario > 3) throw ValidationError("scenario must be 1, 2 or 3");
  if (n_rows == 0) throw ValidationError("n_rows must be positive");
  if (n_features < 6) throw ValidationError("scenarios require at least 6 features");
  if (!(treatment_p >= 0.0) || !(treatment_p < 1.0)) {
    throw ValidationError("treatment_p must lie in [0, 1)");
  }
}

ScenarioDraw generate_scenario(const ScenarioSpec& spec) {
  spec.validate();
  Generated generated = generate_features_and_truth(spec);

  std::vector<std::uint8_t> treatment(spec.n_rows, 0);
  if (spec.treatment_p > 0.0) {
    Rng rng(spec.seed.stream("w"));
    for (auto& w : treatment) w = rng.bernoulli(spec.treatment_p) ? 1 : 0;
  }
  std::vector<std::uint8_t> outcome = simulate_outcomes(generated.truth, treatment, spec.seed);

  PopulationFrame frame(feature_names(spec.n_features), std::move(generated.values),
                        std::move(outcome), std::move(treatment));
  return {std::move(frame), std::move(generated.truth)};
}

ScenarioPopulation generate_population(const ScenarioSpec& spec) {
  spec.validate();
  Generated generated = generate_features_and_truth(spec);
  PopulationFrame frame(feature_names(spec.n_features), std::move(generated.values));
  return {std::move(frame), std::move(generated.truth)};
}

std::vector<std::uint8_t> simulate_outcomes(const SimulatedTruth& truth,
                                            std::span<const std::uint8_t> treatment,
                                            const SeedSpec& seed) {
  truth.validate();
  if (truth.mu0.size() != treatment.size()) {
    throw ValidationError("treatment length does not match truth length");
  }
  Rng rng(seed.stream("y"));
  std::vector<std::uint8_t> outcome(treatment.size());
  for (std::size_t i = 0; i < outcome.size(); ++i) {
    const double rate = clamp01(truth.mu0[i] + (treatment[i] ? truth.tau[i] : 0.0));
    outcome[i] = rng.bernoulli(rate) ? 1 : 0;
  }
  return outcome;
}

double scenario_true_ate(int scenario, const SeedSpec& seed, std::size_t n_rows) {
  ScenarioSpec spec;
  spec.scenario = scenario;
  spec.n_rows = n_rows;
  spec.n_features = 6;
  spec.seed = seed.stream("true-ate");
  const ScenarioPopulation population = generate_population(spec);
  double sum = 0.0;
  for (double t : population.truth.tau) sum += t;
  return sum / static_cast<double>(n_rows);
}

std::vector<double> default_nu_grid() {
  // 13 points log-spaced across 0.2 .. 200.
  std::vector<double> grid;
  const int points = 13;
  for (int i = 0; i < points; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(points - 1);
    grid.push_back(0.2 * std::pow(1000.0, t));
  }
  return grid;
}

std::vector<double> simulate_predictions(const SimulatedTruth& truth,
                                         const RobustnessConfig& config, double nu) {
  if (!(nu > 0.0)) throw ValidationError("nu must be positive");
  const std::size_t n = truth.mu0.size();
  if (n == 0) throw ValidationError("truth is empty");

  // One substream per nu value keeps grid points independent.
  Rng rng(config.seed.stream("predictions-nu-" + std::to_string(nu)));
  std::vector<double> mu_tilde(n);
  double mean_mu = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double mu = std::clamp(truth.mu0[i], 1e-9, 1.0 - 1e-9);
    mu_tilde[i] = rng.beta(nu * mu, nu * (1.0 - mu));
    mean_mu += truth.mu0[i];
  }
  mean_mu /= static_cast<double>(n);

  double alpha = 1.0;
  if (config.alpha_mode == RobustnessConfig::AlphaMode::kOptimal) {
    double mean_tilde = 0.0;
    for (double v : mu_tilde) mean_tilde += v;
    mean_tilde /= static_cast<double>(n);
    double var_mu = 0.0;
    double var_tilde = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      var_mu += (truth.mu0[i] - mean_mu) * (truth.mu0[i] - mean_mu);
      var_tilde += (mu_tilde[i] - mean_tilde) * (mu_tilde[i] - mean_tilde);
    }
    const double correlation = pearson(mu_tilde, truth.mu0, mean_tilde, mean_mu);
    alpha = var_tilde > 0.0 ? correlation * std::sqrt(var_mu / var_tilde) : 0.0;
  }

  std::vector<double> predictions(n);
  for (std::size_t i = 0; i < n; ++i) {
    predictions[i] = clamp01(alpha * mu_tilde[i] + (1.0 - alpha) * mean_mu);
  }
  return predictions;
}

double accuracy_measure(std::span<const double> predictions, std::span<const double> mu0) {
  if (predictions.size() != mu0.size() || predictions.empty()) {
    throw ValidationError("predictions and mu0 must be nonempty and equal-length");
  }
  const std::size_t n = predictions.size();
  double mean = 0.0;
  for (double m : mu0) mean += m;
  mean /= static_cast<double>(n);
  double var = 0.0;
  double mse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    var += (mu0[i] - mean) * (mu0[i] - mean);
    mse += (predictions[i] - mu0[i]) * (predictions[i] - mu0[i]);
  }
  if (var == 0.0) throw ValidationError("mu0 has zero variance; accuracy is undefined");
  return 1.0 - mse / var;
}

std::vector<RobustnessRow> robustness_sweep(const RobustnessConfig& config) {
  ScenarioSpec scenario;
  scenario.scenario = config.scenario;
  scenario.n_rows = config.n_rows;
  scenario.n_features = 6;
  scenario.seed = config.seed.stream("population");
  const ScenarioPopulation population = generate_population(scenario);
  const SimulatedTruth& truth = population.truth;
  const double p = config.treatment_p;
  if (!(p > 0.0) || !(p < 1.0)) throw ValidationError("treatment_p must lie in (0, 1)");

  // Baseline variance (times N). Random sampling is the difference-in-means
  // variance with the full population's per-arm mixture variances; the
  // proportional baseline is the stratification-free limit of the same
  // stratified formula, which equals it minus the between-strata term.
  StratumMoments whole;
  whole.share = 1.0;
  for (std::size_t i = 0; i < truth.mu0.size(); ++i) {
    whole.mean0 += truth.mu0[i];
    whole.mean1 += truth.mu0[i] + truth.tau[i];
  }
  whole.mean0 /= static_cast<double>(truth.mu0.size());
  whole.mean1 /= static_cast<double>(truth.mu0.size());
  const double random_baseline = arm_combined_variance(whole, p);

  const std::vector<double> grid = config.nu_grid.empty() ? default_nu_grid() : config.nu_grid;
  std::vector<RobustnessRow> rows;
  rows.reserve(grid.size());

  for (const double nu : grid) {
    const std::vector<double> predictions = simulate_predictions(truth, config, nu);

    RobustnessRow row;
    row.nu = nu;
    row.accuracy = accuracy_measure(predictions, truth.mu0);

    const auto curve = design_curve(predictions);
    PlanOptions options;
    options.target_n = 1;  // analytic ratios carry no absolute N
    options.adjust = false;
    const SamplingPlan plan = select_plan(curve, predictions, options);

    auto actual_ratio = [&](double threshold, double r_h, double p_h) {
      const StratumMoments high = stratum_moments(truth, predictions, threshold, true);
      const StratumMoments low = stratum_moments(truth, predictions, threshold, false);
      const double f_h = std::clamp(r_h * p_h, 1e-12, 1.0 - 1e-12);
      const double planned = stratified_variance_times_n(high, low, f_h, p);
      double baseline = random_baseline;
      if (config.baseline == RobustnessConfig::Baseline::kProportional) {
        baseline = stratified_variance_times_n(high, low, high.share, p);
      }
      return planned / baseline;
    };

    row.vr_unadjusted = 1.0 - actual_ratio(plan.threshold, plan.r_h, plan.p_h);
    row.vr_adjusted =
        1.0 - actual_ratio(plan.threshold_adjusted, plan.r_h_adjusted, plan.p_h_adjusted);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace hsd
