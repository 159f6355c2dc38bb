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

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hsd/frame.hpp"
#include "hsd/rng.hpp"

namespace hsd {

double sigmoid(double z);

// The three synthetic RCT scenarios. Features are i.i.d. standard normal;
// outcomes are Bernoulli draws of a sigmoid response with a treatment term.
struct ScenarioSpec {
  int scenario = 1;
  std::size_t n_rows = 0;
  std::size_t n_features = 10;  // scenarios read at most x1..x6
  double treatment_p = 0.5;     // 0 produces a pure-control draw
  SeedSpec seed;

  void validate() const;
};

struct ScenarioDraw {
  PopulationFrame frame;  // features + treatment + outcome
  SimulatedTruth truth;   // per-row mu0 and tau evaluated analytically
};

struct ScenarioPopulation {
  PopulationFrame frame;  // features only
  SimulatedTruth truth;
};

// Full RCT draw: features, Bernoulli(p) treatment, Bernoulli outcome.
ScenarioDraw generate_scenario(const ScenarioSpec& spec);

// Features and truth only; treatment/outcome come later (sampling module
// draws cohorts, simulate_outcomes realizes their responses).
ScenarioPopulation generate_population(const ScenarioSpec& spec);

// y_i ~ Bernoulli(mu0_i + w_i * tau_i).
std::vector<std::uint8_t> simulate_outcomes(const SimulatedTruth& truth,
                                            std::span<const std::uint8_t> treatment,
                                            const SeedSpec& seed);

// Reference true ATE: mean of tau over a dedicated large draw.
double scenario_true_ate(int scenario, const SeedSpec& seed, std::size_t n_rows = 1000000);

struct RobustnessConfig {
  enum class AlphaMode { kOverfit, kOptimal };
  enum class Baseline { kRandomSampling, kProportional };

  AlphaMode alpha_mode = AlphaMode::kOverfit;
  std::vector<double> nu_grid;  // empty selects the default log-spaced grid
  int scenario = 1;
  std::size_t n_rows = 100000;
  double treatment_p = 0.5;
  Baseline baseline = Baseline::kRandomSampling;
  SeedSpec seed;
};

std::vector<double> default_nu_grid();

// Synthetic outcome-model predictions: mu_tilde ~ Beta(nu*mu, nu*(1-mu)),
// then alpha * mu_tilde + (1-alpha) * mean(mu) with alpha = 1 (overfit) or
// the empirical ideal shrinkage Cor(mu_tilde,mu) * sd(mu)/sd(mu_tilde).
// Results are clamped to [0, 1].
std::vector<double> simulate_predictions(const SimulatedTruth& truth,
                                         const RobustnessConfig& config, double nu);

// 1 - MSE(predictions, mu)/Var[mu].
double accuracy_measure(std::span<const double> predictions, std::span<const double> mu0);

struct RobustnessRow {
  double nu = 0.0;
  double accuracy = 0.0;
  double vr_unadjusted = 0.0;  // 1 - actual variance ratio, unadjusted plan
  double vr_adjusted = 0.0;
};

// For each nu: simulate predictions, design a plan with and without the
// adjustment, and score each against the truth: per-stratum true outcome
// variances (Bernoulli mixture within stratum and arm) plugged into the
// allocation variance formula, divided by the baseline variance.
std::vector<RobustnessRow> robustness_sweep(const RobustnessConfig& config);

}  // namespace hsd
