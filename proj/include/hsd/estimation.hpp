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
#include <string>
#include <vector>

#include "hsd/design.hpp"
#include "hsd/frame.hpp"
#include "hsd/learners.hpp"
#include "hsd/rng.hpp"

namespace hsd {

enum class AteMethod { kDim, kStratified, kCovAdj, kOracleCovAdj, kHs, kHsCovAdj };

std::string to_string(AteMethod method);

struct AteEstimate {
  double value = 0.0;
  double variance_hat = 0.0;
  AteMethod method = AteMethod::kDim;
  std::size_t n_used = 0;
  std::size_t n_treated = 0;
};

struct VarianceDecomposition {
  double zeta_var_over_n = 0.0;
  double eps_bar_var_over_n = 0.0;
  double total = 0.0;
};

// Treated-arm mean minus control-arm mean; variance is the two-sample
// estimate s1^2/n1 + s0^2/n0 with per-arm sample variances.
AteEstimate diff_in_means(std::span<const double> outcome, std::span<const std::uint8_t> treatment);
AteEstimate diff_in_means(std::span<const std::uint8_t> outcome,
                          std::span<const std::uint8_t> treatment);

// p_H * tau_H + (1-p_H) * tau_L with per-stratum difference-in-means and
// POPULATION weights; this is what keeps HS cohorts unbiased. Boundary
// weights 0/1 collapse to the single populated stratum.
AteEstimate stratified_ate(std::span<const double> outcome, std::span<const std::uint8_t> treatment,
                           std::span<const std::uint8_t> labels, double population_p_h);
AteEstimate stratified_ate(std::span<const std::uint8_t> outcome,
                           std::span<const std::uint8_t> treatment,
                           std::span<const std::uint8_t> labels, double population_p_h);

// Phi(x) = mu0 + (1-p) * tau = p * mu0 + (1-p) * mu1, the adjustment target
// that removes all feature-driven variance.
std::vector<double> oracle_phi(const SimulatedTruth& truth, double p);
std::vector<double> phi_from_predictions(std::span<const double> mu0, std::span<const double> mu1,
                                         double p);
std::vector<double> adjust_outcomes(std::span<const std::uint8_t> outcome,
                                    std::span<const double> phi);

// Cross-fitted estimator: per fold k, tau_k = mean(mu1-mu0 over the fold)
// + mean over treated fold rows of (y - mu1) - mean over control fold rows
// of (y - mu0); value = mean of tau_k. Variance from the two-sample formula
// on y - phi_hat.
AteEstimate covariate_adjusted_ate(const PopulationFrame& frame, const OutcomeLearnerSpec& spec,
                                   std::size_t folds, const SeedSpec& seed);

// Difference-in-means on oracle-adjusted outcomes y - Phi(x).
AteEstimate oracle_adjusted_ate(std::span<const std::uint8_t> outcome,
                                std::span<const std::uint8_t> treatment,
                                const SimulatedTruth& truth, double p);

struct HsAdjustment {
  // Oracle adjustment when truth is set; cross-fitted otherwise.
  const SimulatedTruth* truth = nullptr;
  OutcomeLearnerSpec learner;
  std::size_t folds = 5;
  SeedSpec seed;
};

// Stratified estimator on the cohort, on raw outcomes (plain) or adjusted
// outcomes y - Phi (covariate_adjust). Population p_H comes from
// plan.population_share_h.
AteEstimate hs_estimate(const PopulationFrame& frame, std::span<const std::uint8_t> labels,
                        const SamplingPlan& plan, bool covariate_adjust,
                        const HsAdjustment& adjustment = {});

// Sample variances of zeta_i = W_i * (mu0_i + w_i * tau_i) and
// eps_bar_i = W_i * (y_i - mu0_i - w_i * tau_i), each over N, with
// W_i = w_i/p - (1-w_i)/(1-p).
VarianceDecomposition variance_decomposition(std::span<const std::uint8_t> outcome,
                                             std::span<const std::uint8_t> treatment,
                                             const SimulatedTruth& truth, double p);

}  // namespace hsd
