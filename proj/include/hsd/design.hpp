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

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace hsd {

// One candidate stratification: split the outcome-model predictions at the
// (1-p_h) quantile, estimate the per-stratum outcome variances from the
// prediction means, and derive the optimal oversampling ratio plus the
// variance ratio it would buy.
struct DesignPoint {
  double p_h = 0.0;            // nominal grid value
  double achieved_p_h = 0.0;   // share of predictions strictly above the threshold
  double threshold = 0.0;      // order statistic at ceil((1-p_h)*n)
  double v_h_hat = 0.0;        // m_h*(1-m_h), m_h = mean prediction in the upper stratum
  double v_l_hat = 0.0;
  double q_v_hat = 0.0;        // v_h_hat / v_l_hat
  double r_h = 0.0;            // optimal oversampling ratio at this split
  double predicted_ratio = 0.0;  // Var[optimal allocation] / Var[proportional]
  bool tie_flagged = false;      // ties at the threshold exceed 1% of rows
};

// The finished HS design. Nominal and threshold-adjusted parameter sets are
// both carried; use_adjusted picks which one sampling acts on.
struct SamplingPlan {
  double p_h = 0.0;
  double threshold = 0.0;
  double q_v_hat = 0.0;
  double r_h = 1.0;
  double predicted_ratio = 1.0;

  double p_h_adjusted = 0.0;
  double threshold_adjusted = 0.0;
  double q_v_hat_adjusted = 0.0;
  double r_h_adjusted = 1.0;

  bool use_adjusted = true;
  double treatment_proportion = 0.5;
  std::size_t target_n = 0;

  // Share of the full population whose prediction exceeds the effective
  // threshold. Filled once a population is stratified; this is the weight
  // the stratified estimator needs.
  double population_share_h = 0.0;

  bool ratio_clamped = false;
  bool tie_flagged = false;

  double effective_p_h() const { return use_adjusted ? p_h_adjusted : p_h; }
  double effective_r_h() const { return use_adjusted ? r_h_adjusted : r_h; }
  double effective_threshold() const { return use_adjusted ? threshold_adjusted : threshold; }

  // Marker plan for completely random sampling (no strata).
  static SamplingPlan uniform(std::size_t n, double treatment_p);
  bool is_uniform() const { return r_h == 0.0 && p_h == 0.0; }
};

// (p_h + (1-p_h)/sqrt(q_v))^-1, the allocation ratio minimizing the
// stratified estimator variance.
double optimal_oversampling_ratio(double p_h, double q_v);

// Variance of the optimally allocated estimator relative to proportional
// allocation: (p_h*sqrt(q_v) + 1-p_h)^2 / (p_h*q_v + 1-p_h).
double predicted_variance_ratio(double p_h, double q_v);

// Upper end of the oversampling interval that cannot increase variance
// under the true variance quotient. Requires q_v >= 1.
double safe_oversampling_bound(double p_h, double q_v);

// Plug-in per-stratum outcome variance estimates (v_h_hat, v_l_hat) at the
// (1-p_h) prediction quantile. Ties at the threshold stay in the lower
// stratum.
std::pair<double, double> stratum_variance_estimates(std::span<const double> predictions, double p_h);

std::vector<double> default_p_h_grid();

std::vector<DesignPoint> design_curve(std::span<const double> predictions,
                                      const std::vector<double>& grid = default_p_h_grid());

struct PlanOptions {
  std::size_t target_n = 0;
  double treatment_proportion = 0.5;
  bool adjust = true;
};

// Picks the curve point with minimum predicted ratio (ties break to the
// smaller p_h) and fills the adjusted parameters: p_h^ad = min(1.25*p_h,
// 0.5) and r_h^ad = 0.75*r + 0.25 with r re-derived at the adjusted
// threshold. Needs the original predictions to place that threshold.
SamplingPlan select_plan(const std::vector<DesignPoint>& curve, std::span<const double> predictions,
                         const PlanOptions& options);

}  // namespace hsd
