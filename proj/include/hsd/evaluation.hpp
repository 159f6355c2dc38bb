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

#include "hsd/frame.hpp"
#include "hsd/rng.hpp"
#include "hsd/uplift.hpp"

namespace hsd {

enum class QiniCorrection { kNone, kHs, kCovadj, kHsCovadj };

std::string to_string(QiniCorrection correction);

// Qini curve over the grid t = k/T, k = 1..T. At each t the top set is the
// rows whose score weakly exceeds the (1-t) order statistic of the
// reference scores (t = 1 takes everything); ate_t is the matching ATE
// estimate and q_values = ate_t * t. Points whose estimate needs an empty
// stratum-arm cell are flagged missing and carry NaN.
struct QiniCurve {
  std::vector<double> grid;
  std::vector<double> ate_t;
  std::vector<double> q_values;
  std::vector<double> variance_hat;
  std::vector<std::uint8_t> missing;
  QiniCorrection correction = QiniCorrection::kNone;

  // Largest share of reference scores tied at any interior grid threshold.
  double tie_fraction = 0.0;
};

// Uniform-cohort curve: thresholds from the test scores themselves, ate_t
// by difference in means (on adjusted outcomes y - Phi when provided).
// exact_share replaces the factor t with the realized treated share
// N_w,top / N_w of each top set.
QiniCurve qini_curve(const PopulationFrame& test, std::span<const double> scores,
                     std::size_t t_grid = 10, std::span<const double> adjusted_outcome = {},
                     bool exact_share = false);

// HS-corrected curve: thresholds and the top-set share of S_H come from
// reference scores with population-proportional strata composition; each
// ate_t is the population-weighted stratified estimate over the test rows
// above the threshold.
QiniCurve hs_qini_curve(const PopulationFrame& test, std::span<const std::uint8_t> labels,
                        std::span<const double> scores, std::span<const double> reference_scores,
                        std::span<const std::uint8_t> reference_labels, std::size_t t_grid = 10,
                        std::span<const double> adjusted_outcome = {});

// Convenience overload scoring both frames with one uplift model.
QiniCurve hs_qini_curve(const PopulationFrame& test, std::span<const std::uint8_t> labels,
                        const UpliftModel& model, const PopulationFrame& reference,
                        std::span<const std::uint8_t> reference_labels, std::size_t t_grid = 10,
                        std::span<const double> adjusted_outcome = {});

struct AuqResult {
  enum class Estimator { kOracleCdf, kDecile };

  double value = 0.0;
  Estimator estimator = Estimator::kOracleCdf;
  std::size_t t_grid = 0;  // grid size for the decile estimator
};

// Simulation-only area under the Qini curve: mean of F(score_i) * tau_i
// with F the empirical CDF of the scores under midrank tie handling.
AuqResult auq_oracle(std::span<const double> scores, std::span<const double> tau);

// Discrete area under the curve: (1/T) * sum_{k=1}^{T} (k/T) * ate_{k/T},
// the Riemann sum of Q(t) over the grid with the empty-top-set Q(0) term
// contributing zero. Any missing point raises DataError.
AuqResult auq_decile(const QiniCurve& curve);
AuqResult auq_decile(const PopulationFrame& test, std::span<const double> scores,
                     std::size_t t_grid = 100, std::span<const double> adjusted_outcome = {});

// Sorted row indices keeping every S_L row and a random S_H subset sized so
// the kept share of S_H matches population_p_h. The cohort share of S_H
// must weakly exceed population_p_h (rows are only ever deleted).
std::vector<std::size_t> downsample_to_population(std::span<const std::uint8_t> labels,
                                                  double population_p_h, const SeedSpec& seed);

}  // namespace hsd
