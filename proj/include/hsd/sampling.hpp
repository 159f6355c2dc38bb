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
#include <optional>
#include <span>
#include <vector>

#include "hsd/design.hpp"
#include "hsd/frame.hpp"
#include "hsd/learners.hpp"
#include "hsd/rng.hpp"

namespace hsd {

// A drawn experimental sample: population row references plus stratum
// labels, and treatment flags once assigned.
struct Cohort {
  std::vector<std::size_t> rows;       // indices into the source population
  std::vector<std::int64_t> ids;       // population ids at those rows
  std::vector<std::uint8_t> is_h;      // upper-stratum membership
  std::vector<std::uint8_t> treatment; // empty until assign_treatment
  SamplingPlan plan;

  std::size_t size() const { return rows.size(); }
};

// Label H iff prediction strictly exceeds the threshold.
std::vector<std::uint8_t> stratify(std::span<const double> predictions, double threshold);
std::vector<std::uint8_t> stratify(const PopulationFrame& population,
                                   const FittedOutcomeModel& model, double threshold);

// Population share labeled H.
double stratum_share(std::span<const std::uint8_t> labels);

// Simple random sampling without replacement within each stratum with
// count(H) = round(N * R_H * p_H) (effective plan values); uniform plans
// draw from the whole population. Row indices come back sorted.
Cohort draw_cohort(const PopulationFrame& population, std::span<const std::uint8_t> labels,
                   const SamplingPlan& plan, const SeedSpec& seed);

// Exactly round(p * N) treated, drawn over the pooled cohort by default or
// per stratum when blocked.
Cohort assign_treatment(Cohort cohort, double p, const SeedSpec& seed,
                        bool stratum_blocked = false);

// Materializes the cohort as a frame carrying treatment (and outcome when
// supplied, e.g. simulated responses or observed labels).
PopulationFrame cohort_frame(const PopulationFrame& population, const Cohort& cohort,
                             std::optional<std::vector<std::uint8_t>> outcome = std::nullopt);

}  // namespace hsd
