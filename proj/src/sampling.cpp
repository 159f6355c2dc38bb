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

#include "hsd/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "hsd/errors.hpp"

namespace hsd {
namespace {

std::vector<std::size_t> pick(const std::vector<std::size_t>& pool, std::size_t count, Rng& rng) {
  std::vector<std::size_t> chosen(count);
  const auto draws = rng.sample_without_replacement(pool.size(), count);
  for (std::size_t i = 0; i < count; ++i) chosen[i] = pool[draws[i]];
  return chosen;
}

}  // namespace

std::vector<std::uint8_t> stratify(std::span<const double> predictions, double threshold) {
  std::vector<std::uint8_t> labels(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    labels[i] = predictions[i] > threshold ? 1 : 0;
  }
  return labels;
}

std::vector<std::uint8_t> stratify(const PopulationFrame& population,
                                   const FittedOutcomeModel& model, double threshold) {
  return stratify(predict_proba(model, population), threshold);
}

double stratum_share(std::span<const std::uint8_t> labels) {
  if (labels.empty()) throw ValidationError("cannot take the stratum share of zero labels");
  std::size_t count = 0;
  for (auto l : labels) count += l;
  return static_cast<double>(count) / static_cast<double>(labels.size());
}

Cohort draw_cohort(const PopulationFrame& population, std::span<const std::uint8_t> labels,
                   const SamplingPlan& plan, const SeedSpec& seed) {
  const std::size_t n = population.rows();
  const std::size_t target = plan.target_n;
  if (target == 0) throw ValidationError("plan target_n must be positive");
  if (target > n) {
    throw ValidationError("cohort size " + std::to_string(target) + " exceeds population size " +
                          std::to_string(n));
  }

  Cohort cohort;
  cohort.plan = plan;

  if (plan.is_uniform()) {
    Rng rng(seed.stream("draw"));
    cohort.rows = rng.sample_without_replacement(n, target);
    std::sort(cohort.rows.begin(), cohort.rows.end());
    cohort.is_h.resize(target, 0);
    if (!labels.empty()) {
      if (labels.size() != n) throw ValidationError("label vector does not match population size");
      for (std::size_t i = 0; i < target; ++i) cohort.is_h[i] = labels[cohort.rows[i]];
    }
  } else {
    if (labels.size() != n) throw ValidationError("label vector does not match population size");
    std::vector<std::size_t> pool_h;
    std::vector<std::size_t> pool_l;
    for (std::size_t i = 0; i < n; ++i) (labels[i] ? pool_h : pool_l).push_back(i);

    const double sampled_share = plan.effective_r_h() * plan.effective_p_h();
    const auto count_h =
        static_cast<std::size_t>(std::llround(static_cast<double>(target) * sampled_share));
    if (count_h > target) {
      throw ValidationError("plan oversampling share exceeds 1; cannot draw cohort");
    }
    const std::size_t count_l = target - count_h;

    if (count_h > pool_h.size() || count_l > pool_l.size()) {
      // Largest N keeping both strata feasible under this plan.
      const double frac_h = sampled_share;
      const double frac_l = 1.0 - sampled_share;
      double max_n = static_cast<double>(n);
      if (frac_h > 0.0) max_n = std::min(max_n, static_cast<double>(pool_h.size()) / frac_h);
      if (frac_l > 0.0) max_n = std::min(max_n, static_cast<double>(pool_l.size()) / frac_l);
      throw ValidationError("stratum exhausted: requested " + std::to_string(count_h) + " of " +
                            std::to_string(pool_h.size()) + " H rows and " +
                            std::to_string(count_l) + " of " + std::to_string(pool_l.size()) +
                            " L rows; maximum feasible N is " +
                            std::to_string(static_cast<std::size_t>(max_n)));
    }

    Rng rng_h(seed.stream("draw-h"));
    Rng rng_l(seed.stream("draw-l"));
    cohort.rows = pick(pool_h, count_h, rng_h);
    const auto low = pick(pool_l, count_l, rng_l);
    cohort.rows.insert(cohort.rows.end(), low.begin(), low.end());
    std::sort(cohort.rows.begin(), cohort.rows.end());

    cohort.is_h.resize(target);
    for (std::size_t i = 0; i < target; ++i) cohort.is_h[i] = labels[cohort.rows[i]];
  }

  cohort.ids.resize(target);
  for (std::size_t i = 0; i < target; ++i) cohort.ids[i] = population.ids()[cohort.rows[i]];
  return cohort;
}

Cohort assign_treatment(Cohort cohort, double p, const SeedSpec& seed, bool stratum_blocked) {
  if (!(p > 0.0) || !(p < 1.0)) {
    throw ValidationError("treatment proportion must lie strictly inside (0, 1)");
  }
  const std::size_t n = cohort.size();
  if (n == 0) throw ValidationError("cannot assign treatment on an empty cohort");

  cohort.treatment.assign(n, 0);
  Rng rng(seed.stream("treatment"));

  if (!stratum_blocked) {
    const auto treated =
        static_cast<std::size_t>(std::llround(p * static_cast<double>(n)));
    for (std::size_t i : rng.sample_without_replacement(n, treated)) cohort.treatment[i] = 1;
    return cohort;
  }

  std::vector<std::size_t> members_h;
  std::vector<std::size_t> members_l;
  for (std::size_t i = 0; i < n; ++i) (cohort.is_h[i] ? members_h : members_l).push_back(i);
  for (const auto& members : {members_h, members_l}) {
    if (members.empty()) continue;
    const auto treated = static_cast<std::size_t>(
        std::llround(p * static_cast<double>(members.size())));
    for (std::size_t j : rng.sample_without_replacement(members.size(), treated)) {
      cohort.treatment[members[j]] = 1;
    }
  }
  return cohort;
}

PopulationFrame cohort_frame(const PopulationFrame& population, const Cohort& cohort,
                             std::optional<std::vector<std::uint8_t>> outcome) {
  if (cohort.treatment.size() != cohort.size()) {
    throw ValidationError("cohort has no treatment assignment yet");
  }
  if (outcome && outcome->size() != cohort.size()) {
    throw ValidationError("outcome vector does not match cohort size");
  }

  const std::size_t d = population.cols();
  std::vector<double> values;
  values.reserve(cohort.size() * d);
  for (std::size_t row : cohort.rows) {
    const auto r = population.row(row);
    values.insert(values.end(), r.begin(), r.end());
  }
  return PopulationFrame(population.feature_names(), std::move(values), std::move(outcome),
                         cohort.treatment, cohort.ids);
}

}  // namespace hsd
