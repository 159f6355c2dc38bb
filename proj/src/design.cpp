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

#include "hsd/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hsd/errors.hpp"

namespace hsd {
namespace {

constexpr double kTieFlagFraction = 0.01;

void check_probability(double value, const char* name) {
  if (!(value > 0.0) || !(value < 1.0)) {
    throw ValidationError(std::string(name) + " must lie strictly inside (0, 1), got " +
                          std::to_string(value));
  }
}

void check_quotient(double q_v) {
  if (!(q_v > 0.0) || !std::isfinite(q_v)) {
    throw ValidationError("variance quotient must be finite and positive, got " +
                          std::to_string(q_v));
  }
}

// Predictions sorted once with a prefix-sum table so every grid point splits
// in O(log n).
class SortedPredictions {
 public:
  explicit SortedPredictions(std::span<const double> predictions)
      : sorted_(predictions.begin(), predictions.end()) {
    if (sorted_.empty()) throw ValidationError("prediction vector is empty");
    for (double p : sorted_) {
      if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
        throw ValidationError("predictions must be probabilities in [0, 1], got " +
                              std::to_string(p));
      }
    }
    std::sort(sorted_.begin(), sorted_.end());
    prefix_.resize(sorted_.size() + 1, 0.0);
    for (std::size_t i = 0; i < sorted_.size(); ++i) prefix_[i + 1] = prefix_[i] + sorted_[i];
  }

  std::size_t size() const { return sorted_.size(); }

  // Order statistic at rank ceil((1-p_h)*n), 1-based.
  double threshold_at(double p_h) const {
    const double n = static_cast<double>(sorted_.size());
    auto rank = static_cast<std::size_t>(std::ceil((1.0 - p_h) * n));
    rank = std::clamp<std::size_t>(rank, 1, sorted_.size());
    return sorted_[rank - 1];
  }

  // Splits strictly above / at-or-below `threshold`. Returns false when a
  // stratum is empty or a stratum mean sits on the boundary of [0, 1], in
  // which case a plug-in variance would vanish.
  bool split(double threshold, DesignPoint& out) const {
    const std::size_t n = sorted_.size();
    const auto upper = static_cast<std::size_t>(
        std::upper_bound(sorted_.begin(), sorted_.end(), threshold) - sorted_.begin());
    const std::size_t count_h = n - upper;
    const std::size_t count_l = upper;
    if (count_h == 0 || count_l == 0) return false;

    const double m_h = (prefix_[n] - prefix_[upper]) / static_cast<double>(count_h);
    const double m_l = prefix_[upper] / static_cast<double>(count_l);
    const double v_h = m_h * (1.0 - m_h);
    const double v_l = m_l * (1.0 - m_l);
    if (!(v_h > 0.0) || !(v_l > 0.0)) return false;
    // A stratum variance this close to zero makes the quotient overflow; the
    // point is indistinguishable from a zero-variance stratum at working
    // precision.
    if (!std::isfinite(v_h / v_l) || !std::isfinite(v_l / v_h)) return false;

    const auto lower = static_cast<std::size_t>(
        std::lower_bound(sorted_.begin(), sorted_.end(), threshold) - sorted_.begin());

    out.threshold = threshold;
    out.achieved_p_h = static_cast<double>(count_h) / static_cast<double>(n);
    out.v_h_hat = v_h;
    out.v_l_hat = v_l;
    out.q_v_hat = v_h / v_l;
    out.tie_flagged =
        static_cast<double>(upper - lower) > kTieFlagFraction * static_cast<double>(n);
    return true;
  }

 private:
  std::vector<double> sorted_;
  std::vector<double> prefix_;
};

// Fills the allocation fields of a point whose split fields are set. The
// formulas take the achieved stratum share so the ratio matches the strata
// the threshold actually produces.
void derive_allocation(DesignPoint& point) {
  point.r_h = optimal_oversampling_ratio(point.achieved_p_h, point.q_v_hat);
  point.predicted_ratio = predicted_variance_ratio(point.achieved_p_h, point.q_v_hat);
}

}  // namespace

SamplingPlan SamplingPlan::uniform(std::size_t n, double treatment_p) {
  check_probability(treatment_p, "treatment_proportion");
  SamplingPlan plan;
  plan.p_h = 0.0;
  plan.r_h = 0.0;
  plan.p_h_adjusted = 0.0;
  plan.r_h_adjusted = 0.0;
  plan.use_adjusted = false;
  plan.predicted_ratio = 1.0;
  plan.target_n = n;
  plan.treatment_proportion = treatment_p;
  return plan;
}

double optimal_oversampling_ratio(double p_h, double q_v) {
  check_probability(p_h, "p_h");
  check_quotient(q_v);
  return 1.0 / (p_h + (1.0 - p_h) / std::sqrt(q_v));
}

double predicted_variance_ratio(double p_h, double q_v) {
  check_probability(p_h, "p_h");
  check_quotient(q_v);
  const double root = std::sqrt(q_v);
  const double numerator = p_h * root + (1.0 - p_h);
  return numerator * numerator / (p_h * q_v + (1.0 - p_h));
}

double safe_oversampling_bound(double p_h, double q_v) {
  check_probability(p_h, "p_h");
  check_quotient(q_v);
  if (q_v < 1.0) {
    throw ValidationError("safe oversampling bound requires a variance quotient >= 1, got " +
                          std::to_string(q_v));
  }
  return 1.0 / (p_h + (1.0 - p_h) / q_v);
}

std::pair<double, double> stratum_variance_estimates(std::span<const double> predictions,
                                                     double p_h) {
  check_probability(p_h, "p_h");
  SortedPredictions sorted(predictions);
  DesignPoint point;
  if (!sorted.split(sorted.threshold_at(p_h), point)) {
    throw ValidationError("stratification at p_h=" + std::to_string(p_h) +
                          " leaves a stratum empty or with zero plug-in variance");
  }
  return {point.v_h_hat, point.v_l_hat};
}

std::vector<double> default_p_h_grid() {
  std::vector<double> grid;
  grid.reserve(99);
  for (int i = 1; i <= 99; ++i) grid.push_back(static_cast<double>(i) / 100.0);
  return grid;
}

std::vector<DesignPoint> design_curve(std::span<const double> predictions,
                                      const std::vector<double>& grid) {
  if (grid.empty()) throw ValidationError("design grid is empty");
  for (double p : grid) check_probability(p, "grid p_h");

  SortedPredictions sorted(predictions);
  std::vector<DesignPoint> curve;
  curve.reserve(grid.size());
  for (double p_h : grid) {
    DesignPoint point;
    point.p_h = p_h;
    if (!sorted.split(sorted.threshold_at(p_h), point)) continue;
    derive_allocation(point);
    curve.push_back(point);
  }

  const std::size_t required = std::min<std::size_t>(2, grid.size());
  if (curve.size() < required) {
    throw ValidationError("design curve has fewer than " + std::to_string(required) +
                          " feasible points; predictions are too degenerate to stratify");
  }
  return curve;
}

SamplingPlan select_plan(const std::vector<DesignPoint>& curve,
                         std::span<const double> predictions, const PlanOptions& options) {
  if (curve.empty()) throw ValidationError("cannot select a plan from an empty design curve");
  if (options.target_n == 0) throw ValidationError("target_n must be positive");
  check_probability(options.treatment_proportion, "treatment_proportion");

  const DesignPoint* best = &curve.front();
  for (const DesignPoint& point : curve) {
    if (point.predicted_ratio < best->predicted_ratio ||
        (point.predicted_ratio == best->predicted_ratio && point.p_h < best->p_h)) {
      best = &point;
    }
  }

  SamplingPlan plan;
  plan.p_h = best->p_h;
  plan.threshold = best->threshold;
  plan.q_v_hat = best->q_v_hat;
  plan.r_h = best->r_h;
  plan.predicted_ratio = best->predicted_ratio;
  plan.tie_flagged = best->tie_flagged;
  plan.target_n = options.target_n;
  plan.treatment_proportion = options.treatment_proportion;
  plan.use_adjusted = options.adjust;

  // The adjusted design widens the upper stratum and shrinks the ratio
  // toward 1, trading predicted variance for robustness to a misestimated
  // quotient.
  plan.p_h_adjusted = std::min(1.25 * plan.p_h, 0.5);
  SortedPredictions sorted(predictions);
  DesignPoint adjusted;
  adjusted.p_h = plan.p_h_adjusted;
  if (!sorted.split(sorted.threshold_at(plan.p_h_adjusted), adjusted)) {
    throw ValidationError("adjusted stratification at p_h=" + std::to_string(plan.p_h_adjusted) +
                          " leaves a stratum empty or with zero plug-in variance");
  }
  derive_allocation(adjusted);
  plan.threshold_adjusted = adjusted.threshold;
  plan.q_v_hat_adjusted = adjusted.q_v_hat;
  plan.tie_flagged = plan.tie_flagged || adjusted.tie_flagged;
  plan.r_h_adjusted = 0.75 * adjusted.r_h + 0.25;

  // An adjusted ratio below 1 would undersample the stratum the design
  // singled out; clamp to uniform-at-worst.
  if (plan.r_h_adjusted < 1.0) {
    plan.r_h_adjusted = 1.0;
    plan.ratio_clamped = true;
  }

  // Oversampling cannot push the stratum's sampled share past 1.
  const double max_r = 1.0 / plan.p_h_adjusted;
  if (plan.r_h_adjusted > max_r) {
    plan.r_h_adjusted = max_r;
    plan.ratio_clamped = true;
  }
  return plan;
}

}  // namespace hsd
