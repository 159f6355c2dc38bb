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

#include "hsd/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hsd/errors.hpp"
#include "hsd/estimation.hpp"

namespace hsd {
namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void check_finite_scores(std::span<const double> scores, const char* what) {
  for (const double s : scores) {
    if (!std::isfinite(s)) throw ValidationError(std::string(what) + " must be finite");
  }
}

void check_grid(std::size_t t_grid) {
  if (t_grid == 0) throw ValidationError("grid size must be positive");
}

void check_test_frame(const PopulationFrame& test, std::span<const double> scores,
                      std::span<const double> adjusted_outcome) {
  if (!test.has_outcome() || !test.has_treatment()) {
    throw ValidationError("evaluation needs a test frame with outcome and treatment");
  }
  if (test.rows() == 0) throw ValidationError("test frame is empty");
  if (scores.size() != test.rows()) throw ValidationError("scores/test length mismatch");
  if (!adjusted_outcome.empty() && adjusted_outcome.size() != test.rows()) {
    throw ValidationError("adjusted_outcome/test length mismatch");
  }
  check_finite_scores(scores, "scores");
}

// Interior thresholds are the 1-based (1-t) order statistics of the
// reference scores; t = 1 takes everything. The top-set rule everywhere is
// score >= threshold.
std::vector<double> grid_thresholds(std::span<const double> reference_scores,
                                    std::size_t t_grid) {
  std::vector<double> sorted(reference_scores.begin(), reference_scores.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());

  std::vector<double> thresholds(t_grid);
  for (std::size_t k = 1; k < t_grid; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(t_grid);
    const auto rank = static_cast<std::size_t>(std::ceil((1.0 - t) * n));
    thresholds[k - 1] = sorted[std::max<std::size_t>(rank, 1) - 1];
  }
  thresholds[t_grid - 1] = -std::numeric_limits<double>::infinity();
  return thresholds;
}

double max_tie_share(std::span<const double> reference_scores,
                     std::span<const double> thresholds) {
  if (reference_scores.empty()) return 0.0;
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < thresholds.size(); ++k) {
    std::size_t tied = 0;
    for (const double s : reference_scores) tied += s == thresholds[k];
    worst = std::max(worst, static_cast<double>(tied) / static_cast<double>(reference_scores.size()));
  }
  return worst;
}

std::vector<std::size_t> top_rows(std::span<const double> scores, double threshold) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] >= threshold) rows.push_back(i);
  }
  return rows;
}

void push_missing(QiniCurve& curve) {
  curve.ate_t.push_back(kNan);
  curve.q_values.push_back(kNan);
  curve.variance_hat.push_back(kNan);
  curve.missing.push_back(1);
}

void push_point(QiniCurve& curve, const AteEstimate& estimate, double share) {
  curve.ate_t.push_back(estimate.value);
  curve.q_values.push_back(estimate.value * share);
  curve.variance_hat.push_back(estimate.variance_hat);
  curve.missing.push_back(0);
}

}  // namespace

std::string to_string(QiniCorrection correction) {
  switch (correction) {
    case QiniCorrection::kNone: return "none";
    case QiniCorrection::kHs: return "hs";
    case QiniCorrection::kCovadj: return "covadj";
    case QiniCorrection::kHsCovadj: return "hs_covadj";
  }
  throw ValidationError("unknown qini correction");
}

QiniCurve qini_curve(const PopulationFrame& test, std::span<const double> scores,
                     std::size_t t_grid, std::span<const double> adjusted_outcome,
                     bool exact_share) {
  check_grid(t_grid);
  check_test_frame(test, scores, adjusted_outcome);

  const auto outcome = test.outcome();
  const auto treatment = test.treatment();
  const std::size_t n_treated_total =
      std::accumulate(treatment.begin(), treatment.end(), std::size_t{0});
  const auto thresholds = grid_thresholds(scores, t_grid);

  QiniCurve curve;
  curve.correction = adjusted_outcome.empty() ? QiniCorrection::kNone : QiniCorrection::kCovadj;
  curve.tie_fraction = max_tie_share(scores, thresholds);
  for (std::size_t k = 0; k < t_grid; ++k) {
    const double t = static_cast<double>(k + 1) / static_cast<double>(t_grid);
    curve.grid.push_back(t);
    const auto rows = top_rows(scores, thresholds[k]);

    std::size_t n_treated = 0;
    for (const std::size_t i : rows) n_treated += treatment[i];
    if (n_treated == 0 || n_treated == rows.size()) {
      push_missing(curve);
      continue;
    }

    std::vector<std::uint8_t> w;
    w.reserve(rows.size());
    for (const std::size_t i : rows) w.push_back(treatment[i]);

    AteEstimate estimate;
    if (adjusted_outcome.empty()) {
      std::vector<std::uint8_t> y;
      y.reserve(rows.size());
      for (const std::size_t i : rows) y.push_back(outcome[i]);
      estimate = diff_in_means(y, w);
    } else {
      std::vector<double> y;
      y.reserve(rows.size());
      for (const std::size_t i : rows) y.push_back(adjusted_outcome[i]);
      estimate = diff_in_means(y, w);
    }
    const double share = exact_share ? static_cast<double>(n_treated) /
                                           static_cast<double>(n_treated_total)
                                     : t;
    push_point(curve, estimate, share);
  }
  return curve;
}

QiniCurve hs_qini_curve(const PopulationFrame& test, std::span<const std::uint8_t> labels,
                        std::span<const double> scores, std::span<const double> reference_scores,
                        std::span<const std::uint8_t> reference_labels, std::size_t t_grid,
                        std::span<const double> adjusted_outcome) {
  check_grid(t_grid);
  check_test_frame(test, scores, adjusted_outcome);
  if (labels.size() != test.rows()) throw ValidationError("labels/test length mismatch");
  if (reference_scores.empty()) throw ValidationError("reference scores are empty");
  if (reference_labels.size() != reference_scores.size()) {
    throw ValidationError("reference scores/labels length mismatch");
  }
  check_finite_scores(reference_scores, "reference scores");

  const auto outcome = test.outcome();
  const auto treatment = test.treatment();
  const auto thresholds = grid_thresholds(reference_scores, t_grid);

  QiniCurve curve;
  curve.correction =
      adjusted_outcome.empty() ? QiniCorrection::kHs : QiniCorrection::kHsCovadj;
  curve.tie_fraction = max_tie_share(reference_scores, thresholds);
  for (std::size_t k = 0; k < t_grid; ++k) {
    const double t = static_cast<double>(k + 1) / static_cast<double>(t_grid);
    curve.grid.push_back(t);
    const double threshold = thresholds[k];

    std::size_t reference_top = 0;
    std::size_t reference_top_h = 0;
    for (std::size_t i = 0; i < reference_scores.size(); ++i) {
      if (reference_scores[i] >= threshold) {
        reference_top += 1;
        reference_top_h += reference_labels[i];
      }
    }
    if (reference_top == 0) {
      push_missing(curve);
      continue;
    }
    const double p_h_t =
        static_cast<double>(reference_top_h) / static_cast<double>(reference_top);

    const auto rows = top_rows(scores, threshold);
    // Every stratum with positive weight needs both arms in the top set.
    std::size_t cells[2][2] = {{0, 0}, {0, 0}};
    for (const std::size_t i : rows) cells[labels[i] ? 1 : 0][treatment[i] ? 1 : 0] += 1;
    const bool need_l = p_h_t < 1.0;
    const bool need_h = p_h_t > 0.0;
    const bool l_ok = cells[0][0] > 0 && cells[0][1] > 0;
    const bool h_ok = cells[1][0] > 0 && cells[1][1] > 0;
    if ((need_l && !l_ok) || (need_h && !h_ok)) {
      push_missing(curve);
      continue;
    }

    std::vector<std::uint8_t> w;
    std::vector<std::uint8_t> s;
    w.reserve(rows.size());
    s.reserve(rows.size());
    for (const std::size_t i : rows) {
      w.push_back(treatment[i]);
      s.push_back(labels[i]);
    }

    AteEstimate estimate;
    if (adjusted_outcome.empty()) {
      std::vector<std::uint8_t> y;
      y.reserve(rows.size());
      for (const std::size_t i : rows) y.push_back(outcome[i]);
      estimate = stratified_ate(y, w, s, p_h_t);
    } else {
      std::vector<double> y;
      y.reserve(rows.size());
      for (const std::size_t i : rows) y.push_back(adjusted_outcome[i]);
      estimate = stratified_ate(y, w, s, p_h_t);
    }
    push_point(curve, estimate, t);
  }
  return curve;
}

QiniCurve hs_qini_curve(const PopulationFrame& test, std::span<const std::uint8_t> labels,
                        const UpliftModel& model, const PopulationFrame& reference,
                        std::span<const std::uint8_t> reference_labels, std::size_t t_grid,
                        std::span<const double> adjusted_outcome) {
  const auto scores = model.predict(test);
  const auto reference_scores = model.predict(reference);
  return hs_qini_curve(test, labels, scores, reference_scores, reference_labels, t_grid,
                       adjusted_outcome);
}

AuqResult auq_oracle(std::span<const double> scores, std::span<const double> tau) {
  if (scores.empty()) throw ValidationError("scores are empty");
  if (scores.size() != tau.size()) throw ValidationError("scores/tau length mismatch");
  check_finite_scores(scores, "scores");

  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Midrank of each tie group, as 1-based ranks.
  std::vector<double> cdf(n, 0.0);
  std::size_t start = 0;
  while (start < n) {
    std::size_t stop = start;
    while (stop < n && scores[order[stop]] == scores[order[start]]) ++stop;
    const double midrank = static_cast<double>(start + 1 + stop) / 2.0;
    for (std::size_t i = start; i < stop; ++i) {
      cdf[order[i]] = midrank / static_cast<double>(n);
    }
    start = stop;
  }

  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += cdf[i] * tau[i];

  AuqResult result;
  result.value = sum / static_cast<double>(n);
  result.estimator = AuqResult::Estimator::kOracleCdf;
  return result;
}

AuqResult auq_decile(const QiniCurve& curve) {
  const std::size_t t = curve.grid.size();
  if (t == 0) throw ValidationError("curve is empty");

  double sum = 0.0;
  for (std::size_t k = 0; k < t; ++k) {
    if (curve.missing[k]) {
      throw DataError("curve point t=" + std::to_string(curve.grid[k]) +
                      " is missing; cannot integrate");
    }
    sum += curve.grid[k] * curve.ate_t[k];
  }

  AuqResult result;
  result.value = sum / static_cast<double>(t);
  result.estimator = AuqResult::Estimator::kDecile;
  result.t_grid = t;
  return result;
}

AuqResult auq_decile(const PopulationFrame& test, std::span<const double> scores,
                     std::size_t t_grid, std::span<const double> adjusted_outcome) {
  return auq_decile(qini_curve(test, scores, t_grid, adjusted_outcome));
}

std::vector<std::size_t> downsample_to_population(std::span<const std::uint8_t> labels,
                                                  double population_p_h, const SeedSpec& seed) {
  if (labels.empty()) throw ValidationError("labels are empty");
  if (!(population_p_h >= 0.0 && population_p_h < 1.0)) {
    throw ValidationError("population p_H must lie in [0, 1)");
  }

  std::vector<std::size_t> h_rows;
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (labels[i] ? h_rows : kept).push_back(i);
  }
  const double n_l = static_cast<double>(kept.size());
  if (n_l == 0.0) throw ValidationError("cohort has no S_L rows to anchor the proportions");
  const auto keep_h = static_cast<std::size_t>(
      std::llround(population_p_h / (1.0 - population_p_h) * n_l));
  if (keep_h > h_rows.size()) {
    throw ValidationError("population p_H exceeds the cohort share of S_H; cannot downsample");
  }

  Rng rng(seed.derive(0));
  for (const std::size_t pick : rng.sample_without_replacement(h_rows.size(), keep_h)) {
    kept.push_back(h_rows[pick]);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

}  // namespace hsd
