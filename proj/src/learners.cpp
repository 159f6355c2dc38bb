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

#include "hsd/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "hsd/errors.hpp"

namespace hsd {
namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void require_binary_both_classes(std::span<const double> targets) {
  bool any_zero = false;
  bool any_one = false;
  for (double t : targets) {
    if (t == 0.0) any_zero = true;
    else if (t == 1.0) any_one = true;
  }
  if (!any_zero || !any_one) {
    throw ValidationError("glm requires both outcome classes in the training data");
  }
}

std::vector<double> to_doubles(std::span<const std::uint8_t> outcome) {
  std::vector<double> targets(outcome.size());
  for (std::size_t i = 0; i < outcome.size(); ++i) targets[i] = outcome[i];
  return targets;
}

}  // namespace

void OutcomeLearnerSpec::validate() const {
  if (kind == LearnerKind::kGlm) {
    if (glm.l2_penalty < 0.0) throw ValidationError("glm l2_penalty must be nonnegative");
    if (!(glm.tolerance > 0.0)) throw ValidationError("glm tolerance must be positive");
    if (glm.max_iterations == 0) throw ValidationError("glm max_iterations must be at least 1");
    return;
  }
  if (forest.tree_count == 0) throw ValidationError("forest tree_count must be at least 1");
  if (forest.max_depth == 0) throw ValidationError("forest max_depth must be at least 1");
  if (forest.min_leaf == 0) throw ValidationError("forest min_leaf must be at least 1");
  if (forest.feature_fraction > 1.0) {
    throw ValidationError("forest feature_fraction must lie in (0, 1] (or <= 0 for sqrt(d)/d)");
  }
  if (!(forest.row_fraction > 0.0) || forest.row_fraction > 1.0) {
    throw ValidationError("forest row_fraction must lie in (0, 1]");
  }
  if (forest.max_bins < 2 || forest.max_bins > 256) {
    throw ValidationError("forest max_bins must lie in [2, 256]");
  }
}

FittedModel::FittedModel(OutcomeLearnerSpec spec, std::vector<std::string> feature_names,
                         GlmState state, bool probability)
    : spec_(std::move(spec)),
      feature_names_(std::move(feature_names)),
      probability_(probability),
      glm_(std::make_shared<const GlmState>(std::move(state))) {}

FittedModel::FittedModel(OutcomeLearnerSpec spec, std::vector<std::string> feature_names,
                         ForestState state, bool probability)
    : spec_(std::move(spec)),
      feature_names_(std::move(feature_names)),
      probability_(probability),
      forest_(std::make_shared<const ForestState>(std::move(state))) {}

bool FittedModel::degenerate() const { return forest_ && forest_->constant_model; }

const GlmState* FittedModel::glm_state() const { return glm_ ? glm_.get() : nullptr; }
const ForestState* FittedModel::forest_state() const { return forest_ ? forest_.get() : nullptr; }

void FittedModel::check_schema(const PopulationFrame& frame) const {
  if (frame.feature_names() != feature_names_) {
    throw ValidationError("frame feature names do not match the model's training schema");
  }
}

double FittedModel::predict_row(std::span<const double> row) const {
  if (glm_) {
    double z = glm_->intercept;
    for (std::size_t j = 0; j < glm_->weights.size(); ++j) z += glm_->weights[j] * row[j];
    return probability_ ? sigmoid(z) : z;
  }
  if (forest_->constant_model) return forest_->constant;
  double sum = 0.0;
  for (const Tree& tree : forest_->trees) sum += tree.predict_row(row);
  return sum / static_cast<double>(forest_->trees.size());
}

std::vector<double> FittedModel::predict(const PopulationFrame& frame) const {
  check_schema(frame);
  std::vector<double> out(frame.rows());
  for (std::size_t i = 0; i < frame.rows(); ++i) out[i] = predict_row(frame.row(i));
  return out;
}

namespace detail {

FittedModel fit_values(const OutcomeLearnerSpec& spec, const std::vector<std::string>& names,
                       std::span<const double> values_row_major, std::span<const double> targets,
                       bool probability, const SeedSpec& seed) {
  spec.validate();
  if (targets.empty()) throw ValidationError("cannot fit a model on zero rows");
  if (values_row_major.size() != targets.size() * names.size()) {
    throw ValidationError("feature matrix size does not match target length");
  }

  if (spec.kind == LearnerKind::kGlm) {
    if (probability) require_binary_both_classes(targets);
    GlmState state = fit_glm(spec.glm, values_row_major, names.size(), targets, probability);
    return FittedModel(spec, names, std::move(state), probability);
  }
  ForestState state = fit_forest(spec.forest, values_row_major, names.size(), targets, seed);
  return FittedModel(spec, names, std::move(state), probability);
}

}  // namespace detail

FittedOutcomeModel fit(const OutcomeLearnerSpec& spec, const PopulationFrame& frame,
                       std::span<const std::uint8_t> outcome, const SeedSpec& seed) {
  if (outcome.size() != frame.rows()) {
    throw ValidationError("outcome length does not match the frame row count");
  }
  const std::vector<double> targets = to_doubles(outcome);
  return detail::fit_values(spec, frame.feature_names(), frame.values(), targets, true, seed);
}

FittedOutcomeModel fit(const OutcomeLearnerSpec& spec, const PopulationFrame& frame,
                       const SeedSpec& seed) {
  if (!frame.has_outcome()) throw ValidationError("frame has no outcome column to fit on");
  return fit(spec, frame, frame.outcome(), seed);
}

FittedModel fit_regression(const OutcomeLearnerSpec& spec, const PopulationFrame& frame,
                           std::span<const double> targets, const SeedSpec& seed) {
  if (targets.size() != frame.rows()) {
    throw ValidationError("target length does not match the frame row count");
  }
  return detail::fit_values(spec, frame.feature_names(), frame.values(), targets, false, seed);
}

std::vector<double> predict_proba(const FittedOutcomeModel& model, const PopulationFrame& frame) {
  std::vector<double> out = model.predict(frame);
  for (double& v : out) v = std::clamp(v, 0.0, 1.0);
  return out;
}

std::pair<std::vector<double>, std::vector<double>> cross_fit_predictions(
    const OutcomeLearnerSpec& spec, const PopulationFrame& frame, std::size_t folds, bool per_arm,
    const SeedSpec& seed) {
  CrossFitResult result = cross_fit(spec, frame, folds, per_arm, seed);
  return {std::move(result.mu0), std::move(result.mu1)};
}

CrossFitResult cross_fit(const OutcomeLearnerSpec& spec, const PopulationFrame& frame,
                         std::size_t folds, bool per_arm, const SeedSpec& seed) {
  spec.validate();
  const std::size_t n = frame.rows();
  if (folds < 2) throw ValidationError("cross-fitting requires at least 2 folds");
  if (folds > n) throw ValidationError("more folds than rows");
  if (!frame.has_outcome()) throw ValidationError("cross-fitting requires an outcome column");
  if (per_arm && !frame.has_treatment()) {
    throw ValidationError("per-arm cross-fitting requires a treatment column");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed.stream("folds"));
  rng.shuffle(order);

  // Fold f takes the f-th contiguous chunk of the shuffled order; the first
  // n % folds chunks absorb the remainder.
  std::vector<std::size_t> fold_of(n);
  std::size_t at = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    std::size_t size = n / folds + (f < n % folds ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) fold_of[order[at++]] = f;
  }

  const std::size_t d = frame.cols();
  const auto outcome = frame.outcome();
  CrossFitResult result;
  result.mu0.assign(n, 0.0);
  result.mu1.assign(n, 0.0);
  result.fold_of = fold_of;
  auto& mu0 = result.mu0;
  auto& mu1 = result.mu1;

  auto gather = [&](const std::vector<std::size_t>& rows, std::vector<double>& values,
                    std::vector<double>& targets) {
    values.clear();
    targets.clear();
    values.reserve(rows.size() * d);
    targets.reserve(rows.size());
    for (std::size_t r : rows) {
      const auto row = frame.row(r);
      values.insert(values.end(), row.begin(), row.end());
      targets.push_back(outcome[r]);
    }
  };

  std::vector<double> values;
  std::vector<double> targets;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> fold_rows;
    std::vector<std::size_t> train0;
    std::vector<std::size_t> train1;
    for (std::size_t i = 0; i < n; ++i) {
      if (fold_of[i] == f) {
        fold_rows.push_back(i);
      } else if (per_arm) {
        (frame.treatment()[i] ? train1 : train0).push_back(i);
      } else {
        train0.push_back(i);
      }
    }

    const SeedSpec fold_seed = seed.stream("fold-" + std::to_string(f));
    auto fit_subset = [&](const std::vector<std::size_t>& rows, const char* arm,
                          const SeedSpec& arm_seed) {
      if (rows.empty()) {
        throw ValidationError("fold " + std::to_string(f) + " training complement has no " + arm +
                              " rows");
      }
      gather(rows, values, targets);
      try {
        return detail::fit_values(spec, frame.feature_names(), values, targets, true, arm_seed);
      } catch (const ValidationError& e) {
        throw ValidationError("fold " + std::to_string(f) + ": " + e.what());
      }
    };

    if (per_arm) {
      const FittedModel model0 = fit_subset(train0, "control", fold_seed.stream("mu0"));
      const FittedModel model1 = fit_subset(train1, "treated", fold_seed.stream("mu1"));
      for (std::size_t r : fold_rows) {
        mu0[r] = std::clamp(model0.predict_row(frame.row(r)), 0.0, 1.0);
        mu1[r] = std::clamp(model1.predict_row(frame.row(r)), 0.0, 1.0);
      }
    } else {
      const FittedModel model = fit_subset(train0, "training", fold_seed.stream("mu"));
      for (std::size_t r : fold_rows) {
        const double value = std::clamp(model.predict_row(frame.row(r)), 0.0, 1.0);
        mu0[r] = value;
        mu1[r] = value;
      }
    }
  }
  return result;
}

}  // namespace hsd
