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
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hsd/frame.hpp"
#include "hsd/rng.hpp"

namespace hsd {

enum class LearnerKind { kGlm, kRandomForest };

struct GlmParams {
  double l2_penalty = 1e-6;
  double tolerance = 1e-8;
  std::size_t max_iterations = 100;
};

struct ForestParams {
  std::size_t tree_count = 200;
  std::size_t max_depth = 8;
  std::size_t min_leaf = 25;
  // Fraction of features tried per tree; <= 0 selects sqrt(d)/d.
  double feature_fraction = 0.0;
  // Bootstrap size as a fraction of n, drawn with replacement.
  double row_fraction = 1.0;
  std::size_t max_bins = 64;
};

struct OutcomeLearnerSpec {
  LearnerKind kind = LearnerKind::kGlm;
  GlmParams glm;
  ForestParams forest;

  void validate() const;
};

// Linear model state shared by the logistic (probability) and ridge
// (regression) fits. Weights are on the raw feature scale.
struct GlmState {
  std::vector<double> weights;
  double intercept = 0.0;
  bool logistic = true;
  bool converged = true;
  std::size_t iterations = 0;
};

// Flat binary tree; feature < 0 marks a leaf carrying `value`. Split sends
// rows with x[feature] <= threshold to `left`.
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;
};

struct Tree {
  std::vector<TreeNode> nodes;

  double predict_row(std::span<const double> row) const;
};

struct ForestState {
  std::vector<Tree> trees;
  // Degenerate training data collapses the forest to this constant.
  bool constant_model = false;
  double constant = 0.0;
};

// Fitted model over a fixed feature schema. Probability models clamp
// predictions to [0,1]; regression models return raw values.
class FittedModel {
 public:
  FittedModel(OutcomeLearnerSpec spec, std::vector<std::string> feature_names, GlmState state,
              bool probability);
  FittedModel(OutcomeLearnerSpec spec, std::vector<std::string> feature_names, ForestState state,
              bool probability);

  std::vector<double> predict(const PopulationFrame& frame) const;
  double predict_row(std::span<const double> row) const;

  const OutcomeLearnerSpec& spec() const { return spec_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  bool probability() const { return probability_; }

  // Constant-predictor fallback taken because training outcomes were all
  // equal (forest path only; glm raises instead).
  bool degenerate() const;

  const GlmState* glm_state() const;
  const ForestState* forest_state() const;

 private:
  void check_schema(const PopulationFrame& frame) const;

  OutcomeLearnerSpec spec_;
  std::vector<std::string> feature_names_;
  bool probability_ = true;
  std::shared_ptr<const GlmState> glm_;
  std::shared_ptr<const ForestState> forest_;
};

using FittedOutcomeModel = FittedModel;

// Binary-outcome probability fit. The outcome vector must hold 0/1; glm
// requires both classes present.
FittedOutcomeModel fit(const OutcomeLearnerSpec& spec, const PopulationFrame& frame,
                       std::span<const std::uint8_t> outcome, const SeedSpec& seed);

// Convenience overload using the frame's own outcome column.
FittedOutcomeModel fit(const OutcomeLearnerSpec& spec, const PopulationFrame& frame,
                       const SeedSpec& seed);

// Squared-error fit of continuous targets: variance-split trees or ridge
// least squares, matching the spec's learner kind.
FittedModel fit_regression(const OutcomeLearnerSpec& spec, const PopulationFrame& frame,
                           std::span<const double> targets, const SeedSpec& seed);

std::vector<double> predict_proba(const FittedOutcomeModel& model, const PopulationFrame& frame);

struct CrossFitResult {
  std::vector<double> mu0;
  std::vector<double> mu1;
  std::vector<std::size_t> fold_of;  // fold index per row
};

// Out-of-fold predictions: for each fold, models train on the complement
// and predict the fold. With per_arm set, separate models fit on control
// and treated rows give (mu0, mu1); otherwise a single pooled model fills
// both vectors identically.
CrossFitResult cross_fit(const OutcomeLearnerSpec& spec, const PopulationFrame& frame,
                         std::size_t folds, bool per_arm, const SeedSpec& seed);

std::pair<std::vector<double>, std::vector<double>> cross_fit_predictions(
    const OutcomeLearnerSpec& spec, const PopulationFrame& frame, std::size_t folds, bool per_arm,
    const SeedSpec& seed);

namespace detail {

// Shared by fit paths; exposed for the uplift module which fits on
// explicit row subsets.
FittedModel fit_values(const OutcomeLearnerSpec& spec, const std::vector<std::string>& names,
                       std::span<const double> values_row_major, std::span<const double> targets,
                       bool probability, const SeedSpec& seed);

GlmState fit_glm(const GlmParams& params, std::span<const double> values_row_major,
                 std::size_t n_features, std::span<const double> targets, bool logistic);

ForestState fit_forest(const ForestParams& params, std::span<const double> values_row_major,
                       std::size_t n_features, std::span<const double> targets,
                       const SeedSpec& seed);

}  // namespace detail

}  // namespace hsd
