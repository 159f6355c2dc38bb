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

#include <vector>

#include "hsd/frame.hpp"
#include "hsd/learners.hpp"
#include "hsd/rng.hpp"

namespace hsd {

enum class MetaKind { kT, kS, kX };

// Fitted CATE model. Immutable; predictions are a pure per-row map, so a
// model can be shared across threads. For T and S built on probability
// learners every prediction lies in [-1, 1].
class UpliftModel {
 public:
  // Component layout by kind: T = {mu1, mu0}; S = {joint}; X = {mu1, mu0,
  // tau1, tau0}. `treatment_p` is only meaningful for X.
  UpliftModel(MetaKind kind, std::vector<FittedModel> components, double treatment_p = 0.0);

  MetaKind meta_kind() const { return kind_; }

  // Blend weight p of the X-learner; throws for other kinds.
  double treatment_proportion() const;

  // Feature schema the model scores, excluding the synthetic treatment
  // column the S-learner trains with.
  const std::vector<std::string>& feature_names() const { return feature_names_; }

  std::vector<double> predict(const PopulationFrame& features) const;

  const FittedModel& mu_treated() const;
  const FittedModel& mu_control() const;
  const FittedModel& joint_model() const;
  const FittedModel& stage_two_treated() const;
  const FittedModel& stage_two_control() const;
  const std::vector<FittedModel>& components() const { return components_; }

 private:
  MetaKind kind_;
  std::vector<FittedModel> components_;
  double treatment_p_ = 0.0;
  std::vector<std::string> feature_names_;
};

// mu1 on treated rows, mu0 on control rows; score = mu1(x) - mu0(x).
UpliftModel fit_t_learner(const PopulationFrame& frame, const OutcomeLearnerSpec& spec,
                          const SeedSpec& seed);

// One model over features plus the treatment indicator; score =
// mu(x, 1) - mu(x, 0).
UpliftModel fit_s_learner(const PopulationFrame& frame, const OutcomeLearnerSpec& spec,
                          const SeedSpec& seed);

// Stage-1 arm models, stage-2 squared-error regressions on the
// transformed outcomes y - mu0(x) (treated) and mu1(x) - y (control);
// score = p * tau1(x) + (1 - p) * tau0(x).
UpliftModel fit_x_learner(const PopulationFrame& frame, const OutcomeLearnerSpec& spec, double p,
                          const SeedSpec& seed);

std::vector<double> predict_cate(const UpliftModel& model, const PopulationFrame& features);

}  // namespace hsd
