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

#include "hsd/uplift.hpp"

#include <cstddef>
#include <string>
#include <utility>

#include "hsd/errors.hpp"

namespace hsd {
namespace {

constexpr const char* kTreatmentFeature = "w";

std::size_t expected_components(MetaKind kind) {
  switch (kind) {
    case MetaKind::kT:
      return 2;
    case MetaKind::kS:
      return 1;
    case MetaKind::kX:
      return 4;
  }
  throw ValidationError("unknown meta-learner kind");
}

void require_responses(const PopulationFrame& frame, const char* learner) {
  if (!frame.has_outcome() || !frame.has_treatment()) {
    throw ValidationError(std::string(learner) +
                          " requires a cohort with outcome and treatment columns");
  }
}

// Row indices of each arm; either may come back empty.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> arm_indices(
    const PopulationFrame& frame) {
  std::vector<std::size_t> treated;
  std::vector<std::size_t> control;
  const auto treatment = frame.treatment();
  for (std::size_t i = 0; i < frame.rows(); ++i) {
    (treatment[i] ? treated : control).push_back(i);
  }
  return {std::move(treated), std::move(control)};
}

void require_both_arms(const std::vector<std::size_t>& treated,
                       const std::vector<std::size_t>& control, const char* learner) {
  if (treated.empty()) {
    throw ValidationError(std::string(learner) + " requires both arms; no treated rows");
  }
  if (control.empty()) {
    throw ValidationError(std::string(learner) + " requires both arms; no control rows");
  }
}

std::vector<double> outcome_values(const PopulationFrame& frame) {
  const auto outcome = frame.outcome();
  return {outcome.begin(), outcome.end()};
}

}  // namespace

UpliftModel::UpliftModel(MetaKind kind, std::vector<FittedModel> components, double treatment_p)
    : kind_(kind), components_(std::move(components)), treatment_p_(treatment_p) {
  if (components_.size() != expected_components(kind)) {
    throw ValidationError("meta-learner component count mismatch: expected " +
                          std::to_string(expected_components(kind)) + ", got " +
                          std::to_string(components_.size()));
  }
  if (kind_ == MetaKind::kX && !(treatment_p_ >= 0.0 && treatment_p_ <= 1.0)) {
    throw ValidationError("x-learner treatment proportion must lie in [0, 1], got " +
                          std::to_string(treatment_p_));
  }
  feature_names_ = components_.front().feature_names();
  if (kind_ == MetaKind::kS) {
    if (feature_names_.empty() || feature_names_.back() != kTreatmentFeature) {
      throw ValidationError("s-learner component must end with the synthetic treatment feature");
    }
    feature_names_.pop_back();
  }
}

double UpliftModel::treatment_proportion() const {
  if (kind_ != MetaKind::kX) {
    throw ValidationError("treatment proportion is only defined for the x-learner");
  }
  return treatment_p_;
}

const FittedModel& UpliftModel::mu_treated() const {
  if (kind_ == MetaKind::kS) throw ValidationError("s-learner has no per-arm outcome models");
  return components_[0];
}

const FittedModel& UpliftModel::mu_control() const {
  if (kind_ == MetaKind::kS) throw ValidationError("s-learner has no per-arm outcome models");
  return components_[1];
}

const FittedModel& UpliftModel::joint_model() const {
  if (kind_ != MetaKind::kS) throw ValidationError("only the s-learner has a joint model");
  return components_[0];
}

const FittedModel& UpliftModel::stage_two_treated() const {
  if (kind_ != MetaKind::kX) throw ValidationError("only the x-learner has stage-2 models");
  return components_[2];
}

const FittedModel& UpliftModel::stage_two_control() const {
  if (kind_ != MetaKind::kX) throw ValidationError("only the x-learner has stage-2 models");
  return components_[3];
}

std::vector<double> UpliftModel::predict(const PopulationFrame& features) const {
  if (features.feature_names() != feature_names_) {
    throw ValidationError("feature schema does not match the fitted uplift model");
  }
  const std::size_t n = features.rows();
  std::vector<double> scores(n, 0.0);
  switch (kind_) {
    case MetaKind::kT: {
      const auto treated = components_[0].predict(features);
      const auto control = components_[1].predict(features);
      for (std::size_t i = 0; i < n; ++i) scores[i] = treated[i] - control[i];
      break;
    }
    case MetaKind::kS: {
      const std::size_t d = feature_names_.size();
      std::vector<double> row(d + 1, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const auto source = features.row(i);
        for (std::size_t j = 0; j < d; ++j) row[j] = source[j];
        row[d] = 1.0;
        const double treated = components_[0].predict_row(row);
        row[d] = 0.0;
        scores[i] = treated - components_[0].predict_row(row);
      }
      break;
    }
    case MetaKind::kX: {
      const auto tau1 = components_[2].predict(features);
      const auto tau0 = components_[3].predict(features);
      for (std::size_t i = 0; i < n; ++i) {
        scores[i] = treatment_p_ * tau1[i] + (1.0 - treatment_p_) * tau0[i];
      }
      break;
    }
  }
  return scores;
}

UpliftModel fit_t_learner(const PopulationFrame& frame, const OutcomeLearnerSpec& spec,
                          const SeedSpec& seed) {
  require_responses(frame, "t-learner");
  const auto [treated, control] = arm_indices(frame);
  require_both_arms(treated, control, "t-learner");

  std::vector<FittedModel> components;
  components.push_back(fit(spec, frame.take_rows(treated), seed.stream("mu1")));
  components.push_back(fit(spec, frame.take_rows(control), seed.stream("mu0")));
  return UpliftModel(MetaKind::kT, std::move(components));
}

UpliftModel fit_s_learner(const PopulationFrame& frame, const OutcomeLearnerSpec& spec,
                          const SeedSpec& seed) {
  require_responses(frame, "s-learner");
  for (const auto& name : frame.feature_names()) {
    if (name == kTreatmentFeature) {
      throw ValidationError("feature name 'w' collides with the synthetic treatment column");
    }
  }

  const std::size_t n = frame.rows();
  const std::size_t d = frame.cols();
  std::vector<std::string> names = frame.feature_names();
  names.push_back(kTreatmentFeature);
  std::vector<double> values;
  values.reserve(n * (d + 1));
  const auto treatment = frame.treatment();
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = frame.row(i);
    values.insert(values.end(), row.begin(), row.end());
    values.push_back(static_cast<double>(treatment[i]));
  }
  const std::vector<std::uint8_t> outcome(frame.outcome().begin(), frame.outcome().end());
  const PopulationFrame augmented(std::move(names), std::move(values), outcome);

  std::vector<FittedModel> components;
  components.push_back(fit(spec, augmented, seed.stream("joint")));
  return UpliftModel(MetaKind::kS, std::move(components));
}

UpliftModel fit_x_learner(const PopulationFrame& frame, const OutcomeLearnerSpec& spec, double p,
                          const SeedSpec& seed) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ValidationError("x-learner treatment proportion must lie in [0, 1], got " +
                          std::to_string(p));
  }
  require_responses(frame, "x-learner");
  const auto [treated, control] = arm_indices(frame);
  require_both_arms(treated, control, "x-learner");

  const auto treated_frame = frame.take_rows(treated);
  const auto control_frame = frame.take_rows(control);
  auto mu1 = fit(spec, treated_frame, seed.stream("mu1"));
  auto mu0 = fit(spec, control_frame, seed.stream("mu0"));

  const auto mu0_on_treated = mu0.predict(treated_frame);
  const auto mu1_on_control = mu1.predict(control_frame);
  std::vector<double> pseudo_treated = outcome_values(treated_frame);
  for (std::size_t i = 0; i < pseudo_treated.size(); ++i) pseudo_treated[i] -= mu0_on_treated[i];
  std::vector<double> pseudo_control = outcome_values(control_frame);
  for (std::size_t i = 0; i < pseudo_control.size(); ++i) {
    pseudo_control[i] = mu1_on_control[i] - pseudo_control[i];
  }

  std::vector<FittedModel> components;
  components.push_back(std::move(mu1));
  components.push_back(std::move(mu0));
  components.push_back(
      fit_regression(spec, treated_frame, pseudo_treated, seed.stream("tau1")));
  components.push_back(
      fit_regression(spec, control_frame, pseudo_control, seed.stream("tau0")));
  return UpliftModel(MetaKind::kX, std::move(components), p);
}

std::vector<double> predict_cate(const UpliftModel& model, const PopulationFrame& features) {
  return model.predict(features);
}

}  // namespace hsd
