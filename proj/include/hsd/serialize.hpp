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

#include <string>

#include <json.hpp>

#include "hsd/design.hpp"
#include "hsd/estimation.hpp"
#include "hsd/evaluation.hpp"
#include "hsd/learners.hpp"
#include "hsd/rng.hpp"
#include "hsd/simulation.hpp"
#include "hsd/uplift.hpp"

namespace hsd {

// All JSON in the toolkit is ordered: key order is part of the byte-stable
// report contract. Doubles render as shortest round-trip decimals, so equal
// values always produce equal bytes; NaN renders as null (missing points).
using Json = nlohmann::ordered_json;

std::string to_string(LearnerKind kind);
LearnerKind learner_kind_from_string(const std::string& name);
std::string to_string(MetaKind kind);
MetaKind meta_kind_from_string(const std::string& name);
AteMethod ate_method_from_string(const std::string& name);
QiniCorrection qini_correction_from_string(const std::string& name);

Json to_json(const SeedSpec& seed);
SeedSpec seed_from_json(const Json& json);

Json to_json(const DesignPoint& point);
Json to_json(const SamplingPlan& plan);
SamplingPlan plan_from_json(const Json& json);

Json to_json(const AteEstimate& estimate);
Json to_json(const QiniCurve& curve);
Json to_json(const AuqResult& result);
Json to_json(const RobustnessRow& row);

Json to_json(const OutcomeLearnerSpec& spec);
OutcomeLearnerSpec learner_spec_from_json(const Json& json);

Json to_json(const FittedModel& model);
FittedModel fitted_model_from_json(const Json& json);
Json to_json(const UpliftModel& model);
UpliftModel uplift_model_from_json(const Json& json);

// Config ingestion: unknown keys are rejected so typos cannot silently fall
// back to defaults.
ScenarioSpec scenario_spec_from_json(const Json& json);
RobustnessConfig robustness_config_from_json(const Json& json);

// Canonical text form: 2-space indent plus trailing newline.
std::string dump_json(const Json& json);

Json load_json(const std::string& path);
void write_json(const Json& json, const std::string& path);

}  // namespace hsd
