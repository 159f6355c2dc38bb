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

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include <doctest.h>

#include "test_util.hpp"

#include "hsd/design.hpp"
#include "hsd/errors.hpp"
#include "hsd/estimation.hpp"
#include "hsd/evaluation.hpp"
#include "hsd/learners.hpp"
#include "hsd/serialize.hpp"
#include "hsd/simulation.hpp"
#include "hsd/uplift.hpp"

namespace {

hsd::ScenarioDraw small_draw(int scenario, std::size_t n, std::uint64_t seed) {
  hsd::ScenarioSpec spec;
  spec.scenario = scenario;
  spec.n_rows = n;
  spec.seed = hsd::SeedSpec{seed, "serialize"};
  return hsd::generate_scenario(spec);
}

std::filesystem::path temp_path(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_SUITE("serialize") {

TEST_CASE("sampling plan survives a json round trip bit for bit") {
  const auto draw = small_draw(2, 4000, 70);
  const auto curve = hsd::design_curve(draw.truth.mu0);
  hsd::PlanOptions options;
  options.target_n = 500;
  const auto plan = hsd::select_plan(curve, draw.truth.mu0, options);

  const auto restored = hsd::plan_from_json(hsd::to_json(plan));
  CHECK(restored.p_h == plan.p_h);
  CHECK(restored.threshold == plan.threshold);
  CHECK(restored.q_v_hat == plan.q_v_hat);
  CHECK(restored.r_h == plan.r_h);
  CHECK(restored.predicted_ratio == plan.predicted_ratio);
  CHECK(restored.p_h_adjusted == plan.p_h_adjusted);
  CHECK(restored.threshold_adjusted == plan.threshold_adjusted);
  CHECK(restored.q_v_hat_adjusted == plan.q_v_hat_adjusted);
  CHECK(restored.r_h_adjusted == plan.r_h_adjusted);
  CHECK(restored.use_adjusted == plan.use_adjusted);
  CHECK(restored.treatment_proportion == plan.treatment_proportion);
  CHECK(restored.target_n == plan.target_n);
  CHECK(restored.population_share_h == plan.population_share_h);
  CHECK(restored.ratio_clamped == plan.ratio_clamped);
  CHECK(restored.tie_flagged == plan.tie_flagged);

  CHECK(hsd::dump_json(hsd::to_json(restored)) == hsd::dump_json(hsd::to_json(plan)));
}

TEST_CASE("plan json with a missing field is rejected") {
  auto json = hsd::to_json(hsd::SamplingPlan::uniform(100, 0.5));
  json.erase("r_h");
  CHECK_THROWS_AS(hsd::plan_from_json(json), hsd::ValidationError);
}

TEST_CASE("fitted models round trip with bitwise-equal predictions") {
  const auto draw = small_draw(1, 600, 71);

  for (const auto kind : {hsd::LearnerKind::kGlm, hsd::LearnerKind::kRandomForest}) {
    hsd::OutcomeLearnerSpec spec;
    spec.kind = kind;
    spec.forest.tree_count = 20;
    const auto model = hsd::fit(spec, draw.frame, hsd::SeedSpec{71, "fit"});

    const auto restored = hsd::fitted_model_from_json(hsd::to_json(model));
    CHECK(restored.probability() == model.probability());
    CHECK(restored.feature_names() == model.feature_names());
    CHECK(restored.predict(draw.frame) == model.predict(draw.frame));
  }
}

TEST_CASE("uplift models round trip across meta kinds") {
  const auto draw = small_draw(2, 800, 72);
  hsd::OutcomeLearnerSpec spec;
  spec.kind = hsd::LearnerKind::kGlm;

  const auto t = hsd::fit_t_learner(draw.frame, spec, hsd::SeedSpec{72, "t"});
  const auto s = hsd::fit_s_learner(draw.frame, spec, hsd::SeedSpec{72, "s"});
  const auto x = hsd::fit_x_learner(draw.frame, spec, 0.4, hsd::SeedSpec{72, "x"});

  for (const auto* model : {&t, &s, &x}) {
    const auto restored = hsd::uplift_model_from_json(hsd::to_json(*model));
    CHECK(restored.meta_kind() == model->meta_kind());
    CHECK(restored.feature_names() == model->feature_names());
    CHECK(restored.predict(draw.frame) == model->predict(draw.frame));
  }
  const auto x_restored = hsd::uplift_model_from_json(hsd::to_json(x));
  CHECK(x_restored.treatment_proportion() == 0.4);
}

TEST_CASE("enum strings round trip and unknown names are rejected") {
  CHECK(hsd::learner_kind_from_string(hsd::to_string(hsd::LearnerKind::kRandomForest)) ==
        hsd::LearnerKind::kRandomForest);
  CHECK(hsd::meta_kind_from_string(hsd::to_string(hsd::MetaKind::kX)) == hsd::MetaKind::kX);
  CHECK_THROWS_AS(hsd::learner_kind_from_string("boost"), hsd::ValidationError);
  CHECK_THROWS_AS(hsd::meta_kind_from_string("r"), hsd::ValidationError);
}

TEST_CASE("report-side objects serialize with stable shapes") {
  const auto draw = small_draw(1, 500, 73);
  const auto estimate = hsd::diff_in_means(draw.frame.outcome(), draw.frame.treatment());
  const auto ate_json = hsd::to_json(estimate);
  CHECK(ate_json.at("method") == "dim");
  CHECK(ate_json.at("value").get<double>() == estimate.value);
  CHECK(ate_json.at("n").get<std::size_t>() == draw.frame.rows());

  // A curve with a fabricated missing point serializes NaN as null.
  auto curve = hsd::qini_curve(draw.frame, draw.truth.tau, 5);
  curve.ate_t[0] = std::nan("");
  curve.q_values[0] = std::nan("");
  curve.variance_hat[0] = std::nan("");
  curve.missing[0] = 1;
  const auto curve_json = hsd::to_json(curve);
  CHECK(curve_json.at("correction") == "none");
  CHECK(curve_json.at("points").size() == 5);
  CHECK(curve_json.at("points").at(0).at("ate_t").is_null());
  CHECK(curve_json.at("points").at(0).at("missing").get<bool>());
  CHECK(curve_json.at("points").at(4).at("ate_t").get<double>() == curve.ate_t[4]);

  const auto auq = hsd::auq_oracle(draw.truth.tau, draw.truth.tau);
  const auto auq_json = hsd::to_json(auq);
  CHECK(auq_json.at("estimator") == "oracle_cdf");
  CHECK(auq_json.at("value").get<double>() == auq.value);
}

TEST_CASE("scenario and robustness configs parse with defaults and strict keys") {
  const auto spec = hsd::scenario_spec_from_json(
      hsd::Json{{"scenario", 3}, {"n_rows", 1234}, {"seed", {{"master_seed", 9}}}});
  CHECK(spec.scenario == 3);
  CHECK(spec.n_rows == 1234);
  CHECK(spec.n_features == 10);
  CHECK(spec.treatment_p == 0.5);
  CHECK(spec.seed.master_seed == 9);
  CHECK(spec.seed.stream_label.empty());

  CHECK_THROWS_AS(hsd::scenario_spec_from_json(hsd::Json{{"scenari", 3}}),
                  hsd::ValidationError);
  CHECK_THROWS_AS(hsd::scenario_spec_from_json(hsd::Json{{"scenario", "three"}}),
                  hsd::ValidationError);

  const auto config = hsd::robustness_config_from_json(hsd::Json{
      {"alpha_mode", "optimal"}, {"scenario", 2}, {"n_rows", 5000},
      {"nu_grid", {1.0, 10.0}}, {"baseline", "proportional"}});
  CHECK(config.alpha_mode == hsd::RobustnessConfig::AlphaMode::kOptimal);
  CHECK(config.baseline == hsd::RobustnessConfig::Baseline::kProportional);
  CHECK(config.nu_grid == std::vector<double>{1.0, 10.0});
  CHECK(config.scenario == 2);

  const auto learner = hsd::learner_spec_from_json(hsd::Json{
      {"kind", "random_forest"}, {"forest", {{"tree_count", 10}, {"max_depth", 3}}}});
  CHECK(learner.kind == hsd::LearnerKind::kRandomForest);
  CHECK(learner.forest.tree_count == 10);
  CHECK(learner.forest.max_depth == 3);
  CHECK(learner.forest.min_leaf == 25);
}

TEST_CASE("json files round trip and malformed input raises data errors") {
  const auto path = temp_path("hsd_serialize_roundtrip.json");
  const hsd::Json payload{{"a", 1}, {"b", {{"c", 2.5}}}};
  hsd::write_json(payload, path.string());
  CHECK(hsd::load_json(path.string()) == payload);
  std::filesystem::remove(path);

  const auto bad = temp_path("hsd_serialize_bad.json");
  {
    std::ofstream out(bad);
    out << "{ not json";
  }
  CHECK_THROWS_AS(hsd::load_json(bad.string()), hsd::DataError);
  std::filesystem::remove(bad);

  CHECK_THROWS_AS(hsd::load_json("/nonexistent/hsd.json"), hsd::DataError);
}

TEST_CASE("dumps are deterministic across separately built equal objects") {
  const auto draw = small_draw(1, 500, 74);
  hsd::OutcomeLearnerSpec spec;
  spec.kind = hsd::LearnerKind::kRandomForest;
  spec.forest.tree_count = 8;

  const auto a = hsd::fit(spec, draw.frame, hsd::SeedSpec{74, "fit"});
  const auto b = hsd::fit(spec, draw.frame, hsd::SeedSpec{74, "fit"});
  CHECK(hsd::dump_json(hsd::to_json(a)) == hsd::dump_json(hsd::to_json(b)));
}

}  // TEST_SUITE
