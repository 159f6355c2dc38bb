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
#include <cstddef>
#include <vector>

#include <doctest.h>

#include "test_util.hpp"

#include "hsd/errors.hpp"
#include "hsd/harness.hpp"
#include "hsd/rng.hpp"
#include "hsd/serialize.hpp"

namespace {

hsd::OutcomeLearnerSpec glm_spec() {
  hsd::OutcomeLearnerSpec spec;
  spec.kind = hsd::LearnerKind::kGlm;
  return spec;
}

// Desk-scale all-glm config so smokes run in seconds.
hsd::ExperimentConfig smoke_config(hsd::ExperimentConfig::Pipeline pipeline) {
  hsd::ExperimentConfig config;
  config.pipeline = pipeline;
  config.scenario = 1;
  config.repetitions = pipeline == hsd::ExperimentConfig::Pipeline::kTraining ? 2 : 3;
  config.pre_experiment_n = 4000;
  config.cohort_n = 600;
  config.test_n = pipeline == hsd::ExperimentConfig::Pipeline::kTraining ? 4000 : 5000;
  config.chunk_n = 3000;
  config.design_learner = glm_spec();
  config.metas = {hsd::MetaKind::kT};
  config.base_learners = {glm_spec()};
  config.fixed_learner = glm_spec();
  config.qini_t_grid = 5;
  config.seed = hsd::SeedSpec{404, "harness"};
  return config;
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("confidence interval matches hand computations") {
    const std::vector<double> constant{5.0, 5.0, 5.0};
    const auto [c_lo, c_hi] = hsd::confidence_interval(constant);
    CHECK(c_lo == 5.0);
    CHECK(c_hi == 5.0);

    const std::vector<double> pair{0.0, 2.0};
    const auto [lo, hi] = hsd::confidence_interval(pair);
    const double half = 1.959963984540054 / std::sqrt(2.0);
    CHECK(hsd_test::near(lo, 1.0 - half, 1e-12));
    CHECK(hsd_test::near(hi, 1.0 + half, 1e-12));
  }

  TEST_CASE("confidence interval rejects degenerate input") {
    CHECK_THROWS_AS(hsd::confidence_interval(std::vector<double>{}), hsd::ValidationError);
    CHECK_THROWS_AS(hsd::confidence_interval(std::vector<double>{1.0}), hsd::ValidationError);
    CHECK_THROWS_AS(hsd::confidence_interval(std::vector<double>{1.0, 2.0}, 0.9),
                    hsd::ValidationError);
  }

  TEST_CASE("confidence interval covers the mean at the nominal rate") {
    hsd::Rng rng(hsd::SeedSpec{405, "coverage"}.derive());
    int covered = 0;
    const int meta_reps = 300;
    for (int m = 0; m < meta_reps; ++m) {
      std::vector<double> samples(200);
      for (double& s : samples) s = rng.normal();
      const auto [lo, hi] = hsd::confidence_interval(samples);
      if (lo <= 0.0 && 0.0 <= hi) ++covered;
    }
    const double rate = static_cast<double>(covered) / meta_reps;
    CHECK(rate > 0.90);
    CHECK(rate < 0.99);
  }

  TEST_CASE("config validation rejects malformed experiments") {
    auto config = smoke_config(hsd::ExperimentConfig::Pipeline::kEvaluation);
    CHECK_NOTHROW(config.validate());

    auto bad = config;
    bad.repetitions = 0;
    CHECK_THROWS_AS(bad.validate(), hsd::ValidationError);

    bad = config;
    bad.estimators = {hsd::AteMethod::kHs};  // no dim baseline
    CHECK_THROWS_AS(bad.validate(), hsd::ValidationError);

    bad = config;
    bad.estimators = {hsd::AteMethod::kDim, hsd::AteMethod::kCovAdj};
    CHECK_THROWS_AS(bad.validate(), hsd::ValidationError);

    bad = config;
    bad.corrections = {hsd::QiniCorrection::kHs};  // no uncorrected baseline
    CHECK_THROWS_AS(bad.validate(), hsd::ValidationError);

    bad = config;
    bad.pipeline = hsd::ExperimentConfig::Pipeline::kTraining;
    bad.metas = {};
    CHECK_THROWS_AS(bad.validate(), hsd::ValidationError);

    bad = config;
    bad.treatment_p = 1.0;
    CHECK_THROWS_AS(bad.validate(), hsd::ValidationError);

    bad = config;
    bad.test_n = bad.cohort_n - 1;
    CHECK_THROWS_AS(bad.validate(), hsd::ValidationError);
  }

  TEST_CASE("config json round trip applies defaults and rejects unknown keys") {
    const hsd::Json minimal{{"pipeline", "evaluation"}, {"seed", {{"master_seed", 7}}}};
    const auto config = hsd::experiment_config_from_json(minimal);
    CHECK(config.pipeline == hsd::ExperimentConfig::Pipeline::kEvaluation);
    CHECK(config.repetitions == 1000);
    CHECK(config.cohort_n == 20000);
    CHECK(config.test_n == 250000);
    CHECK(config.design_learner.kind == hsd::LearnerKind::kRandomForest);
    CHECK(config.estimators.size() == 4);
    CHECK(config.corrections.size() == 4);
    CHECK(config.seed.master_seed == 7);

    const auto echoed = hsd::experiment_config_from_json(hsd::to_json(config));
    CHECK(hsd::dump_json(hsd::to_json(echoed)) == hsd::dump_json(hsd::to_json(config)));

    CHECK_THROWS_AS(hsd::experiment_config_from_json(hsd::Json{{"pipelin", "training"}}),
                    hsd::ValidationError);
    CHECK_THROWS_AS(hsd::experiment_config_from_json(hsd::Json{{"metas", {"q"}}}),
                    hsd::ValidationError);
  }

  TEST_CASE("training smoke run produces a finite report") {
    auto config = smoke_config(hsd::ExperimentConfig::Pipeline::kTraining);
    config.metas = {hsd::MetaKind::kT, hsd::MetaKind::kX};
    const auto report = hsd::run_training_experiment(config);

    CHECK(report.repetitions_requested == 2);
    CHECK(report.repetitions_used == 2);
    CHECK(report.repetitions_failed == 0);
    REQUIRE(report.combos.size() == 2);
    CHECK(report.combos[0].meta == hsd::MetaKind::kT);
    CHECK(report.combos[1].meta == hsd::MetaKind::kX);
    for (const auto& combo : report.combos) {
      CHECK(combo.base == hsd::LearnerKind::kGlm);
      CHECK(std::isfinite(combo.mean_ratio_percent));
      CHECK(std::isfinite(combo.gain_ci_low_percent));
      CHECK(combo.gain_ci_low_percent <= combo.gain_percent);
      CHECK(combo.gain_percent <= combo.gain_ci_high_percent);
      CHECK(combo.mean_auq_uniform > 0.0);
      CHECK(combo.mean_auq_hs > 0.0);
      CHECK(hsd_test::near(combo.gain_percent, combo.mean_ratio_percent - 100.0, 1e-9));
    }
    CHECK(report.ate.empty());
    CHECK(report.plan.target_n == 600);
  }

  TEST_CASE("evaluation smoke run covers every estimator and correction") {
    const auto config = smoke_config(hsd::ExperimentConfig::Pipeline::kEvaluation);
    const auto report = hsd::run_evaluation_experiment(config);

    CHECK(report.repetitions_used == 3);
    REQUIRE(report.ate.size() == 4);
    CHECK(report.ate[0].method == hsd::AteMethod::kDim);
    CHECK(report.ate[0].reduction_vs_dim_percent == 0.0);
    for (const auto& entry : report.ate) {
      CHECK(std::isfinite(entry.mean));
      CHECK(entry.empirical_variance >= 0.0);
      CHECK(entry.mean_analytic_variance > 0.0);
    }
    REQUIRE(report.qini.size() == 4);
    CHECK(report.qini[0].correction == hsd::QiniCorrection::kNone);
    CHECK(report.qini[0].auq_reduction_vs_none_percent == 0.0);
    for (const auto& mode : report.qini) {
      REQUIRE(mode.grid.size() == 5);
      REQUIRE(mode.mean_q.size() == 5);
      REQUIRE(mode.variance_q.size() == 5);
      CHECK(std::isfinite(mode.mean_auq));
      CHECK(mode.variance_auq >= 0.0);
    }
    CHECK(report.combos.empty());
  }

  TEST_CASE("reports are byte identical across runs and worker counts") {
    auto config = smoke_config(hsd::ExperimentConfig::Pipeline::kEvaluation);
    const auto first = hsd::dump_json(hsd::to_json(hsd::run_experiment(config)));
    const auto second = hsd::dump_json(hsd::to_json(hsd::run_experiment(config)));
    CHECK(first == second);

    // The config echo legitimately records the worker count; every result
    // section must still be byte identical.
    config.workers = 2;
    auto threaded_json = hsd::to_json(hsd::run_experiment(config));
    auto first_json = hsd::Json::parse(first);
    threaded_json.erase("config");
    first_json.erase("config");
    CHECK(hsd::dump_json(threaded_json) == hsd::dump_json(first_json));

    auto training = smoke_config(hsd::ExperimentConfig::Pipeline::kTraining);
    const auto t_first = hsd::dump_json(hsd::to_json(hsd::run_experiment(training)));
    const auto t_second = hsd::dump_json(hsd::to_json(hsd::run_experiment(training)));
    CHECK(t_first == t_second);
  }

  TEST_CASE("reports fail loudly when repetitions collapse") {
    auto config = smoke_config(hsd::ExperimentConfig::Pipeline::kEvaluation);
    // One-row top sets always lack an arm, so every repetition fails.
    config.qini_t_grid = config.cohort_n;
    CHECK_THROWS_AS(hsd::run_evaluation_experiment(config), hsd::DataError);
  }
}
