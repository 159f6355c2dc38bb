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
#include <span>
#include <utility>
#include <vector>

#include "hsd/design.hpp"
#include "hsd/estimation.hpp"
#include "hsd/evaluation.hpp"
#include "hsd/learners.hpp"
#include "hsd/rng.hpp"
#include "hsd/serialize.hpp"
#include "hsd/uplift.hpp"

namespace hsd {

inline OutcomeLearnerSpec default_forest_spec() {
  OutcomeLearnerSpec spec;
  spec.kind = LearnerKind::kRandomForest;
  return spec;
}

// One Monte Carlo experiment over a synthetic scenario. The training
// pipeline compares uplift models fitted on uniform versus HS cohorts by
// their oracle AUQ on a shared test frame; the evaluation pipeline fixes
// one uplift model and compares estimator variances across repeated test
// cohorts.
struct ExperimentConfig {
  enum class Pipeline { kTraining, kEvaluation };

  Pipeline pipeline = Pipeline::kTraining;
  int scenario = 1;
  std::size_t n_features = 10;
  double treatment_p = 0.5;

  std::size_t repetitions = 1000;
  std::size_t pre_experiment_n = 100000;
  std::size_t cohort_n = 20000;
  // Training: size of the fixed test frame. Evaluation: size of the fresh
  // per-repetition population chunk the test cohorts are drawn from.
  std::size_t test_n = 250000;
  // Training-pipeline per-repetition population chunk; 0 picks 5*cohort_n.
  std::size_t chunk_n = 0;

  bool adjust_plan = true;
  OutcomeLearnerSpec design_learner = default_forest_spec();

  // Training pipeline: every meta/base combination is trained on both
  // cohorts each repetition.
  std::vector<MetaKind> metas = {MetaKind::kT};
  std::vector<OutcomeLearnerSpec> base_learners = {default_forest_spec()};

  // Evaluation pipeline: the single frozen scoring model.
  MetaKind fixed_meta = MetaKind::kT;
  OutcomeLearnerSpec fixed_learner = default_forest_spec();
  std::vector<AteMethod> estimators = {AteMethod::kDim, AteMethod::kOracleCovAdj, AteMethod::kHs,
                                       AteMethod::kHsCovAdj};
  std::vector<QiniCorrection> corrections = {QiniCorrection::kNone, QiniCorrection::kCovadj,
                                             QiniCorrection::kHs, QiniCorrection::kHsCovadj};
  std::size_t qini_t_grid = 10;

  std::size_t workers = 1;
  SeedSpec seed;

  std::size_t resolved_chunk_n() const { return chunk_n == 0 ? 5 * cohort_n : chunk_n; }
  void validate() const;
};

struct TrainingComboResult {
  MetaKind meta = MetaKind::kT;
  LearnerKind base = LearnerKind::kGlm;
  double mean_auq_uniform = 0.0;
  double mean_auq_hs = 0.0;
  double mean_ratio_percent = 0.0;  // mean over reps of AUQ_hs/AUQ_uniform * 100
  double gain_percent = 0.0;        // mean_ratio_percent - 100
  double gain_ci_low_percent = 0.0;
  double gain_ci_high_percent = 0.0;
};

struct AteMethodResult {
  AteMethod method = AteMethod::kDim;
  double mean = 0.0;
  double empirical_variance = 0.0;      // between-repetition sample variance
  double mean_analytic_variance = 0.0;  // mean of per-repetition variance_hat
  double reduction_vs_dim_percent = 0.0;
};

struct QiniModeResult {
  QiniCorrection correction = QiniCorrection::kNone;
  std::vector<double> grid;
  std::vector<double> mean_q;
  std::vector<double> variance_q;
  std::vector<double> reduction_vs_none_percent;
  double mean_auq = 0.0;
  double variance_auq = 0.0;
  double auq_reduction_vs_none_percent = 0.0;
};

struct ExperimentReport {
  ExperimentConfig config;
  SamplingPlan plan;
  std::size_t repetitions_requested = 0;
  std::size_t repetitions_used = 0;
  std::size_t repetitions_failed = 0;
  std::vector<TrainingComboResult> combos;  // training pipeline
  std::vector<AteMethodResult> ate;         // evaluation pipeline
  std::vector<QiniModeResult> qini;         // evaluation pipeline
  // Wall clock for operators; deliberately excluded from the JSON report so
  // identical (config, seed) runs stay byte-identical.
  double runtime_seconds = 0.0;
};

// mean +- z_{0.975} * sd / sqrt(n) with the population (1/n) standard
// deviation. Only the 0.95 level is supported.
std::pair<double, double> confidence_interval(std::span<const double> samples,
                                              double level = 0.95);

ExperimentReport run_training_experiment(const ExperimentConfig& config);
ExperimentReport run_evaluation_experiment(const ExperimentConfig& config);
ExperimentReport run_experiment(const ExperimentConfig& config);

Json to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const Json& json);
Json to_json(const ExperimentReport& report);

}  // namespace hsd
