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

#include "hsd/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "hsd/errors.hpp"
#include "hsd/parallel.hpp"
#include "hsd/sampling.hpp"
#include "hsd/simulation.hpp"

namespace hsd {
namespace {

constexpr double kZ975 = 1.959963984540054;

double mean_of(const std::vector<double>& xs) {
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

// n-1 divisor; callers guarantee xs.size() >= 2.
double sample_variance(const std::vector<double>& xs) {
  const double mean = mean_of(xs);
  double sum = 0.0;
  for (double x : xs) sum += (x - mean) * (x - mean);
  return sum / static_cast<double>(xs.size() - 1);
}

double reduction_percent(double variance, double baseline) {
  if (baseline == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (1.0 - variance / baseline) * 100.0;
}

Json finite_or_null(double value) {
  if (std::isnan(value)) return nullptr;
  return value;
}

ScenarioSpec scenario_spec(const ExperimentConfig& config, std::size_t n_rows, double treatment_p,
                           SeedSpec seed) {
  ScenarioSpec spec;
  spec.scenario = config.scenario;
  spec.n_rows = n_rows;
  spec.n_features = config.n_features;
  spec.treatment_p = treatment_p;
  spec.seed = std::move(seed);
  return spec;
}

struct DesignSetup {
  FittedOutcomeModel model;
  SamplingPlan plan;
};

// Pre-experiment phase shared by both pipelines: fit the outcome model on a
// pure-control draw, walk the design curve, pick the plan once.
DesignSetup design_setup(const ExperimentConfig& config) {
  const SeedSpec pre_seed = config.seed.stream("pre-experiment");
  const auto draw = generate_scenario(scenario_spec(config, config.pre_experiment_n, 0.0, pre_seed));
  auto model = fit(config.design_learner, draw.frame, pre_seed.stream("fit"));
  const auto predictions = model.predict(draw.frame);

  PlanOptions options;
  options.target_n = config.cohort_n;
  options.treatment_proportion = config.treatment_p;
  options.adjust = config.adjust_plan;
  SamplingPlan plan = select_plan(design_curve(predictions), predictions, options);
  plan.population_share_h = stratum_share(stratify(predictions, plan.effective_threshold()));
  return {std::move(model), plan};
}

struct DrawnCohort {
  Cohort cohort;
  PopulationFrame frame;
  SimulatedTruth truth;
};

DrawnCohort realize_cohort(const ScenarioPopulation& chunk, std::span<const std::uint8_t> labels,
                           const SamplingPlan& plan, double treatment_p, const SeedSpec& seed) {
  Cohort cohort = draw_cohort(chunk.frame, labels, plan, seed.stream("draw"));
  cohort = assign_treatment(std::move(cohort), treatment_p, seed.stream("assign"));
  SimulatedTruth truth = chunk.truth.take_rows(cohort.rows);
  auto outcome = simulate_outcomes(truth, cohort.treatment, seed.stream("outcome"));
  PopulationFrame frame = cohort_frame(chunk.frame, cohort, std::move(outcome));
  return {std::move(cohort), std::move(frame), std::move(truth)};
}

UpliftModel fit_meta(MetaKind meta, const PopulationFrame& frame, const OutcomeLearnerSpec& base,
                     double treatment_p, const SeedSpec& seed) {
  switch (meta) {
    case MetaKind::kT: return fit_t_learner(frame, base, seed);
    case MetaKind::kS: return fit_s_learner(frame, base, seed);
    case MetaKind::kX: return fit_x_learner(frame, base, treatment_p, seed);
  }
  throw ValidationError("unknown meta-learner kind");
}

// Dropped repetitions abort the report past this share.
constexpr double kMaxFailureShare = 0.01;

std::size_t count_used(std::size_t requested, std::size_t failed) {
  const std::size_t used = requested - failed;
  if (failed > 0 &&
      static_cast<double>(failed) > kMaxFailureShare * static_cast<double>(requested)) {
    throw DataError(std::to_string(failed) + " of " + std::to_string(requested) +
                    " repetitions failed (more than 1%)");
  }
  if (used < 2) throw DataError("fewer than 2 successful repetitions; cannot aggregate");
  return used;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (scenario < 1 || scenario > 3) throw ValidationError("scenario must be 1, 2, or 3");
  if (repetitions < 1) throw ValidationError("repetitions must be at least 1");
  if (pre_experiment_n < 2) throw ValidationError("pre_experiment_n must be at least 2");
  if (cohort_n < 2) throw ValidationError("cohort_n must be at least 2");
  if (test_n < 2) throw ValidationError("test_n must be at least 2");
  if (!(treatment_p > 0.0 && treatment_p < 1.0)) {
    throw ValidationError("treatment_p must lie strictly inside (0, 1)");
  }
  if (qini_t_grid < 1) throw ValidationError("qini_t_grid must be at least 1");
  design_learner.validate();
  fixed_learner.validate();
  for (const auto& base : base_learners) base.validate();

  if (pipeline == Pipeline::kTraining) {
    if (metas.empty()) throw ValidationError("training pipeline needs at least one meta-learner");
    if (base_learners.empty()) throw ValidationError("training pipeline needs a base learner");
    if (resolved_chunk_n() < cohort_n) {
      throw ValidationError("chunk_n is smaller than cohort_n");
    }
  } else {
    if (test_n < cohort_n) throw ValidationError("test_n chunk is smaller than cohort_n");
    if (estimators.empty()) throw ValidationError("estimator set is empty");
    if (std::find(estimators.begin(), estimators.end(), AteMethod::kDim) == estimators.end()) {
      throw ValidationError("estimator set must include dim as the baseline");
    }
    for (AteMethod method : estimators) {
      if (method != AteMethod::kDim && method != AteMethod::kOracleCovAdj &&
          method != AteMethod::kHs && method != AteMethod::kHsCovAdj) {
        throw ValidationError("estimator '" + to_string(method) +
                              "' is not supported by the experiment harness");
      }
      if (std::count(estimators.begin(), estimators.end(), method) != 1) {
        throw ValidationError("duplicate estimator '" + to_string(method) + "'");
      }
    }
    if (corrections.empty()) throw ValidationError("correction set is empty");
    if (std::find(corrections.begin(), corrections.end(), QiniCorrection::kNone) ==
        corrections.end()) {
      throw ValidationError("correction set must include none as the baseline");
    }
    for (QiniCorrection correction : corrections) {
      if (std::count(corrections.begin(), corrections.end(), correction) != 1) {
        throw ValidationError("duplicate correction '" + to_string(correction) + "'");
      }
    }
  }
}

std::pair<double, double> confidence_interval(std::span<const double> samples, double level) {
  if (samples.size() < 2) {
    throw ValidationError("confidence interval needs at least 2 samples");
  }
  if (level != 0.95) throw ValidationError("only the 0.95 confidence level is supported");
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= n;
  double variance = 0.0;
  for (double s : samples) variance += (s - mean) * (s - mean);
  variance /= n;
  const double half = kZ975 * std::sqrt(variance / n);
  return {mean - half, mean + half};
}

ExperimentReport run_training_experiment(const ExperimentConfig& config) {
  config.validate();
  if (config.pipeline != ExperimentConfig::Pipeline::kTraining) {
    throw ValidationError("config does not describe a training experiment");
  }
  const auto started = std::chrono::steady_clock::now();
  const DesignSetup setup = design_setup(config);
  const auto test = generate_population(
      scenario_spec(config, config.test_n, config.treatment_p, config.seed.stream("test-frame")));

  struct RepResult {
    bool ok = false;
    std::vector<double> auq_uniform;
    std::vector<double> auq_hs;
  };
  const SeedSpec rep_root = config.seed.stream("training-rep");
  const SamplingPlan uniform_plan = SamplingPlan::uniform(config.cohort_n, config.treatment_p);

  auto rep_fn = [&](std::size_t r) -> RepResult {
    RepResult out;
    try {
      const SeedSpec rep_seed{rep_root.derive(r), "rep"};
      const auto chunk = generate_population(scenario_spec(
          config, config.resolved_chunk_n(), config.treatment_p, rep_seed.stream("chunk")));
      const auto predictions = setup.model.predict(chunk.frame);
      const auto labels = stratify(predictions, setup.plan.effective_threshold());
      SamplingPlan plan = setup.plan;
      plan.population_share_h = stratum_share(labels);

      const auto uniform =
          realize_cohort(chunk, labels, uniform_plan, config.treatment_p, rep_seed.stream("uniform"));
      const auto hs = realize_cohort(chunk, labels, plan, config.treatment_p, rep_seed.stream("hs"));

      std::size_t index = 0;
      for (MetaKind meta : config.metas) {
        for (const auto& base : config.base_learners) {
          const SeedSpec fit_seed = rep_seed.stream("combo-" + std::to_string(index));
          const auto model_u =
              fit_meta(meta, uniform.frame, base, config.treatment_p, fit_seed.stream("uniform"));
          const auto model_h =
              fit_meta(meta, hs.frame, base, config.treatment_p, fit_seed.stream("hs"));
          const double auq_u = auq_oracle(model_u.predict(test.frame), test.truth.tau).value;
          const double auq_h = auq_oracle(model_h.predict(test.frame), test.truth.tau).value;
          if (!std::isfinite(auq_u) || !std::isfinite(auq_h) || auq_u <= 0.0) {
            throw DataError("uniform-trained AUQ is not positive; ratio undefined");
          }
          out.auq_uniform.push_back(auq_u);
          out.auq_hs.push_back(auq_h);
          ++index;
        }
      }
      out.ok = true;
    } catch (const std::exception&) {
      out = RepResult{};
    }
    return out;
  };

  const auto reps = parallel_map(config.repetitions, config.workers, rep_fn);

  ExperimentReport report;
  report.config = config;
  report.plan = setup.plan;
  report.repetitions_requested = config.repetitions;
  report.repetitions_failed =
      static_cast<std::size_t>(std::count_if(reps.begin(), reps.end(),
                                             [](const RepResult& r) { return !r.ok; }));
  report.repetitions_used = count_used(config.repetitions, report.repetitions_failed);

  std::size_t index = 0;
  for (MetaKind meta : config.metas) {
    for (const auto& base : config.base_learners) {
      std::vector<double> ratios, auq_u, auq_h;
      for (const RepResult& rep : reps) {
        if (!rep.ok) continue;
        ratios.push_back(100.0 * rep.auq_hs[index] / rep.auq_uniform[index]);
        auq_u.push_back(rep.auq_uniform[index]);
        auq_h.push_back(rep.auq_hs[index]);
      }
      TrainingComboResult combo;
      combo.meta = meta;
      combo.base = base.kind;
      combo.mean_auq_uniform = mean_of(auq_u);
      combo.mean_auq_hs = mean_of(auq_h);
      combo.mean_ratio_percent = mean_of(ratios);
      combo.gain_percent = combo.mean_ratio_percent - 100.0;
      const auto [lo, hi] = confidence_interval(ratios);
      combo.gain_ci_low_percent = lo - 100.0;
      combo.gain_ci_high_percent = hi - 100.0;
      report.combos.push_back(std::move(combo));
      ++index;
    }
  }
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

ExperimentReport run_evaluation_experiment(const ExperimentConfig& config) {
  config.validate();
  if (config.pipeline != ExperimentConfig::Pipeline::kEvaluation) {
    throw ValidationError("config does not describe an evaluation experiment");
  }
  const auto started = std::chrono::steady_clock::now();
  const DesignSetup setup = design_setup(config);

  // The frozen scoring model trains once on its own RCT draw.
  const auto model_draw = generate_scenario(
      scenario_spec(config, config.cohort_n, config.treatment_p, config.seed.stream("model-cohort")));
  const UpliftModel model = fit_meta(config.fixed_meta, model_draw.frame, config.fixed_learner,
                                     config.treatment_p, config.seed.stream("model-fit"));

  const std::size_t t_grid = config.qini_t_grid;
  struct RepResult {
    bool ok = false;
    std::vector<double> ate_value;
    std::vector<double> ate_variance;
    std::vector<double> q;  // corrections * t_grid, flattened
    std::vector<double> auq;
  };
  const SeedSpec rep_root = config.seed.stream("evaluation-rep");
  const SamplingPlan uniform_plan = SamplingPlan::uniform(config.cohort_n, config.treatment_p);
  const double p = config.treatment_p;

  auto rep_fn = [&](std::size_t r) -> RepResult {
    RepResult out;
    try {
      const SeedSpec rep_seed{rep_root.derive(r), "rep"};
      const auto chunk = generate_population(
          scenario_spec(config, config.test_n, p, rep_seed.stream("chunk")));
      const auto predictions = setup.model.predict(chunk.frame);
      const auto labels = stratify(predictions, setup.plan.effective_threshold());
      SamplingPlan plan = setup.plan;
      plan.population_share_h = stratum_share(labels);

      const auto uniform =
          realize_cohort(chunk, labels, uniform_plan, p, rep_seed.stream("uniform"));
      const auto hs = realize_cohort(chunk, labels, plan, p, rep_seed.stream("hs"));

      const auto scores_u = model.predict(uniform.frame);
      const auto scores_h = model.predict(hs.frame);
      const auto adjusted_u =
          adjust_outcomes(uniform.frame.outcome(), oracle_phi(uniform.truth, p));
      const auto adjusted_h = adjust_outcomes(hs.frame.outcome(), oracle_phi(hs.truth, p));

      for (AteMethod method : config.estimators) {
        AteEstimate estimate;
        switch (method) {
          case AteMethod::kDim:
            estimate = diff_in_means(uniform.frame.outcome(), uniform.frame.treatment());
            break;
          case AteMethod::kOracleCovAdj:
            estimate = oracle_adjusted_ate(uniform.frame.outcome(), uniform.frame.treatment(),
                                           uniform.truth, p);
            break;
          case AteMethod::kHs:
            estimate = hs_estimate(hs.frame, hs.cohort.is_h, plan, false);
            break;
          default: {
            HsAdjustment adjustment;
            adjustment.truth = &hs.truth;
            estimate = hs_estimate(hs.frame, hs.cohort.is_h, plan, true, adjustment);
            break;
          }
        }
        out.ate_value.push_back(estimate.value);
        out.ate_variance.push_back(estimate.variance_hat);
      }

      // Population-composition reference for the HS corrections, by
      // downsampling S_H inside the cohort itself.
      const auto kept =
          downsample_to_population(hs.cohort.is_h, plan.population_share_h,
                                   rep_seed.stream("downsample"));
      std::vector<double> ref_scores(kept.size());
      std::vector<std::uint8_t> ref_labels(kept.size());
      for (std::size_t i = 0; i < kept.size(); ++i) {
        ref_scores[i] = scores_h[kept[i]];
        ref_labels[i] = hs.cohort.is_h[kept[i]];
      }

      for (QiniCorrection correction : config.corrections) {
        QiniCurve curve;
        switch (correction) {
          case QiniCorrection::kNone:
            curve = qini_curve(uniform.frame, scores_u, t_grid);
            break;
          case QiniCorrection::kCovadj:
            curve = qini_curve(uniform.frame, scores_u, t_grid, adjusted_u);
            break;
          case QiniCorrection::kHs:
            curve = hs_qini_curve(hs.frame, hs.cohort.is_h, scores_h, ref_scores, ref_labels,
                                  t_grid);
            break;
          case QiniCorrection::kHsCovadj:
            curve = hs_qini_curve(hs.frame, hs.cohort.is_h, scores_h, ref_scores, ref_labels,
                                  t_grid, adjusted_h);
            break;
        }
        // auq_decile raises DataError on missing points, failing the
        // repetition as a whole and keeping rep sets aligned across modes.
        out.auq.push_back(auq_decile(curve).value);
        out.q.insert(out.q.end(), curve.q_values.begin(), curve.q_values.end());
      }
      out.ok = true;
    } catch (const std::exception&) {
      out = RepResult{};
    }
    return out;
  };

  const auto reps = parallel_map(config.repetitions, config.workers, rep_fn);

  ExperimentReport report;
  report.config = config;
  report.plan = setup.plan;
  report.repetitions_requested = config.repetitions;
  report.repetitions_failed =
      static_cast<std::size_t>(std::count_if(reps.begin(), reps.end(),
                                             [](const RepResult& r) { return !r.ok; }));
  report.repetitions_used = count_used(config.repetitions, report.repetitions_failed);

  const std::size_t dim_index = static_cast<std::size_t>(
      std::find(config.estimators.begin(), config.estimators.end(), AteMethod::kDim) -
      config.estimators.begin());
  std::vector<std::vector<double>> method_values(config.estimators.size());
  for (std::size_t m = 0; m < config.estimators.size(); ++m) {
    for (const RepResult& rep : reps) {
      if (rep.ok) method_values[m].push_back(rep.ate_value[m]);
    }
  }
  const double dim_variance = sample_variance(method_values[dim_index]);
  for (std::size_t m = 0; m < config.estimators.size(); ++m) {
    AteMethodResult entry;
    entry.method = config.estimators[m];
    entry.mean = mean_of(method_values[m]);
    entry.empirical_variance = sample_variance(method_values[m]);
    std::vector<double> analytic;
    for (const RepResult& rep : reps) {
      if (rep.ok) analytic.push_back(rep.ate_variance[m]);
    }
    entry.mean_analytic_variance = mean_of(analytic);
    entry.reduction_vs_dim_percent =
        m == dim_index ? 0.0 : reduction_percent(entry.empirical_variance, dim_variance);
    report.ate.push_back(std::move(entry));
  }

  const std::size_t none_index = static_cast<std::size_t>(
      std::find(config.corrections.begin(), config.corrections.end(), QiniCorrection::kNone) -
      config.corrections.begin());
  std::vector<QiniModeResult> modes(config.corrections.size());
  for (std::size_t c = 0; c < config.corrections.size(); ++c) {
    QiniModeResult& mode = modes[c];
    mode.correction = config.corrections[c];
    mode.grid.resize(t_grid);
    for (std::size_t k = 0; k < t_grid; ++k) {
      mode.grid[k] = static_cast<double>(k + 1) / static_cast<double>(t_grid);
    }
    for (std::size_t k = 0; k < t_grid; ++k) {
      std::vector<double> values;
      for (const RepResult& rep : reps) {
        if (rep.ok) values.push_back(rep.q[c * t_grid + k]);
      }
      mode.mean_q.push_back(mean_of(values));
      mode.variance_q.push_back(sample_variance(values));
    }
    std::vector<double> auqs;
    for (const RepResult& rep : reps) {
      if (rep.ok) auqs.push_back(rep.auq[c]);
    }
    mode.mean_auq = mean_of(auqs);
    mode.variance_auq = sample_variance(auqs);
  }
  for (std::size_t c = 0; c < modes.size(); ++c) {
    QiniModeResult& mode = modes[c];
    for (std::size_t k = 0; k < t_grid; ++k) {
      mode.reduction_vs_none_percent.push_back(
          c == none_index ? 0.0
                          : reduction_percent(mode.variance_q[k], modes[none_index].variance_q[k]));
    }
    mode.auq_reduction_vs_none_percent =
        c == none_index ? 0.0
                        : reduction_percent(mode.variance_auq, modes[none_index].variance_auq);
  }
  report.qini = std::move(modes);
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  return config.pipeline == ExperimentConfig::Pipeline::kTraining
             ? run_training_experiment(config)
             : run_evaluation_experiment(config);
}

Json to_json(const ExperimentConfig& config) {
  Json metas = Json::array();
  for (MetaKind meta : config.metas) metas.push_back(to_string(meta));
  Json bases = Json::array();
  for (const auto& base : config.base_learners) bases.push_back(to_json(base));
  Json estimators = Json::array();
  for (AteMethod method : config.estimators) estimators.push_back(to_string(method));
  Json corrections = Json::array();
  for (QiniCorrection correction : config.corrections) {
    corrections.push_back(to_string(correction));
  }
  return Json{
      {"pipeline",
       config.pipeline == ExperimentConfig::Pipeline::kTraining ? "training" : "evaluation"},
      {"scenario", config.scenario},
      {"n_features", config.n_features},
      {"treatment_p", config.treatment_p},
      {"repetitions", config.repetitions},
      {"pre_experiment_n", config.pre_experiment_n},
      {"cohort_n", config.cohort_n},
      {"test_n", config.test_n},
      {"chunk_n", config.chunk_n},
      {"adjust_plan", config.adjust_plan},
      {"design_learner", to_json(config.design_learner)},
      {"metas", std::move(metas)},
      {"base_learners", std::move(bases)},
      {"fixed_meta", to_string(config.fixed_meta)},
      {"fixed_learner", to_json(config.fixed_learner)},
      {"estimators", std::move(estimators)},
      {"corrections", std::move(corrections)},
      {"qini_t_grid", config.qini_t_grid},
      {"workers", config.workers},
      {"seed", to_json(config.seed)}};
}

namespace {

template <typename T, typename Parse>
std::vector<T> parse_array(const Json& json, const char* key, Parse parse) {
  std::vector<T> out;
  if (!json.at(key).is_array()) {
    throw ValidationError(std::string("experiment: '") + key + "' must be an array");
  }
  for (const Json& item : json.at(key)) out.push_back(parse(item));
  return out;
}

template <typename T>
T scalar_or(const Json& json, const char* key, T fallback) {
  if (!json.contains(key)) return fallback;
  try {
    return json.at(key).template get<T>();
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("experiment: field '") + key + "': " + e.what());
  }
}

}  // namespace

ExperimentConfig experiment_config_from_json(const Json& json) {
  if (!json.is_object()) throw ValidationError("experiment config must be a JSON object");
  static const char* const kKeys[] = {
      "pipeline",      "scenario",    "n_features",   "treatment_p",  "repetitions",
      "pre_experiment_n", "cohort_n", "test_n",       "chunk_n",      "adjust_plan",
      "design_learner", "metas",      "base_learners", "fixed_meta",  "fixed_learner",
      "estimators",    "corrections", "qini_t_grid",  "workers",      "seed"};
  for (const auto& item : json.items()) {
    bool known = false;
    for (const char* key : kKeys) known = known || item.key() == key;
    if (!known) throw ValidationError("experiment: unknown key '" + item.key() + "'");
  }

  ExperimentConfig config;
  if (json.contains("pipeline")) {
    const auto name = json.at("pipeline").get<std::string>();
    if (name == "training") {
      config.pipeline = ExperimentConfig::Pipeline::kTraining;
    } else if (name == "evaluation") {
      config.pipeline = ExperimentConfig::Pipeline::kEvaluation;
    } else {
      throw ValidationError("experiment: unknown pipeline '" + name + "'");
    }
  }
  config.scenario = scalar_or(json, "scenario", config.scenario);
  config.n_features = scalar_or(json, "n_features", config.n_features);
  config.treatment_p = scalar_or(json, "treatment_p", config.treatment_p);
  config.repetitions = scalar_or(json, "repetitions", config.repetitions);
  config.pre_experiment_n = scalar_or(json, "pre_experiment_n", config.pre_experiment_n);
  config.cohort_n = scalar_or(json, "cohort_n", config.cohort_n);
  config.test_n = scalar_or(json, "test_n", config.test_n);
  config.chunk_n = scalar_or(json, "chunk_n", config.chunk_n);
  config.adjust_plan = scalar_or(json, "adjust_plan", config.adjust_plan);
  if (json.contains("design_learner")) {
    config.design_learner = learner_spec_from_json(json.at("design_learner"));
  }
  if (json.contains("metas")) {
    config.metas = parse_array<MetaKind>(json, "metas", [](const Json& item) {
      return meta_kind_from_string(item.get<std::string>());
    });
  }
  if (json.contains("base_learners")) {
    config.base_learners = parse_array<OutcomeLearnerSpec>(
        json, "base_learners", [](const Json& item) { return learner_spec_from_json(item); });
  }
  if (json.contains("fixed_meta")) {
    config.fixed_meta = meta_kind_from_string(json.at("fixed_meta").get<std::string>());
  }
  if (json.contains("fixed_learner")) {
    config.fixed_learner = learner_spec_from_json(json.at("fixed_learner"));
  }
  if (json.contains("estimators")) {
    config.estimators = parse_array<AteMethod>(json, "estimators", [](const Json& item) {
      return ate_method_from_string(item.get<std::string>());
    });
  }
  if (json.contains("corrections")) {
    config.corrections = parse_array<QiniCorrection>(json, "corrections", [](const Json& item) {
      return qini_correction_from_string(item.get<std::string>());
    });
  }
  config.qini_t_grid = scalar_or(json, "qini_t_grid", config.qini_t_grid);
  config.workers = scalar_or(json, "workers", config.workers);
  if (json.contains("seed")) config.seed = seed_from_json(json.at("seed"));
  config.validate();
  return config;
}

Json to_json(const ExperimentReport& report) {
  Json combos = Json::array();
  for (const auto& combo : report.combos) {
    combos.push_back(Json{{"meta", to_string(combo.meta)},
                          {"base", to_string(combo.base)},
                          {"mean_auq_uniform", combo.mean_auq_uniform},
                          {"mean_auq_hs", combo.mean_auq_hs},
                          {"mean_ratio_percent", combo.mean_ratio_percent},
                          {"gain_percent", combo.gain_percent},
                          {"gain_ci_low_percent", combo.gain_ci_low_percent},
                          {"gain_ci_high_percent", combo.gain_ci_high_percent}});
  }
  Json ate = Json::array();
  for (const auto& entry : report.ate) {
    ate.push_back(Json{{"method", to_string(entry.method)},
                       {"mean", entry.mean},
                       {"empirical_variance", entry.empirical_variance},
                       {"mean_analytic_variance", entry.mean_analytic_variance},
                       {"reduction_vs_dim_percent",
                        finite_or_null(entry.reduction_vs_dim_percent)}});
  }
  Json qini = Json::array();
  for (const auto& mode : report.qini) {
    Json reductions = Json::array();
    for (double r : mode.reduction_vs_none_percent) reductions.push_back(finite_or_null(r));
    qini.push_back(Json{{"correction", to_string(mode.correction)},
                        {"grid", mode.grid},
                        {"mean_q", mode.mean_q},
                        {"variance_q", mode.variance_q},
                        {"reduction_vs_none_percent", std::move(reductions)},
                        {"mean_auq", mode.mean_auq},
                        {"variance_auq", mode.variance_auq},
                        {"auq_reduction_vs_none_percent",
                         finite_or_null(mode.auq_reduction_vs_none_percent)}});
  }
  return Json{{"config", to_json(report.config)},
              {"plan", to_json(report.plan)},
              {"repetitions",
               {{"requested", report.repetitions_requested},
                {"used", report.repetitions_used},
                {"failed", report.repetitions_failed}}},
              {"combos", std::move(combos)},
              {"ate", std::move(ate)},
              {"qini", std::move(qini)}};
}

}  // namespace hsd
