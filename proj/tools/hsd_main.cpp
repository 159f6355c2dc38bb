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

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iostream>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "hsd/design.hpp"
#include "hsd/errors.hpp"
#include "hsd/estimation.hpp"
#include "hsd/evaluation.hpp"
#include "hsd/frame.hpp"
#include "hsd/harness.hpp"
#include "hsd/learners.hpp"
#include "hsd/sampling.hpp"
#include "hsd/serialize.hpp"
#include "hsd/simulation.hpp"
#include "hsd/uplift.hpp"

namespace {

using hsd::Json;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config_path, "JSON config file");
  sub->add_option("--out", args.out_dir, "artifact output directory (default .)");
  sub->add_option("--seed", args.seed, "master seed override");
}

Json read_config(const CommonArgs& args) {
  if (args.config_path.empty()) return Json::object();
  return hsd::load_json(args.config_path);
}

void expect_keys(const Json& config, std::initializer_list<const char*> allowed,
                 const char* what) {
  if (!config.is_object()) {
    throw hsd::ValidationError(std::string(what) + " must be a JSON object");
  }
  for (const auto& item : config.items()) {
    bool known = false;
    for (const char* key : allowed) known = known || item.key() == key;
    if (!known) {
      throw hsd::ValidationError(std::string(what) + ": unknown key '" + item.key() + "'");
    }
  }
}

template <typename T>
T field_or(const Json& config, const char* key, T fallback) {
  if (!config.contains(key)) return fallback;
  try {
    return config.at(key).template get<T>();
  } catch (const Json::exception& e) {
    throw hsd::ValidationError(std::string("field '") + key + "': " + e.what());
  }
}

std::string require_path(const Json& config, const char* key, const char* what) {
  if (!config.contains(key)) {
    throw hsd::ValidationError(std::string(what) + ": missing required path '" + key + "'");
  }
  return config.at(key).get<std::string>();
}

hsd::SeedSpec resolve_seed(const Json& config, const CommonArgs& args) {
  hsd::SeedSpec seed;
  if (config.contains("seed")) seed = hsd::seed_from_json(config.at("seed"));
  if (args.seed_given) seed.master_seed = args.seed;
  return seed;
}

std::string out_path(const CommonArgs& args, const std::string& name) {
  std::filesystem::create_directories(args.out_dir);
  return (std::filesystem::path(args.out_dir) / name).string();
}

void format_double(std::string& out, double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  out.append(buf, static_cast<std::size_t>(n));
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw hsd::DataError("cannot write '" + path + "'");
  out << text;
  if (!out) throw hsd::DataError("failed writing '" + path + "'");
}

void emit_report(const Json& report) { std::cout << hsd::dump_json(report); }

// Header roles recognized when feature columns are not listed explicitly.
const char* const kRoleColumns[] = {"id", "treatment", "outcome", "stratum", "mu0", "tau", "score"};

struct CsvLayout {
  std::vector<std::string> features;
  bool has_id = false;
  bool has_treatment = false;
  bool has_outcome = false;
  bool has_stratum = false;
};

CsvLayout sniff_csv(const std::string& path, const Json& config) {
  std::ifstream in(path);
  if (!in) throw hsd::DataError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw hsd::DataError("'" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  CsvLayout layout;
  std::vector<std::string> header;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    header.push_back(line.substr(start, pos == std::string::npos ? pos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  for (const auto& name : header) {
    if (name == "id") layout.has_id = true;
    if (name == "treatment") layout.has_treatment = true;
    if (name == "outcome") layout.has_outcome = true;
    if (name == "stratum") layout.has_stratum = true;
  }
  if (config.contains("features")) {
    layout.features = config.at("features").get<std::vector<std::string>>();
  } else {
    for (const auto& name : header) {
      const bool role = std::any_of(std::begin(kRoleColumns), std::end(kRoleColumns),
                                    [&](const char* r) { return name == r; });
      if (!role && !name.empty()) layout.features.push_back(name);
    }
  }
  if (layout.features.empty()) {
    throw hsd::ValidationError("no feature columns found in '" + path +
                               "'; list them under config key 'features'");
  }
  return layout;
}

hsd::PopulationFrame load_frame(const std::string& path, const Json& config, bool need_outcome,
                                bool need_treatment) {
  const CsvLayout layout = sniff_csv(path, config);
  if (need_outcome && !layout.has_outcome) {
    throw hsd::ValidationError("'" + path + "' lacks the outcome column");
  }
  if (need_treatment && !layout.has_treatment) {
    throw hsd::ValidationError("'" + path + "' lacks the treatment column");
  }
  hsd::CsvSchema schema;
  schema.features = layout.features;
  if (layout.has_id) schema.id = "id";
  if (layout.has_outcome) schema.outcome = "outcome";
  if (layout.has_treatment) schema.treatment = "treatment";
  return hsd::load_csv(path, schema);
}

std::vector<std::uint8_t> binary_column(const hsd::PopulationFrame& frame, std::size_t col,
                                        const std::string& path) {
  std::vector<std::uint8_t> flags(frame.rows());
  for (std::size_t i = 0; i < frame.rows(); ++i) {
    const double v = frame.feature(i, col);
    if (v != 0.0 && v != 1.0) {
      throw hsd::DataError("'" + path + "': stratum values must be 0 or 1");
    }
    flags[i] = v == 1.0 ? 1 : 0;
  }
  return flags;
}

// A cohort CSV plus whatever covariates are available for it. Feature
// columns can live inline, be joined by id from a population CSV (the
// `sample` artifact stores responses only), or be absent entirely, in which
// case only covariate-free estimators apply.
struct CohortData {
  hsd::PopulationFrame frame;
  std::vector<std::uint8_t> stratum;
  bool real_features = false;
};

CohortData load_cohort(const std::string& path, const Json& config, bool need_outcome,
                       bool need_treatment) {
  const CsvLayout layout = [&] {
    try {
      return sniff_csv(path, config);
    } catch (const hsd::ValidationError&) {
      CsvLayout bare;  // response-only cohort; roles are re-sniffed below
      return bare;
    }
  }();
  const bool inline_features = !layout.features.empty();
  const bool join = config.contains("population");

  if (inline_features && !join) {
    auto frame = load_frame(path, config, need_outcome, need_treatment);
    CohortData data{std::move(frame), {}, true};
    if (layout.has_stratum) {
      hsd::CsvSchema schema;
      schema.features = {"stratum"};
      const auto strata = hsd::load_csv(path, schema);
      data.stratum = binary_column(strata, 0, path);
    }
    return data;
  }

  // Response-only load hangs off the stratum column, which `sample` always
  // writes; roles come back as features so strata can be validated.
  hsd::CsvSchema schema;
  schema.features = {"stratum"};
  schema.id = "id";
  std::ifstream probe(path);
  std::string header;
  if (!probe || !std::getline(probe, header)) throw hsd::DataError("cannot open '" + path + "'");
  const bool has_outcome = header.find("outcome") != std::string::npos;
  const bool has_treatment = header.find("treatment") != std::string::npos;
  if (has_outcome) schema.outcome = "outcome";
  if (has_treatment) schema.treatment = "treatment";
  if (need_outcome && !has_outcome) {
    throw hsd::ValidationError("'" + path + "' lacks the outcome column");
  }
  if (need_treatment && !has_treatment) {
    throw hsd::ValidationError("'" + path + "' lacks the treatment column");
  }
  auto cohort = hsd::load_csv(path, schema);
  auto stratum = binary_column(cohort, 0, path);

  if (!join) {
    CohortData data{std::move(cohort), std::move(stratum), false};
    return data;
  }

  const auto population =
      load_frame(config.at("population").get<std::string>(), config, false, false);
  std::unordered_map<std::int64_t, std::size_t> by_id;
  by_id.reserve(population.rows());
  for (std::size_t i = 0; i < population.rows(); ++i) by_id.emplace(population.ids()[i], i);
  std::vector<std::size_t> rows(cohort.rows());
  for (std::size_t i = 0; i < cohort.rows(); ++i) {
    const auto it = by_id.find(cohort.ids()[i]);
    if (it == by_id.end()) {
      throw hsd::DataError("cohort id " + std::to_string(cohort.ids()[i]) +
                           " not found in the population CSV");
    }
    rows[i] = it->second;
  }
  const auto base = population.take_rows(rows);
  std::optional<std::vector<std::uint8_t>> outcome;
  std::optional<std::vector<std::uint8_t>> treatment;
  if (has_outcome) outcome.emplace(cohort.outcome().begin(), cohort.outcome().end());
  if (has_treatment) treatment.emplace(cohort.treatment().begin(), cohort.treatment().end());
  hsd::PopulationFrame joined(base.feature_names(), base.values(), std::move(outcome),
                              std::move(treatment),
                              {base.ids().begin(), base.ids().end()});
  return CohortData{std::move(joined), std::move(stratum), true};
}

std::vector<double> load_score_column(const std::string& path, std::size_t expected_rows) {
  hsd::CsvSchema schema;
  schema.features = {"score"};
  const auto frame = hsd::load_csv(path, schema);
  if (frame.rows() != expected_rows) {
    throw hsd::ValidationError("'" + path + "' has " + std::to_string(frame.rows()) +
                               " rows; the cohort has " + std::to_string(expected_rows));
  }
  return frame.values();
}

hsd::SimulatedTruth load_aligned_truth(const std::string& path, std::size_t expected_rows) {
  auto truth = hsd::load_truth_csv(path);
  if (truth.mu0.size() != expected_rows) {
    throw hsd::ValidationError("'" + path + "' has " + std::to_string(truth.mu0.size()) +
                               " rows; expected " + std::to_string(expected_rows));
  }
  return truth;
}

double realized_treatment_share(std::span<const std::uint8_t> treatment) {
  double sum = 0.0;
  for (auto w : treatment) sum += w;
  return sum / static_cast<double>(treatment.size());
}

// ---------------------------------------------------------------------------
// plan: pre-experiment CSV + population CSV -> design curve + plan + model.

int run_plan(const CommonArgs& args) {
  const Json config = read_config(args);
  expect_keys(config,
              {"pre_experiment", "population", "learner", "target_n", "treatment_p", "adjust",
               "grid", "features", "seed"},
              "plan config");
  const auto seed = resolve_seed(config, args);

  auto pre = load_frame(require_path(config, "pre_experiment", "plan"), config, true, false);
  if (pre.has_treatment()) {
    // The design model must see untreated responses only.
    std::vector<std::size_t> control;
    for (std::size_t i = 0; i < pre.rows(); ++i) {
      if (pre.treatment()[i] == 0) control.push_back(i);
    }
    if (control.size() < pre.rows()) pre = pre.take_rows(control);
  }

  hsd::OutcomeLearnerSpec learner = hsd::default_forest_spec();
  if (config.contains("learner")) learner = hsd::learner_spec_from_json(config.at("learner"));
  const auto model = hsd::fit(learner, pre, seed.stream("design-fit"));
  const auto predictions = model.predict(pre);

  const auto grid = config.contains("grid") ? config.at("grid").get<std::vector<double>>()
                                            : hsd::default_p_h_grid();
  const auto curve = hsd::design_curve(predictions, grid);

  hsd::PlanOptions options;
  options.target_n = field_or<std::size_t>(config, "target_n", 0);
  options.treatment_proportion = field_or(config, "treatment_p", 0.5);
  options.adjust = field_or(config, "adjust", true);
  hsd::SamplingPlan plan = hsd::select_plan(curve, predictions, options);

  const auto population =
      load_frame(require_path(config, "population", "plan"), config, false, false);
  const auto labels = hsd::stratify(population, model, plan.effective_threshold());
  plan.population_share_h = hsd::stratum_share(labels);

  std::string csv = "p_h,v_h,v_l,q_v,r_h,predicted_ratio\n";
  for (const auto& point : curve) {
    format_double(csv, point.p_h);
    csv += ',';
    format_double(csv, point.v_h_hat);
    csv += ',';
    format_double(csv, point.v_l_hat);
    csv += ',';
    format_double(csv, point.q_v_hat);
    csv += ',';
    format_double(csv, point.r_h);
    csv += ',';
    format_double(csv, point.predicted_ratio);
    csv += '\n';
  }
  const std::string curve_path = out_path(args, "design_curve.csv");
  write_text(curve_path, csv);
  const std::string plan_path = out_path(args, "plan.json");
  hsd::write_json(hsd::to_json(plan), plan_path);
  const std::string model_path = out_path(args, "design_model.json");
  hsd::write_json(hsd::to_json(model), model_path);

  Json curve_json = Json::array();
  for (const auto& point : curve) curve_json.push_back(hsd::to_json(point));
  emit_report(Json{{"plan", hsd::to_json(plan)},
                   {"curve", std::move(curve_json)},
                   {"artifacts",
                    {{"curve", curve_path}, {"plan", plan_path}, {"model", model_path}}}});
  return 0;
}

// ---------------------------------------------------------------------------
// sample: population CSV + plan JSON + design model -> cohort CSV.

int run_sample(const CommonArgs& args) {
  const Json config = read_config(args);
  expect_keys(config, {"population", "plan", "model", "truth", "features", "seed"},
              "sample config");
  const auto seed = resolve_seed(config, args);

  const auto population =
      load_frame(require_path(config, "population", "sample"), config, false, false);
  hsd::SamplingPlan plan = hsd::plan_from_json(hsd::load_json(require_path(config, "plan", "sample")));

  std::vector<std::uint8_t> labels;
  if (!plan.is_uniform()) {
    const auto model = hsd::fitted_model_from_json(
        hsd::load_json(require_path(config, "model", "sample")));
    labels = hsd::stratify(population, model, plan.effective_threshold());
    if (plan.population_share_h == 0.0) plan.population_share_h = hsd::stratum_share(labels);
  }

  hsd::Cohort cohort = hsd::draw_cohort(population, labels, plan, seed.stream("draw"));
  cohort = hsd::assign_treatment(std::move(cohort), plan.treatment_proportion,
                                 seed.stream("assign"));

  std::optional<std::vector<std::uint8_t>> outcome;
  std::optional<hsd::SimulatedTruth> cohort_truth;
  if (config.contains("truth")) {
    const auto truth = load_aligned_truth(config.at("truth").get<std::string>(), population.rows());
    cohort_truth = truth.take_rows(cohort.rows);
    outcome = hsd::simulate_outcomes(*cohort_truth, cohort.treatment, seed.stream("outcome"));
  }

  std::string csv = outcome ? "id,stratum,treatment,outcome\n" : "id,stratum,treatment\n";
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    csv += std::to_string(cohort.ids[i]);
    csv += ',';
    csv += cohort.is_h[i] ? '1' : '0';
    csv += ',';
    csv += cohort.treatment[i] ? '1' : '0';
    if (outcome) {
      csv += ',';
      csv += (*outcome)[i] ? '1' : '0';
    }
    csv += '\n';
  }
  const std::string cohort_path = out_path(args, "cohort.csv");
  write_text(cohort_path, csv);

  Json artifacts{{"cohort", cohort_path}};
  if (cohort_truth) {
    const std::string truth_path = out_path(args, "cohort_truth.csv");
    hsd::emit_truth_csv(*cohort_truth, cohort.ids, truth_path);
    artifacts["cohort_truth"] = truth_path;
  }

  std::size_t n_h = 0, n_treated = 0;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    n_h += cohort.is_h[i];
    n_treated += cohort.treatment[i];
  }
  emit_report(Json{{"n", cohort.size()},
                   {"n_h", n_h},
                   {"n_treated", n_treated},
                   {"population_share_h", plan.population_share_h},
                   {"plan", hsd::to_json(plan)},
                   {"artifacts", std::move(artifacts)}});
  return 0;
}

// ---------------------------------------------------------------------------
// estimate: cohort CSV (+ plan JSON, + truth CSV) -> ATE JSON.

int run_estimate(const CommonArgs& args) {
  const Json config = read_config(args);
  expect_keys(config,
              {"cohort", "population", "method", "plan", "truth", "learner", "folds",
               "treatment_p", "features", "seed"},
              "estimate config");
  const auto seed = resolve_seed(config, args);
  const auto method = hsd::ate_method_from_string(field_or<std::string>(config, "method", "dim"));

  const std::string cohort_path = require_path(config, "cohort", "estimate");
  const auto cohort = load_cohort(cohort_path, config, true, true);
  const auto& frame = cohort.frame;

  std::optional<hsd::SamplingPlan> plan;
  if (config.contains("plan")) {
    plan = hsd::plan_from_json(hsd::load_json(config.at("plan").get<std::string>()));
  }
  std::optional<hsd::SimulatedTruth> truth;
  if (config.contains("truth")) {
    truth = load_aligned_truth(config.at("truth").get<std::string>(), frame.rows());
  }
  const double treatment_p = field_or(
      config, "treatment_p",
      plan ? plan->treatment_proportion : realized_treatment_share(frame.treatment()));

  hsd::OutcomeLearnerSpec learner;
  if (config.contains("learner")) learner = hsd::learner_spec_from_json(config.at("learner"));
  const auto folds = field_or<std::size_t>(config, "folds", 5);

  auto stratum_labels = [&]() -> std::span<const std::uint8_t> {
    if (cohort.stratum.empty()) {
      throw hsd::ValidationError("'" + cohort_path + "' lacks the stratum column");
    }
    return cohort.stratum;
  };
  auto require_plan = [&]() -> const hsd::SamplingPlan& {
    if (!plan) throw hsd::ValidationError("this method needs a plan JSON under config key 'plan'");
    return *plan;
  };
  auto require_features = [&] {
    if (!cohort.real_features) {
      throw hsd::ValidationError(
          "this method needs covariates; add feature columns to the cohort CSV or join a "
          "population CSV under config key 'population'");
    }
  };

  hsd::AteEstimate estimate;
  switch (method) {
    case hsd::AteMethod::kDim:
      estimate = hsd::diff_in_means(frame.outcome(), frame.treatment());
      break;
    case hsd::AteMethod::kStratified:
      estimate = hsd::stratified_ate(frame.outcome(), frame.treatment(), stratum_labels(),
                                     require_plan().population_share_h);
      break;
    case hsd::AteMethod::kCovAdj:
      require_features();
      estimate = hsd::covariate_adjusted_ate(frame, learner, folds, seed.stream("covadj"));
      break;
    case hsd::AteMethod::kOracleCovAdj:
      if (!truth) {
        throw hsd::ValidationError("oracle_covadj needs a truth CSV under config key 'truth'");
      }
      estimate = hsd::oracle_adjusted_ate(frame.outcome(), frame.treatment(), *truth,
                                          treatment_p);
      break;
    case hsd::AteMethod::kHs:
      estimate = hsd::hs_estimate(frame, stratum_labels(), require_plan(), false);
      break;
    case hsd::AteMethod::kHsCovAdj: {
      hsd::HsAdjustment adjustment;
      if (truth) {
        adjustment.truth = &*truth;
      } else {
        require_features();
      }
      adjustment.learner = learner;
      adjustment.folds = folds;
      adjustment.seed = seed.stream("hs-covadj");
      estimate = hsd::hs_estimate(frame, stratum_labels(), require_plan(), true, adjustment);
      break;
    }
  }
  emit_report(hsd::to_json(estimate));
  return 0;
}

// ---------------------------------------------------------------------------
// train: cohort CSV + {meta, learner} -> model JSON + score CSV.

int run_train(const CommonArgs& args) {
  const Json config = read_config(args);
  expect_keys(config,
              {"cohort", "population", "meta", "learner", "treatment_p", "score", "features",
               "seed"},
              "train config");
  const auto seed = resolve_seed(config, args);

  const auto cohort = load_cohort(require_path(config, "cohort", "train"), config, true, true);
  if (!cohort.real_features) {
    throw hsd::ValidationError(
        "training needs covariates; add feature columns to the cohort CSV or join a population "
        "CSV under config key 'population'");
  }
  const auto& frame = cohort.frame;
  const auto meta = hsd::meta_kind_from_string(field_or<std::string>(config, "meta", "t"));
  hsd::OutcomeLearnerSpec learner = hsd::default_forest_spec();
  if (config.contains("learner")) learner = hsd::learner_spec_from_json(config.at("learner"));
  const double treatment_p =
      field_or(config, "treatment_p", realized_treatment_share(frame.treatment()));

  hsd::UpliftModel model = [&] {
    switch (meta) {
      case hsd::MetaKind::kT: return hsd::fit_t_learner(frame, learner, seed.stream("fit"));
      case hsd::MetaKind::kS: return hsd::fit_s_learner(frame, learner, seed.stream("fit"));
      case hsd::MetaKind::kX:
        return hsd::fit_x_learner(frame, learner, treatment_p, seed.stream("fit"));
    }
    throw hsd::ValidationError("unknown meta-learner kind");
  }();

  const bool external_score = config.contains("score");
  const auto score_frame =
      external_score ? load_frame(config.at("score").get<std::string>(), config, false, false)
                     : frame;
  const auto scores = model.predict(score_frame);

  std::string csv = "id,score\n";
  for (std::size_t i = 0; i < scores.size(); ++i) {
    csv += std::to_string(score_frame.ids()[i]);
    csv += ',';
    format_double(csv, scores[i]);
    csv += '\n';
  }
  const std::string scores_path = out_path(args, "scores.csv");
  write_text(scores_path, csv);
  const std::string model_path = out_path(args, "model.json");
  hsd::write_json(hsd::to_json(model), model_path);

  emit_report(Json{{"meta", hsd::to_string(meta)},
                   {"base", hsd::to_string(learner.kind)},
                   {"rows", frame.rows()},
                   {"treatment_p", treatment_p},
                   {"scored_rows", scores.size()},
                   {"artifacts", {{"model", model_path}, {"scores", scores_path}}}});
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate: score CSV + test cohort CSV -> Qini curve CSV + summary JSON.

int run_evaluate(const CommonArgs& args) {
  const Json config = read_config(args);
  expect_keys(config,
              {"cohort", "population", "scores", "correction", "t_grid", "exact_share", "plan",
               "truth", "features", "seed"},
              "evaluate config");
  const auto seed = resolve_seed(config, args);

  const std::string cohort_path = require_path(config, "cohort", "evaluate");
  const auto cohort = load_cohort(cohort_path, config, true, true);
  const auto& frame = cohort.frame;
  const auto scores = load_score_column(require_path(config, "scores", "evaluate"), frame.rows());
  const auto correction =
      hsd::qini_correction_from_string(field_or<std::string>(config, "correction", "none"));
  const auto t_grid = field_or<std::size_t>(config, "t_grid", 10);
  const bool exact_share = field_or(config, "exact_share", false);

  std::optional<hsd::SamplingPlan> plan;
  if (config.contains("plan")) {
    plan = hsd::plan_from_json(hsd::load_json(config.at("plan").get<std::string>()));
  }
  std::optional<hsd::SimulatedTruth> truth;
  if (config.contains("truth")) {
    truth = load_aligned_truth(config.at("truth").get<std::string>(), frame.rows());
  }

  std::vector<double> adjusted;
  const bool wants_adjustment = correction == hsd::QiniCorrection::kCovadj ||
                                correction == hsd::QiniCorrection::kHsCovadj;
  if (wants_adjustment) {
    if (!truth) {
      throw hsd::ValidationError("adjusted corrections need a truth CSV under config key 'truth'");
    }
    const double p = plan ? plan->treatment_proportion
                          : realized_treatment_share(frame.treatment());
    adjusted = hsd::adjust_outcomes(frame.outcome(), hsd::oracle_phi(*truth, p));
  }

  hsd::QiniCurve curve;
  if (correction == hsd::QiniCorrection::kNone || correction == hsd::QiniCorrection::kCovadj) {
    if (exact_share && correction == hsd::QiniCorrection::kCovadj) {
      throw hsd::ValidationError("exact_share applies to the uncorrected curve only");
    }
    curve = hsd::qini_curve(frame, scores, t_grid, adjusted, exact_share);
    curve.correction = correction;
  } else {
    if (!plan) throw hsd::ValidationError("hs corrections need a plan JSON under config key 'plan'");
    if (cohort.stratum.empty()) {
      throw hsd::ValidationError("'" + cohort_path + "' lacks the stratum column");
    }
    const auto& labels = cohort.stratum;
    const auto kept = hsd::downsample_to_population(labels, plan->population_share_h,
                                                    seed.stream("downsample"));
    std::vector<double> ref_scores(kept.size());
    std::vector<std::uint8_t> ref_labels(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
      ref_scores[i] = scores[kept[i]];
      ref_labels[i] = labels[kept[i]];
    }
    curve = hsd::hs_qini_curve(frame, labels, scores, ref_scores, ref_labels, t_grid, adjusted);
    curve.correction = correction;
  }

  std::string csv = "t,ate_t,q,variance_hat\n";
  for (std::size_t k = 0; k < curve.grid.size(); ++k) {
    format_double(csv, curve.grid[k]);
    csv += ',';
    format_double(csv, curve.ate_t[k]);
    csv += ',';
    format_double(csv, curve.q_values[k]);
    csv += ',';
    format_double(csv, curve.variance_hat[k]);
    csv += '\n';
  }
  const std::string curve_path = out_path(args, "qini_curve.csv");
  write_text(curve_path, csv);

  Json summary{{"correction", hsd::to_string(curve.correction)},
               {"n", frame.rows()},
               {"tie_fraction", curve.tie_fraction},
               {"curve", hsd::to_json(curve)}};
  const bool complete =
      std::none_of(curve.missing.begin(), curve.missing.end(), [](std::uint8_t m) { return m; });
  summary["auq"] = complete ? hsd::to_json(hsd::auq_decile(curve)) : Json(nullptr);
  summary["auq_oracle"] =
      truth ? hsd::to_json(hsd::auq_oracle(scores, truth->tau)) : Json(nullptr);
  summary["artifacts"] = Json{{"curve", curve_path}};
  emit_report(summary);
  return 0;
}

// ---------------------------------------------------------------------------
// simulate: scenario spec -> population CSV + truth CSV.

int run_simulate(const CommonArgs& args) {
  const Json config = read_config(args);
  expect_keys(config, {"scenario", "population_only"}, "simulate config");
  Json scenario_json = config.contains("scenario") ? config.at("scenario") : Json::object();
  if (args.seed_given) {
    Json seed = scenario_json.contains("seed") ? scenario_json.at("seed") : Json::object();
    seed["master_seed"] = args.seed;
    scenario_json["seed"] = seed;
  }
  const auto spec = hsd::scenario_spec_from_json(scenario_json);
  const bool population_only = field_or(config, "population_only", false);

  auto [frame, truth] = [&]() -> std::pair<hsd::PopulationFrame, hsd::SimulatedTruth> {
    if (population_only) {
      auto population = hsd::generate_population(spec);
      return {std::move(population.frame), std::move(population.truth)};
    }
    auto draw = hsd::generate_scenario(spec);
    return {std::move(draw.frame), std::move(draw.truth)};
  }();

  const std::string population_path = out_path(args, "population.csv");
  hsd::emit_csv(frame, population_path);
  const std::string truth_path = out_path(args, "truth.csv");
  hsd::emit_truth_csv(truth, frame.ids(), truth_path);

  double mean_mu0 = 0.0, mean_tau = 0.0;
  for (std::size_t i = 0; i < truth.mu0.size(); ++i) {
    mean_mu0 += truth.mu0[i];
    mean_tau += truth.tau[i];
  }
  mean_mu0 /= static_cast<double>(truth.mu0.size());
  mean_tau /= static_cast<double>(truth.tau.size());

  emit_report(Json{{"scenario", spec.scenario},
                   {"n_rows", frame.rows()},
                   {"population_only", population_only},
                   {"mean_mu0", mean_mu0},
                   {"mean_tau", mean_tau},
                   {"artifacts", {{"population", population_path}, {"truth", truth_path}}}});
  return 0;
}

// ---------------------------------------------------------------------------
// robustness: sweep config -> sweep CSV + JSON rows.

int run_robustness(const CommonArgs& args) {
  Json config_json = read_config(args);
  if (args.seed_given) {
    Json seed = config_json.contains("seed") ? config_json.at("seed") : Json::object();
    seed["master_seed"] = args.seed;
    config_json["seed"] = seed;
  }
  const auto config = hsd::robustness_config_from_json(config_json);
  const auto rows = hsd::robustness_sweep(config);

  const char* mode =
      config.alpha_mode == hsd::RobustnessConfig::AlphaMode::kOverfit ? "overfit" : "optimal";
  std::string csv = "alpha_mode,nu,accuracy,vr_unadjusted,vr_adjusted\n";
  for (const auto& row : rows) {
    csv += mode;
    csv += ',';
    format_double(csv, row.nu);
    csv += ',';
    format_double(csv, row.accuracy);
    csv += ',';
    format_double(csv, row.vr_unadjusted);
    csv += ',';
    format_double(csv, row.vr_adjusted);
    csv += '\n';
  }
  const std::string sweep_path = out_path(args, "robustness.csv");
  write_text(sweep_path, csv);

  Json rows_json = Json::array();
  for (const auto& row : rows) rows_json.push_back(hsd::to_json(row));
  emit_report(Json{{"alpha_mode", mode},
                   {"scenario", config.scenario},
                   {"rows", std::move(rows_json)},
                   {"artifacts", {{"sweep", sweep_path}}}});
  return 0;
}

// ---------------------------------------------------------------------------
// experiment: harness config -> JSON report (+ CSV digests).

int run_experiment_cmd(const CommonArgs& args) {
  Json config_json = read_config(args);
  if (args.seed_given) {
    Json seed = config_json.contains("seed") ? config_json.at("seed") : Json::object();
    seed["master_seed"] = args.seed;
    config_json["seed"] = seed;
  }
  const auto config = hsd::experiment_config_from_json(config_json);
  const auto report = hsd::run_experiment(config);
  std::fprintf(stderr, "experiment finished in %.1f s (%zu/%zu repetitions used)\n",
               report.runtime_seconds, report.repetitions_used, report.repetitions_requested);

  const Json report_json = hsd::to_json(report);
  hsd::write_json(report_json, out_path(args, "report.json"));

  if (!report.combos.empty()) {
    std::string csv =
        "meta,base,mean_auq_uniform,mean_auq_hs,mean_ratio_percent,gain_percent,"
        "gain_ci_low_percent,gain_ci_high_percent\n";
    for (const auto& combo : report.combos) {
      csv += hsd::to_string(combo.meta);
      csv += ',';
      csv += hsd::to_string(combo.base);
      for (double v : {combo.mean_auq_uniform, combo.mean_auq_hs, combo.mean_ratio_percent,
                       combo.gain_percent, combo.gain_ci_low_percent, combo.gain_ci_high_percent}) {
        csv += ',';
        format_double(csv, v);
      }
      csv += '\n';
    }
    write_text(out_path(args, "combos.csv"), csv);
  }
  if (!report.ate.empty()) {
    std::string csv =
        "method,mean,empirical_variance,mean_analytic_variance,reduction_vs_dim_percent\n";
    for (const auto& entry : report.ate) {
      csv += hsd::to_string(entry.method);
      for (double v : {entry.mean, entry.empirical_variance, entry.mean_analytic_variance,
                       entry.reduction_vs_dim_percent}) {
        csv += ',';
        format_double(csv, v);
      }
      csv += '\n';
    }
    write_text(out_path(args, "ate.csv"), csv);
  }
  if (!report.qini.empty()) {
    std::string csv = "correction,t,mean_q,variance_q,reduction_vs_none_percent\n";
    for (const auto& mode : report.qini) {
      for (std::size_t k = 0; k < mode.grid.size(); ++k) {
        csv += hsd::to_string(mode.correction);
        for (double v : {mode.grid[k], mode.mean_q[k], mode.variance_q[k],
                         mode.reduction_vs_none_percent[k]}) {
          csv += ',';
          format_double(csv, v);
        }
        csv += '\n';
      }
    }
    write_text(out_path(args, "qini.csv"), csv);
  }

  emit_report(report_json);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heteroskedasticity-aware stratified sampling toolkit"};
  app.require_subcommand(1);

  CommonArgs plan_args, sample_args, estimate_args, train_args, evaluate_args, simulate_args,
      robustness_args, experiment_args;
  auto* plan_cmd = app.add_subcommand("plan", "Design the HS sampling plan from pre-experiment data");
  add_common(plan_cmd, plan_args);
  auto* sample_cmd = app.add_subcommand("sample", "Draw a stratified cohort from a population");
  add_common(sample_cmd, sample_args);
  auto* estimate_cmd = app.add_subcommand("estimate", "Estimate the ATE on a cohort");
  add_common(estimate_cmd, estimate_args);
  auto* train_cmd = app.add_subcommand("train", "Fit an uplift model on a cohort");
  add_common(train_cmd, train_args);
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Compute Qini curves and AUQ for scores");
  add_common(evaluate_cmd, evaluate_args);
  auto* simulate_cmd = app.add_subcommand("simulate", "Generate a synthetic scenario population");
  add_common(simulate_cmd, simulate_args);
  auto* robustness_cmd =
      app.add_subcommand("robustness", "Sweep prediction quality against plan performance");
  add_common(robustness_cmd, robustness_args);
  auto* experiment_cmd = app.add_subcommand("experiment", "Run a Monte Carlo experiment pipeline");
  add_common(experiment_cmd, experiment_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  plan_args.seed_given = plan_cmd->count("--seed") > 0;
  sample_args.seed_given = sample_cmd->count("--seed") > 0;
  estimate_args.seed_given = estimate_cmd->count("--seed") > 0;
  train_args.seed_given = train_cmd->count("--seed") > 0;
  evaluate_args.seed_given = evaluate_cmd->count("--seed") > 0;
  simulate_args.seed_given = simulate_cmd->count("--seed") > 0;
  robustness_args.seed_given = robustness_cmd->count("--seed") > 0;
  experiment_args.seed_given = experiment_cmd->count("--seed") > 0;

  try {
    if (plan_cmd->parsed()) return run_plan(plan_args);
    if (sample_cmd->parsed()) return run_sample(sample_args);
    if (estimate_cmd->parsed()) return run_estimate(estimate_args);
    if (train_cmd->parsed()) return run_train(train_args);
    if (evaluate_cmd->parsed()) return run_evaluate(evaluate_args);
    if (simulate_cmd->parsed()) return run_simulate(simulate_args);
    if (robustness_cmd->parsed()) return run_robustness(robustness_args);
    if (experiment_cmd->parsed()) return run_experiment_cmd(experiment_args);
    return 0;
  } catch (const hsd::ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 2;
  } catch (const hsd::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
