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

#include "hsd/serialize.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>

#include "hsd/errors.hpp"

namespace hsd {
namespace {

void check_keys(const Json& json, std::initializer_list<const char*> allowed,
                const char* what) {
  if (!json.is_object()) {
    throw ValidationError(std::string(what) + " must be a JSON object");
  }
  for (const auto& item : json.items()) {
    bool known = false;
    for (const char* key : allowed) known = known || item.key() == key;
    if (!known) {
      throw ValidationError(std::string(what) + ": unknown key '" + item.key() + "'");
    }
  }
}

template <typename T>
T get_field(const Json& json, const char* key, const char* what) {
  try {
    return json.at(key).template get<T>();
  } catch (const Json::exception& e) {
    throw ValidationError(std::string(what) + ": field '" + key + "': " + e.what());
  }
}

template <typename T>
T get_field_or(const Json& json, const char* key, T fallback, const char* what) {
  if (!json.contains(key)) return fallback;
  return get_field<T>(json, key, what);
}

Json finite_or_null(double value) {
  if (std::isnan(value)) return nullptr;
  return value;
}

}  // namespace

std::string to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::kGlm: return "glm";
    case LearnerKind::kRandomForest: return "random_forest";
  }
  throw ValidationError("unknown learner kind");
}

LearnerKind learner_kind_from_string(const std::string& name) {
  if (name == "glm") return LearnerKind::kGlm;
  if (name == "random_forest") return LearnerKind::kRandomForest;
  throw ValidationError("unknown learner kind '" + name + "'");
}

std::string to_string(MetaKind kind) {
  switch (kind) {
    case MetaKind::kT: return "t";
    case MetaKind::kS: return "s";
    case MetaKind::kX: return "x";
  }
  throw ValidationError("unknown meta-learner kind");
}

MetaKind meta_kind_from_string(const std::string& name) {
  if (name == "t") return MetaKind::kT;
  if (name == "s") return MetaKind::kS;
  if (name == "x") return MetaKind::kX;
  throw ValidationError("unknown meta-learner kind '" + name + "'");
}

AteMethod ate_method_from_string(const std::string& name) {
  if (name == "dim") return AteMethod::kDim;
  if (name == "stratified") return AteMethod::kStratified;
  if (name == "covadj") return AteMethod::kCovAdj;
  if (name == "oracle_covadj") return AteMethod::kOracleCovAdj;
  if (name == "hs") return AteMethod::kHs;
  if (name == "hs_covadj") return AteMethod::kHsCovAdj;
  throw ValidationError("unknown ATE method '" + name + "'");
}

QiniCorrection qini_correction_from_string(const std::string& name) {
  if (name == "none") return QiniCorrection::kNone;
  if (name == "hs") return QiniCorrection::kHs;
  if (name == "covadj") return QiniCorrection::kCovadj;
  if (name == "hs_covadj") return QiniCorrection::kHsCovadj;
  throw ValidationError("unknown qini correction '" + name + "'");
}

Json to_json(const SeedSpec& seed) {
  return Json{{"master_seed", seed.master_seed}, {"stream_label", seed.stream_label}};
}

SeedSpec seed_from_json(const Json& json) {
  check_keys(json, {"master_seed", "stream_label"}, "seed");
  SeedSpec seed;
  seed.master_seed = get_field_or<std::uint64_t>(json, "master_seed", 0, "seed");
  seed.stream_label = get_field_or<std::string>(json, "stream_label", "", "seed");
  return seed;
}

Json to_json(const DesignPoint& point) {
  return Json{{"p_h", point.p_h},
              {"achieved_p_h", point.achieved_p_h},
              {"threshold", point.threshold},
              {"v_h_hat", point.v_h_hat},
              {"v_l_hat", point.v_l_hat},
              {"q_v_hat", point.q_v_hat},
              {"r_h", point.r_h},
              {"predicted_ratio", point.predicted_ratio},
              {"tie_flagged", point.tie_flagged}};
}

Json to_json(const SamplingPlan& plan) {
  return Json{{"p_h", plan.p_h},
              {"threshold", plan.threshold},
              {"q_v_hat", plan.q_v_hat},
              {"r_h", plan.r_h},
              {"predicted_ratio", plan.predicted_ratio},
              {"p_h_adjusted", plan.p_h_adjusted},
              {"threshold_adjusted", plan.threshold_adjusted},
              {"q_v_hat_adjusted", plan.q_v_hat_adjusted},
              {"r_h_adjusted", plan.r_h_adjusted},
              {"use_adjusted", plan.use_adjusted},
              {"treatment_proportion", plan.treatment_proportion},
              {"target_n", plan.target_n},
              {"population_share_h", plan.population_share_h},
              {"ratio_clamped", plan.ratio_clamped},
              {"tie_flagged", plan.tie_flagged}};
}

SamplingPlan plan_from_json(const Json& json) {
  check_keys(json,
             {"p_h", "threshold", "q_v_hat", "r_h", "predicted_ratio", "p_h_adjusted",
              "threshold_adjusted", "q_v_hat_adjusted", "r_h_adjusted", "use_adjusted",
              "treatment_proportion", "target_n", "population_share_h", "ratio_clamped",
              "tie_flagged"},
             "plan");
  SamplingPlan plan;
  plan.p_h = get_field<double>(json, "p_h", "plan");
  plan.threshold = get_field<double>(json, "threshold", "plan");
  plan.q_v_hat = get_field<double>(json, "q_v_hat", "plan");
  plan.r_h = get_field<double>(json, "r_h", "plan");
  plan.predicted_ratio = get_field<double>(json, "predicted_ratio", "plan");
  plan.p_h_adjusted = get_field<double>(json, "p_h_adjusted", "plan");
  plan.threshold_adjusted = get_field<double>(json, "threshold_adjusted", "plan");
  plan.q_v_hat_adjusted = get_field<double>(json, "q_v_hat_adjusted", "plan");
  plan.r_h_adjusted = get_field<double>(json, "r_h_adjusted", "plan");
  plan.use_adjusted = get_field<bool>(json, "use_adjusted", "plan");
  plan.treatment_proportion = get_field<double>(json, "treatment_proportion", "plan");
  plan.target_n = get_field<std::size_t>(json, "target_n", "plan");
  plan.population_share_h = get_field<double>(json, "population_share_h", "plan");
  plan.ratio_clamped = get_field<bool>(json, "ratio_clamped", "plan");
  plan.tie_flagged = get_field<bool>(json, "tie_flagged", "plan");
  return plan;
}

Json to_json(const AteEstimate& estimate) {
  return Json{{"method", to_string(estimate.method)},
              {"value", estimate.value},
              {"variance_hat", estimate.variance_hat},
              {"n", estimate.n_used},
              {"n_treated", estimate.n_treated}};
}

Json to_json(const QiniCurve& curve) {
  Json points = Json::array();
  for (std::size_t k = 0; k < curve.grid.size(); ++k) {
    points.push_back(Json{{"t", curve.grid[k]},
                          {"ate_t", finite_or_null(curve.ate_t[k])},
                          {"q", finite_or_null(curve.q_values[k])},
                          {"variance_hat", finite_or_null(curve.variance_hat[k])},
                          {"missing", curve.missing[k] != 0}});
  }
  return Json{{"correction", to_string(curve.correction)},
              {"tie_fraction", curve.tie_fraction},
              {"points", std::move(points)}};
}

Json to_json(const AuqResult& result) {
  const char* estimator =
      result.estimator == AuqResult::Estimator::kOracleCdf ? "oracle_cdf" : "decile";
  return Json{{"value", result.value}, {"estimator", estimator}, {"t_grid", result.t_grid}};
}

Json to_json(const RobustnessRow& row) {
  return Json{{"nu", row.nu},
              {"accuracy", row.accuracy},
              {"vr_unadjusted", row.vr_unadjusted},
              {"vr_adjusted", row.vr_adjusted}};
}

Json to_json(const OutcomeLearnerSpec& spec) {
  return Json{{"kind", to_string(spec.kind)},
              {"glm",
               {{"l2_penalty", spec.glm.l2_penalty},
                {"tolerance", spec.glm.tolerance},
                {"max_iterations", spec.glm.max_iterations}}},
              {"forest",
               {{"tree_count", spec.forest.tree_count},
                {"max_depth", spec.forest.max_depth},
                {"min_leaf", spec.forest.min_leaf},
                {"feature_fraction", spec.forest.feature_fraction},
                {"row_fraction", spec.forest.row_fraction},
                {"max_bins", spec.forest.max_bins}}}};
}

OutcomeLearnerSpec learner_spec_from_json(const Json& json) {
  check_keys(json, {"kind", "glm", "forest"}, "learner");
  OutcomeLearnerSpec spec;
  if (json.contains("kind")) {
    spec.kind = learner_kind_from_string(get_field<std::string>(json, "kind", "learner"));
  }
  if (json.contains("glm")) {
    const Json& glm = json.at("glm");
    check_keys(glm, {"l2_penalty", "tolerance", "max_iterations"}, "learner.glm");
    spec.glm.l2_penalty = get_field_or(glm, "l2_penalty", spec.glm.l2_penalty, "learner.glm");
    spec.glm.tolerance = get_field_or(glm, "tolerance", spec.glm.tolerance, "learner.glm");
    spec.glm.max_iterations =
        get_field_or(glm, "max_iterations", spec.glm.max_iterations, "learner.glm");
  }
  if (json.contains("forest")) {
    const Json& forest = json.at("forest");
    check_keys(forest,
               {"tree_count", "max_depth", "min_leaf", "feature_fraction", "row_fraction",
                "max_bins"},
               "learner.forest");
    spec.forest.tree_count =
        get_field_or(forest, "tree_count", spec.forest.tree_count, "learner.forest");
    spec.forest.max_depth =
        get_field_or(forest, "max_depth", spec.forest.max_depth, "learner.forest");
    spec.forest.min_leaf =
        get_field_or(forest, "min_leaf", spec.forest.min_leaf, "learner.forest");
    spec.forest.feature_fraction =
        get_field_or(forest, "feature_fraction", spec.forest.feature_fraction, "learner.forest");
    spec.forest.row_fraction =
        get_field_or(forest, "row_fraction", spec.forest.row_fraction, "learner.forest");
    spec.forest.max_bins =
        get_field_or(forest, "max_bins", spec.forest.max_bins, "learner.forest");
  }
  spec.validate();
  return spec;
}

Json to_json(const FittedModel& model) {
  Json json{{"spec", to_json(model.spec())},
            {"probability", model.probability()},
            {"feature_names", model.feature_names()}};
  if (const GlmState* glm = model.glm_state()) {
    json["glm"] = Json{{"weights", glm->weights},
                       {"intercept", glm->intercept},
                       {"logistic", glm->logistic},
                       {"converged", glm->converged},
                       {"iterations", glm->iterations}};
  } else {
    const ForestState* forest = model.forest_state();
    Json trees = Json::array();
    for (const Tree& tree : forest->trees) {
      Json nodes = Json::array();
      for (const TreeNode& node : tree.nodes) {
        nodes.push_back(
            Json::array({node.feature, node.threshold, node.left, node.right, node.value}));
      }
      trees.push_back(std::move(nodes));
    }
    json["forest"] = Json{{"constant_model", forest->constant_model},
                          {"constant", forest->constant},
                          {"trees", std::move(trees)}};
  }
  return json;
}

FittedModel fitted_model_from_json(const Json& json) {
  check_keys(json, {"spec", "probability", "feature_names", "glm", "forest"}, "model");
  const auto spec = learner_spec_from_json(json.at("spec"));
  const auto probability = get_field<bool>(json, "probability", "model");
  const auto feature_names = get_field<std::vector<std::string>>(json, "feature_names", "model");

  if (spec.kind == LearnerKind::kGlm) {
    const Json& state_json = json.at("glm");
    check_keys(state_json, {"weights", "intercept", "logistic", "converged", "iterations"},
               "model.glm");
    GlmState state;
    state.weights = get_field<std::vector<double>>(state_json, "weights", "model.glm");
    state.intercept = get_field<double>(state_json, "intercept", "model.glm");
    state.logistic = get_field<bool>(state_json, "logistic", "model.glm");
    state.converged = get_field<bool>(state_json, "converged", "model.glm");
    state.iterations = get_field<std::size_t>(state_json, "iterations", "model.glm");
    return FittedModel(spec, feature_names, std::move(state), probability);
  }

  const Json& state_json = json.at("forest");
  check_keys(state_json, {"constant_model", "constant", "trees"}, "model.forest");
  ForestState state;
  state.constant_model = get_field<bool>(state_json, "constant_model", "model.forest");
  state.constant = get_field<double>(state_json, "constant", "model.forest");
  try {
    for (const Json& tree_json : state_json.at("trees")) {
      Tree tree;
      for (const Json& node_json : tree_json) {
        if (!node_json.is_array() || node_json.size() != 5) {
          throw ValidationError("model.forest: node must be a 5-element array");
        }
        TreeNode node;
        node.feature = node_json.at(0).get<std::int32_t>();
        node.threshold = node_json.at(1).get<double>();
        node.left = node_json.at(2).get<std::int32_t>();
        node.right = node_json.at(3).get<std::int32_t>();
        node.value = node_json.at(4).get<double>();
        tree.nodes.push_back(node);
      }
      state.trees.push_back(std::move(tree));
    }
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("model.forest: ") + e.what());
  }
  return FittedModel(spec, feature_names, std::move(state), probability);
}

Json to_json(const UpliftModel& model) {
  Json json{{"meta", to_string(model.meta_kind())}};
  if (model.meta_kind() == MetaKind::kX) {
    json["treatment_proportion"] = model.treatment_proportion();
  }
  Json components = Json::array();
  for (const FittedModel& component : model.components()) {
    components.push_back(to_json(component));
  }
  json["components"] = std::move(components);
  return json;
}

UpliftModel uplift_model_from_json(const Json& json) {
  check_keys(json, {"meta", "treatment_proportion", "components"}, "uplift model");
  const auto kind = meta_kind_from_string(get_field<std::string>(json, "meta", "uplift model"));
  double treatment_p = 0.0;
  if (kind == MetaKind::kX) {
    treatment_p = get_field<double>(json, "treatment_proportion", "uplift model");
  } else if (json.contains("treatment_proportion")) {
    throw ValidationError("uplift model: treatment_proportion only applies to the x-learner");
  }

  std::vector<FittedModel> components;
  try {
    for (const Json& component : json.at("components")) {
      components.push_back(fitted_model_from_json(component));
    }
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("uplift model: ") + e.what());
  }
  return UpliftModel(kind, std::move(components), treatment_p);
}

ScenarioSpec scenario_spec_from_json(const Json& json) {
  check_keys(json, {"scenario", "n_rows", "n_features", "treatment_p", "seed"}, "scenario");
  ScenarioSpec spec;
  spec.scenario = get_field_or(json, "scenario", spec.scenario, "scenario");
  spec.n_rows = get_field_or(json, "n_rows", spec.n_rows, "scenario");
  spec.n_features = get_field_or(json, "n_features", spec.n_features, "scenario");
  spec.treatment_p = get_field_or(json, "treatment_p", spec.treatment_p, "scenario");
  if (json.contains("seed")) spec.seed = seed_from_json(json.at("seed"));
  spec.validate();
  return spec;
}

RobustnessConfig robustness_config_from_json(const Json& json) {
  check_keys(json, {"alpha_mode", "nu_grid", "scenario", "n_rows", "treatment_p", "baseline", "seed"},
             "robustness");
  RobustnessConfig config;
  if (json.contains("alpha_mode")) {
    const auto mode = get_field<std::string>(json, "alpha_mode", "robustness");
    if (mode == "overfit") {
      config.alpha_mode = RobustnessConfig::AlphaMode::kOverfit;
    } else if (mode == "optimal") {
      config.alpha_mode = RobustnessConfig::AlphaMode::kOptimal;
    } else {
      throw ValidationError("robustness: unknown alpha_mode '" + mode + "'");
    }
  }
  if (json.contains("baseline")) {
    const auto baseline = get_field<std::string>(json, "baseline", "robustness");
    if (baseline == "random_sampling") {
      config.baseline = RobustnessConfig::Baseline::kRandomSampling;
    } else if (baseline == "proportional") {
      config.baseline = RobustnessConfig::Baseline::kProportional;
    } else {
      throw ValidationError("robustness: unknown baseline '" + baseline + "'");
    }
  }
  config.nu_grid = get_field_or(json, "nu_grid", config.nu_grid, "robustness");
  config.scenario = get_field_or(json, "scenario", config.scenario, "robustness");
  config.n_rows = get_field_or(json, "n_rows", config.n_rows, "robustness");
  config.treatment_p = get_field_or(json, "treatment_p", config.treatment_p, "robustness");
  if (json.contains("seed")) config.seed = seed_from_json(json.at("seed"));
  return config;
}

std::string dump_json(const Json& json) { return json.dump(2) + "\n"; }

Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    Json json;
    in >> json;
    return json;
  } catch (const Json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

void write_json(const Json& json, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << dump_json(json);
  if (!out) throw DataError("failed writing " + path);
}

}  // namespace hsd
