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
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <doctest.h>

#include "test_util.hpp"

#include "hsd/errors.hpp"
#include "hsd/frame.hpp"
#include "hsd/learners.hpp"
#include "hsd/rng.hpp"
#include "hsd/simulation.hpp"
#include "hsd/uplift.hpp"

namespace {

// Midrank-based Spearman correlation.
std::vector<double> midranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = midranks(a);
  const auto rb = midranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

hsd::PopulationFrame frame_of(std::vector<std::string> names, std::vector<double> values,
                              std::vector<std::uint8_t> outcome,
                              std::vector<std::uint8_t> treatment) {
  return hsd::PopulationFrame(std::move(names), std::move(values), std::move(outcome),
                              std::move(treatment));
}

// Single binary feature x1; controls follow y = x1, treated always respond.
// The exact conditional means make every stage of the X-learner solvable
// without error: mu0(x) = x1, mu1 = 1, tau(x) = 1 - x1.
hsd::PopulationFrame exact_arm_data() {
  std::vector<double> values;
  std::vector<std::uint8_t> outcome;
  std::vector<std::uint8_t> treatment;
  for (int rep = 0; rep < 10; ++rep) {
    for (int x = 0; x <= 1; ++x) {
      values.push_back(x);
      outcome.push_back(static_cast<std::uint8_t>(x));
      treatment.push_back(0);
      values.push_back(x);
      outcome.push_back(1);
      treatment.push_back(1);
    }
  }
  return frame_of({"x1"}, std::move(values), std::move(outcome), std::move(treatment));
}

hsd::OutcomeLearnerSpec exact_forest_spec() {
  hsd::OutcomeLearnerSpec spec;
  spec.kind = hsd::LearnerKind::kRandomForest;
  spec.forest.tree_count = 30;
  spec.forest.max_depth = 3;
  spec.forest.min_leaf = 1;
  spec.forest.feature_fraction = 1.0;
  return spec;
}

}  // namespace

TEST_SUITE("uplift") {

TEST_CASE("t-learner with constant arms predicts zero everywhere") {
  std::vector<double> values;
  std::vector<std::uint8_t> outcome;
  std::vector<std::uint8_t> treatment;
  hsd::Rng rng(hsd::SeedSpec{41, "uplift-const"}.derive(0));
  for (std::size_t i = 0; i < 60; ++i) {
    values.push_back(rng.normal());
    outcome.push_back(0);
    treatment.push_back(i % 2);
  }
  const auto frame = frame_of({"x1"}, std::move(values), std::move(outcome), std::move(treatment));

  hsd::OutcomeLearnerSpec spec;
  spec.kind = hsd::LearnerKind::kRandomForest;
  const auto model = hsd::fit_t_learner(frame, spec, hsd::SeedSpec{41, "uplift-t0"});
  CHECK(model.meta_kind() == hsd::MetaKind::kT);
  for (double score : hsd::predict_cate(model, frame.without_responses())) {
    CHECK(score == 0.0);
  }
}

TEST_CASE("t-learner recovers the effect ranking on scenario 2") {
  hsd::ScenarioSpec spec;
  spec.scenario = 2;
  spec.n_rows = 20000;
  spec.seed = hsd::SeedSpec{42, "uplift-s2"};
  const auto [frame, truth] = hsd::generate_scenario(spec);

  hsd::OutcomeLearnerSpec learner;
  learner.kind = hsd::LearnerKind::kRandomForest;
  learner.forest.tree_count = 100;
  const auto model = hsd::fit_t_learner(frame, learner, hsd::SeedSpec{42, "uplift-t"});

  const auto scores = hsd::predict_cate(model, frame.without_responses());
  CHECK(spearman(scores, truth.tau) > 0.0);
  for (double score : scores) {
    CHECK(score >= -1.0);
    CHECK(score <= 1.0);
  }
}

TEST_CASE("t-learner over an additive-logit generator is nearly constant") {
  // y ~ Bern(sigmoid(0.3*x - 2 + 0.1*w)): the risk difference drifts only
  // slowly in x, so a correctly specified glm stays within a tight band.
  hsd::Rng rng(hsd::SeedSpec{43, "uplift-additive"}.derive(0));
  std::vector<double> values;
  std::vector<std::uint8_t> outcome;
  std::vector<std::uint8_t> treatment;
  for (std::size_t i = 0; i < 20000; ++i) {
    const double x = rng.normal();
    const std::uint8_t w = i % 2;
    values.push_back(x);
    treatment.push_back(w);
    outcome.push_back(rng.bernoulli(hsd::sigmoid(0.3 * x - 2.0 + 0.1 * w)) ? 1 : 0);
  }
  const auto frame = frame_of({"x1"}, std::move(values), std::move(outcome), std::move(treatment));

  hsd::OutcomeLearnerSpec learner;
  const auto model = hsd::fit_t_learner(frame, learner, hsd::SeedSpec{43, "uplift-t"});

  std::vector<double> grid_values;
  for (int i = 0; i < 200; ++i) grid_values.push_back(-2.0 + 4.0 * i / 199.0);
  const hsd::PopulationFrame grid({"x1"}, std::move(grid_values));
  const auto scores = hsd::predict_cate(model, grid);
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  CHECK(*hi - *lo < 0.05);
}

TEST_CASE("t-learner requires both arms") {
  std::vector<double> values{0.1, 0.2, 0.3, 0.4};
  const auto frame =
      frame_of({"x1"}, std::move(values), {1, 0, 1, 0}, {1, 1, 1, 1});
  hsd::OutcomeLearnerSpec spec;
  CHECK_THROWS_AS(hsd::fit_t_learner(frame, spec, hsd::SeedSpec{44, ""}), hsd::ValidationError);
}

TEST_CASE("s-learner on a null-effect generator concentrates near zero") {
  hsd::Rng rng(hsd::SeedSpec{45, "uplift-null"}.derive(0));
  std::vector<double> values;
  std::vector<std::uint8_t> outcome;
  std::vector<std::uint8_t> treatment;
  for (std::size_t i = 0; i < 20000; ++i) {
    const double x = rng.normal();
    values.push_back(x);
    treatment.push_back(i % 2);
    outcome.push_back(rng.bernoulli(hsd::sigmoid(x - 1.0)) ? 1 : 0);
  }
  const auto frame = frame_of({"x1"}, std::move(values), std::move(outcome), std::move(treatment));

  hsd::OutcomeLearnerSpec learner;
  const auto model = hsd::fit_s_learner(frame, learner, hsd::SeedSpec{45, "uplift-s"});
  CHECK(model.meta_kind() == hsd::MetaKind::kS);

  const auto scores = hsd::predict_cate(model, frame.without_responses());
  const double mean =
      std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
  CHECK(std::abs(mean) < 0.01);
}

TEST_CASE("s-learner stump takes at most two distinct values") {
  hsd::Rng rng(hsd::SeedSpec{46, "uplift-stump"}.derive(0));
  std::vector<double> values;
  std::vector<std::uint8_t> outcome;
  std::vector<std::uint8_t> treatment;
  for (std::size_t i = 0; i < 400; ++i) {
    const double x = rng.normal();
    const std::uint8_t w = i % 2;
    values.push_back(x);
    treatment.push_back(w);
    outcome.push_back(rng.bernoulli(w ? 0.8 : 0.2) ? 1 : 0);
  }
  const auto frame = frame_of({"x1"}, std::move(values), std::move(outcome), std::move(treatment));

  hsd::OutcomeLearnerSpec learner;
  learner.kind = hsd::LearnerKind::kRandomForest;
  learner.forest.tree_count = 1;
  learner.forest.max_depth = 1;
  learner.forest.feature_fraction = 1.0;
  const auto model = hsd::fit_s_learner(frame, learner, hsd::SeedSpec{46, "uplift-s"});

  const auto scores = hsd::predict_cate(model, frame.without_responses());
  const std::set<double> distinct(scores.begin(), scores.end());
  CHECK(distinct.size() <= 2);
}

TEST_CASE("s-learner runs end-to-end on a wide synthetic schema") {
  const std::size_t n = 500;
  const std::size_t d = 12;
  std::vector<std::string> names;
  for (std::size_t j = 0; j < d; ++j) names.push_back("f" + std::to_string(j));
  hsd::Rng rng(hsd::SeedSpec{47, "uplift-wide"}.derive(0));
  std::vector<double> values;
  std::vector<std::uint8_t> outcome;
  std::vector<std::uint8_t> treatment;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) values.push_back(rng.normal());
    treatment.push_back(rng.bernoulli(0.5) ? 1 : 0);
    outcome.push_back(rng.bernoulli(0.3) ? 1 : 0);
  }
  const auto frame = frame_of(std::move(names), std::move(values), std::move(outcome),
                              std::move(treatment));

  hsd::OutcomeLearnerSpec learner;
  learner.kind = hsd::LearnerKind::kRandomForest;
  learner.forest.tree_count = 20;
  const auto model = hsd::fit_s_learner(frame, learner, hsd::SeedSpec{47, "uplift-s"});
  const auto scores = hsd::predict_cate(model, frame.without_responses());
  REQUIRE(scores.size() == n);
  for (double score : scores) {
    CHECK(std::isfinite(score));
    CHECK(score >= -1.0);
    CHECK(score <= 1.0);
  }
}

TEST_CASE("s-learner propagates base-learner errors") {
  std::vector<double> values{0.1, 0.2, 0.3, 0.4};
  const auto frame = frame_of({"x1"}, std::move(values), {0, 0, 0, 0}, {1, 0, 1, 0});
  hsd::OutcomeLearnerSpec spec;  // glm needs both outcome classes
  CHECK_THROWS_AS(hsd::fit_s_learner(frame, spec, hsd::SeedSpec{48, ""}), hsd::ValidationError);
}

TEST_CASE("s-learner rejects a feature named like the treatment column") {
  std::vector<double> values{0.0, 1.0, 0.0, 1.0};
  const auto frame = frame_of({"w"}, std::move(values), {1, 0, 1, 0}, {1, 0, 1, 0});
  hsd::OutcomeLearnerSpec spec;
  CHECK_THROWS_AS(hsd::fit_s_learner(frame, spec, hsd::SeedSpec{49, ""}), hsd::ValidationError);
}

TEST_CASE("x-learner pseudo-outcome path recovers an exact effect") {
  const auto frame = exact_arm_data();
  const auto model =
      hsd::fit_x_learner(frame, exact_forest_spec(), 0.3, hsd::SeedSpec{50, "uplift-x"});
  CHECK(model.meta_kind() == hsd::MetaKind::kX);
  CHECK(model.treatment_proportion() == 0.3);

  const auto scores = hsd::predict_cate(model, frame.without_responses());
  for (std::size_t i = 0; i < frame.rows(); ++i) {
    const double expected = 1.0 - frame.feature(i, 0);
    CHECK(hsd_test::near(scores[i], expected, 1e-9));
  }
}

TEST_CASE("x-learner weights blend the stage-2 models") {
  const auto frame = exact_arm_data();
  const auto seed = hsd::SeedSpec{51, "uplift-x"};
  const auto spec = exact_forest_spec();
  const auto features = frame.without_responses();

  const auto half = hsd::fit_x_learner(frame, spec, 0.5, seed);
  const auto treated_only = hsd::fit_x_learner(frame, spec, 1.0, seed);

  const auto tau1 = half.stage_two_treated().predict(features);
  const auto tau0 = half.stage_two_control().predict(features);
  const auto blended = hsd::predict_cate(half, features);
  const auto boundary = hsd::predict_cate(treated_only, features);
  for (std::size_t i = 0; i < blended.size(); ++i) {
    CHECK(hsd_test::near(blended[i], 0.5 * (tau1[i] + tau0[i]), 1e-12));
    CHECK(boundary[i] == tau1[i]);
  }
}

TEST_CASE("x-learner requires both arms") {
  std::vector<double> values{0.1, 0.2, 0.3, 0.4};
  const auto frame = frame_of({"x1"}, std::move(values), {1, 0, 1, 0}, {0, 0, 0, 0});
  CHECK_THROWS_AS(hsd::fit_x_learner(frame, exact_forest_spec(), 0.5, hsd::SeedSpec{52, ""}),
                  hsd::ValidationError);
}

TEST_CASE("predict_cate maps rows independently of order") {
  hsd::Rng rng(hsd::SeedSpec{53, "uplift-perm"}.derive(0));
  std::vector<double> values;
  std::vector<std::uint8_t> outcome;
  std::vector<std::uint8_t> treatment;
  for (std::size_t i = 0; i < 300; ++i) {
    values.push_back(rng.normal());
    treatment.push_back(i % 2);
    outcome.push_back(rng.bernoulli(hsd::sigmoid(values.back())) ? 1 : 0);
  }
  const auto frame = frame_of({"x1"}, std::move(values), std::move(outcome), std::move(treatment));

  hsd::OutcomeLearnerSpec learner;
  const auto model = hsd::fit_t_learner(frame, learner, hsd::SeedSpec{53, "uplift-t"});

  const auto features = frame.without_responses();
  const auto scores = hsd::predict_cate(model, features);
  std::vector<std::size_t> reversed(frame.rows());
  std::iota(reversed.begin(), reversed.end(), 0);
  std::reverse(reversed.begin(), reversed.end());
  const auto permuted_scores = hsd::predict_cate(model, features.take_rows(reversed));
  for (std::size_t i = 0; i < scores.size(); ++i) {
    CHECK(permuted_scores[i] == scores[scores.size() - 1 - i]);
  }
}

TEST_CASE("predict_cate rejects mismatched schemas") {
  std::vector<double> values{0.1, 0.6, 0.2, 0.7};
  const auto frame = frame_of({"x1"}, std::move(values), {1, 0, 0, 1}, {1, 0, 1, 0});
  hsd::OutcomeLearnerSpec learner;
  const auto model = hsd::fit_t_learner(frame, learner, hsd::SeedSpec{54, "uplift-t"});

  const hsd::PopulationFrame wrong({"z1"}, {0.1, 0.2});
  CHECK_THROWS_AS(hsd::predict_cate(model, wrong), hsd::ValidationError);
}

TEST_CASE("refits under one seed are bit-identical") {
  hsd::ScenarioSpec spec;
  spec.scenario = 1;
  spec.n_rows = 2000;
  spec.seed = hsd::SeedSpec{55, "uplift-det"};
  const auto [frame, truth] = hsd::generate_scenario(spec);
  const auto features = frame.without_responses();

  for (const auto kind : {hsd::LearnerKind::kGlm, hsd::LearnerKind::kRandomForest}) {
    hsd::OutcomeLearnerSpec learner;
    learner.kind = kind;
    learner.forest.tree_count = 20;
    const auto seed = hsd::SeedSpec{55, "uplift-fit"};

    const auto t1 = hsd::predict_cate(hsd::fit_t_learner(frame, learner, seed), features);
    const auto t2 = hsd::predict_cate(hsd::fit_t_learner(frame, learner, seed), features);
    CHECK(t1 == t2);

    const auto s1 = hsd::predict_cate(hsd::fit_s_learner(frame, learner, seed), features);
    const auto s2 = hsd::predict_cate(hsd::fit_s_learner(frame, learner, seed), features);
    CHECK(s1 == s2);

    const auto x1 = hsd::predict_cate(hsd::fit_x_learner(frame, learner, 0.5, seed), features);
    const auto x2 = hsd::predict_cate(hsd::fit_x_learner(frame, learner, 0.5, seed), features);
    CHECK(x1 == x2);
  }
}

}  // TEST_SUITE
