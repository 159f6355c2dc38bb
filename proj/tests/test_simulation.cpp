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
#include <cstddef>
#include <vector>

#include <doctest.h>

#include "test_util.hpp"

#include "hsd/errors.hpp"
#include "hsd/rng.hpp"
#include "hsd/simulation.hpp"

namespace {

hsd::ScenarioSpec spec_for(int scenario, std::size_t n, std::uint64_t seed) {
  hsd::ScenarioSpec spec;
  spec.scenario = scenario;
  spec.n_rows = n;
  spec.seed = hsd::SeedSpec{seed, ""};
  return spec;
}

}  // namespace

TEST_SUITE("simulation") {

TEST_CASE("truth follows the printed response surfaces") {
  for (int scenario = 1; scenario <= 3; ++scenario) {
    const auto draw = hsd::generate_scenario(spec_for(scenario, 50, 5));
    for (std::size_t i = 0; i < draw.frame.rows(); ++i) {
      const auto x = draw.frame.row(i);
      double z0 = 0.0;
      double shift = 0.0;
      switch (scenario) {
        case 1:
          z0 = x[0] + 0.5 * x[1] + x[2] * x[3] - 4.0;
          shift = 0.1;
          break;
        case 2:
          z0 = x[0] * x[0] + 0.5 * x[1] + x[2] * x[3] - 7.0;
          shift = 1.1 + x[4];
          break;
        case 3:
          z0 = 0.1 * std::exp(x[0]) + 0.5 * std::pow(x[1], 3.0) + x[2] - 7.0;
          shift = 0.1 + x[4] * x[5];
          break;
      }
      CHECK(hsd_test::near(draw.truth.mu0[i], hsd::sigmoid(z0), 1e-12));
      CHECK(hsd_test::near(draw.truth.tau[i], hsd::sigmoid(z0 + shift) - hsd::sigmoid(z0), 1e-12));
    }
  }
}

TEST_CASE("draws are reproducible and seed-sensitive") {
  const auto a = hsd::generate_scenario(spec_for(1, 200, 9));
  const auto b = hsd::generate_scenario(spec_for(1, 200, 9));
  const auto c = hsd::generate_scenario(spec_for(1, 200, 10));
  CHECK(a.frame.values() == b.frame.values());
  CHECK(a.truth.mu0 == b.truth.mu0);
  CHECK(std::equal(a.frame.outcome().begin(), a.frame.outcome().end(), b.frame.outcome().begin()));
  CHECK(a.frame.values() != c.frame.values());
}

TEST_CASE("population draws carry no responses") {
  const auto population = hsd::generate_population(spec_for(2, 100, 3));
  CHECK_FALSE(population.frame.has_outcome());
  CHECK_FALSE(population.frame.has_treatment());
  CHECK(population.frame.cols() == 10);
  CHECK(population.truth.mu0.size() == 100);
}

TEST_CASE("treatment share matches the spec probability") {
  auto spec = spec_for(1, 20000, 21);
  spec.treatment_p = 0.3;
  const auto draw = hsd::generate_scenario(spec);
  double share = 0.0;
  for (auto w : draw.frame.treatment()) share += w;
  share /= static_cast<double>(draw.frame.rows());
  CHECK(hsd_test::near(share, 0.3, 4.0 * std::sqrt(0.3 * 0.7 / 20000.0)));
}

TEST_CASE("zero treatment probability yields a pure-control draw") {
  auto spec = spec_for(1, 500, 2);
  spec.treatment_p = 0.0;
  const auto draw = hsd::generate_scenario(spec);
  CHECK(std::all_of(draw.frame.treatment().begin(), draw.frame.treatment().end(),
                    [](std::uint8_t w) { return w == 0; }));
}

TEST_CASE("treated outcome rate matches the mean response within 4 MC ses") {
  for (int scenario = 1; scenario <= 3; ++scenario) {
    const auto draw = hsd::generate_scenario(spec_for(scenario, 40000, 31));
    double expected = 0.0;
    double observed = 0.0;
    std::size_t treated = 0;
    for (std::size_t i = 0; i < draw.frame.rows(); ++i) {
      if (!draw.frame.treatment()[i]) continue;
      treated += 1;
      expected += draw.truth.mu0[i] + draw.truth.tau[i];
      observed += draw.frame.outcome()[i];
    }
    expected /= static_cast<double>(treated);
    observed /= static_cast<double>(treated);
    const double se = std::sqrt(expected * (1.0 - expected) / static_cast<double>(treated));
    CHECK(hsd_test::near(observed, expected, 4.0 * se));
    CHECK(expected >= 0.0);
    CHECK(expected <= 1.0);
  }
}

TEST_CASE("outcome simulation validates lengths") {
  hsd::SimulatedTruth truth;
  truth.mu0 = {0.2, 0.4};
  truth.tau = {0.1, 0.1};
  CHECK_THROWS_AS(hsd::simulate_outcomes(truth, std::vector<std::uint8_t>{1}, hsd::SeedSpec{1, ""}),
                  hsd::ValidationError);
}

TEST_CASE("scenario spec validation") {
  CHECK_THROWS_AS(hsd::generate_scenario(spec_for(0, 10, 1)), hsd::ValidationError);
  CHECK_THROWS_AS(hsd::generate_scenario(spec_for(4, 10, 1)), hsd::ValidationError);
  CHECK_THROWS_AS(hsd::generate_scenario(spec_for(1, 0, 1)), hsd::ValidationError);
  auto narrow = spec_for(1, 10, 1);
  narrow.n_features = 5;
  CHECK_THROWS_AS(hsd::generate_scenario(narrow), hsd::ValidationError);
  auto bad_p = spec_for(1, 10, 1);
  bad_p.treatment_p = 1.0;
  CHECK_THROWS_AS(hsd::generate_scenario(bad_p), hsd::ValidationError);
}

TEST_CASE("true ate oracle is stable across seeds") {
  const double a = hsd::scenario_true_ate(1, hsd::SeedSpec{1, ""}, 300000);
  const double b = hsd::scenario_true_ate(1, hsd::SeedSpec{2, ""}, 300000);
  CHECK(a > 0.0);
  // tau is bounded by ~0.025 for scenario 1, so two 3e5-row means agree
  // tightly.
  CHECK(hsd_test::near(a, b, 3e-4));

  // Scenario 2's lift term 1.1 + x5 dwarfs scenario 1's 0.1 shift.
  const double s2 = hsd::scenario_true_ate(2, hsd::SeedSpec{1, ""}, 100000);
  CHECK(s2 > 5.0 * a);
}

TEST_CASE("default nu grid is log-spaced across 0.2 to 200") {
  const auto grid = hsd::default_nu_grid();
  REQUIRE(grid.size() == 13);
  CHECK(hsd_test::near(grid.front(), 0.2, 1e-12));
  CHECK(hsd_test::near(grid.back(), 200.0, 1e-9));
  for (std::size_t i = 1; i < grid.size(); ++i) {
    CHECK(grid[i] > grid[i - 1]);
    CHECK(hsd_test::near(grid[i] / grid[i - 1], grid[1] / grid[0], 1e-9));
  }
}

TEST_CASE("beta predictions concentrate at the truth for large nu") {
  const auto population = hsd::generate_population(spec_for(1, 5000, 11));
  hsd::RobustnessConfig config;
  config.seed = hsd::SeedSpec{11, ""};
  const auto predictions = hsd::simulate_predictions(population.truth, config, 1e6);
  double abs_error = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    abs_error += std::abs(predictions[i] - population.truth.mu0[i]);
    CHECK(predictions[i] >= 0.0);
    CHECK(predictions[i] <= 1.0);
  }
  CHECK(abs_error / 5000.0 < 0.01);
}

TEST_CASE("prediction draws are reproducible per nu substream") {
  const auto population = hsd::generate_population(spec_for(1, 500, 4));
  hsd::RobustnessConfig config;
  config.seed = hsd::SeedSpec{4, ""};
  const auto a = hsd::simulate_predictions(population.truth, config, 2.0);
  const auto b = hsd::simulate_predictions(population.truth, config, 2.0);
  const auto c = hsd::simulate_predictions(population.truth, config, 3.0);
  CHECK(a == b);
  CHECK(a != c);
  CHECK_THROWS_AS(hsd::simulate_predictions(population.truth, config, 0.0), hsd::ValidationError);
}

TEST_CASE("optimal shrinkage never inflates the draw variance") {
  const auto population = hsd::generate_population(spec_for(1, 4000, 8));
  for (double nu : {0.2, 2.0, 50.0}) {
    hsd::RobustnessConfig overfit;
    overfit.seed = hsd::SeedSpec{8, ""};
    auto optimal = overfit;
    optimal.alpha_mode = hsd::RobustnessConfig::AlphaMode::kOptimal;

    const auto raw = hsd::simulate_predictions(population.truth, overfit, nu);
    const auto shrunk = hsd::simulate_predictions(population.truth, optimal, nu);

    auto var = [](const std::vector<double>& v) {
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double sq = 0.0;
      for (double x : v) sq += (x - mean) * (x - mean);
      return sq / static_cast<double>(v.size());
    };
    CHECK(var(shrunk) <= var(raw) + 1e-12);
    CHECK(hsd::accuracy_measure(shrunk, population.truth.mu0) + 1e-9 >=
          hsd::accuracy_measure(raw, population.truth.mu0));
  }
}

TEST_CASE("accuracy measure pins its reference points") {
  const std::vector<double> mu{0.1, 0.2, 0.3, 0.4};
  CHECK(hsd_test::near(hsd::accuracy_measure(mu, mu), 1.0, 1e-12));

  const std::vector<double> trivial(4, 0.25);
  CHECK(hsd_test::near(hsd::accuracy_measure(trivial, mu), 0.0, 1e-12));

  const std::vector<double> reversed{0.4, 0.3, 0.2, 0.1};
  CHECK(hsd::accuracy_measure(reversed, mu) < 0.0);

  const std::vector<double> flat(4, 0.5);
  CHECK_THROWS_AS(hsd::accuracy_measure(flat, flat), hsd::ValidationError);
  CHECK_THROWS_AS(hsd::accuracy_measure(mu, std::vector<double>{0.1}), hsd::ValidationError);
}

TEST_CASE("accuracy rises along the nu grid on seed-averaged draws") {
  const auto population = hsd::generate_population(spec_for(1, 5000, 40));
  const std::vector<double> grid{0.2, 2.0, 20.0, 200.0};
  std::vector<double> mean_accuracy(grid.size(), 0.0);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    hsd::RobustnessConfig config;
    config.seed = hsd::SeedSpec{100 + seed, ""};
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const auto predictions = hsd::simulate_predictions(population.truth, config, grid[g]);
      mean_accuracy[g] += hsd::accuracy_measure(predictions, population.truth.mu0);
    }
  }
  for (std::size_t g = 1; g < grid.size(); ++g) {
    CHECK(mean_accuracy[g] > mean_accuracy[g - 1]);
  }
  CHECK(mean_accuracy.back() / 5.0 > 0.9);
}

TEST_CASE("robustness sweep rewards accurate predictions") {
  hsd::RobustnessConfig config;
  config.scenario = 1;
  config.n_rows = 20000;
  config.seed = hsd::SeedSpec{55, ""};
  config.nu_grid = {0.2, 5.0, 1e6};
  config.alpha_mode = hsd::RobustnessConfig::AlphaMode::kOptimal;

  const auto rows = hsd::robustness_sweep(config);
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].nu == config.nu_grid[i]);
    CHECK(rows[i].vr_unadjusted <= 1.0);
    CHECK(rows[i].vr_adjusted <= 1.0);
  }

  // Near-perfect predictions: sizable reduction, and the adjustment only
  // gives a little of it back.
  const auto& perfect = rows.back();
  CHECK(perfect.accuracy > 0.99);
  CHECK(perfect.vr_unadjusted >= perfect.vr_adjusted);
  CHECK(perfect.vr_adjusted >= 0.0);
  CHECK(perfect.vr_unadjusted > 0.2);

  // Accuracy degrades toward the small-nu end.
  CHECK(rows.front().accuracy < perfect.accuracy);
}

TEST_CASE("overfit sweep shows the hazard the adjustment caps") {
  hsd::RobustnessConfig config;
  config.scenario = 1;
  config.n_rows = 20000;
  config.seed = hsd::SeedSpec{56, ""};
  config.alpha_mode = hsd::RobustnessConfig::AlphaMode::kOverfit;

  const auto rows = hsd::robustness_sweep(config);
  REQUIRE(rows.size() == hsd::default_nu_grid().size());

  // Overfitted predictions wildly overestimate Q_V at the low-nu end; the
  // unadjusted design over-allocates and can be far worse than random
  // sampling, while the adjusted design limits the damage.
  bool hazard = false;
  for (const auto& row : rows) {
    if (row.vr_unadjusted < row.vr_adjusted - 0.5) hazard = true;
    if (row.accuracy >= 0.75) CHECK(row.vr_adjusted >= -0.05);
  }
  CHECK(hazard);
  CHECK(rows.front().accuracy < 0.0);
  CHECK(rows.back().vr_adjusted > 0.1);
}

TEST_CASE("proportional baseline scores allocation only") {
  hsd::RobustnessConfig config;
  config.scenario = 1;
  config.n_rows = 20000;
  config.seed = hsd::SeedSpec{57, ""};
  config.nu_grid = {1e6};
  config.alpha_mode = hsd::RobustnessConfig::AlphaMode::kOptimal;
  config.baseline = hsd::RobustnessConfig::Baseline::kProportional;

  const auto rows = hsd::robustness_sweep(config);
  REQUIRE(rows.size() == 1);
  // With near-perfect predictions the optimal allocation still beats
  // proportional stratification, but by less than it beats random sampling.
  hsd::RobustnessConfig random = config;
  random.baseline = hsd::RobustnessConfig::Baseline::kRandomSampling;
  const auto random_rows = hsd::robustness_sweep(random);
  CHECK(rows[0].vr_unadjusted > 0.0);
  CHECK(rows[0].vr_unadjusted < random_rows[0].vr_unadjusted);
}

}  // TEST_SUITE
